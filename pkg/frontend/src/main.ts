// Bootstrap: one ApiClient, one Store, one EventFeed; panels subscribe
// to store changes and never mutate anything except via the API.

import { ApiClient } from "./api";
import { EventFeed } from "./events";
import { GraphView } from "./graph";
import {
  attackPanel,
  eventLog,
  probePanel,
  scenarioPanel,
  topBar,
  trafficPanel,
} from "./panels";
import { Store } from "./store";

export function boot(root: HTMLElement): { store: Store; feed: EventFeed } {
  const api = new ApiClient("");
  const store = new Store(api);
  const feed = new EventFeed("", (event) => store.handleEvent(event));

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("class", "graph");
  const graph = new GraphView(svg);
  store.subscribe((state) => {
    graph.update(state.topology, store.attackedNodes());
  });

  const left = document.createElement("div");
  left.className = "left";
  left.append(svg, eventLog(store));

  const right = document.createElement("div");
  right.className = "right";
  right.append(
    scenarioPanel(api, store),
    attackPanel(api, store),
    trafficPanel(api, store),
    probePanel(api, store),
  );

  const main = document.createElement("div");
  main.className = "main";
  main.append(left, right);
  root.append(topBar(api, store), main);

  void store.refreshAll();
  feed.start();

  // periodic light refresh keeps flow stats fresh without event spam
  setInterval(() => {
    void store.refreshFlows().catch(() => undefined);
  }, 3000);

  return { store, feed };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot(document.getElementById("app")!);
}

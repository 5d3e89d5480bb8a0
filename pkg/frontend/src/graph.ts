// SVG renderer for the live logical topology. Vertices are labeled by
// node name; an attack badge rings any node under an active attack.

import { ForceLayout } from "./layout";
import type { TopologyView } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

export class GraphView {
  private layout = new ForceLayout();
  private edgesGroup: SVGGElement;
  private nodesGroup: SVGGElement;
  private emptyLabel: SVGTextElement;
  private animating = false;
  private current: TopologyView | null = null;
  private attacked = new Set<string>();

  constructor(private svg: SVGSVGElement) {
    this.svg.setAttribute("viewBox", "0 0 640 480");
    this.edgesGroup = document.createElementNS(SVG_NS, "g");
    this.nodesGroup = document.createElementNS(SVG_NS, "g");
    this.emptyLabel = document.createElementNS(SVG_NS, "text");
    this.emptyLabel.setAttribute("x", "320");
    this.emptyLabel.setAttribute("y", "240");
    this.emptyLabel.setAttribute("text-anchor", "middle");
    this.emptyLabel.setAttribute("class", "graph-empty");
    this.emptyLabel.textContent = "no topology applied";
    this.svg.append(this.edgesGroup, this.nodesGroup, this.emptyLabel);
  }

  update(topology: TopologyView | null, attacked: Set<string>): void {
    this.current = topology;
    this.attacked = attacked;
    if (topology === null) {
      this.emptyLabel.style.display = "";
      this.edgesGroup.replaceChildren();
      this.nodesGroup.replaceChildren();
      return;
    }
    this.emptyLabel.style.display = "none";
    this.layout.update(topology.nodes, topology.edges);
    this.layout.settle(60);
    this.render();
    this.animate();
  }

  private animate(): void {
    if (this.animating || typeof requestAnimationFrame === "undefined") return;
    this.animating = true;
    let frames = 0;
    const tick = () => {
      const motion = this.layout.step();
      this.render();
      frames += 1;
      if (motion > 0.15 && frames < 240) {
        requestAnimationFrame(tick);
      } else {
        this.animating = false;
      }
    };
    requestAnimationFrame(tick);
  }

  private render(): void {
    const topology = this.current;
    if (topology === null) return;
    const edges: SVGLineElement[] = [];
    for (const [a, b] of topology.edges) {
      const pa = this.layout.points.get(a);
      const pb = this.layout.points.get(b);
      if (!pa || !pb) continue;
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(pa.x));
      line.setAttribute("y1", String(pa.y));
      line.setAttribute("x2", String(pb.x));
      line.setAttribute("y2", String(pb.y));
      line.setAttribute("class", "graph-edge");
      edges.push(line);
    }
    this.edgesGroup.replaceChildren(...edges);

    const nodes: SVGGElement[] = [];
    for (const name of topology.nodes) {
      const p = this.layout.points.get(name);
      if (!p) continue;
      const g = document.createElementNS(SVG_NS, "g");
      const circle = document.createElementNS(SVG_NS, "circle");
      circle.setAttribute("cx", String(p.x));
      circle.setAttribute("cy", String(p.y));
      circle.setAttribute("r", "14");
      const isolated = topology.isolated.includes(name);
      circle.setAttribute(
        "class",
        isolated ? "graph-node isolated" : "graph-node",
      );
      g.append(circle);
      if (this.attacked.has(name)) {
        const badge = document.createElementNS(SVG_NS, "circle");
        badge.setAttribute("cx", String(p.x));
        badge.setAttribute("cy", String(p.y));
        badge.setAttribute("r", "20");
        badge.setAttribute("class", "graph-attack-badge");
        g.append(badge);
      }
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(p.x));
      label.setAttribute("y", String(p.y - 20));
      label.setAttribute("text-anchor", "middle");
      label.setAttribute("class", "graph-label");
      label.textContent = name;
      g.append(label);
      nodes.push(g);
    }
    this.nodesGroup.replaceChildren(...nodes);
  }
}

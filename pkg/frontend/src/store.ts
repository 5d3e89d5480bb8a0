// Single UI state store. State changes come from exactly two places:
// API responses and event-stream messages, applied in arrival order.
// On every APPLY event the rendered graph is reconciled against
// /topology/current.dot, so the edge set on screen is always the
// service's own answer, never a local guess.

import type { ApiClient } from "./api";
import { parseDot } from "./dot";
import type {
  AttackOverview,
  FlowInfo,
  Health,
  NodeInfo,
  ProbeReport,
  ScenarioSummary,
  TopologyView,
  TraceEvent,
} from "./types";

export interface ViewState {
  health: Health | null;
  nodes: NodeInfo[];
  scenarios: ScenarioSummary[];
  selectedScenario: string | null;
  topology: TopologyView | null;
  attacks: AttackOverview;
  flows: FlowInfo[];
  lastProbe: ProbeReport | null;
  consoleLines: string[];
  events: TraceEvent[];
  virtualTimeUs: number;
  execBusy: boolean;
  lastError: string | null;
}

const EVENT_TAIL = 200;
const CONSOLE_TAIL = 400;

export type Listener = (state: ViewState) => void;

export class Store {
  state: ViewState = {
    health: null,
    nodes: [],
    scenarios: [],
    selectedScenario: null,
    topology: null,
    attacks: { saved: [], active: [] },
    flows: [],
    lastProbe: null,
    consoleLines: [],
    events: [],
    virtualTimeUs: 0,
    execBusy: false,
    lastError: null,
  };

  private listeners: Listener[] = [];

  constructor(private api: ApiClient) {}

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private changed(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  // --- bulk refreshes (API responses) ---

  async refreshAll(): Promise<void> {
    const [health, nodes, scenarios, attacks, flows] = await Promise.all([
      this.api.health(),
      this.api.nodes(),
      this.api.scenarios(),
      this.api.attacks(),
      this.api.flows(),
    ]);
    this.state.health = health;
    this.state.virtualTimeUs = health.virtual_time_us;
    this.state.nodes = nodes;
    this.state.scenarios = scenarios;
    this.state.attacks = attacks;
    this.state.flows = flows;
    if (this.state.selectedScenario === null && scenarios.length > 0) {
      this.state.selectedScenario = scenarios[0].name;
    }
    await this.refreshTopology(false);
    this.changed();
  }

  /** Reconcile the rendered graph with /topology/current.dot. */
  async refreshTopology(notify = true): Promise<void> {
    const dot = await this.api.currentDot();
    if (dot === null) {
      this.state.topology = null; // explicit "no topology applied" state
    } else {
      const parsed = parseDot(dot);
      // include registered nodes the matrix does not cover
      for (const node of this.state.nodes) {
        if (!parsed.nodes.includes(node.name)) {
          parsed.nodes.push(node.name);
          parsed.isolated.push(node.name);
        }
      }
      this.state.topology = parsed;
    }
    if (notify) this.changed();
  }

  async refreshScenarios(): Promise<void> {
    this.state.scenarios = await this.api.scenarios();
    this.changed();
  }

  async refreshAttacks(): Promise<void> {
    this.state.attacks = await this.api.attacks();
    this.changed();
  }

  async refreshFlows(): Promise<void> {
    this.state.flows = await this.api.flows();
    this.changed();
  }

  selectScenario(name: string): void {
    this.state.selectedScenario = name;
    this.changed();
  }

  setProbe(report: ProbeReport): void {
    this.state.lastProbe = report;
    // the stats line is rendered verbatim, exactly as ping printed it
    this.pushConsole(`ping ${report.src} -> ${report.dst}`);
    this.pushConsole(report.stats_line);
  }

  pushConsole(line: string): void {
    this.state.consoleLines.push(line);
    if (this.state.consoleLines.length > CONSOLE_TAIL) {
      this.state.consoleLines.splice(
        0,
        this.state.consoleLines.length - CONSOLE_TAIL,
      );
    }
    this.changed();
  }

  setError(message: string | null): void {
    this.state.lastError = message;
    this.changed();
  }

  // --- event-stream reconciliation ---

  async handleEvent(event: TraceEvent): Promise<void> {
    this.state.events.push(event);
    if (this.state.events.length > EVENT_TAIL) {
      this.state.events.splice(0, this.state.events.length - EVENT_TAIL);
    }
    this.state.virtualTimeUs = Math.max(this.state.virtualTimeUs, event.t);
    switch (event.kind) {
      case "APPLY": {
        // one event delivery == one reconciliation
        await this.refreshTopology(false);
        this.state.scenarios = await this.api.scenarios();
        break;
      }
      case "ATTACK_ON":
      case "ATTACK_OFF": {
        this.state.attacks = await this.api.attacks();
        break;
      }
      case "EXEC_START": {
        this.state.execBusy = true;
        break;
      }
      case "EXEC_END": {
        this.state.execBusy = false;
        break;
      }
      default:
        break; // TX/RX/DROP/... only feed the log tail
    }
    this.changed();
  }

  /** Names of nodes currently under at least one active attack. */
  attackedNodes(): Set<string> {
    return new Set(this.state.attacks.active.map((a) => a.target));
  }

  currentSeqLabel(): string {
    const t = this.state.topology;
    if (t === null) return "no topology applied";
    return t.seq === null ? "manual topology" : `topology ${t.seq}`;
  }
}

/** Console rendering of a probe run; the last line is the verbatim stats line. */
export function formatProbeReport(report: ProbeReport): string[] {
  const lines = report.outcomes.map(
    (ok, k) =>
      `seq=${k} ${ok ? "reply received" : "timeout"}`,
  );
  lines.push(report.stats_line);
  return lines;
}

// Typed client for the control service. Every UI mutation goes through
// here, so the documented endpoints are the only way state changes.

import type {
  AttackOverview,
  ExecResult,
  FlowInfo,
  FlowStats,
  Health,
  NodeInfo,
  ProbeReport,
  ScenarioSummary,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public error: string,
    public detail: string,
  ) {
    super(`${error}: ${detail}`);
  }
}

export interface ScenarioBuildRequest {
  name: string;
  nodes: number;
  topologies: number;
  density: number;
  maxdeg: number;
  seed: number;
  interval?: number;
}

export interface AttackRequest {
  name: string;
  target: string;
  protocol?: string;
  kind?: string;
  loss_dur_s?: number;
  normal_dur_s?: number;
  cycles?: number;
}

export interface FlowRequest {
  src: string;
  dst: string;
  protocol?: string;
  port?: number;
  delay_ms?: number;
  payload_len?: number;
  count?: number | null;
}

export interface ScenarioDetail extends ScenarioSummary {
  matrices: Array<{ seq: number; status: number | null; adjacency: number[][] }>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let error = "HttpError";
      let detail = `${resp.status}`;
      try {
        const body = await resp.json();
        error = body.error ?? error;
        detail = body.detail ?? JSON.stringify(body);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, error, detail);
    }
    return resp;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.request(path, init);
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? "{}" : JSON.stringify(body),
    });
  }

  health(): Promise<Health> {
    return this.json("/health");
  }

  // --- nodes ---

  async nodes(): Promise<NodeInfo[]> {
    const body = await this.json<{ nodes: NodeInfo[] }>("/nodes");
    return body.nodes;
  }

  addNode(node: NodeInfo): Promise<{ index: number; count: number }> {
    return this.post("/nodes", node);
  }

  removeNode(name: string): Promise<{ count: number }> {
    return this.json(`/nodes/${encodeURIComponent(name)}`, { method: "DELETE" });
  }

  // --- scenarios ---

  buildScenario(req: ScenarioBuildRequest): Promise<ScenarioSummary> {
    return this.post("/scenarios", req);
  }

  async scenarios(): Promise<ScenarioSummary[]> {
    const body = await this.json<{ scenarios: ScenarioSummary[] }>("/scenarios");
    return body.scenarios;
  }

  scenario(name: string): Promise<ScenarioDetail> {
    return this.json(`/scenarios/${encodeURIComponent(name)}`);
  }

  applyTopology(
    name: string,
    seq: number,
    force = false,
  ): Promise<{ applied_at_us: number; current: number }> {
    const query = force ? "?force=true" : "";
    return this.post(
      `/scenarios/${encodeURIComponent(name)}/apply/${seq}${query}`,
    );
  }

  play(
    name: string,
    from: number,
    to: number,
  ): Promise<{ schedule: Array<{ at_us: number; seq: number }> }> {
    return this.post(`/scenarios/${encodeURIComponent(name)}/play`, {
      from,
      to,
    });
  }

  stopPlay(name: string): Promise<{ cancelled: boolean; applied: number }> {
    return this.json(`/scenarios/${encodeURIComponent(name)}/play`, {
      method: "DELETE",
    });
  }

  // --- adversary ---

  attacks(): Promise<AttackOverview> {
    return this.json("/attacks");
  }

  launchAttack(req: AttackRequest): Promise<{ attack_id: number }> {
    return this.post("/attacks", req);
  }

  stopAttack(name: string): Promise<{ stopped_at_us: number }> {
    return this.json(`/attacks/${encodeURIComponent(name)}`, {
      method: "DELETE",
    });
  }

  replayAttack(name: string): Promise<{ attack_id: number }> {
    return this.post(`/attacks/${encodeURIComponent(name)}/replay`);
  }

  inject(
    hex: string,
    asNode: string,
  ): Promise<{ frame_id: number; delivered_to: string[]; source_dropped: boolean }> {
    return this.post("/inject", { hex, as_node: asNode });
  }

  // --- traffic ---

  async flows(): Promise<FlowInfo[]> {
    const body = await this.json<{ flows: FlowInfo[] }>("/flows");
    return body.flows;
  }

  startFlow(req: FlowRequest): Promise<{ flow_id: number }> {
    return this.post("/flows", req);
  }

  stopFlow(id: number): Promise<FlowStats> {
    return this.json(`/flows/${id}`, { method: "DELETE" });
  }

  // --- probes ---

  ping(
    src: string,
    dst: string,
    count = 3,
    timeoutMs = 1000,
  ): Promise<ProbeReport> {
    return this.post("/probe/ping", {
      src,
      dst,
      count,
      timeout_ms: timeoutMs,
    });
  }

  exec(node: string, command: string): Promise<ExecResult> {
    return this.post("/exec", { node, command });
  }

  // --- topology & clock ---

  async currentDot(): Promise<string | null> {
    try {
      const resp = await this.request("/topology/current.dot");
      return await resp.text();
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        return null; // no topology applied yet
      }
      throw err;
    }
  }

  tick(seconds: number): Promise<{ virtual_time_us: number; events_processed: number }> {
    return this.post("/tick", { seconds });
  }
}

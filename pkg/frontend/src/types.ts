// Wire types mirroring the control service's JSON payloads.

export interface Health {
  status: string;
  backend: string;
  tick_policy: string;
  virtual_time_us: number;
  nodes: number;
}

export interface NodeInfo {
  name: string;
  wired_ip: string;
  wired_mac: string;
  wireless_ip: string;
  wireless_mac: string;
}

export interface ScenarioSummary {
  name: string;
  nodes: number;
  topologies: number;
  density: number;
  maxdeg: number;
  seed: number;
  interval: number;
  current: number | null;
  stale: boolean;
}

export interface SavedAttack {
  name: string;
  target: string;
  protocol: string;
  kind: string;
  loss_dur_s: number;
  normal_dur_s: number;
  cycles: number;
}

export interface ActiveAttack {
  attack_id: number;
  name: string;
  target: string;
  launched_at_us: number;
}

export interface AttackOverview {
  saved: SavedAttack[];
  active: ActiveAttack[];
}

export interface FlowStats {
  sent: number;
  received: number;
  dropped_filter: number;
  dropped_adversary: number;
  in_flight: number;
  first_send_us: number | null;
  last_send_us: number | null;
}

export interface FlowInfo {
  flow_id: number;
  src: string;
  dst: string;
  protocol: string;
  port: number;
  delay_ms: number;
  count: number | null;
  completed: boolean;
  stats: FlowStats;
}

export interface ProbeReport {
  src: string;
  dst: string;
  transmitted: number;
  received: number;
  loss_pct: number;
  outcomes: boolean[];
  stats_line: string;
}

export interface ExecResult {
  exit_code: number;
  output: string;
}

export interface TraceEvent {
  i: number;
  t: number;
  kind: string;
  text: string;
  fields: Record<string, string>;
}

export interface TopologyView {
  seq: number | null;
  nodes: string[];
  edges: Array<[string, string]>;
  isolated: string[];
}

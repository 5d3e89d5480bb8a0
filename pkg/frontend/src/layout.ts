// Small deterministic force-directed layout: repulsion between all
// vertices, spring attraction along edges, gentle centering. The
// canonical DOT stays the data contract; this is cosmetics only.

export interface LayoutPoint {
  x: number;
  y: number;
  vx: number;
  vy: number;
}

export interface LayoutOptions {
  width: number;
  height: number;
  repulsion: number;
  springLength: number;
  springStrength: number;
  centering: number;
  damping: number;
}

export const DEFAULT_OPTIONS: LayoutOptions = {
  width: 640,
  height: 480,
  repulsion: 12000,
  springLength: 120,
  springStrength: 0.02,
  centering: 0.01,
  damping: 0.85,
};

export class ForceLayout {
  points = new Map<string, LayoutPoint>();
  private edges: Array<[string, string]> = [];
  private options: LayoutOptions;

  constructor(options: Partial<LayoutOptions> = {}) {
    this.options = { ...DEFAULT_OPTIONS, ...options };
  }

  /** Sync the vertex/edge sets; existing vertices keep their positions. */
  update(nodes: string[], edges: Array<[string, string]>): void {
    const { width, height } = this.options;
    const keep = new Set(nodes);
    for (const name of [...this.points.keys()]) {
      if (!keep.has(name)) this.points.delete(name);
    }
    nodes.forEach((name, i) => {
      if (!this.points.has(name)) {
        // deterministic ring placement; no randomness, replayable layouts
        const angle = (2 * Math.PI * i) / Math.max(nodes.length, 1);
        const r = Math.min(width, height) / 3;
        this.points.set(name, {
          x: width / 2 + r * Math.cos(angle),
          y: height / 2 + r * Math.sin(angle),
          vx: 0,
          vy: 0,
        });
      }
    });
    this.edges = edges.filter(([a, b]) => keep.has(a) && keep.has(b));
  }

  /** One integration step; returns the largest displacement. */
  step(): number {
    const names = [...this.points.keys()];
    const o = this.options;
    const force = new Map<string, { fx: number; fy: number }>();
    for (const n of names) force.set(n, { fx: 0, fy: 0 });

    for (let i = 0; i < names.length; i++) {
      for (let j = i + 1; j < names.length; j++) {
        const a = this.points.get(names[i])!;
        const b = this.points.get(names[j])!;
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        let d2 = dx * dx + dy * dy;
        if (d2 < 1) {
          // coincident points: push apart along a fixed axis
          dx = 1;
          dy = 0;
          d2 = 1;
        }
        const f = o.repulsion / d2;
        const d = Math.sqrt(d2);
        const fa = force.get(names[i])!;
        const fb = force.get(names[j])!;
        fa.fx += (f * dx) / d;
        fa.fy += (f * dy) / d;
        fb.fx -= (f * dx) / d;
        fb.fy -= (f * dy) / d;
      }
    }

    for (const [na, nb] of this.edges) {
      const a = this.points.get(na)!;
      const b = this.points.get(nb)!;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const d = Math.max(Math.sqrt(dx * dx + dy * dy), 1);
      const f = o.springStrength * (d - o.springLength);
      const fa = force.get(na)!;
      const fb = force.get(nb)!;
      fa.fx += (f * dx) / d;
      fa.fy += (f * dy) / d;
      fb.fx -= (f * dx) / d;
      fb.fy -= (f * dy) / d;
    }

    let maxMove = 0;
    for (const name of names) {
      const p = this.points.get(name)!;
      const f = force.get(name)!;
      f.fx += (o.width / 2 - p.x) * o.centering;
      f.fy += (o.height / 2 - p.y) * o.centering;
      p.vx = (p.vx + f.fx) * o.damping;
      p.vy = (p.vy + f.fy) * o.damping;
      p.x += p.vx;
      p.y += p.vy;
      p.x = Math.min(Math.max(p.x, 20), o.width - 20);
      p.y = Math.min(Math.max(p.y, 20), o.height - 20);
      maxMove = Math.max(maxMove, Math.abs(p.vx) + Math.abs(p.vy));
    }
    return maxMove;
  }

  /** Run steps until motion settles or the budget runs out. */
  settle(maxSteps = 300, epsilon = 0.1): void {
    for (let i = 0; i < maxSteps; i++) {
      if (this.step() < epsilon) return;
    }
  }
}

// Parser for the service's canonical DOT output. The format is fixed:
//
//   graph topo_<seq> {
//     "a" -- "b";
//     "lonely";
//   }
//
// Edge statements come first (row-major pair order), then isolated
// nodes, no attributes anywhere.

import type { TopologyView } from "./types";

export function parseDot(text: string): TopologyView {
  const lines = text
    .split("\n")
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new Error("not a canonical DOT graph: too short");
  }
  const header = /^graph\s+(\S+)\s+\{$/.exec(lines[0]);
  if (!header) {
    throw new Error(`bad DOT header: ${lines[0]}`);
  }
  if (lines[lines.length - 1] !== "}") {
    throw new Error("bad DOT trailer");
  }
  const seqMatch = /^topo_(\d+)$/.exec(header[1]);
  const seq = seqMatch ? Number(seqMatch[1]) : null;

  const edges: Array<[string, string]> = [];
  const isolated: string[] = [];
  const nodes: string[] = [];
  const seen = new Set<string>();

  const note = (name: string) => {
    if (!seen.has(name)) {
      seen.add(name);
      nodes.push(name);
    }
  };

  for (const line of lines.slice(1, -1)) {
    const edge = /^"([^"]+)"\s+--\s+"([^"]+)";$/.exec(line);
    if (edge) {
      edges.push([edge[1], edge[2]]);
      note(edge[1]);
      note(edge[2]);
      continue;
    }
    const bare = /^"([^"]+)";$/.exec(line);
    if (bare) {
      isolated.push(bare[1]);
      note(bare[1]);
      continue;
    }
    throw new Error(`unrecognized DOT statement: ${line}`);
  }
  return { seq, nodes, edges, isolated };
}

/** Canonical comparable form of an undirected edge set. */
export function edgeKeySet(edges: Array<[string, string]>): Set<string> {
  return new Set(edges.map(([a, b]) => (a < b ? `${a}--${b}` : `${b}--${a}`)));
}

export function sameEdges(
  a: Array<[string, string]>,
  b: Array<[string, string]>,
): boolean {
  const ka = edgeKeySet(a);
  const kb = edgeKeySet(b);
  if (ka.size !== kb.size) return false;
  for (const k of ka) if (!kb.has(k)) return false;
  return true;
}

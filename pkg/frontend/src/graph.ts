/**
 * Ensemble graph rendering: circular SVG layout with edge thickness/opacity
 * driven by bootstrap confidence. If the payload cannot be laid out (unknown
 * endpoints, no nodes) the caller gets a plain edge list instead — the panel
 * degrades, it never goes blank.
 */

import type { GraphPayload } from './api.js';
import { edgeOpacity, edgeWidth } from './format.js';

export interface NodePosition {
  name: string;
  x: number;
  y: number;
}

export type GraphView =
  | { kind: 'svg'; markup: string; positions: NodePosition[] }
  | { kind: 'list'; lines: string[] };

const SIZE = 640;
const NODE_RADIUS = 26;

export function layoutCircular(nodes: string[], size = SIZE): NodePosition[] {
  const cx = size / 2;
  const cy = size / 2;
  const ring = size / 2 - NODE_RADIUS - 60;
  return nodes.map((name, i) => {
    const angle = (2 * Math.PI * i) / nodes.length - Math.PI / 2;
    return {
      name,
      x: cx + ring * Math.cos(angle),
      y: cy + ring * Math.sin(angle),
    };
  });
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function edgeLine(
  from: NodePosition,
  to: NodePosition,
  frequency: number | null,
): string {
  // shorten the segment so the arrowhead is not buried under the node disc
  const dx = to.x - from.x;
  const dy = to.y - from.y;
  const len = Math.hypot(dx, dy) || 1;
  const x2 = to.x - (dx / len) * (NODE_RADIUS + 6);
  const y2 = to.y - (dy / len) * (NODE_RADIUS + 6);
  const width = edgeWidth(frequency).toFixed(2);
  const opacity = edgeOpacity(frequency).toFixed(2);
  const title = frequency === null ? '' : ` data-frequency="${frequency.toFixed(3)}"`;
  return (
    `<line x1="${from.x.toFixed(1)}" y1="${from.y.toFixed(1)}" ` +
    `x2="${x2.toFixed(1)}" y2="${y2.toFixed(1)}" stroke="#33516d" ` +
    `stroke-width="${width}" stroke-opacity="${opacity}" ` +
    `marker-end="url(#arrow)"${title}/>`
  );
}

/** Fallback view: one line per edge, confidence spelled out. */
export function renderGraphList(graph: GraphPayload): string[] {
  return graph.edges.map((edge) => {
    const conf = edge.frequency === null ? '' : ` (${(edge.frequency * 100).toFixed(0)}%)`;
    return `${edge.from} → ${edge.to}${conf}`;
  });
}

export function renderGraph(graph: GraphPayload, size = SIZE): GraphView {
  const known = new Set(graph.nodes);
  const layoutFails =
    graph.nodes.length === 0 ||
    graph.edges.some((e) => !known.has(e.from) || !known.has(e.to));
  if (layoutFails) {
    return { kind: 'list', lines: renderGraphList(graph) };
  }

  const positions = layoutCircular(graph.nodes, size);
  const byName = new Map(positions.map((p) => [p.name, p]));
  const parts: string[] = [
    `<svg viewBox="0 0 ${size} ${size}" xmlns="http://www.w3.org/2000/svg" role="img">`,
    '<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" ' +
      'markerWidth="7" markerHeight="7" orient="auto-start-reverse">' +
      '<path d="M 0 0 L 10 5 L 0 10 z" fill="#33516d"/></marker></defs>',
  ];
  for (const edge of graph.edges) {
    parts.push(edgeLine(byName.get(edge.from)!, byName.get(edge.to)!, edge.frequency));
  }
  for (const node of positions) {
    parts.push(
      `<circle cx="${node.x.toFixed(1)}" cy="${node.y.toFixed(1)}" r="${NODE_RADIUS}" ` +
        `fill="#f3f7fb" stroke="#33516d" stroke-width="1.5" data-node="${escapeXml(node.name)}"/>`,
    );
    parts.push(
      `<text x="${node.x.toFixed(1)}" y="${(node.y + NODE_RADIUS + 14).toFixed(1)}" ` +
        `text-anchor="middle" font-size="12">${escapeXml(node.name)}</text>`,
    );
  }
  parts.push('</svg>');
  return { kind: 'svg', markup: parts.join('\n'), positions };
}

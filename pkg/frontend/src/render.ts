/**
 * Scene to SVG. Rendering is a straight fold over scene nodes, so the
 * markup is as deterministic as the scene itself.
 */

import type { CauseRole, Scene, SceneNode } from "./scene.js";

export const ROLE_COLORS: Record<CauseRole | "effect", string> = {
  impelling: "green",
  inhibiting: "purple",
  effect: "red",
};

/** Track tint cycles per community; communities only need to be told apart. */
export const COMMUNITY_PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#b07aa1",
  "#76b7b2",
  "#edc948",
  "#9c755f",
];

export function communityColor(community: number): string {
  return COMMUNITY_PALETTE[((community % COMMUNITY_PALETTE.length) + COMMUNITY_PALETTE.length) % COMMUNITY_PALETTE.length]!;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function fmt(x: number): string {
  return Number.isInteger(x) ? String(x) : String(Math.round(x * 1000) / 1000);
}

function renderNode(node: SceneNode): string {
  switch (node.kind) {
    case "track":
      return `<line class="track" x1="${fmt(node.x1)}" y1="${fmt(node.y)}" x2="${fmt(node.x2)}" y2="${fmt(node.y)}" stroke="${communityColor(node.community)}" stroke-width="2" opacity="0.45" data-entity="${esc(node.entity)}"/>`;
    case "label":
      return `<text x="${fmt(node.x)}" y="${fmt(node.y)}" text-anchor="${node.anchor}" dominant-baseline="middle" font-size="11">${esc(node.text)}</text>`;
    case "column": {
      const cls = node.expanded ? "column expanded" : "column collapsed";
      const stroke = node.brushed ? ' stroke="#1c1c1c" stroke-width="1.5"' : "";
      return `<rect class="${cls}" x="${fmt(node.x)}" y="0" width="${fmt(node.width)}" height="100%" fill="${node.expanded ? "none" : "#d9d9d9"}"${stroke} data-group="${esc(node.groupId)}"/>`;
    }
    case "cause":
      return `<circle class="cause ${node.slot}" cx="${fmt(node.cx)}" cy="${fmt(node.cy)}" r="${fmt(node.r)}" fill="${ROLE_COLORS[node.role]}" fill-opacity="${fmt(node.opacity)}" data-group="${esc(node.groupId)}" data-entity="${esc(node.entity)}"${node.memberId ? ` data-member="${esc(node.memberId)}"` : ""}/>`;
    case "effect":
      return `<circle class="effect" cx="${fmt(node.cx)}" cy="${fmt(node.cy)}" r="${fmt(node.r)}" fill="none" stroke="${ROLE_COLORS.effect}" stroke-width="2.5" data-group="${esc(node.groupId)}" data-entity="${esc(node.entity)}"/>`;
    case "and-line":
      return `<line class="and-line" x1="${fmt(node.x)}" y1="${fmt(node.y1)}" x2="${fmt(node.x)}" y2="${fmt(node.y2)}" stroke="#1c1c1c" stroke-width="2" data-group="${esc(node.groupId)}"/>`;
    case "or-arc":
      return `<path class="or-arc" d="M ${fmt(node.x)} ${fmt(node.y1)} C ${fmt(node.x + node.bow)} ${fmt(node.y1)}, ${fmt(node.x + node.bow)} ${fmt(node.y2)}, ${fmt(node.x)} ${fmt(node.y2)}" fill="none" stroke="#1c1c1c" stroke-width="1.5" data-group="${esc(node.groupId)}"/>`;
    case "arrow":
      return `<line class="arrow" x1="${fmt(node.x)}" y1="${fmt(node.y1)}" x2="${fmt(node.x)}" y2="${fmt(node.y2)}" stroke="${ROLE_COLORS.effect}" stroke-width="1.5" marker-end="url(#arrowhead)" data-group="${esc(node.groupId)}"/>`;
    case "pie":
      return `<g class="pie" data-group="${esc(node.groupId)}">${node.sectors
        .map((s) => `<path d="${pieSlice(node.cx, node.cy, node.r, s.startAngle, s.endAngle)}" fill="${ROLE_COLORS[s.role]}"/>`)
        .join("")}</g>`;
    case "message":
      return `<text class="message" x="16" y="32" font-size="13" fill="#555">${esc(node.text)}</text>`;
    case "path-node":
      return `<circle class="path-node" cx="${fmt(node.cx)}" cy="${fmt(node.cy)}" r="${fmt(node.r)}" fill="${node.onBestPath ? "#1c1c1c" : "#ffffff"}" stroke="#1c1c1c" data-entity="${esc(node.entity)}" data-layer="${node.layer}"/>`;
    case "path-edge": {
      const label = node.strength === null
        ? ""
        : `<text x="${fmt((node.x1 + node.x2) / 2)}" y="${fmt((node.y1 + node.y2) / 2 - 6)}" text-anchor="middle" font-size="10">${fmt(node.strength)}</text>`;
      return `<g class="path-edge${node.best ? " best" : ""}"><line x1="${fmt(node.x1)}" y1="${fmt(node.y1)}" x2="${fmt(node.x2)}" y2="${fmt(node.y2)}" stroke="${node.best ? "#1c1c1c" : "#b0b0b0"}" stroke-width="${node.best ? 2.5 : 1}"/>${label}</g>`;
    }
    case "badge":
      return `<g class="badge"><rect x="8" y="8" width="344" height="30" rx="6" fill="#fdecea" stroke="red"/><text x="20" y="27" font-size="12" fill="red">${esc(node.text)}</text></g>`;
    case "bar":
      return `<rect class="bar" x="${fmt(node.x)}" y="${fmt(node.y)}" width="${fmt(node.width)}" height="${fmt(node.height)}" fill="#4e79a7" data-count="${node.count}"/>`;
  }
}

export function renderSvg(scene: Scene): string {
  const defs =
    '<defs><marker id="arrowhead" markerWidth="8" markerHeight="8" refX="6" refY="3" orient="auto">' +
    `<path d="M 0 0 L 6 3 L 0 6 z" fill="${ROLE_COLORS.effect}"/></marker></defs>`;
  const body = scene.nodes.map(renderNode).join("\n");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fmt(scene.width)}" height="${fmt(scene.height)}" ` +
    `viewBox="0 0 ${fmt(scene.width)} ${fmt(scene.height)}">\n${defs}\n${body}\n</svg>`
  );
}

function pieSlice(cx: number, cy: number, r: number, a0: number, a1: number): string {
  // A full-circle slice would collapse to a zero-length arc; draw two halves.
  if (a1 - a0 >= 2 * Math.PI - 1e-9) {
    const mid = a0 + Math.PI;
    return `${halfSlice(cx, cy, r, a0, mid)} ${halfSlice(cx, cy, r, mid, a0 + 2 * Math.PI)}`;
  }
  return halfSlice(cx, cy, r, a0, a1);
}

function halfSlice(cx: number, cy: number, r: number, a0: number, a1: number): string {
  const x0 = cx + r * Math.cos(a0);
  const y0 = cy + r * Math.sin(a0);
  const x1 = cx + r * Math.cos(a1);
  const y1 = cy + r * Math.sin(a1);
  const large = a1 - a0 > Math.PI ? 1 : 0;
  return `M ${fmt(cx)} ${fmt(cy)} L ${fmt(x0)} ${fmt(y0)} A ${fmt(r)} ${fmt(r)} 0 ${large} 1 ${fmt(x1)} ${fmt(y1)} Z`;
}

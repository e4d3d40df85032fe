/**
 * Parameter-space scatter: where the interpolated encoders sit versus
 * where the stored training data sits. Marker layout is computed as pure
 * data so it can be tested without a DOM; rendering writes one SVG.
 *
 * Spaces with one dimension draw as a strip (y pinned to the middle);
 * higher-dimensional spaces project onto a chosen pair of dimensions.
 */

import type { SpaceDescriptor } from "./api.js";

export type MarkerKind = "encoder" | "training";

export interface Marker {
  kind: MarkerKind;
  /** View coordinates in [0, 1]^2; y grows upward. */
  x: number;
  y: number;
  /** Original parameter-space point, for tooltips. */
  theta: number[];
}

export interface ScatterLayout {
  markers: Marker[];
  /** Dimension indices actually plotted (equal indices for 1-D strips). */
  dims: [number, number];
  axisLabels: [string, string];
}

function axisValue(
  theta: number[],
  dim: number,
  lower: number[],
  upper: number[],
): number {
  const span = upper[dim] - lower[dim];
  return (theta[dim] - lower[dim]) / span;
}

export function scatterLayout(
  space: SpaceDescriptor,
  dimPair?: [number, number],
): ScatterLayout {
  const dim = space.names.length;
  const [dx, dyRaw] = dimPair ?? [0, Math.min(1, dim - 1)];
  if (dx < 0 || dx >= dim || dyRaw < 0 || dyRaw >= dim) {
    throw new Error(`scatter: dimension pair [${dx}, ${dyRaw}] outside 0..${dim - 1}`);
  }
  const strip = dim === 1 || dx === dyRaw;
  const dy = strip ? dx : dyRaw;

  const place = (theta: number[], kind: MarkerKind): Marker => ({
    kind,
    x: axisValue(theta, dx, space.lower, space.upper),
    y: strip ? 0.5 : axisValue(theta, dy, space.lower, space.upper),
    theta,
  });

  const markers = [
    ...space.encoderPositions.map((p) => place(p, "encoder")),
    ...space.trainingPositions.map((p) => place(p, "training")),
  ];
  return {
    markers,
    dims: [dx, dy],
    axisLabels: [space.names[dx], strip ? "" : space.names[dy]],
  };
}

export function markerCount(layout: ScatterLayout, kind: MarkerKind): number {
  return layout.markers.filter((m) => m.kind === kind).length;
}

const SVG_NS = "http://www.w3.org/2000/svg";

/** Draw the layout into `host`, replacing any previous plot. */
export function renderScatter(
  host: HTMLElement,
  layout: ScatterLayout,
  sizePx = 180,
): SVGSVGElement {
  host.textContent = "";
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${sizePx} ${sizePx}`);
  svg.setAttribute("width", String(sizePx));
  svg.setAttribute("height", String(sizePx));
  svg.classList.add("scatter");

  const pad = 8;
  const span = sizePx - 2 * pad;
  for (const m of layout.markers) {
    const cx = pad + m.x * span;
    const cy = pad + (1 - m.y) * span; // SVG y grows downward
    let node: SVGElement;
    if (m.kind === "encoder") {
      node = document.createElementNS(SVG_NS, "circle");
      node.setAttribute("cx", cx.toFixed(2));
      node.setAttribute("cy", cy.toFixed(2));
      node.setAttribute("r", "3");
    } else {
      // training data draws as a small cross so overlapping positions
      // stay distinguishable
      node = document.createElementNS(SVG_NS, "path");
      const d = 3;
      node.setAttribute(
        "d",
        `M ${(cx - d).toFixed(2)} ${cy.toFixed(2)} H ${(cx + d).toFixed(2)} ` +
          `M ${cx.toFixed(2)} ${(cy - d).toFixed(2)} V ${(cy + d).toFixed(2)}`,
      );
    }
    node.classList.add(m.kind);
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent = `${m.kind}: (${m.theta.map((t) => t.toPrecision(4)).join(", ")})`;
    node.appendChild(tip);
    svg.appendChild(node);
  }
  host.appendChild(svg);
  return svg;
}

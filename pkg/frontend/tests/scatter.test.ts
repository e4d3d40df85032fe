import { describe, expect, it } from "vitest";

import type { SpaceDescriptor } from "../src/api.js";
import { markerCount, scatterLayout } from "../src/scatter.js";

function space1d(): SpaceDescriptor {
  return {
    task: "tsr",
    names: ["time"],
    lower: [0],
    upper: [1],
    encoderPositions: [[0], [0.25], [0.5], [0.75], [1]],
    trainingPositions: [[0], [0.5], [1]],
    engines: ["hyperinr", "lerp", "reference"],
    atlasSize: 5,
  };
}

function space3d(): SpaceDescriptor {
  return {
    task: "dgs",
    names: ["az", "el", "intensity"],
    lower: [0, -90, 0.5],
    upper: [360, 90, 2.0],
    encoderPositions: [
      [0, -90, 0.5],
      [180, 0, 1.25],
      [360, 90, 2.0],
    ],
    trainingPositions: [[90, 45, 1.0]],
    engines: ["hyperinr", "lerp", "reference"],
    atlasSize: 3,
  };
}

describe("scatter layout", () => {
  it("draws a 1-D space as a mid-height strip", () => {
    const layout = scatterLayout(space1d());
    expect(layout.dims).toEqual([0, 0]);
    expect(layout.axisLabels).toEqual(["time", ""]);
    for (const m of layout.markers) {
      expect(m.y).toBe(0.5);
      expect(m.x).toBeGreaterThanOrEqual(0);
      expect(m.x).toBeLessThanOrEqual(1);
    }
  });

  it("encoder marker count equals the atlas size", () => {
    const space = space1d();
    const layout = scatterLayout(space);
    expect(markerCount(layout, "encoder")).toBe(space.atlasSize);
    expect(markerCount(layout, "training")).toBe(space.trainingPositions.length);
  });

  it("normalizes native units onto the unit square", () => {
    const layout = scatterLayout(space3d()); // default pair: first two dims
    const encoders = layout.markers.filter((m) => m.kind === "encoder");
    expect(encoders[0].x).toBeCloseTo(0, 12);
    expect(encoders[0].y).toBeCloseTo(0, 12);
    expect(encoders[1].x).toBeCloseTo(0.5, 12);
    expect(encoders[1].y).toBeCloseTo(0.5, 12);
    expect(encoders[2].x).toBeCloseTo(1, 12);
    expect(encoders[2].y).toBeCloseTo(1, 12);
  });

  it("projects onto a chosen dimension pair", () => {
    const layout = scatterLayout(space3d(), [0, 2]);
    expect(layout.axisLabels).toEqual(["az", "intensity"]);
    const mid = layout.markers[1];
    expect(mid.x).toBeCloseTo(0.5, 12);
    expect(mid.y).toBeCloseTo(0.5, 12); // (1.25 - 0.5) / 1.5
  });

  it("keeps the original theta on each marker for tooltips", () => {
    const layout = scatterLayout(space3d());
    expect(layout.markers[1].theta).toEqual([180, 0, 1.25]);
  });

  it("rejects out-of-range dimension pairs", () => {
    expect(() => scatterLayout(space1d(), [0, 1])).toThrow(/outside/);
    expect(() => scatterLayout(space3d(), [3, 0])).toThrow(/outside/);
  });

  it("an equal pair falls back to a strip", () => {
    const layout = scatterLayout(space3d(), [2, 2]);
    for (const m of layout.markers) expect(m.y).toBe(0.5);
    expect(layout.axisLabels[1]).toBe("");
  });
});

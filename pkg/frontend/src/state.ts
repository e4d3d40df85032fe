/**
 * Explorer state: the current parameter point, camera orbit, engine
 * selection and latency readout. The one invariant that matters is that
 * θ is clamped to the space bounds before it ever reaches a request.
 */

import type { Engine, RenderRequest, SpaceDescriptor } from "./api.js";
import type { OrbitCamera } from "./orbit.js";

export interface ExplorerState {
  theta: number[];
  engines: Engine[]; // one = single view, two = side by side
  size: number;
  lastAssembleMs: number | null;
  lastRenderMs: number | null;
}

export function clampTheta(theta: number[], space: SpaceDescriptor): number[] {
  if (theta.length !== space.lower.length) {
    throw new Error(
      `theta has ${theta.length} entries for a ${space.lower.length}-D space`,
    );
  }
  return theta.map((t, i) =>
    Math.min(Math.max(t, space.lower[i]), space.upper[i]),
  );
}

/** Midpoint of the space — a sensible first frame. */
export function initialState(space: SpaceDescriptor): ExplorerState {
  return {
    theta: space.lower.map((lo, i) => (lo + space.upper[i]) / 2),
    engines: ["hyperinr"],
    size: 256,
    lastAssembleMs: null,
    lastRenderMs: null,
  };
}

/**
 * One render request per selected engine, sharing θ and the exact same
 * serialized camera so side-by-side comparisons are pixel-aligned.
 */
export function toRenderRequests(
  state: ExplorerState,
  space: SpaceDescriptor,
  orbit: OrbitCamera | null,
): RenderRequest[] {
  const theta = clampTheta(state.theta, space);
  const camera = orbit ? orbit.toCameraSpec() : undefined;
  return state.engines.map((engine) => ({
    theta,
    engine,
    size: state.size,
    ...(camera ? { camera } : {}),
  }));
}

/**
 * Orbit camera around the unit-cube volume. The scene's vertical axis is
 * +z (the renderer's default up), so the polar angle is measured from +z
 * and clamped away from the poles to keep the view direction from ever
 * running parallel to the up vector.
 */

import type { CameraSpec } from "./api.js";

const DEG = Math.PI / 180;
const MIN_POLAR = 1 * DEG;
const MAX_POLAR = 179 * DEG;
const TWO_PI = 2 * Math.PI;

export interface OrbitState {
  polar: number; // radians from +z, in (MIN_POLAR, MAX_POLAR)
  azimuth: number; // radians around +z, wrapped to [0, 2π)
  distance: number;
}

export interface OrbitCamera {
  state(): OrbitState;
  /** Pointer drag in pixels; horizontal orbits azimuth, vertical tilts polar. */
  drag(dxPx: number, dyPx: number): void;
  /** Wheel delta; positive moves away from the target. */
  wheel(deltaY: number): void;
  toCameraSpec(): CameraSpec;
}

export interface OrbitOptions {
  target?: [number, number, number];
  distance?: number;
  polar?: number;
  azimuth?: number;
  minDistance?: number;
  maxDistance?: number;
  fovDeg?: number;
  /** Radians of rotation per pixel of drag. */
  radiansPerPixel?: number;
}

const clamp = (v: number, lo: number, hi: number) =>
  Math.min(Math.max(v, lo), hi);

/** Wrap an angle into [0, 2π) so a full revolution is the identity. */
export function wrapAngle(a: number): number {
  const r = a % TWO_PI;
  return r < 0 ? r + TWO_PI : r;
}

export function createOrbitCamera(options: OrbitOptions = {}): OrbitCamera {
  const target = options.target ?? [0.5, 0.5, 0.5];
  const minDistance = options.minDistance ?? 0.2;
  const maxDistance = options.maxDistance ?? 10;
  const fovDeg = options.fovDeg ?? 45;
  const radiansPerPixel = options.radiansPerPixel ?? 0.005;

  let polar = clamp(options.polar ?? 70 * DEG, MIN_POLAR, MAX_POLAR);
  let azimuth = wrapAngle(options.azimuth ?? 35 * DEG);
  let distance = clamp(options.distance ?? 2.3, minDistance, maxDistance);

  return {
    state: () => ({ polar, azimuth, distance }),

    drag(dxPx: number, dyPx: number): void {
      azimuth = wrapAngle(azimuth - dxPx * radiansPerPixel);
      polar = clamp(polar - dyPx * radiansPerPixel, MIN_POLAR, MAX_POLAR);
    },

    wheel(deltaY: number): void {
      // Exponential zoom feels uniform at any distance.
      distance = clamp(distance * Math.exp(deltaY * 1e-3), minDistance, maxDistance);
    },

    toCameraSpec(): CameraSpec {
      const s = Math.sin(polar);
      const eye: [number, number, number] = [
        target[0] + distance * s * Math.cos(azimuth),
        target[1] + distance * s * Math.sin(azimuth),
        target[2] + distance * Math.cos(polar),
      ];
      return {
        eye,
        look_at: [target[0], target[1], target[2]],
        up: [0, 0, 1],
        fov_deg: fovDeg,
      };
    },
  };
}

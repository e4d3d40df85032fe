/**
 * One range slider per parameter dimension, labeled in native units.
 */

import type { SpaceDescriptor } from "./api.js";

export interface SliderHandles {
  /** Current values, in native units, in dimension order. */
  values(): number[];
  setValues(theta: number[]): void;
  elements: HTMLInputElement[];
}

const STEPS = 200;

export function buildSliders(
  host: HTMLElement,
  space: SpaceDescriptor,
  initial: number[],
  onInput: (theta: number[]) => void,
): SliderHandles {
  host.textContent = "";
  const inputs: HTMLInputElement[] = [];
  const readouts: HTMLElement[] = [];

  space.names.forEach((name, i) => {
    const row = document.createElement("label");
    row.className = "slider-row";

    const title = document.createElement("span");
    title.textContent = name;
    row.appendChild(title);

    const input = document.createElement("input");
    input.type = "range";
    input.min = String(space.lower[i]);
    input.max = String(space.upper[i]);
    input.step = String((space.upper[i] - space.lower[i]) / STEPS);
    input.value = String(initial[i]);
    row.appendChild(input);

    const readout = document.createElement("span");
    readout.className = "slider-value";
    row.appendChild(readout);

    inputs.push(input);
    readouts.push(readout);
    host.appendChild(row);
  });

  const values = () => inputs.map((el) => Number(el.value));
  const refresh = () => {
    values().forEach((v, i) => {
      readouts[i].textContent = v.toPrecision(4);
    });
  };
  refresh();

  inputs.forEach((el) =>
    el.addEventListener("input", () => {
      refresh();
      onInput(values());
    }),
  );

  return {
    values,
    setValues(theta: number[]): void {
      theta.forEach((t, i) => {
        inputs[i].value = String(t);
      });
      refresh();
    },
    elements: inputs,
  };
}

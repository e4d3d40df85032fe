/**
 * Entry point: fetch the space descriptor, build the controls, and keep
 * the rendered view in sync with them through the throttled sequencer.
 */

import { ExplorerApi, type Engine, type RenderedFrame, type SpaceDescriptor } from "./api.js";
import { createOrbitCamera, type OrbitCamera } from "./orbit.js";
import { renderScatter, scatterLayout } from "./scatter.js";
import { createFrameSequencer } from "./sequencer.js";
import { buildSliders } from "./sliders.js";
import { clampTheta, initialState, toRenderRequests, type ExplorerState } from "./state.js";

const api = new ExplorerApi("");

const $ = (id: string) => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id} in index.html`);
  return el;
};

function showBanner(message: string, onRetry: () => void): void {
  const banner = $("banner");
  banner.textContent = "";
  banner.classList.remove("hidden");
  const text = document.createElement("span");
  text.textContent = message;
  banner.appendChild(text);
  const retry = document.createElement("button");
  retry.textContent = "Retry";
  retry.addEventListener("click", onRetry);
  banner.appendChild(retry);
}

async function boot(): Promise<void> {
  let space: SpaceDescriptor;
  try {
    space = await api.space();
  } catch (err) {
    showBanner(`Service unreachable: ${String(err)}`, () => void boot());
    return;
  }
  $("banner").classList.add("hidden");
  start(space);
}

function start(space: SpaceDescriptor): void {
  const state: ExplorerState = initialState(space);
  $("task").textContent = `${space.task} — ${space.names.join(", ")}`;

  // Stored-view tasks render fixed images; everything else gets an orbit.
  const orbit: OrbitCamera | null =
    space.task === "nvs" ? null : createOrbitCamera();

  const view = $("view");
  const images = new Map<Engine, HTMLImageElement>();
  const urls = new Map<Engine, string>();

  const sequencer = createFrameSequencer<
    ExplorerState,
    { engine: Engine; frame: RenderedFrame }[]
  >({
    send: (s) =>
      Promise.all(
        toRenderRequests(s, space, orbit).map(async (req) => ({
          engine: req.engine,
          frame: await api.render(req, space),
        })),
      ),
    apply: (results) => {
      // One <img> per engine currently on screen; drop the rest.
      view.textContent = "";
      for (const url of urls.values()) URL.revokeObjectURL(url);
      urls.clear();
      images.clear();
      for (const { engine, frame } of results) {
        const figure = document.createElement("figure");
        const img = document.createElement("img");
        const url = URL.createObjectURL(frame.blob);
        img.src = url;
        img.width = state.size;
        img.height = state.size;
        figure.appendChild(img);
        const caption = document.createElement("figcaption");
        caption.textContent = engine;
        figure.appendChild(caption);
        view.appendChild(figure);
        images.set(engine, img);
        urls.set(engine, url);
      }
      const slowest = Math.max(...results.map((r) => r.frame.assembleMs));
      state.lastAssembleMs = slowest;
      state.lastRenderMs = Math.max(...results.map((r) => r.frame.renderMs));
      $("latency").textContent =
        `assemble ${slowest.toFixed(1)} ms · ` +
        `render ${state.lastRenderMs.toFixed(1)} ms`;
    },
    onError: (err) => {
      $("latency").textContent = String(err);
    },
  });
  const refresh = () => sequencer.request({ ...state, theta: [...state.theta] });

  // --- sliders ---------------------------------------------------------
  buildSliders($("sliders"), space, state.theta, (theta) => {
    state.theta = clampTheta(theta, space);
    refresh();
  });

  // --- engine selection ------------------------------------------------
  const engineHost = $("engines");
  const single = document.createElement("select");
  for (const engine of space.engines) {
    const opt = document.createElement("option");
    opt.value = engine;
    opt.textContent = engine;
    single.appendChild(opt);
  }
  const sideBySide = document.createElement("input");
  sideBySide.type = "checkbox";
  const applyEngines = () => {
    state.engines = sideBySide.checked
      ? ["hyperinr", "lerp"]
      : [single.value as Engine];
    single.disabled = sideBySide.checked;
    refresh();
  };
  single.addEventListener("change", applyEngines);
  sideBySide.addEventListener("change", applyEngines);
  engineHost.appendChild(single);
  const sbsLabel = document.createElement("label");
  sbsLabel.appendChild(sideBySide);
  sbsLabel.appendChild(document.createTextNode(" side-by-side vs lerp"));
  engineHost.appendChild(sbsLabel);

  // --- scatter + dimension pair picker ---------------------------------
  const scatterHost = $("scatter");
  let dims: [number, number] = [0, Math.min(1, space.names.length - 1)];
  const drawScatter = () =>
    renderScatter(scatterHost, scatterLayout(space, dims));
  if (space.names.length > 2) {
    const picker = $("dim-picker");
    const selects: HTMLSelectElement[] = [];
    for (const axis of [0, 1] as const) {
      const sel = document.createElement("select");
      space.names.forEach((name, i) => {
        const opt = document.createElement("option");
        opt.value = String(i);
        opt.textContent = name;
        if (i === dims[axis]) opt.selected = true;
        sel.appendChild(opt);
      });
      sel.addEventListener("change", () => {
        dims = [Number(selects[0].value), Number(selects[1].value)];
        drawScatter();
      });
      picker.appendChild(sel);
      selects.push(sel);
    }
  }
  drawScatter();

  // --- orbit control ----------------------------------------------------
  if (orbit) {
    let dragging = false;
    view.addEventListener("pointerdown", (ev) => {
      dragging = true;
      view.setPointerCapture(ev.pointerId);
    });
    view.addEventListener("pointerup", (ev) => {
      dragging = false;
      view.releasePointerCapture(ev.pointerId);
    });
    view.addEventListener("pointermove", (ev) => {
      if (!dragging) return;
      orbit.drag(ev.movementX, ev.movementY);
      refresh();
    });
    view.addEventListener(
      "wheel",
      (ev) => {
        ev.preventDefault();
        orbit.wheel(ev.deltaY);
        refresh();
      },
      { passive: false },
    );
  }

  // apply the engine default and draw the first frame
  applyEngines();
}

void boot();

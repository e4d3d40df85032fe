/**
 * Typed client for the exploration service. All knowledge of the wire
 * format lives here; the rest of the UI works with the parsed types.
 *
 * Responses are validated field-by-field so a drifting server contract
 * fails loudly at the fetch site instead of as NaN geometry later.
 */

export type Engine = "hyperinr" | "lerp" | "reference";

export interface SpaceDescriptor {
  task: string;
  names: string[];
  lower: number[];
  upper: number[];
  encoderPositions: number[][];
  trainingPositions: number[][];
  engines: Engine[];
  atlasSize: number;
}

export interface CameraSpec {
  eye: [number, number, number];
  look_at: [number, number, number];
  up: [number, number, number];
  fov_deg: number;
}

export interface RenderRequest {
  theta: number[];
  engine: Engine;
  size: number;
  camera?: CameraSpec;
}

export interface RenderedFrame {
  blob: Blob;
  assembleMs: number;
  renderMs: number;
}

export interface MetricsRow {
  theta: number[];
  psnr_hyperinr?: number | null;
  ssim_hyperinr?: number | null;
  psnr_lerp?: number | null;
  ssim_lerp?: number | null;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

function numberArray(v: unknown, what: string): number[] {
  if (!Array.isArray(v) || !v.every((x) => typeof x === "number")) {
    throw new Error(`space descriptor: ${what} is not a number array`);
  }
  return v as number[];
}

function pointList(v: unknown, what: string, dim: number): number[][] {
  if (!Array.isArray(v)) throw new Error(`space descriptor: ${what} is not an array`);
  return v.map((row, i) => {
    const p = numberArray(row, `${what}[${i}]`);
    if (p.length !== dim) {
      throw new Error(`space descriptor: ${what}[${i}] has ${p.length} coords, expected ${dim}`);
    }
    return p;
  });
}

/** Validate and normalize a raw /api/space payload. Exposed for tests. */
export function parseSpace(raw: unknown): SpaceDescriptor {
  if (typeof raw !== "object" || raw === null) {
    throw new Error("space descriptor: not an object");
  }
  const o = raw as Record<string, unknown>;
  if (typeof o.task !== "string") throw new Error("space descriptor: missing task");
  if (!Array.isArray(o.names) || !o.names.every((n) => typeof n === "string")) {
    throw new Error("space descriptor: names is not a string array");
  }
  const names = o.names as string[];
  const lower = numberArray(o.lower, "lower");
  const upper = numberArray(o.upper, "upper");
  if (lower.length !== names.length || upper.length !== names.length) {
    throw new Error("space descriptor: bounds arity does not match names");
  }
  if (lower.some((lo, i) => !(lo < upper[i]))) {
    throw new Error("space descriptor: lower must be strictly below upper");
  }
  const dim = names.length;
  const encoderPositions = pointList(o.encoder_positions, "encoder_positions", dim);
  const trainingPositions = pointList(o.training_positions, "training_positions", dim);
  if (typeof o.atlas_size !== "number" || o.atlas_size !== encoderPositions.length) {
    throw new Error("space descriptor: atlas_size disagrees with encoder_positions");
  }
  if (!Array.isArray(o.engines) || !o.engines.every((e) => typeof e === "string")) {
    throw new Error("space descriptor: engines is not a string array");
  }
  return {
    task: o.task,
    names,
    lower,
    upper,
    encoderPositions,
    trainingPositions,
    engines: o.engines as Engine[],
    atlasSize: o.atlas_size,
  };
}

async function raise(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && body.detail) detail = JSON.stringify(body.detail);
  } catch {
    /* non-JSON error body; keep statusText */
  }
  throw new ApiError(resp.status, `${resp.status}: ${detail}`);
}

export class ExplorerApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  async space(): Promise<SpaceDescriptor> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/space`);
    if (!resp.ok) await raise(resp);
    return parseSpace(await resp.json());
  }

  /**
   * POST /api/render. On a 422 (θ drifted outside bounds, e.g. stale
   * slider state racing a space refetch) the request is clamped to the
   * given bounds and retried once.
   */
  async render(
    req: RenderRequest,
    bounds?: { lower: number[]; upper: number[] },
  ): Promise<RenderedFrame> {
    let resp = await this.post("/api/render", req);
    if (resp.status === 422 && bounds) {
      const clamped = {
        ...req,
        theta: req.theta.map((t, i) =>
          Math.min(Math.max(t, bounds.lower[i]), bounds.upper[i]),
        ),
      };
      resp = await this.post("/api/render", clamped);
    }
    if (!resp.ok) await raise(resp);
    return {
      blob: await resp.blob(),
      assembleMs: Number(resp.headers.get("X-Assemble-Ms") ?? "0"),
      renderMs: Number(resp.headers.get("X-Render-Ms") ?? "0"),
    };
  }

  async metrics(thetas: number[][], engines?: string[]): Promise<MetricsRow[]> {
    const body: Record<string, unknown> = { thetas };
    if (engines) body.engines = engines;
    const resp = await this.post("/api/metrics", body);
    if (!resp.ok) await raise(resp);
    const parsed = await resp.json();
    if (!parsed || !Array.isArray(parsed.rows)) {
      throw new Error("metrics: response has no rows array");
    }
    return parsed.rows as MetricsRow[];
  }

  private post(path: string, body: unknown): Promise<Response> {
    return this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}

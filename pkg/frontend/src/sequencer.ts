/**
 * Request pacing for slider drags and camera orbits.
 *
 * Two jobs in one place because they share state:
 *  - throttle: at most one dispatch per `minIntervalMs` (default 100 ms,
 *    i.e. <= 10 requests/second), trailing-edge so the final slider
 *    position always renders;
 *  - sequencing: every dispatch carries a monotonically increasing token,
 *    and a response is applied only if its token is newer than the newest
 *    one already applied. Out-of-order arrivals of stale frames are
 *    silently dropped, so the displayed frame never lags the sliders.
 */

export interface FrameSequencer<S> {
  /** Record the newest desired state; dispatches now or on the trailing edge. */
  request(state: S): void;
  /** Sequence number of the most recent dispatch. */
  issued(): number;
  /** Sequence number of the most recently applied response. */
  applied(): number;
  /** Cancel any pending trailing-edge dispatch. */
  dispose(): void;
}

export interface SequencerOptions<S, R> {
  send: (state: S) => Promise<R>;
  apply: (result: R, state: S) => void;
  onError?: (err: unknown) => void;
  minIntervalMs?: number;
}

export function createFrameSequencer<S, R>(
  opts: SequencerOptions<S, R>,
): FrameSequencer<S> {
  const minInterval = opts.minIntervalMs ?? 100;
  let seq = 0;
  let shown = 0;
  let lastDispatch = -Infinity;
  let pending: S | null = null;
  let timer: ReturnType<typeof setTimeout> | null = null;

  function dispatch(state: S): void {
    lastDispatch = Date.now();
    seq += 1;
    const token = seq;
    opts.send(state).then(
      (result) => {
        if (token > shown) {
          shown = token;
          opts.apply(result, state);
        }
      },
      (err) => {
        // A failed frame still advances the shown counter: we would rather
        // show nothing new than later accept an even older success.
        if (token > shown) shown = token;
        opts.onError?.(err);
      },
    );
  }

  return {
    request(state: S): void {
      const wait = lastDispatch + minInterval - Date.now();
      if (wait <= 0 && timer === null) {
        dispatch(state);
        return;
      }
      pending = state;
      if (timer === null) {
        timer = setTimeout(() => {
          timer = null;
          const next = pending;
          pending = null;
          if (next !== null) dispatch(next);
        }, Math.max(wait, 0));
      }
    },
    issued: () => seq,
    applied: () => shown,
    dispose(): void {
      if (timer !== null) clearTimeout(timer);
      timer = null;
      pending = null;
    },
  };
}

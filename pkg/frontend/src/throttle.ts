/**
 * Coalescing rate limiter for pose updates.
 *
 * During a drag the pointer fires far faster than the service should be
 * asked to deform; only the newest payload survives, sent at most once
 * per interval, and a trailing send flushes the final position.
 */

export class CoalescingThrottle<T> {
  private intervalMs: number;
  private send: (payload: T) => void;
  private now: () => number;
  private schedule: (fn: () => void, ms: number) => unknown;
  private cancel: (token: unknown) => void;

  private lastSent = -Infinity;
  private queued: T | null = null;
  private timer: unknown = null;
  sentCount = 0;

  constructor(
    ratePerSecond: number,
    send: (payload: T) => void,
    clock?: {
      now: () => number;
      schedule: (fn: () => void, ms: number) => unknown;
      cancel: (token: unknown) => void;
    },
  ) {
    this.intervalMs = 1000 / ratePerSecond;
    this.send = send;
    this.now = clock?.now ?? (() => performance.now());
    this.schedule = clock?.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = clock?.cancel ?? ((token) => clearTimeout(token as any));
  }

  push(payload: T): void {
    const elapsed = this.now() - this.lastSent;
    if (elapsed >= this.intervalMs) {
      this.fire(payload);
      return;
    }
    this.queued = payload;
    if (this.timer === null) {
      this.timer = this.schedule(() => this.flush(), this.intervalMs - elapsed);
    }
  }

  flush(): void {
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.timer = null;
    }
    if (this.queued !== null) {
      const payload = this.queued;
      this.queued = null;
      this.fire(payload);
    }
  }

  private fire(payload: T): void {
    this.lastSent = this.now();
    this.sentCount += 1;
    this.send(payload);
  }
}

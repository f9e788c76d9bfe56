/**
 * Debounced mutation sender: at most one request in flight per key, at most
 * one queued behind it, trailing edge fired after `intervalMs`. Rapid slider
 * movement therefore collapses to <= 1000/intervalMs requests per second and
 * the final value always wins.
 */
export class MutationQueue {
  private timers = new Map<string, ReturnType<typeof setTimeout>>();
  private inFlight = new Set<string>();
  private pending = new Map<string, () => Promise<void>>();
  sent = 0;

  constructor(
    private intervalMs = 100,
    private onError: (key: string, err: unknown) => void = () => {},
  ) {}

  push(key: string, send: () => Promise<void>) {
    const timer = this.timers.get(key);
    if (timer !== undefined) clearTimeout(timer);
    this.timers.set(
      key,
      setTimeout(() => {
        this.timers.delete(key);
        this.dispatch(key, send);
      }, this.intervalMs),
    );
  }

  private dispatch(key: string, send: () => Promise<void>) {
    if (this.inFlight.has(key)) {
      this.pending.set(key, send); // latest wins behind the in-flight one
      return;
    }
    this.inFlight.add(key);
    this.sent += 1;
    send()
      .catch((err) => this.onError(key, err))
      .finally(() => {
        this.inFlight.delete(key);
        const next = this.pending.get(key);
        if (next) {
          this.pending.delete(key);
          this.dispatch(key, next);
        }
      });
  }

  idle(): boolean {
    return this.timers.size === 0 && this.inFlight.size === 0 && this.pending.size === 0;
  }
}

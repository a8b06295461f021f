// Debounced, single-in-flight request scheduling.
//
// Slider drags fire many value changes; we wait for the drag to settle
// (debounce) and keep at most one request in flight. A change arriving
// while a request runs supersedes any queued one, so intermediate values
// are dropped and the final value always wins.

export interface ScheduledTask<T> {
  run: () => Promise<T>;
  onDone: (result: T) => void;
  onError: (err: unknown) => void;
}

export class RequestScheduler<T> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: ScheduledTask<T> | null = null;
  private inFlight = false;
  private generation = 0;

  constructor(readonly debounceMs: number = 250) {}

  schedule(task: ScheduledTask<T>): void {
    this.pending = task;
    this.generation++; // supersedes any result not yet delivered
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.flush();
    }, this.debounceMs);
  }

  private async flush(): Promise<void> {
    if (this.inFlight || this.pending === null) return;
    const task = this.pending;
    this.pending = null;
    const gen = this.generation;
    this.inFlight = true;
    try {
      const result = await task.run();
      if (gen === this.generation) task.onDone(result);
    } catch (err) {
      if (gen === this.generation) task.onError(err);
    } finally {
      this.inFlight = false;
      if (this.pending !== null) void this.flush();
    }
  }
}

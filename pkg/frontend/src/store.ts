/**
 * Single-threaded event queue around the reducer. Dispatches that happen
 * while a drain is running (a listener reacting to a change) are appended
 * and folded in FIFO order, never nested, so listeners always observe
 * states in the order they were produced.
 */

import { reduce, type Limits, type ViewerEvent, type ViewerState } from "./state.js";

export class Store {
  private listeners: Array<(s: ViewerState, ev: ViewerEvent) => void> = [];
  private queue: ViewerEvent[] = [];
  private draining = false;

  constructor(
    public state: ViewerState,
    private readonly limits: Limits,
  ) {}

  dispatch(ev: ViewerEvent): void {
    this.queue.push(ev);
    if (this.draining) return;
    this.draining = true;
    try {
      for (let next = this.queue.shift(); next; next = this.queue.shift()) {
        const prev = this.state;
        this.state = reduce(prev, next, this.limits);
        if (this.state !== prev) {
          for (const fn of this.listeners) fn(this.state, next);
        }
      }
    } finally {
      this.draining = false;
    }
  }

  subscribe(fn: (s: ViewerState, ev: ViewerEvent) => void): void {
    this.listeners.push(fn);
  }
}

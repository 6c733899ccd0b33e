/** Query editing helpers shared by the panels. */

import type { QuerySpec, TimeboxSpec } from "./types.js";

/** Lag dragging snaps to whole compressed steps so the offset always
 * round-trips through the query JSON exactly. */
export function snapOffset(rawOffset: number, samplingLength: number): number {
  const snapped = Math.round(rawOffset / samplingLength) * samplingLength;
  return Math.max(0, snapped);
}

export function defaultTimebox(id: string, offset = 0): TimeboxSpec {
  return { id, offset };
}

export function freshId(prefix: string, taken: Iterable<string>): string {
  const existing = new Set(taken);
  let i = 1;
  while (existing.has(`${prefix}${i}`)) {
    i += 1;
  }
  return `${prefix}${i}`;
}

export function cloneQuery(query: QuerySpec): QuerySpec {
  return JSON.parse(JSON.stringify(query)) as QuerySpec;
}

/** Timebox ids in search order: ascending offset, ties by id. */
export function temporalOrder(query: QuerySpec): string[] {
  return [...query.timeboxes]
    .sort((a, b) => a.offset - b.offset || (a.id < b.id ? -1 : a.id > b.id ? 1 : 0))
    .map((box) => box.id);
}

/** Discards responses that were superseded by a newer edit: at most one
 * query is considered in flight, identified by its sequence number. */
export class QuerySequencer {
  private issued = 0;
  private applied = 0;

  begin(): number {
    this.issued += 1;
    return this.issued;
  }

  /** True when the response for `seq` is current and should be rendered. */
  accept(seq: number): boolean {
    if (seq < this.issued || seq <= this.applied) {
      return false;
    }
    this.applied = seq;
    return true;
  }

  get inFlight(): boolean {
    return this.issued > this.applied;
  }
}

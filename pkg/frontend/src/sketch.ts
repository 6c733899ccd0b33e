/** Sketch editing on a meshed timebox.
 *
 * Points snap to the mesh columns (one per compressed sample of the window)
 * and must advance in x; committing a point refreshes the next-trend
 * suggestion overlay and schedules a debounced query re-execution.
 */

import type { Suggestion, SketchPoint } from "./types.js";

export const QUERY_DEBOUNCE_MS = 300;

/** Box y coordinates quantized into the engine's 4 trend bands, bottom up. */
export function symbolForY(y: number): string {
  if (y < 0.25) return "a";
  if (y < 0.5) return "b";
  if (y < 0.75) return "c";
  return "d";
}

/** Band midpoint used to draw a suggested continuation as a dashed level. */
export function yForSymbol(symbol: string): number {
  const index = "abcd".indexOf(symbol);
  return index < 0 ? 0.5 : 0.125 + 0.25 * index;
}

export interface DashedSegment {
  fromX: number;
  fromY: number;
  toX: number;
  toY: number;
  ratio: number;
}

export interface SketchHooks {
  /** Fetch next-symbol suggestions for the current prefix. */
  suggest(prefix: string): void;
  /** Re-run the query with the current sketch (already debounced). */
  refreshQuery(): void;
}

export class SketchSession {
  points: SketchPoint[] = [];
  overlay: DashedSegment[] = [];
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    readonly boxLength: number,
    readonly windowSymbols: number,
    private readonly hooks: SketchHooks,
    private readonly debounceMs: number = QUERY_DEBOUNCE_MS,
  ) {}

  /** Mesh column x positions: the window's sample positions. */
  meshColumns(): number[] {
    if (this.windowSymbols === 1) {
      return [0];
    }
    const step = this.boxLength / (this.windowSymbols - 1);
    return Array.from({ length: this.windowSymbols }, (_, i) => i * step);
  }

  private snapX(x: number): number {
    const columns = this.meshColumns();
    let best = columns[0];
    for (const column of columns) {
      if (Math.abs(column - x) < Math.abs(best - x)) {
        best = column;
      }
    }
    return best;
  }

  /** Commit a pointer position; strokes that do not advance in x are
   * ignored. Returns true when the sketch changed. */
  addPoint(x: number, y: number): boolean {
    const snappedX = this.snapX(x);
    const clampedY = Math.min(1, Math.max(0, y));
    const last = this.points[this.points.length - 1];
    if (last !== undefined && snappedX <= last.x) {
      return false;
    }
    this.points.push({ x: snappedX, y: clampedY });
    this.hooks.suggest(this.prefix());
    this.scheduleRefresh();
    return true;
  }

  /** Clearing reverts the timebox to its default (no inner constraint). */
  clear(): void {
    this.points = [];
    this.overlay = [];
    this.hooks.suggest("");
    this.scheduleRefresh();
  }

  /** Symbol prefix of the committed sketch, capped below the window depth
   * so the trie always has continuations to offer. */
  prefix(): string {
    const symbols = this.points.map((p) => symbolForY(p.y));
    return symbols.slice(0, this.windowSymbols - 1).join("");
  }

  /** Dashed continuation segments for fetched suggestions. */
  setSuggestions(suggestions: Suggestion[]): DashedSegment[] {
    const columns = this.meshColumns();
    const last = this.points[this.points.length - 1];
    const fromX = last === undefined ? columns[0] : last.x;
    const fromY = last === undefined ? 0.5 : last.y;
    const nextColumn = columns.find((c) => c > fromX) ?? this.boxLength;
    this.overlay = suggestions.map((s) => ({
      fromX,
      fromY,
      toX: nextColumn,
      toY: yForSymbol(s.symbol),
      ratio: s.ratio,
    }));
    return this.overlay;
  }

  sketchSpec(): SketchPoint[] | undefined {
    return this.points.length >= 2 ? [...this.points] : undefined;
  }

  private scheduleRefresh(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.hooks.refreshQuery();
    }, this.debounceMs);
  }
}

/** Time-view models: the alternatives list for default timeboxes, the
 * node-link overview, the occurrence area chart, highlighted fragments on
 * the series charts, and the per-result zoom.
 *
 * These are pure bindings of service summary fields to drawable shapes;
 * no strength or score is computed here.
 */

import type {
  AlternativeEntry,
  FragmentResult,
  QueryResult,
  QuerySpec,
  ResultsPayload,
  TimeboxSpec,
} from "./types.js";
import { temporalOrder } from "./query.js";

export interface AlternativeItem {
  series: string;
  meanScore: number;
  /** Direct from the service: mean score divided by the best mean score. */
  opacity: number;
  selected: boolean;
}

export function alternativesView(
  payload: ResultsPayload,
  boxId: string,
  selected?: string,
): AlternativeItem[] {
  const entries: AlternativeEntry[] = payload.summary.alternatives[boxId] ?? [];
  return entries.map((entry) => ({
    series: entry.series,
    meanScore: entry.mean_score,
    opacity: entry.opacity,
    selected: entry.series === selected,
  }));
}

export interface OverviewEdge {
  id: string;
  kind: string;
  source: string;
  target: string;
  meanStrength: number | null;
  /** Stroke width: a presentation map of |mean strength| onto pixels. */
  thicknessPx: number;
  lagHistogram: { lag: number; count: number }[];
}

export interface OverviewModel {
  boxes: string[];
  edges: OverviewEdge[];
}

const MIN_STROKE_PX = 1;
const MAX_STROKE_PX = 6;

export function overviewModel(
  query: QuerySpec,
  payload: ResultsPayload,
): OverviewModel {
  const edges: OverviewEdge[] = (query.relalinks ?? []).map((link) => {
    const stats = payload.summary.linkStats[link.id];
    const mean = stats?.mean_strength ?? null;
    const thickness =
      mean === null
        ? MIN_STROKE_PX
        : MIN_STROKE_PX + (MAX_STROKE_PX - MIN_STROKE_PX) * Math.min(1, Math.abs(mean));
    const lagHistogram = Object.entries(stats?.lags ?? {})
      .map(([lag, count]) => ({ lag: Number(lag), count }))
      .sort((a, b) => a.lag - b.lag);
    return {
      id: link.id,
      kind: link.kind,
      source: link.source,
      target: link.target,
      meanStrength: mean,
      thicknessPx: thickness,
      lagHistogram,
    };
  });
  return { boxes: temporalOrder(query), edges };
}

export interface AreaPoint {
  x: number;
  y: number;
}

/** Occurrence counts mapped into a drawable polyline (area chart). */
export function occurrenceArea(
  occurrence: number[],
  width: number,
  height: number,
): AreaPoint[] {
  if (occurrence.length === 0) {
    return [];
  }
  const peak = Math.max(1, ...occurrence);
  const step = occurrence.length > 1 ? width / (occurrence.length - 1) : 0;
  return occurrence.map((count, i) => ({
    x: i * step,
    y: height - (count / peak) * height,
  }));
}

export interface HighlightRange {
  series: string;
  startTime: number;
  endTime: number;
}

/** Matched fragments per series, for highlighting on the line charts. */
export function highlightRanges(payload: ResultsPayload): HighlightRange[] {
  const seen = new Set<string>();
  const ranges: HighlightRange[] = [];
  for (const result of payload.results) {
    for (const fragment of Object.values(result.fragments)) {
      const key = `${fragment.series}:${fragment.start_time}:${fragment.end_time}`;
      if (seen.has(key)) continue;
      seen.add(key);
      ranges.push({
        series: fragment.series,
        startTime: fragment.start_time,
        endTime: fragment.end_time,
      });
    }
  }
  return ranges;
}

export interface ZoomBox {
  box: TimeboxSpec;
  fragment: FragmentResult;
}

/** Per-result zoom: the same timebox model the input panel renders, bound
 * to the matched fragments, in temporal order. */
export function resultZoom(query: QuerySpec, result: QueryResult): ZoomBox[] {
  const byId = new Map(query.timeboxes.map((box) => [box.id, box]));
  return temporalOrder(query)
    .filter((boxId) => result.fragments[boxId] !== undefined)
    .map((boxId) => ({
      box: byId.get(boxId) as TimeboxSpec,
      fragment: result.fragments[boxId],
    }));
}

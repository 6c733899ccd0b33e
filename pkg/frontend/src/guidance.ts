/** Guidance panel interactions: fetch on focus hover, per-kind sorting,
 * cell preview, and applying a cell's query delta.
 */

import type {
  GuidanceCell,
  GuidancePayload,
  GuidanceRow,
  QuerySpec,
  RelalinkSpec,
  TimeboxSpec,
} from "./types.js";
import { cloneQuery, freshId } from "./query.js";

/** Rows reordered by one relation kind's confidence, non-increasing;
 * rows without a cell for that kind sink to the bottom. Stable. */
export function sortRowsByKind(
  payload: GuidancePayload,
  kind: string,
): GuidanceRow[] {
  const confidence = (row: GuidanceRow): number => {
    const cell = row.cells[kind];
    return cell === null || cell === undefined ? -1 : cell.confidence;
  };
  return [...payload.rows].sort((a, b) => confidence(b) - confidence(a));
}

/** Merge a recommendation into the query: exactly one new timebox and one
 * new relalink. Ids are re-minted if the delta's ids are already taken. */
export function applyCell(query: QuerySpec, cell: GuidanceCell): QuerySpec {
  const next = cloneQuery(query);
  const boxIds = next.timeboxes.map((box) => box.id);
  const linkIds = (next.relalinks ?? []).map((link) => link.id);

  const timebox: TimeboxSpec = { ...cell.delta.timebox };
  const relalink: RelalinkSpec = { ...cell.delta.relalink };
  if (boxIds.includes(timebox.id) || linkIds.includes(relalink.id)) {
    const boxId = freshId("rec", [...boxIds, ...linkIds]);
    relalink.target = boxId;
    relalink.id = `${boxId}-link`;
    timebox.id = boxId;
  }
  next.timeboxes.push(timebox);
  next.relalinks = [...(next.relalinks ?? []), relalink];
  return next;
}

/** The hover preview shows exactly the query that clicking would produce. */
export function previewQuery(query: QuerySpec, cell: GuidanceCell): QuerySpec {
  return applyCell(query, cell);
}

export interface GuidanceCellView {
  series: string;
  kind: string;
  /** Cell opacity encodes confidence; the text shows the strength. */
  opacity: number;
  strengthText: string;
  bestLag: number;
}

export function cellView(
  row: GuidanceRow,
  kind: string,
): GuidanceCellView | null {
  const cell = row.cells[kind];
  if (cell === null || cell === undefined) {
    return null;
  }
  return {
    series: row.series,
    kind,
    opacity: cell.confidence,
    strengthText: cell.mean_strength.toFixed(2),
    bestLag: cell.best_lag,
  };
}

export * from "./types.js";
export { ApiClient, ApiError } from "./api.js";
export {
  QuerySequencer,
  cloneQuery,
  defaultTimebox,
  freshId,
  snapOffset,
  temporalOrder,
} from "./query.js";
export {
  QUERY_DEBOUNCE_MS,
  SketchSession,
  symbolForY,
  yForSymbol,
} from "./sketch.js";
export { MatrixView } from "./matrix.js";
export type { CombinedGroup, MatrixColumn, MatrixRow, SortDirection } from "./matrix.js";
export {
  alternativesView,
  highlightRanges,
  occurrenceArea,
  overviewModel,
  resultZoom,
} from "./timeview.js";
export { applyCell, cellView, previewQuery, sortRowsByKind } from "./guidance.js";

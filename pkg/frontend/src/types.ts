/** Wire types mirroring the relaq service JSON (the /v1 endpoints). */

export type Mode = "strict" | "fuzzy";

export type RelationKindName =
  | "correlation"
  | "similarity"
  | "causality"
  | "meta"
  | "arithmetic";

export interface SketchPoint {
  x: number;
  y: number;
}

export interface TimeboxSpec {
  id: string;
  name?: string;
  offset: number;
  sketch?: SketchPoint[];
  value_bounds?: [number, number];
}

export interface ArithmeticSpec {
  op: "sum" | "avg" | "var" | "min" | "max";
  cmp: ">=" | "<=" | "=";
}

export interface RelalinkSpec {
  id: string;
  kind: RelationKindName;
  source: string;
  target: string;
  threshold: [number, number];
  meta_key?: string;
  arithmetic?: ArithmeticSpec;
}

export interface QuerySpec {
  mode?: Mode;
  sampling_length?: number;
  box_length?: number;
  max_lag?: number;
  timeboxes: TimeboxSpec[];
  relalinks?: RelalinkSpec[];
}

export interface FragmentResult {
  series: string;
  start: number;
  length: number;
  degree: number;
  start_time: number;
  end_time: number;
}

export interface LinkResult {
  id: string;
  kind: RelationKindName;
  strength: number;
  lag: number;
  satisfied: boolean;
}

export interface QueryResult {
  score: number;
  fragments: Record<string, FragmentResult>;
  links: LinkResult[];
}

export interface HistogramData {
  edges: number[];
  counts: number[];
}

export interface ColumnStats {
  min: number | null;
  max: number | null;
  mean: number | null;
  histogram: HistogramData;
}

export interface SummaryColumn {
  id: string;
  column_type: "fragment" | "relation";
  stats: ColumnStats;
}

export interface AlternativeEntry {
  series: string;
  mean_score: number;
  opacity: number;
}

export interface LinkStatsEntry {
  mean_strength: number | null;
  lags: Record<string, number>;
}

export interface ResultsSummary {
  columns: SummaryColumn[];
  occurrence: number[];
  alternatives: Record<string, AlternativeEntry[]>;
  linkStats: Record<string, LinkStatsEntry>;
}

export interface ResultsPayload {
  results: QueryResult[];
  summary: ResultsSummary;
  truncated: boolean;
  timed_out: boolean;
}

export interface GuidanceDelta {
  timebox: TimeboxSpec;
  relalink: RelalinkSpec;
}

export interface GuidanceCell {
  best_lag: number;
  mean_strength: number;
  confidence: number;
  delta: GuidanceDelta;
}

export interface GuidanceRow {
  series: string;
  cells: Record<string, GuidanceCell | null>;
}

export interface GuidancePayload {
  focus: string;
  kinds: string[];
  rows: GuidanceRow[];
}

export interface Suggestion {
  symbol: string;
  ratio: number;
}

export interface SuggestionsPayload {
  prefix: string;
  suggestions: Suggestion[];
}

export interface ArtifactStatus {
  state: "pending" | "building" | "ready";
  elapsed: number;
}

export interface DatasetHandle {
  id: string;
  params: {
    sampling_length: number;
    box_length: number;
    alphabet_size: number;
  };
  status: Record<string, ArtifactStatus>;
}

/** LineUp-style result matrix: one row per result, one column per fragment
 * (timebox) or relation (relalink), with header distributions, range-slider
 * filtering, per-column sorting, and column combination.
 *
 * Every cell value comes straight from the service payload: fragment cells
 * show the trend-match degree, relation cells show the relation strength.
 * Ranking a relation column (and summing a combined group) uses the
 * absolute strength, mirroring how the engine scores results.
 */

import type {
  ColumnStats,
  QuerySpec,
  ResultsPayload,
  SummaryColumn,
} from "./types.js";

export type SortDirection = "descending" | "ascending";

export interface MatrixColumn {
  id: string;
  columnType: "fragment" | "relation";
  stats: ColumnStats;
}

export interface MatrixRow {
  /** Index into payload.results. */
  index: number;
  score: number;
  /** Displayed value per column id (degree or raw strength). */
  cells: Record<string, number>;
}

export interface CombinedGroup {
  /** Sorted member column ids (fragments and relations on the path). */
  members: string[];
}

function rowsFromPayload(payload: ResultsPayload): MatrixRow[] {
  return payload.results.map((result, index) => {
    const cells: Record<string, number> = {};
    for (const [boxId, fragment] of Object.entries(result.fragments)) {
      cells[boxId] = fragment.degree;
    }
    for (const link of result.links) {
      cells[link.id] = link.strength;
    }
    return { index, score: result.score, cells };
  });
}

/** Union of all simple paths between two timeboxes in the query graph,
 * returned as column ids (boxes and relalinks alike). */
function pathMembers(query: QuerySpec, from: string, to: string): Set<string> {
  const links = query.relalinks ?? [];
  const members = new Set<string>();
  const dfs = (current: string, visited: Set<string>, trail: string[]) => {
    if (current === to) {
      for (const item of trail) members.add(item);
      return;
    }
    for (const link of links) {
      let next: string | null = null;
      if (link.source === current) next = link.target;
      else if (link.target === current) next = link.source;
      if (next === null || visited.has(next)) continue;
      visited.add(next);
      dfs(next, visited, [...trail, link.id, next]);
      visited.delete(next);
    }
  };
  dfs(from, new Set([from]), [from]);
  return members;
}

export class MatrixView {
  readonly columns: MatrixColumn[];
  readonly rows: MatrixRow[];
  sort: { column: string; direction: SortDirection } | null = null;
  filters: Map<string, [number, number]> = new Map();
  groups: CombinedGroup[] = [];

  constructor(
    readonly query: QuerySpec,
    payload: ResultsPayload,
  ) {
    this.columns = payload.summary.columns.map((column: SummaryColumn) => ({
      id: column.id,
      columnType: column.column_type,
      stats: column.stats,
    }));
    this.rows = rowsFromPayload(payload);
  }

  column(id: string): MatrixColumn | undefined {
    return this.columns.find((c) => c.id === id);
  }

  /** Ranking value of one cell: degree for fragments, |strength| for
   * relations (the column's contribution to the matching score). */
  sortValue(row: MatrixRow, columnId: string): number {
    const value = row.cells[columnId];
    if (value === undefined) return Number.NEGATIVE_INFINITY;
    const column = this.column(columnId);
    return column?.columnType === "relation" ? Math.abs(value) : value;
  }

  /** Sum of member cells, the score of a combined group for one row. */
  groupValue(row: MatrixRow, group: CombinedGroup): number {
    let total = 0;
    for (const member of group.members) {
      const value = this.sortValue(row, member);
      if (value !== Number.NEGATIVE_INFINITY) total += value;
    }
    return total;
  }

  /** Click a column's sort icon: first click sorts descending, clicking
   * again switches to ascending. */
  clickSort(columnId: string): void {
    if (this.sort !== null && this.sort.column === columnId) {
      this.sort = {
        column: columnId,
        direction:
          this.sort.direction === "descending" ? "ascending" : "descending",
      };
    } else {
      this.sort = { column: columnId, direction: "descending" };
    }
  }

  setFilter(columnId: string, range: [number, number]): void {
    this.filters.set(columnId, range);
  }

  clearFilter(columnId: string): void {
    this.filters.delete(columnId);
  }

  /** Rows after slider filtering and sorting. Filtering compares the raw
   * cell value against the slider range; sorting is stable. */
  visibleRows(): MatrixRow[] {
    let rows = this.rows.filter((row) => {
      for (const [columnId, [lo, hi]] of this.filters) {
        const value = row.cells[columnId];
        if (value === undefined || value < lo || value > hi) {
          return false;
        }
      }
      return true;
    });
    const sort = this.sort;
    if (sort !== null) {
      const group = this.groups.find((g) => g.members.includes(sort.column));
      const value = (row: MatrixRow) =>
        group !== undefined
          ? this.groupValue(row, group)
          : this.sortValue(row, sort.column);
      const sign = sort.direction === "descending" ? -1 : 1;
      rows = [...rows].sort((a, b) => sign * (value(a) - value(b)));
    }
    return rows;
  }

  /** Combine the columns between two clicked fragment columns: every
   * fragment and relation on any query-graph path between them. Clicking a
   * relation column (or an unconnected pair) is invalid and returns null.
   * The result does not depend on click order. */
  combine(first: string, second: string): CombinedGroup | null {
    const a = this.column(first);
    const b = this.column(second);
    if (
      a === undefined ||
      b === undefined ||
      a.columnType !== "fragment" ||
      b.columnType !== "fragment" ||
      first === second
    ) {
      return null;
    }
    const members = pathMembers(this.query, first, second);
    if (members.size === 0) {
      return null;
    }
    const group = { members: [...members].sort() };
    this.groups.push(group);
    return group;
  }
}

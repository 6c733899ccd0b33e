import { describe, expect, it } from "vitest";

import {
  alternativesView,
  highlightRanges,
  occurrenceArea,
  overviewModel,
  resultZoom,
} from "../src/timeview.js";
import { risingQuery, risingResults } from "./fixtures.js";

describe("alternatives list", () => {
  it("binds the service's mean score and opacity fields verbatim", () => {
    const items = alternativesView(risingResults, "B");
    const source = risingResults.summary.alternatives["B"];
    expect(items.map((i) => i.series)).toEqual(source.map((s) => s.series));
    expect(items.map((i) => i.opacity)).toEqual(source.map((s) => s.opacity));
    expect(items[0].opacity).toBe(1.0);
  });

  it("marks the selected completion", () => {
    const items = alternativesView(risingResults, "B", "SD");
    expect(items.find((i) => i.series === "SD")!.selected).toBe(true);
    expect(items.find((i) => i.series === "LA")!.selected).toBe(false);
  });

  it("is empty for named boxes", () => {
    expect(alternativesView(risingResults, "A")).toEqual([]);
  });
});

describe("node-link overview", () => {
  it("edge thickness grows with the service mean strength", () => {
    const model = overviewModel(risingQuery, risingResults);
    expect(model.boxes).toEqual(["A", "B"]);
    const edge = model.edges.find((e) => e.id === "r1")!;
    expect(edge.meanStrength).toBe(
      risingResults.summary.linkStats["r1"].mean_strength,
    );
    expect(edge.thicknessPx).toBeGreaterThan(1);
    expect(edge.thicknessPx).toBeLessThanOrEqual(6);
  });

  it("exposes the lag distribution", () => {
    const model = overviewModel(risingQuery, risingResults);
    const edge = model.edges.find((e) => e.id === "r1")!;
    const total = edge.lagHistogram.reduce((sum, bin) => sum + bin.count, 0);
    expect(total).toBe(
      Object.values(risingResults.summary.linkStats["r1"].lags).reduce(
        (a, b) => a + b,
        0,
      ),
    );
  });
});

describe("occurrence area chart", () => {
  it("maps the per-timestep counts onto the canvas", () => {
    const occurrence = risingResults.summary.occurrence;
    const points = occurrenceArea(occurrence, 400, 80);
    expect(points).toHaveLength(occurrence.length);
    const peakIndex = occurrence.indexOf(Math.max(...occurrence));
    expect(points[peakIndex].y).toBe(0); // tallest count touches the top
    const zeroIndex = occurrence.indexOf(0);
    expect(points[zeroIndex].y).toBe(80);
  });

  it("handles an empty timeline", () => {
    expect(occurrenceArea([], 400, 80)).toEqual([]);
  });
});

describe("zoom and highlights", () => {
  it("zoom binds each timebox to its matched fragment in temporal order", () => {
    const zoom = resultZoom(risingQuery, risingResults.results[0]);
    expect(zoom.map((z) => z.box.id)).toEqual(["A", "B"]);
    expect(zoom[0].fragment).toBe(risingResults.results[0].fragments["A"]);
    expect(zoom[0].box.sketch).toBeDefined(); // same timebox spec as the input panel
  });

  it("highlights every matched fragment once", () => {
    const ranges = highlightRanges(risingResults);
    const keys = ranges.map((r) => `${r.series}:${r.startTime}`);
    expect(new Set(keys).size).toBe(keys.length);
    const expected = new Set(
      risingResults.results.flatMap((r) =>
        Object.values(r.fragments).map((f) => `${f.series}:${f.start_time}`),
      ),
    );
    expect(new Set(keys)).toEqual(expected);
  });

  it("renders zero results without crashing", () => {
    const empty = {
      ...risingResults,
      results: [],
      summary: { ...risingResults.summary, alternatives: {}, occurrence: [] },
    };
    expect(occurrenceArea(empty.summary.occurrence, 400, 80)).toEqual([]);
    expect(alternativesView(empty, "B")).toEqual([]);
    expect(highlightRanges(empty)).toEqual([]);
  });
});

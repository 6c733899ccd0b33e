import { readFileSync } from "node:fs";

import type {
  GuidancePayload,
  QuerySpec,
  ResultsPayload,
  SuggestionsPayload,
} from "../src/types.js";

function load<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export const chainQuery = load<QuerySpec>("chain_query.json");
export const chainResults = load<ResultsPayload>("chain_results.json");
export const risingQuery = load<QuerySpec>("rising_query.json");
export const risingResults = load<ResultsPayload>("rising_results.json");
export const guidanceQuery = load<QuerySpec>("guidance_query.json");
export const guidancePayload = load<GuidancePayload>("guidance.json");
export const rootSuggestions = load<SuggestionsPayload>(
  "trend_suggestions_root.json",
);

/** Thin fetch client for the /v1 endpoints. */

import type {
  ArtifactStatus,
  DatasetHandle,
  GuidancePayload,
  QuerySpec,
  ResultsPayload,
  SuggestionsPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: unknown,
  ) {
    super(`request failed with ${status}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    throw new ApiError(response.status, body);
  }
  return body as T;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  async uploadDataset(
    data: Blob,
    config: Blob,
    samplingLength: number,
    boxLength: number,
    stepUnit = "sample",
  ): Promise<DatasetHandle> {
    const form = new FormData();
    form.append("data", data, "data.csv");
    form.append("config", config, "config.csv");
    form.append("sampling_length", String(samplingLength));
    form.append("box_length", String(boxLength));
    form.append("step_unit", stepUnit);
    const response = await this.fetchImpl(`${this.baseUrl}/v1/datasets`, {
      method: "POST",
      body: form,
    });
    return asJson<DatasetHandle>(response);
  }

  async status(datasetId: string): Promise<Record<string, ArtifactStatus>> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/datasets/${datasetId}/status`,
    );
    return asJson(response);
  }

  async runQuery(datasetId: string, query: QuerySpec): Promise<ResultsPayload> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/datasets/${datasetId}/queries`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(query),
      },
    );
    return asJson<ResultsPayload>(response);
  }

  async guidance(
    datasetId: string,
    query: QuerySpec,
    focus: string,
  ): Promise<GuidancePayload> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/datasets/${datasetId}/guidance`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ query, focus }),
      },
    );
    return asJson<GuidancePayload>(response);
  }

  async trendSuggestions(
    datasetId: string,
    series: string,
    prefix = "",
  ): Promise<SuggestionsPayload> {
    const params = prefix ? `?prefix=${encodeURIComponent(prefix)}` : "";
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/datasets/${datasetId}/series/${encodeURIComponent(series)}/trend-suggestions${params}`,
    );
    return asJson<SuggestionsPayload>(response);
  }
}

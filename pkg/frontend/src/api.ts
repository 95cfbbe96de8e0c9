import type {
  CloudListPayload,
  CloudPayload,
  DatasetStats,
  Submission,
  SubmitResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin client for the labeling service. fetch is injectable so the logic
 * is testable outside the browser.
 */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`);
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // non-JSON error body; fall through with status only
    }
    if (!response.ok) {
      const reason =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `HTTP ${response.status}`;
      throw new ApiError(reason, response.status);
    }
    return body as T;
  }

  listClouds(): Promise<CloudListPayload> {
    return this.request<CloudListPayload>("/clouds");
  }

  fetchCloud(cloudId: string): Promise<CloudPayload> {
    return this.request<CloudPayload>(`/clouds/${encodeURIComponent(cloudId)}`);
  }

  submitLabels(submission: Submission): Promise<SubmitResponse> {
    return this.request<SubmitResponse>("/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(submission),
    });
  }

  datasetStats(): Promise<DatasetStats> {
    return this.request<DatasetStats>("/dataset/stats");
  }
}

/**
 * Display index -> full-cloud index, using only the server-provided stride.
 * The UI must never derive this mapping any other way.
 */
export function toFullIndex(displayIndex: number, displayStride: number): number {
  return displayIndex * displayStride;
}

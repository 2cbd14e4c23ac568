/**
 * Typed client for the causeloom JSON API.
 *
 * The fetch implementation is injected so tests can stand in a scripted
 * server; the browser shell passes the real one.
 */

import type {
  AmendmentAck,
  AmendmentRequest,
  CommunitiesResponse,
  ErrorBody,
  GraphResponse,
  HealthResponse,
  HistogramResponse,
  PropagationResponse,
} from "./types.js";
import type { ViewState } from "./state.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ErrorBody,
  ) {
    super(`${body.error}: ${body.detail}`);
    this.name = "ApiError";
  }
}

export function graphQuery(view: ViewState): string {
  const q = new URLSearchParams();
  q.set("min_strength", String(view.filters.minStrength));
  if (view.filters.maxDegree !== null) {
    q.set("max_degree", String(view.filters.maxDegree));
  }
  q.set("sign", view.filters.sign);
  q.set("rows", view.rows);
  q.set("columns", view.columns);
  if (view.columns === "topology" && view.focusEntity !== null) {
    q.set("focus", view.focusEntity);
  }
  return q.toString();
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  getHealth(signal?: AbortSignal): Promise<HealthResponse> {
    return this.request("/api/health", { signal });
  }

  getGraph(view: ViewState, signal?: AbortSignal): Promise<GraphResponse> {
    return this.request(`/api/graph?${graphQuery(view)}`, { signal });
  }

  postAmendment(body: AmendmentRequest, signal?: AbortSignal): Promise<AmendmentAck> {
    return this.request("/api/amendments", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
  }

  getPropagation(source: string, target: string, view: ViewState, signal?: AbortSignal): Promise<PropagationResponse> {
    const q = new URLSearchParams({ source, target });
    q.set("min_strength", String(view.filters.minStrength));
    if (view.filters.maxDegree !== null) {
      q.set("max_degree", String(view.filters.maxDegree));
    }
    q.set("sign", view.filters.sign);
    return this.request(`/api/propagation?${q.toString()}`, { signal });
  }

  getHistogram(entity: string, binWidth: number, signal?: AbortSignal): Promise<HistogramResponse> {
    const q = new URLSearchParams({ entity, bin: String(binWidth) });
    return this.request(`/api/histogram?${q.toString()}`, { signal });
  }

  getCommunities(signal?: AbortSignal): Promise<CommunitiesResponse> {
    return this.request("/api/communities", { signal });
  }

  private async request<T>(path: string, init: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let body: ErrorBody;
      try {
        body = (await response.json()) as ErrorBody;
      } catch {
        body = { error: "error", detail: response.statusText };
      }
      throw new ApiError(response.status, body);
    }
    return (await response.json()) as T;
  }
}

function isAbort(err: unknown): boolean {
  return err instanceof DOMException
    ? err.name === "AbortError"
    : err instanceof Error && err.name === "AbortError";
}

/**
 * Cancel-supersede gate for view refreshes. Starting a new load aborts the
 * one in flight; a load that finishes after being superseded resolves to
 * undefined instead of delivering stale data.
 */
export class LatestWins<T> {
  private ticket = 0;
  private controller: AbortController | null = null;

  async run(load: (signal: AbortSignal) => Promise<T>): Promise<T | undefined> {
    const mine = ++this.ticket;
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      const result = await load(controller.signal);
      return mine === this.ticket ? result : undefined;
    } catch (err) {
      if (mine !== this.ticket || isAbort(err)) {
        return undefined;
      }
      throw err;
    }
  }
}

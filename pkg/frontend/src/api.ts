/**
 * Typed client for the divrec HTTP API.
 *
 * Mutating calls (create session, recommend, feedback) are serialized through
 * a promise chain so at most one is in flight at a time, matching the
 * service's per-session write semantics. Mutations are never retried; a
 * failure surfaces as an ApiError carrying the service's error code.
 */

export interface Recommendation {
  item_id: string;
  title: string;
  artist: string;
  distance: number;
  raw_score: number;
  adjusted_score: number;
  band: string;
  bold: boolean;
  rank: number;
}

export interface RecommendResponse {
  recommendations: Recommendation[];
  sigma: number;
}

export interface SessionInfo {
  session_id: string;
  sigma: number;
}

export interface SessionView {
  session_id: string;
  sigma: number;
  recommendations: Recommendation[];
}

export interface FeedbackResponse {
  sigma_before: number;
  sigma_after: number;
}

export interface ItemSummary {
  id: string;
  title: string;
  artist: string;
  genre_id: string | null;
}

export interface EquityMetrics {
  gini: number;
  coverage: number;
  total_exposures: number;
}

export interface HealthInfo {
  status: string;
  items: number;
  version: string;
}

export type Mode = 'diverse' | 'similar';
export type Verdict = 'accept' | 'reject';

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

interface ErrorBody {
  error?: { code?: string; message?: string };
}

async function parseJson(response: Response): Promise<unknown> {
  const text = await response.text();
  try {
    return text ? JSON.parse(text) : {};
  } catch {
    throw new ApiError('bad-response', `unparseable response (${response.status})`, response.status);
  }
}

export class DivrecClient {
  private mutationChain: Promise<unknown> = Promise.resolve();
  private inFlightMutations = 0;

  constructor(
    readonly baseUrl: string = '',
    private readonly fetchImpl: typeof fetch = (...args) => fetch(...args),
  ) {}

  /** True while a mutating request is outstanding (used by the UI to disable controls). */
  get busy(): boolean {
    return this.inFlightMutations > 0;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await parseJson(response);
    if (!response.ok) {
      const err = (body as ErrorBody).error ?? {};
      throw new ApiError(err.code ?? 'unknown-error', err.message ?? response.statusText, response.status);
    }
    return body as T;
  }

  private mutate<T>(path: string, payload: unknown): Promise<T> {
    this.inFlightMutations += 1;
    const run = () =>
      this.request<T>(path, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(payload),
      });
    const next = this.mutationChain.then(run, run).finally(() => {
      this.inFlightMutations -= 1;
    });
    // The chain swallows failures so one rejected mutation does not poison
    // later ones; callers still see the original rejection via `next`.
    this.mutationChain = next.catch(() => undefined);
    return next;
  }

  health(): Promise<HealthInfo> {
    return this.request('/health');
  }

  searchItems(prefix: string, limit = 12): Promise<ItemSummary[]> {
    const params = new URLSearchParams({ prefix, limit: String(limit) });
    return this.request<{ items: ItemSummary[] }>(`/items?${params}`).then((body) => body.items);
  }

  createSession(seedIds: string[], sigma?: number): Promise<SessionInfo> {
    const payload: Record<string, unknown> = { seed_ids: seedIds };
    if (sigma !== undefined) payload.sigma = sigma;
    return this.mutate('/sessions', payload);
  }

  /** Read-only view of a session: current sigma and the last served list. */
  sessionView(sessionId: string): Promise<SessionView> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  recommend(sessionId: string, k: number, mode: Mode, lambda?: number): Promise<RecommendResponse> {
    const payload: Record<string, unknown> = { k, mode };
    if (lambda !== undefined) payload.lambda = lambda;
    return this.mutate(`/sessions/${encodeURIComponent(sessionId)}/recommend`, payload);
  }

  feedback(sessionId: string, itemId: string, verdict: Verdict): Promise<FeedbackResponse> {
    return this.mutate(`/sessions/${encodeURIComponent(sessionId)}/feedback`, {
      item_id: itemId,
      verdict,
    });
  }

  equityMetrics(): Promise<EquityMetrics> {
    return this.request('/metrics/equity');
  }
}

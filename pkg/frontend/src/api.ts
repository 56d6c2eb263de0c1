// Typed client for the platform HTTP API. The dashboard never computes on
// raw events: every number it shows comes out of one of these responses.

export type Role = "clinician" | "analyst" | "location-analysis" | "gateway";

export interface ApiError {
  code: string;
  detail?: string;
}

export interface ChangeReport {
  pseudonym: string;
  feature: string;
  category: string;
  start: string; // ISO date
  end: string; // exclusive
  direction: "increase" | "decrease";
  effect_size: number;
  persistence: number;
  p_value: number;
  reference_median: number;
  window_median: number;
  seasonal_confound: boolean;
  explanation: string;
  contributing: [string, number][];
}

export interface SeriesResponse {
  feature: string;
  dates: string[];
  values: (number | null)[];
  rolling_median: (number | null)[];
  windows: { start: string; end: string; direction: string; seasonal_confound: boolean }[];
}

export interface ResultsResponse {
  features: string;
  reports: string; // JSON text of ChangeReport[]
  summary: string;
  version: number;
  latest: number;
}

export interface WindowFlag {
  start: string;
  end: string;
  flagged: boolean;
  direction: string;
  effect: number;
  p_value: number;
}

export interface RescoreResponse {
  thresholds: Record<string, number>;
  reports: ChangeReport[];
  flags: Record<string, WindowFlag[]>;
}

export interface IdentityResponse {
  name: string;
  home_id: string;
  audited: boolean;
}

export class PlatformApiError extends Error {
  constructor(public status: number, public code: string, detail?: string) {
    super(detail ?? code);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class PlatformClient {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      ...init,
      headers: {
        Authorization: `Bearer ${this.token}`,
        "Content-Type": "application/json",
        ...(init?.headers ?? {}),
      },
    });
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const err = (body as { error?: ApiError }).error;
      throw new PlatformApiError(resp.status, err?.code ?? `http-${resp.status}`, err?.detail);
    }
    return body as T;
  }

  subjects(): Promise<{ pseudonyms: string[] }> {
    return this.request("/api/subjects");
  }

  results(pseudonym: string): Promise<ResultsResponse> {
    return this.request(`/api/results/${pseudonym}`);
  }

  series(pseudonym: string, feature: string, from?: string, to?: string): Promise<SeriesResponse> {
    const params = new URLSearchParams({ feature });
    if (from) params.set("from", from);
    if (to) params.set("to", to);
    return this.request(`/api/results/${pseudonym}/series?${params}`);
  }

  rescore(pseudonym: string, thresholds: Record<string, number>): Promise<RescoreResponse> {
    return this.request("/api/rescore", {
      method: "POST",
      body: JSON.stringify({ pseudonym, thresholds }),
    });
  }

  resolveIdentity(pseudonym: string): Promise<IdentityResponse> {
    return this.request("/api/resolve", {
      method: "POST",
      body: JSON.stringify({ pseudonym }),
    });
  }
}

export function parseReports(results: ResultsResponse): ChangeReport[] {
  return JSON.parse(results.reports) as ChangeReport[];
}

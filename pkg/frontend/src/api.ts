/** Thin typed client over the server's JSON API.
 *
 * The UI never derives data client-side: every view renders exactly what
 * these calls return. fetch is injectable for tests.
 */

import type {
  ColumnContext,
  ColumnKey,
  DatabaseSummary,
  DecisionTreeDoc,
  Disagreement,
  LabelResponse,
  SessionInfo,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
    message?: string,
  ) {
    super(message ?? `server returned ${status}`);
  }

  get isVersionConflict(): boolean {
    return (
      this.status === 409 &&
      typeof this.detail === "string" &&
      this.detail.includes("version conflict")
    );
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const text = await response.text();
    let body: unknown = text;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      // non-JSON payloads (CSV export) pass through as text
    }
    if (!response.ok) {
      const detail =
        body && typeof body === "object" && "detail" in body
          ? (body as { detail: unknown }).detail
          : body;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  databases(): Promise<DatabaseSummary[]> {
    return this.request("/api/databases");
  }

  columnContext(key: ColumnKey): Promise<ColumnContext> {
    const { db_id, table, column } = key;
    return this.request(
      `/api/columns/${encodeURIComponent(db_id)}/${encodeURIComponent(table)}/${encodeURIComponent(column)}/context`,
    );
  }

  decisionTree(): Promise<DecisionTreeDoc> {
    return this.request("/api/decision-tree");
  }

  createSession(body: {
    target: string;
    model?: string;
    annotators: string[];
    columns?: ColumnKey[];
    db_id?: string;
  }): Promise<{ session_id: string }> {
    return this.post("/api/sessions", body);
  }

  session(sessionId: string): Promise<SessionInfo> {
    return this.request(`/api/sessions/${sessionId}`);
  }

  postLabel(
    sessionId: string,
    body: {
      annotator: string;
      column: ColumnKey;
      label: string | number;
      version?: number;
    },
  ): Promise<LabelResponse> {
    return this.post(`/api/sessions/${sessionId}/labels`, body);
  }

  disagreements(sessionId: string): Promise<Disagreement[]> {
    return this.request(`/api/sessions/${sessionId}/disagreements`);
  }

  resolve(
    sessionId: string,
    body: {
      column: ColumnKey;
      final_label: string | number;
      edited_description?: string;
    },
  ): Promise<{ resolved: boolean; status: SessionInfo["status"] }> {
    return this.post(`/api/sessions/${sessionId}/resolve`, body);
  }

  /** Raw dataset CSV; throws ApiError(409) while difficulties are missing. */
  exportDatasetCsv(): Promise<string> {
    return this.request("/api/export/dataset.csv");
  }
}

/** Thin typed client over the server's JSON API.
 *
 * The UI never derives data client-side: every view renders exactly what
 * these calls return. fetch is injectable for tests.
 */
export class ApiError extends Error {
    status;
    detail;
    constructor(status, detail, message) {
        super(message ?? `server returned ${status}`);
        this.status = status;
        this.detail = detail;
    }
    get isVersionConflict() {
        return (this.status === 409 &&
            typeof this.detail === "string" &&
            this.detail.includes("version conflict"));
    }
}
export class ApiClient {
    baseUrl;
    fetchFn;
    constructor(baseUrl = "", fetchFn = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async request(path, init) {
        const response = await this.fetchFn(this.baseUrl + path, init);
        const text = await response.text();
        let body = text;
        try {
            body = text ? JSON.parse(text) : null;
        }
        catch {
            // non-JSON payloads (CSV export) pass through as text
        }
        if (!response.ok) {
            const detail = body && typeof body === "object" && "detail" in body
                ? body.detail
                : body;
            throw new ApiError(response.status, detail);
        }
        return body;
    }
    post(path, payload) {
        return this.request(path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload),
        });
    }
    databases() {
        return this.request("/api/databases");
    }
    columnContext(key) {
        const { db_id, table, column } = key;
        return this.request(`/api/columns/${encodeURIComponent(db_id)}/${encodeURIComponent(table)}/${encodeURIComponent(column)}/context`);
    }
    decisionTree() {
        return this.request("/api/decision-tree");
    }
    createSession(body) {
        return this.post("/api/sessions", body);
    }
    session(sessionId) {
        return this.request(`/api/sessions/${sessionId}`);
    }
    postLabel(sessionId, body) {
        return this.post(`/api/sessions/${sessionId}/labels`, body);
    }
    disagreements(sessionId) {
        return this.request(`/api/sessions/${sessionId}/disagreements`);
    }
    resolve(sessionId, body) {
        return this.post(`/api/sessions/${sessionId}/resolve`, body);
    }
    /** Raw dataset CSV; throws ApiError(409) while difficulties are missing. */
    exportDatasetCsv() {
        return this.request("/api/export/dataset.csv");
    }
}

import assert from "node:assert/strict";
import { test } from "node:test";
import { ApiClient, ApiError } from "../src/api.js";
function fakeFetch(handler) {
    const calls = [];
    return {
        calls,
        fetch: async (url, init) => {
            calls.push({ url, init });
            const { status, body } = handler(url, init);
            const text = typeof body === "string" ? body : JSON.stringify(body);
            return new Response(text, {
                status,
                headers: { "Content-Type": "application/json" },
            });
        },
    };
}
test("databases() hits the listing endpoint", async () => {
    const { fetch, calls } = fakeFetch(() => ({
        status: 200,
        body: [{ db_id: "clinic", tables: 3, columns: 13, table_names: [] }],
    }));
    const api = new ApiClient("", fetch);
    const dbs = await api.databases();
    assert.equal(calls[0].url, "/api/databases");
    assert.equal(dbs[0].db_id, "clinic");
});
test("postLabel sends annotator, column, and label", async () => {
    const { fetch, calls } = fakeFetch(() => ({
        status: 200,
        body: {
            recorded: true,
            version: 1,
            status: "open",
            agreement: { n: 0, agreement_pct: null, kappa: null, degenerate: false },
        },
    }));
    const api = new ApiClient("", fetch);
    await api.postLabel("s1", {
        annotator: "a1",
        column: { db_id: "clinic", table: "client", column: "name" },
        label: "Perfect",
    });
    assert.equal(calls[0].url, "/api/sessions/s1/labels");
    const sent = JSON.parse(String(calls[0].init?.body));
    assert.equal(sent.annotator, "a1");
    assert.equal(sent.label, "Perfect");
    assert.equal(sent.column.column, "name");
});
test("column context URL-encodes path segments", async () => {
    const { fetch, calls } = fakeFetch(() => ({ status: 200, body: {} }));
    const api = new ApiClient("", fetch);
    await api.columnContext({ db_id: "my db", table: "t/x", column: "c" });
    assert.equal(calls[0].url, "/api/columns/my%20db/t%2Fx/c/context");
});
test("errors surface as ApiError with server detail verbatim", async () => {
    const { fetch } = fakeFetch(() => ({
        status: 404,
        body: { detail: "unknown session 'nope'" },
    }));
    const api = new ApiClient("", fetch);
    await assert.rejects(api.session("nope"), (error) => error instanceof ApiError &&
        error.status === 404 &&
        error.detail === "unknown session 'nope'");
});
test("version conflicts are distinguishable for reload prompts", async () => {
    const { fetch } = fakeFetch(() => ({
        status: 409,
        body: { detail: "version conflict: live record is v2" },
    }));
    const api = new ApiClient("", fetch);
    try {
        await api.postLabel("s1", {
            annotator: "a1",
            column: { db_id: "d", table: "t", column: "c" },
            label: 4,
            version: 1,
        });
        assert.fail("expected ApiError");
    }
    catch (error) {
        assert.ok(error instanceof ApiError);
        assert.equal(error.isVersionConflict, true);
    }
});
test("base URL prefixes every request", async () => {
    const { fetch, calls } = fakeFetch(() => ({ status: 200, body: [] }));
    const api = new ApiClient("http://127.0.0.1:9999", fetch);
    await api.databases();
    assert.equal(calls[0].url, "http://127.0.0.1:9999/api/databases");
});

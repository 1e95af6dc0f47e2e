import assert from "node:assert/strict";
import { test } from "node:test";
import { ApiClient } from "../src/api.js";
import { SessionFlow, columnKeyString, exportAvailability } from "../src/session.js";
const QUEUE = [
    { db_id: "clinic", table: "client", column: "name" },
    { db_id: "clinic", table: "client", column: "birth_date" },
];
function serverDouble() {
    const labels = { a1: {}, a2: {} };
    const info = () => ({
        session_id: "s1",
        target: "quality_of_generation:m",
        annotators: ["a1", "a2"],
        queue: QUEUE,
        status: "open",
        progress: {
            a1: Object.keys(labels["a1"]).length,
            a2: Object.keys(labels["a2"]).length,
        },
        agreement: { n: 0, agreement_pct: null, kappa: null, degenerate: false },
        resolutions: {},
    });
    const fetch = async (url, init) => {
        if (url.endsWith("/labels") && init?.method === "POST") {
            const body = JSON.parse(String(init.body));
            labels[body.annotator][columnKeyString(body.column)] = body.label;
            return Response.json({
                recorded: true,
                version: 1,
                status: "open",
                agreement: { n: 1, agreement_pct: 1, kappa: 1, degenerate: false },
            });
        }
        if (url.includes("/api/sessions/s1"))
            return Response.json(info());
        throw new Error(`unexpected ${url}`);
    };
    return { fetch, labels };
}
test("queue advances column by column as labels post", async () => {
    const double = serverDouble();
    const flow = new SessionFlow(new ApiClient("", double.fetch), "s1", "a1");
    await flow.refresh();
    assert.deepEqual(flow.nextColumn(), QUEUE[0]);
    assert.equal(flow.progressText(), "0/2");
    await flow.label(QUEUE[0], "Perfect");
    assert.deepEqual(flow.nextColumn(), QUEUE[1]);
    assert.equal(flow.progressText(), "1/2");
    await flow.label(QUEUE[1], "Incorrect");
    assert.equal(flow.nextColumn(), null);
    assert.equal(double.labels["a1"][columnKeyString(QUEUE[1])], "Incorrect");
});
test("labels post immediately and agreement comes from the response", async () => {
    const double = serverDouble();
    const flow = new SessionFlow(new ApiClient("", double.fetch), "s1", "a2");
    await flow.refresh();
    const result = await flow.label(QUEUE[0], 4);
    assert.equal(result.agreement.kappa, 1);
    assert.equal(double.labels["a2"][columnKeyString(QUEUE[0])], 4);
});
test("export availability reflects 409 detail", async () => {
    const fetch = async (url) => {
        if (url.endsWith("/api/export/dataset.csv")) {
            return Response.json({ detail: { error: "missing difficulty", columns: [QUEUE[0], QUEUE[1]] } }, { status: 409 });
        }
        throw new Error("unexpected");
    };
    const availability = await exportAvailability(new ApiClient("", fetch));
    assert.equal(availability.enabled, false);
    assert.match(availability.reason, /2 columns/);
});

/** Labeling-session flow: queue advancement, immediate label POSTs, live
 * agreement tracking, and the reconciliation pass. The server is the only
 * source of truth; this class keeps no state a reload could not rebuild. */
import { ApiError } from "./api.js";
export function columnKeyString(key) {
    return `${key.db_id}|${key.table}|${key.column}`.toLowerCase();
}
export class SessionFlow {
    api;
    sessionId;
    annotator;
    info = null;
    constructor(api, sessionId, annotator) {
        this.api = api;
        this.sessionId = sessionId;
        this.annotator = annotator;
    }
    get current() {
        if (!this.info)
            throw new Error("session not loaded");
        return this.info;
    }
    async refresh() {
        this.info = await this.api.session(this.sessionId);
        return this.info;
    }
    /** Next unlabeled column for this annotator, in queue order. */
    nextColumn() {
        const info = this.current;
        const labeled = info.progress[this.annotator] ?? 0;
        if (labeled >= info.queue.length)
            return null;
        return info.queue[labeled] ?? null;
    }
    progressText() {
        const info = this.current;
        const labeled = info.progress[this.annotator] ?? 0;
        return `${labeled}/${info.queue.length}`;
    }
    async label(column, label) {
        const response = await this.api.postLabel(this.sessionId, {
            annotator: this.annotator,
            column,
            label,
        });
        await this.refresh();
        return { agreement: response.agreement, status: response.status };
    }
    async disagreements() {
        return this.api.disagreements(this.sessionId);
    }
    async resolve(column, finalLabel, editedDescription) {
        const result = await this.api.resolve(this.sessionId, {
            column,
            final_label: finalLabel,
            edited_description: editedDescription,
        });
        await this.refresh();
        return result.status;
    }
}
/** Export affordance state: enabled only once the dataset is exportable. */
export async function exportAvailability(api) {
    try {
        await api.exportDatasetCsv();
        return { enabled: true, reason: "" };
    }
    catch (error) {
        if (error instanceof ApiError && error.status === 409) {
            const detail = error.detail;
            const count = detail?.columns?.length ?? 0;
            return {
                enabled: false,
                reason: `difficulty missing for ${count} column${count === 1 ? "" : "s"}`,
            };
        }
        throw error;
    }
}

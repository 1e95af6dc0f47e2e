/** Labeling-session flow: queue advancement, immediate label POSTs, live
 * agreement tracking, and the reconciliation pass. The server is the only
 * source of truth; this class keeps no state a reload could not rebuild. */

import { ApiClient, ApiError } from "./api.js";
import type {
  Agreement,
  ColumnKey,
  Disagreement,
  SessionInfo,
} from "./types.js";

export function columnKeyString(key: ColumnKey): string {
  return `${key.db_id}|${key.table}|${key.column}`.toLowerCase();
}

export class SessionFlow {
  private info: SessionInfo | null = null;

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
    readonly annotator: string,
  ) {}

  get current(): SessionInfo {
    if (!this.info) throw new Error("session not loaded");
    return this.info;
  }

  async refresh(): Promise<SessionInfo> {
    this.info = await this.api.session(this.sessionId);
    return this.info;
  }

  /** Next unlabeled column for this annotator, in queue order. */
  nextColumn(): ColumnKey | null {
    const info = this.current;
    const labeled = info.progress[this.annotator] ?? 0;
    if (labeled >= info.queue.length) return null;
    return info.queue[labeled] ?? null;
  }

  progressText(): string {
    const info = this.current;
    const labeled = info.progress[this.annotator] ?? 0;
    return `${labeled}/${info.queue.length}`;
  }

  async label(
    column: ColumnKey,
    label: string | number,
  ): Promise<{ agreement: Agreement; status: SessionInfo["status"] }> {
    const response = await this.api.postLabel(this.sessionId, {
      annotator: this.annotator,
      column,
      label,
    });
    await this.refresh();
    return { agreement: response.agreement, status: response.status };
  }

  async disagreements(): Promise<Disagreement[]> {
    return this.api.disagreements(this.sessionId);
  }

  async resolve(
    column: ColumnKey,
    finalLabel: string | number,
    editedDescription?: string,
  ): Promise<SessionInfo["status"]> {
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
export async function exportAvailability(
  api: ApiClient,
): Promise<{ enabled: boolean; reason: string }> {
  try {
    await api.exportDatasetCsv();
    return { enabled: true, reason: "" };
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      const detail = error.detail as { columns?: ColumnKey[] } | undefined;
      const count = detail?.columns?.length ?? 0;
      return {
        enabled: false,
        reason: `difficulty missing for ${count} column${count === 1 ? "" : "s"}`,
      };
    }
    throw error;
  }
}

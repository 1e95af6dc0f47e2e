/** Payload shapes of the review server's JSON API. */

export interface DatabaseSummary {
  db_id: string;
  tables: number;
  columns: number;
  table_names: string[];
}

export interface ColumnKey {
  db_id: string;
  table: string;
  column: string;
}

export interface ColumnContext {
  db_id: string;
  table: string;
  column: string;
  ddl: string;
  example_rows: string[][];
  unique_values: string[];
  original_description: string | null;
  generated_descriptions: Record<
    string,
    { description: string; no_description: boolean }
  >;
  gold_description: string | null;
  difficulty: string | null;
}

export interface Agreement {
  n: number;
  agreement_pct: number | null;
  kappa: number | null;
  degenerate: boolean;
  dropped?: number;
}

export interface SessionInfo {
  session_id: string;
  target: string;
  annotators: string[];
  queue: ColumnKey[];
  status: "open" | "reconciling" | "finalized";
  progress: Record<string, number>;
  agreement: Agreement;
  resolutions: Record<string, { label: number; edited_description: string | null }>;
}

export interface LabelResponse {
  recorded: boolean;
  version: number;
  status: SessionInfo["status"];
  agreement: Agreement;
}

export interface Disagreement {
  column: ColumnKey;
  labels: Record<string, string>;
  resolved: boolean;
  hints: string[];
}

export interface DecisionTreeDoc {
  start: string;
  nodes: Record<
    string,
    {
      question: string;
      yes?: { label?: string; next?: string };
      no?: { label?: string; next?: string };
    }
  >;
}

export const QUALITY_KEYS: Record<string, string> = {
  "1": "Incorrect",
  "2": "Somewhat Correct",
  "3": "Almost Perfect",
  "4": "Perfect",
  "0": "No Description",
  "5": "I Can't Tell",
};

export const DIFFICULTY_KEYS: Record<string, string> = {
  "1": "Easy",
  "2": "Medium",
  "3": "Hard",
  "4": "Very Hard",
};

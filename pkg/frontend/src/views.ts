/** View builders: every pane renders exactly what the API returned. */

import { agreementLine } from "./agreement.js";
import { h } from "./dom.js";
import type { Agreement, ColumnContext, Disagreement } from "./types.js";

export const DIFFICULTY_GUIDELINE =
  "Easy: given only the table name and the column name, and other columns " +
  "in the table, I can accurately determine what the column description " +
  "should be. Medium: example data from the database is also needed. " +
  "Hard: even with schema and example data I am unsure. Very Hard: " +
  "impossible to determine without additional documentation.";

export function contextView(ctx: ColumnContext): HTMLElement {
  const candidates = h("div", { class: "candidates" });
  const addCandidate = (title: string, text: string | null) => {
    candidates.append(
      h(
        "div",
        { class: "candidate" },
        h("h4", {}, title),
        h("p", {}, text ?? h("em", {}, "none")),
      ),
    );
  };
  addCandidate("Original", ctx.original_description);
  for (const [model, gen] of Object.entries(ctx.generated_descriptions)) {
    addCandidate(
      `Generated (${model})`,
      gen.no_description ? "«no description»" : gen.description,
    );
  }
  addCandidate("Gold", ctx.gold_description);

  const headerRow = ctx.example_rows[0] ?? [];
  const bodyRows = ctx.example_rows.slice(1);
  return h(
    "section",
    { class: "context" },
    h("h2", {}, `${ctx.db_id}.${ctx.table}.${ctx.column}`),
    h("pre", { class: "ddl" }, ctx.ddl),
    h(
      "table",
      { class: "rows" },
      h("thead", {}, h("tr", {}, ...headerRow.map((c) => h("th", {}, c)))),
      h(
        "tbody",
        {},
        ...bodyRows.map((row) => h("tr", {}, ...row.map((c) => h("td", {}, c)))),
      ),
    ),
    h(
      "p",
      { class: "uniques" },
      `Unique values: ${ctx.unique_values.join(", ") || "(none)"}`,
    ),
    candidates,
    h("p", { class: "difficulty" }, `Current difficulty: ${ctx.difficulty ?? "unset"}`),
  );
}

export function agreementWidget(a: Agreement): HTMLElement {
  return h("div", { class: "agreement" }, agreementLine(a));
}

export function disagreementRow(
  d: Disagreement,
  onResolve: (d: Disagreement) => void,
): HTMLElement {
  const labels = Object.entries(d.labels)
    .map(([annotator, label]) => `${annotator}: ${label}`)
    .join("  ·  ");
  return h(
    "div",
    { class: d.resolved ? "disagreement resolved" : "disagreement" },
    h("span", {}, `${d.column.table}.${d.column.column} — ${labels}`),
    h("button", { onclick: () => onResolve(d) }, d.resolved ? "re-resolve" : "resolve"),
    h("details", {}, h("summary", {}, "decision-tree hints"),
      h("ol", {}, ...d.hints.map((hint) => h("li", {}, hint)))),
  );
}

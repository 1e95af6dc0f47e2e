/** Browser entry point: session picker, column-by-column labeling with
 * keyboard shortcuts and the decision tree, live agreement polling (2 s),
 * reconciliation, and dataset export. */

import { agreementLine } from "./agreement.js";
import { ApiClient, ApiError } from "./api.js";
import { DecisionTreeState } from "./decisionTree.js";
import { clear, h } from "./dom.js";
import { SessionFlow, exportAvailability } from "./session.js";
import type { ColumnKey, DecisionTreeDoc } from "./types.js";
import { DIFFICULTY_KEYS, QUALITY_KEYS } from "./types.js";
import { DIFFICULTY_GUIDELINE, contextView, disagreementRow } from "./views.js";

const POLL_INTERVAL_MS = 2000;

const api = new ApiClient("");
const root = document.getElementById("app")!;
let flow: SessionFlow | null = null;
let treeDoc: DecisionTreeDoc | null = null;
let tree: DecisionTreeState | null = null;
let pollTimer: number | undefined;

function banner(text: string, cls = "info"): HTMLElement {
  return h("div", { class: `banner ${cls}` }, text);
}

async function showError(error: unknown, retry: () => void): Promise<void> {
  const message =
    error instanceof ApiError
      ? `server error ${error.status}: ${JSON.stringify(error.detail)}`
      : String(error);
  root.prepend(
    h(
      "div",
      { class: "banner error" },
      message,
      h("button", { onclick: () => retry() }, "retry"),
      error instanceof ApiError && error.isVersionConflict
        ? h("button", { onclick: () => location.reload() }, "reload")
        : null,
    ),
  );
}

async function renderPicker(): Promise<void> {
  const databases = await api.databases();
  const annotator = h("input", { placeholder: "annotator id", value: "a1" });
  const partner = h("input", { placeholder: "second annotator", value: "a2" });
  const target = h("select", {},
    h("option", { value: "quality_of_generation" }, "quality of generation"),
    h("option", { value: "quality_of_original" }, "quality of original"),
    h("option", { value: "quality_of_improved" }, "quality of improved"),
    h("option", { value: "difficulty" }, "difficulty"),
  );
  const model = h("input", { placeholder: "model under test (quality targets)" });
  const dbSelect = h("select", {},
    ...databases.map((d) =>
      h("option", { value: d.db_id }, `${d.db_id} (${d.columns} columns)`),
    ),
  );
  const start = h("button", {
    onclick: async () => {
      try {
        const created = await api.createSession({
          target: (target as HTMLSelectElement).value,
          model: (model as HTMLInputElement).value || undefined,
          annotators: [
            (annotator as HTMLInputElement).value,
            (partner as HTMLInputElement).value,
          ],
          db_id: (dbSelect as HTMLSelectElement).value,
        });
        flow = new SessionFlow(api, created.session_id, (annotator as HTMLInputElement).value);
        await flow.refresh();
        await renderSession();
      } catch (error) {
        showError(error, renderPicker);
      }
    },
  }, "start / join session");
  clear(root).append(
    h("h1", {}, "semlayer review"),
    h("div", { class: "picker" },
      h("label", {}, "database ", dbSelect),
      h("label", {}, "target ", target),
      h("label", {}, "model ", model),
      h("label", {}, "you ", annotator),
      h("label", {}, "partner ", partner),
      start,
    ),
    h("div", { class: "export-area" }),
  );
  await renderExportButton();
}

async function renderExportButton(): Promise<void> {
  const area = root.querySelector<HTMLElement>(".export-area");
  if (!area) return;
  const availability = await exportAvailability(api);
  const button = h("button", {
    onclick: () => {
      window.location.href = "/api/export/dataset.csv";
    },
  }, "download gold dataset CSV") as HTMLButtonElement;
  if (!availability.enabled) {
    button.disabled = true;
    button.title = availability.reason;
  }
  clear(area).append(button, availability.enabled ? "" : ` (${availability.reason})`);
}

function labelKeys(): Record<string, string> {
  return flow && flow.current.target.startsWith("difficulty")
    ? DIFFICULTY_KEYS
    : QUALITY_KEYS;
}

async function renderSession(): Promise<void> {
  if (!flow) return;
  const info = flow.current;
  const next = flow.nextColumn();
  const container = clear(root);
  container.append(
    h("h1", {}, `session ${info.session_id} — ${info.target}`),
    h("p", {}, `status: ${info.status} · you are ${flow.annotator} · progress ${flow.progressText()}`),
    h("div", { class: "agreement" }, agreementLine(info.agreement)),
  );
  if (info.target.startsWith("difficulty")) {
    container.append(h("p", { class: "guideline" }, DIFFICULTY_GUIDELINE));
  }
  if (next) {
    try {
      const ctx = await api.columnContext(next);
      container.append(contextView(ctx));
      container.append(labelBar(next));
      if (!info.target.startsWith("difficulty")) container.append(treePane());
    } catch (error) {
      showError(error, renderSession);
    }
  } else {
    container.append(banner("queue complete for you"));
    await renderReconciliation(container);
  }
  container.append(h("div", { class: "export-area" }));
  await renderExportButton();
  schedulePoll();
}

function labelBar(column: ColumnKey): HTMLElement {
  const keys = labelKeys();
  return h(
    "div",
    { class: "labelbar" },
    ...Object.entries(keys).map(([key, label]) =>
      h("button", {
        onclick: () => submitLabel(column, label),
      }, `${key} · ${label}`),
    ),
  );
}

function treePane(): HTMLElement {
  if (!treeDoc) return h("div", {});
  if (!tree) tree = new DecisionTreeState(treeDoc);
  const pane = h("div", { class: "tree" });
  const rerender = () => {
    clear(pane);
    if (!tree) return;
    for (const step of tree.answered) {
      pane.append(h("p", { class: "answered" }, `${step.question} — ${step.answer}`));
    }
    if (tree.done) {
      pane.append(h("p", { class: "suggestion" }, `suggested label: ${tree.suggestion}`));
    } else if (tree.currentQuestion) {
      pane.append(
        h("p", {}, tree.currentQuestion),
        h("button", { onclick: () => { tree!.answer("yes"); rerender(); } }, "yes"),
        h("button", { onclick: () => { tree!.answer("no"); rerender(); } }, "no"),
      );
    }
    pane.append(h("button", { onclick: () => { tree!.reset(); rerender(); } }, "restart tree"));
  };
  rerender();
  return pane;
}

async function submitLabel(column: ColumnKey, label: string): Promise<void> {
  if (!flow) return;
  try {
    await flow.label(column, label);
    tree = null;
    await renderSession();
  } catch (error) {
    showError(error, () => submitLabel(column, label));
  }
}

async function renderReconciliation(container: HTMLElement): Promise<void> {
  if (!flow) return;
  const disagreements = await flow.disagreements();
  if (disagreements.length === 0) {
    container.append(banner("no disagreements", "ok"));
    return;
  }
  const list = h("div", { class: "disagreements" },
    h("h3", {}, `${disagreements.length} disagreement(s)`));
  for (const d of disagreements) {
    list.append(
      disagreementRow(d, async (entry) => {
        const finalLabel = prompt(
          `final label for ${entry.column.column} (${Object.values(labelKeys()).join(" / ")})`,
        );
        if (!finalLabel) return;
        const edited = prompt("edited gold description (empty to keep)") || undefined;
        try {
          await flow!.resolve(entry.column, finalLabel, edited);
          await renderSession();
        } catch (error) {
          showError(error, () => renderSession());
        }
      }),
    );
  }
  container.append(list);
}

function schedulePoll(): void {
  if (pollTimer !== undefined) clearTimeout(pollTimer);
  pollTimer = window.setTimeout(async () => {
    if (!flow) return;
    try {
      await flow.refresh();
      const widget = root.querySelector(".agreement");
      if (widget) widget.textContent = agreementLine(flow.current.agreement);
      const status = flow.current.status;
      if (status !== "open") await renderSession();
      else schedulePoll();
    } catch {
      schedulePoll();
    }
  }, POLL_INTERVAL_MS);
}

window.addEventListener("keydown", (event) => {
  if (!flow || !(event.key in labelKeys())) return;
  const active = document.activeElement;
  if (active && ["INPUT", "TEXTAREA", "SELECT"].includes(active.tagName)) return;
  const next = flow.nextColumn();
  const label = labelKeys()[event.key];
  if (next && label) void submitLabel(next, label);
});

async function boot(): Promise<void> {
  try {
    treeDoc = await api.decisionTree();
    await renderPicker();
  } catch (error) {
    showError(error, boot);
  }
}

void boot();

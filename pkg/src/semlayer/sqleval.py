"""Zero-shot text-to-SQL evaluation: build prompts under one of four
metadata scenarios, obtain predicted SQL, execute predicted and gold SQL
read-only, and score execution accuracy by unordered result comparison."""

from __future__ import annotations

import csv
import json
import re
import sqlite3
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .catalog import DatabaseCatalog, render_schema
from .llm import ModelSpec, Transport, complete, strip_wrappers
from .metastore import DifficultyLevel
from .prompts import PromptContext, TemplateKind, render
from .sqltext import tokenize

REAL_TOLERANCE = 1e-6
DEFAULT_QUERY_TIMEOUT = 30.0

_WRITE_KEYWORDS = {
    "insert", "update", "delete", "drop", "create", "alter", "replace",
    "vacuum", "attach", "detach", "pragma", "reindex", "begin", "commit",
    "rollback", "savepoint", "release",
}


class SqlEvalError(Exception):
    pass


class UnknownDatabase(SqlEvalError):
    pass


class SqlSyntaxError(SqlEvalError):
    pass


class SqlRuntimeError(SqlEvalError):
    pass


class WriteAttempted(SqlEvalError):
    pass


class ExecTimeout(SqlEvalError):
    pass


@dataclass
class Question:
    question_id: int
    db_id: str
    question: str
    gold_sql: str
    difficulty_tag: str = ""


def load_questions(path: str | Path) -> list[Question]:
    """Read a benchmark question file (JSON array; `SQL` key holds gold).

    An `evidence` field, when present, is ignored: column descriptions are
    the only metadata under evaluation.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    questions = []
    for i, row in enumerate(data):
        questions.append(
            Question(
                question_id=int(row.get("question_id", i)),
                db_id=row["db_id"],
                question=row["question"],
                gold_sql=row["SQL"],
                difficulty_tag=row.get("difficulty", ""),
            )
        )
    return questions


class ScenarioKind(Enum):
    NO_DESCRIPTIONS = "none"
    ORIGINAL_BIRD = "bird"
    GENERATED = "generated"
    GOLD = "gold"


@dataclass(frozen=True)
class ScenarioConfig:
    kind: ScenarioKind
    model: str = ""  # generator model name, for GENERATED

    def label(self) -> str:
        if self.kind is ScenarioKind.GENERATED and self.model:
            return f"generated:{self.model}"
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> "ScenarioConfig":
        if text.startswith("generated:"):
            return cls(ScenarioKind.GENERATED, text.split(":", 1)[1])
        return cls(ScenarioKind(text))


class Status(str, Enum):
    CORRECT = "correct"
    WRONG_RESULT = "wrong_result"
    PRED_EXEC_ERROR = "pred_exec_error"
    GOLD_EXEC_ERROR = "gold_exec_error"
    TIMEOUT = "timeout"


@dataclass
class ExecOutcome:
    question_id: int
    predicted_sql: str
    status: Status
    message: str = ""
    pred_rows: Optional[int] = None
    gold_rows: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "predicted_sql": self.predicted_sql,
            "status": self.status.value,
            "message": self.message,
            "pred_rows": self.pred_rows,
            "gold_rows": self.gold_rows,
        }


def schema_with_descriptions(
    catalog: DatabaseCatalog,
    descriptions: dict[tuple[str, str, str], str],
) -> str:
    """Rendered DDL with each column's description appended as a trailing
    `--` comment on the column's declaration line. Columns without a
    description simply carry no comment."""
    rendered_tables = []
    for table in catalog.tables:
        lines = table.ddl.split("\n")
        used = set()
        for column in table.columns:
            key = (catalog.db_id.lower(), table.name.lower(), column.name.lower())
            text = descriptions.get(key, "").strip()
            if not text:
                continue
            for li in range(1, len(lines)):
                if li in used:
                    continue
                if _declares_column(lines[li], column.name):
                    comment = " -- " + " ".join(text.split())
                    lines[li] = lines[li] + comment
                    used.add(li)
                    break
        rendered_tables.append("\n".join(lines))
    return "\n\n".join(rendered_tables)


def _declares_column(line: str, column: str) -> bool:
    stripped = line.strip()
    if not stripped:
        return False
    head = stripped.split()[0].strip('",`[]').lower()
    if head in ("foreign", "primary", "unique", "check", "constraint", ")"):
        return False
    return head == column.lower() or stripped.lower().startswith(
        (f'"{column.lower()}"', f"`{column.lower()}`", f"[{column.lower()}]")
    )


def build_sql_prompt(
    q: Question,
    catalog: DatabaseCatalog,
    scenario: ScenarioConfig,
    descriptions: Optional[dict[tuple[str, str, str], str]] = None,
) -> str:
    if catalog.db_id != q.db_id:
        raise UnknownDatabase(f"catalog {catalog.db_id!r} does not match {q.db_id!r}")
    if scenario.kind is ScenarioKind.NO_DESCRIPTIONS:
        schema = render_schema(catalog)
    else:
        schema = schema_with_descriptions(catalog, descriptions or {})
    return render(
        TemplateKind.ZERO_SHOT_TEXT2SQL,
        PromptContext(database_schema=schema, question=q.question),
    )


def clean_predicted_sql(text: str) -> str:
    """Strip markdown fences and a leading `sql` tag from model output."""
    cleaned = strip_wrappers(text)
    cleaned = re.sub(r"^\s*sql\b\s*:?\s*\n?", "", cleaned, count=1, flags=re.IGNORECASE)
    return cleaned.strip().rstrip(";").strip()


def execute(
    sql: str, catalog: DatabaseCatalog, timeout: float = DEFAULT_QUERY_TIMEOUT
) -> list[tuple]:
    """Run one statement read-only against the catalog's database.

    Raises WriteAttempted for any non-read statement, SqlSyntaxError /
    SqlRuntimeError for SQLite rejections, and ExecTimeout when the
    deadline passes (enforced with a progress handler)."""
    head = sql.strip().split(None, 1)
    if head and head[0].lower() in _WRITE_KEYWORDS:
        raise WriteAttempted(f"refusing non-read statement: {head[0].upper()}")
    conn = catalog.connect()
    deadline = time.monotonic() + timeout
    timed_out = False

    def check() -> int:
        nonlocal timed_out
        if time.monotonic() > deadline:
            timed_out = True
            return 1
        return 0

    conn.set_progress_handler(check, 2000)
    try:
        cursor = conn.execute(sql)
        return cursor.fetchall()
    except sqlite3.Error as exc:
        message = str(exc)
        if timed_out or "interrupted" in message:
            raise ExecTimeout(f"query exceeded {timeout}s") from exc
        if "syntax error" in message:
            raise SqlSyntaxError(message) from exc
        if "readonly database" in message or "attempt to write" in message:
            raise WriteAttempted(message) from exc
        raise SqlRuntimeError(message) from exc
    finally:
        conn.set_progress_handler(None, 0)
        conn.close()


def _cell_match(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    a_num = isinstance(a, (int, float)) and not isinstance(a, bool)
    b_num = isinstance(b, (int, float)) and not isinstance(b, bool)
    if a_num and b_num:
        return abs(a - b) <= REAL_TOLERANCE
    return type(a) is type(b) and a == b


def _row_match(r1: tuple, r2: tuple) -> bool:
    return len(r1) == len(r2) and all(_cell_match(a, b) for a, b in zip(r1, r2))


def rows_equal(a: list[tuple], b: list[tuple]) -> bool:
    """Unordered comparison of result grids with duplicates collapsed.

    Reals compare with absolute tolerance 1e-6, text exactly, NULL equals
    NULL; column order within a row is significant."""
    set_a = {tuple(r) for r in a}
    set_b = {tuple(r) for r in b}
    if set_a == set_b:
        return True
    list_a, list_b = list(set_a), list(set_b)
    return all(any(_row_match(ra, rb) for rb in list_b) for ra in list_a) and all(
        any(_row_match(rb, ra) for ra in list_a) for rb in list_b
    )


@dataclass
class EvalRun:
    scenario: str
    model: str
    outcomes: list[ExecOutcome] = field(default_factory=list)
    by_difficulty: dict[str, dict] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def correct(self) -> int:
        return sum(1 for o in self.outcomes if o.status is Status.CORRECT)

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else 0.0

    @property
    def gold_errors(self) -> list[ExecOutcome]:
        """Broken benchmark rows; these indicate fixture problems, not
        model failures, and deserve attention before trusting accuracy."""
        return [o for o in self.outcomes if o.status is Status.GOLD_EXEC_ERROR]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "model": self.model,
            "n": self.n,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "gold_exec_errors": len(self.gold_errors),
            "by_difficulty": self.by_difficulty,
            "outcomes": [
                o.to_dict()
                for o in sorted(self.outcomes, key=lambda o: o.question_id)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_summary_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["scenario", "slice", "n", "correct", "accuracy"])
            writer.writerow(
                ["" if not self.scenario else self.scenario, "all", self.n,
                 self.correct, f"{self.accuracy:.6f}"]
            )
            for label, cell in sorted(self.by_difficulty.items()):
                writer.writerow(
                    [self.scenario, label, cell["n"], cell["correct"],
                     f"{cell['accuracy']:.6f}"]
                )


def referenced_max_difficulty(
    q: Question,
    catalog: DatabaseCatalog,
    difficulties: dict[tuple[str, str, str], DifficultyLevel],
) -> Optional[DifficultyLevel]:
    """Highest difficulty among columns the gold query mentions by name.

    Matching is lexical (identifier tokens against catalog column names);
    good enough for slicing accuracy by column difficulty."""
    try:
        idents = {
            t.value.lower() for t in tokenize(q.gold_sql) if t.kind == "ident"
        }
    except Exception:
        return None
    best: Optional[DifficultyLevel] = None
    for table in catalog.tables:
        for column in table.columns:
            if column.name.lower() not in idents:
                continue
            level = difficulties.get(
                (catalog.db_id.lower(), table.name.lower(), column.name.lower())
            )
            if level is not None and (best is None or level > best):
                best = level
    return best


def run_eval(
    questions: list[Question],
    scenario: ScenarioConfig,
    model: ModelSpec,
    catalogs: dict[str, DatabaseCatalog],
    descriptions: Optional[dict[tuple[str, str, str], str]] = None,
    difficulties: Optional[dict[tuple[str, str, str], DifficultyLevel]] = None,
    transport: Optional[Transport] = None,
    timeout: float = DEFAULT_QUERY_TIMEOUT,
) -> EvalRun:
    """Evaluate one scenario end-to-end.

    LLM calls run in parallel under the model's in-flight bound; SQL
    executes sequentially per database. Per-question failures are recorded
    as outcomes, never raised."""
    run = EvalRun(scenario=scenario.label(), model=model.name)

    def predict(q: Question) -> tuple[Question, Optional[str], str]:
        catalog = catalogs.get(q.db_id)
        if catalog is None:
            return q, None, f"unknown database {q.db_id!r}"
        try:
            prompt = build_sql_prompt(q, catalog, scenario, descriptions)
            completion = complete(model, prompt, transport=transport)
            return q, clean_predicted_sql(completion.text), ""
        except Exception as exc:
            return q, None, str(exc)

    with ThreadPoolExecutor(max_workers=max(1, model.max_in_flight)) as pool:
        predictions = list(pool.map(predict, questions))

    for q, predicted, error in predictions:
        if predicted is None:
            run.outcomes.append(
                ExecOutcome(q.question_id, "", Status.PRED_EXEC_ERROR, error)
            )
            continue
        catalog = catalogs[q.db_id]
        try:
            gold_rows = execute(q.gold_sql, catalog, timeout)
        except SqlEvalError as exc:
            run.outcomes.append(
                ExecOutcome(
                    q.question_id, predicted, Status.GOLD_EXEC_ERROR, str(exc)
                )
            )
            continue
        try:
            pred_rows = execute(predicted, catalog, timeout)
        except ExecTimeout as exc:
            run.outcomes.append(
                ExecOutcome(
                    q.question_id, predicted, Status.TIMEOUT, str(exc),
                    gold_rows=len(gold_rows),
                )
            )
            continue
        except SqlEvalError as exc:
            run.outcomes.append(
                ExecOutcome(
                    q.question_id, predicted, Status.PRED_EXEC_ERROR, str(exc),
                    gold_rows=len(gold_rows),
                )
            )
            continue
        status = (
            Status.CORRECT if rows_equal(pred_rows, gold_rows) else Status.WRONG_RESULT
        )
        run.outcomes.append(
            ExecOutcome(
                q.question_id, predicted, status,
                pred_rows=len(pred_rows), gold_rows=len(gold_rows),
            )
        )

    if difficulties:
        slices: dict[str, dict] = {}
        outcome_by_id = {o.question_id: o for o in run.outcomes}
        for q in questions:
            catalog = catalogs.get(q.db_id)
            if catalog is None:
                continue
            level = referenced_max_difficulty(q, catalog, difficulties)
            label = level.label if level is not None else "Unrated"
            cell = slices.setdefault(label, {"n": 0, "correct": 0})
            cell["n"] += 1
            if outcome_by_id[q.question_id].status is Status.CORRECT:
                cell["correct"] += 1
        for cell in slices.values():
            cell["accuracy"] = cell["correct"] / cell["n"]
        run.by_difficulty = slices
    return run

"""Per-column description generation across a whole catalog: fresh
generation from schema + samples, or improvement of existing metadata."""

from __future__ import annotations

import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .catalog import (
    ColumnRef,
    DatabaseCatalog,
    format_rows,
    format_unique,
    render_schema,
    sample_rows,
    sample_unique,
)
from .llm import ModelSpec, Transport, complete, is_sentinel, strip_wrappers
from .metastore import ColumnDescriptor, MetaStore, Provenance
from .prompts import PromptContext, TemplateKind, render

log = logging.getLogger(__name__)


class GenMode(Enum):
    GENERATE = "generate"
    IMPROVE = "improve"


class GenpipeError(Exception):
    pass


class MissingOriginal(GenpipeError):
    """Improve mode requires an original descriptor for the column."""


@dataclass
class GenerationJob:
    catalog: DatabaseCatalog
    model: ModelSpec
    mode: GenMode = GenMode.GENERATE
    rows_n: int = 3
    unique_limit: int = 10
    target_columns: Optional[list[ColumnRef]] = None
    originals: dict[tuple[str, str, str], ColumnDescriptor] = field(default_factory=dict)
    transport: Optional[Transport] = None

    def targets(self) -> list[ColumnRef]:
        if self.target_columns is not None:
            return list(self.target_columns)
        return self.catalog.all_column_refs()


@dataclass
class ColumnOutcome:
    ref: ColumnRef
    status: str  # "ok" | "no_description" | "failed"
    error: str = ""
    latency: float = 0.0
    attempts: int = 0
    token_usage: Optional[dict] = None
    table_phrase_removed: bool = False

    def to_dict(self) -> dict:
        return {
            "db_id": self.ref.db_id,
            "table": self.ref.table,
            "column": self.ref.column,
            "status": self.status,
            "error": self.error,
            "latency": self.latency,
            "attempts": self.attempts,
            "token_usage": self.token_usage,
            "table_phrase_removed": self.table_phrase_removed,
        }


@dataclass
class RunReport:
    model: str
    mode: str
    outcomes: list[ColumnOutcome] = field(default_factory=list)
    completion_calls: int = 0

    @property
    def ok(self) -> int:
        return sum(1 for o in self.outcomes if o.status == "ok")

    @property
    def no_description(self) -> int:
        return sum(1 for o in self.outcomes if o.status == "no_description")

    @property
    def failed(self) -> int:
        return sum(1 for o in self.outcomes if o.status == "failed")

    def to_json_lines(self) -> str:
        return "\n".join(json.dumps(o.to_dict(), sort_keys=True) for o in self.outcomes)

    def summary(self) -> dict:
        return {
            "model": self.model,
            "mode": self.mode,
            "columns": len(self.outcomes),
            "ok": self.ok,
            "no_description": self.no_description,
            "failed": self.failed,
            "completion_calls": self.completion_calls,
        }


def remove_table_phrase(text: str, table: str) -> tuple[str, bool]:
    """Strip the forbidden phrase "in the <table> table" the prompt bans."""
    pattern = re.compile(
        r"[ \t]*[,;]?[ \t]*\bin the[ \t]+" + re.escape(table) + r"[ \t]+table\b",
        re.IGNORECASE,
    )
    cleaned, hits = pattern.subn("", text)
    if not hits:
        return text, False
    cleaned = re.sub(r"[ \t]{2,}", " ", cleaned)
    cleaned = re.sub(r"[ \t]+([.,;!?])", r"\1", cleaned)
    return cleaned.strip(), True


def build_context(job: GenerationJob, col: ColumnRef) -> PromptContext:
    table, _ = job.catalog.resolve(col)
    ctx = PromptContext(
        database_schema=render_schema(job.catalog),
        table=table.name,
        column=col.column,
        example_data=format_rows(sample_rows(job.catalog, table.name, job.rows_n)),
        unique_data=format_unique(sample_unique(job.catalog, col, job.unique_limit)),
    )
    if job.mode is GenMode.IMPROVE:
        original = job.originals.get(col.key())
        if original is None:
            raise MissingOriginal(f"no original descriptor for {col}")
        ctx.column_name = original.column_name
        ctx.column_description = original.description
    return ctx


def describe_column(
    job: GenerationJob,
    col: ColumnRef,
    on_dispatch: Optional[Callable[[], None]] = None,
) -> tuple[ColumnDescriptor, ColumnOutcome]:
    """Generate one column's description; sentinel responses are a
    legitimate no-description outcome, never an error."""
    table, _ = job.catalog.resolve(col)
    ctx = build_context(job, col)
    kind = (
        TemplateKind.IMPROVE_DESCRIPTION
        if job.mode is GenMode.IMPROVE
        else TemplateKind.GENERATE_DESCRIPTION
    )
    prompt = render(kind, ctx)
    if on_dispatch is not None:
        on_dispatch()
    completion = complete(job.model, prompt, transport=job.transport)
    text = strip_wrappers(completion.text)
    text, phrase_removed = remove_table_phrase(text, table.name)
    if phrase_removed:
        log.info("removed forbidden table phrase from %s.%s", col.table, col.column)
    sentinel = is_sentinel(text)
    ordinal = table.column_names().index(
        next(c.name for c in table.columns if c.name.lower() == col.column.lower())
    )
    descriptor = ColumnDescriptor(
        ref=ColumnRef(job.catalog.db_id, table.name, col.column),
        original_column_name=col.column,
        description="" if sentinel else text,
        provenance=Provenance.GENERATED,
        model=job.model.name,
        no_description=sentinel,
        ordinal=ordinal,
    )
    outcome = ColumnOutcome(
        ref=descriptor.ref,
        status="no_description" if sentinel else "ok",
        latency=completion.latency,
        attempts=completion.attempts,
        token_usage=completion.token_usage,
        table_phrase_removed=phrase_removed,
    )
    return descriptor, outcome


def run_batch(
    job: GenerationJob, store: Optional[MetaStore] = None
) -> tuple[list[ColumnDescriptor], RunReport]:
    """Describe every targeted column; per-column failures are isolated and
    reported, never fatal to the batch."""
    targets = job.targets()
    report = RunReport(model=job.model.name, mode=job.mode.value)
    descriptors: list[ColumnDescriptor] = []
    results: dict[tuple[str, str, str], tuple[Optional[ColumnDescriptor], ColumnOutcome]] = {}
    calls = 0
    calls_lock = threading.Lock()

    def count_dispatch():
        nonlocal calls
        with calls_lock:
            calls += 1

    def work(col: ColumnRef):
        try:
            descriptor, outcome = describe_column(job, col, on_dispatch=count_dispatch)
            return col, descriptor, outcome
        except Exception as exc:
            return col, None, ColumnOutcome(ref=col, status="failed", error=str(exc))

    max_workers = max(1, job.model.max_in_flight)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for col, descriptor, outcome in pool.map(work, targets):
            results[col.key()] = (descriptor, outcome)

    for col in sorted(targets, key=lambda r: r.key()):
        descriptor, outcome = results[col.key()]
        report.outcomes.append(outcome)
        if descriptor is not None:
            descriptors.append(descriptor)
            if store is not None:
                store.upsert_descriptor(descriptor)
    report.completion_calls = calls
    return descriptors, report

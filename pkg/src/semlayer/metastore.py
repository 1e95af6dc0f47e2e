"""Column metadata persistence: BIRD-style description CSVs, the gold dataset
CSV (descriptions + difficulty), annotation records, and a SQLite-backed store.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
import sqlite3
import threading
from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from pathlib import Path
from typing import Callable, Iterable, Optional

from .catalog import ColumnRef, DatabaseCatalog

log = logging.getLogger(__name__)

BIRD_CSV_HEADER = [
    "original_column_name",
    "column_name",
    "column_description",
    "data_format",
    "value_description",
]

DATASET_CSV_HEADER = [
    "database",
    "table",
    "original_column_name",
    "gold_description",
    "difficulty",
]


class MetastoreError(Exception):
    pass


class MissingHeader(MetastoreError):
    pass


class UnwritablePath(MetastoreError):
    pass


class MissingDifficulty(MetastoreError):
    def __init__(self, refs: list[ColumnRef]):
        self.refs = refs
        listing = ", ".join(f"{r.db_id}.{r.table}.{r.column}" for r in refs)
        super().__init__(f"difficulty missing for: {listing}")


class LabelTargetMismatch(MetastoreError):
    pass


class Provenance(str, Enum):
    ORIGINAL_BIRD = "original_bird"
    GENERATED = "generated"
    GOLD = "gold"


class DifficultyLevel(IntEnum):
    EASY = 1
    MEDIUM = 2
    HARD = 3
    VERY_HARD = 4

    @property
    def label(self) -> str:
        return _DIFFICULTY_LABELS[self]

    @classmethod
    def parse(cls, text: str) -> "DifficultyLevel":
        key = text.strip().lower().replace("_", " ").replace("-", " ")
        key = " ".join(key.split())
        try:
            return _DIFFICULTY_BY_KEY[key]
        except KeyError:
            raise ValueError(f"unknown difficulty level: {text!r}") from None


_DIFFICULTY_LABELS = {
    DifficultyLevel.EASY: "Easy",
    DifficultyLevel.MEDIUM: "Medium",
    DifficultyLevel.HARD: "Hard",
    DifficultyLevel.VERY_HARD: "Very Hard",
}
_DIFFICULTY_BY_KEY = {
    "easy": DifficultyLevel.EASY,
    "medium": DifficultyLevel.MEDIUM,
    "hard": DifficultyLevel.HARD,
    "very hard": DifficultyLevel.VERY_HARD,
    "veryhard": DifficultyLevel.VERY_HARD,
}


class QualityLabel(IntEnum):
    """Rating of a description against the gold reference.

    Values 1..4 are the numeric scores used in mean-quality aggregation;
    NO_DESCRIPTION and CANT_TELL are categorical outcomes excluded from means.
    """

    PERFECT = 4
    ALMOST_PERFECT = 3
    SOMEWHAT_CORRECT = 2
    INCORRECT = 1
    NO_DESCRIPTION = 0
    CANT_TELL = -1

    @property
    def label(self) -> str:
        return _QUALITY_LABELS[self]

    @property
    def score_bearing(self) -> bool:
        return 1 <= int(self) <= 4

    @classmethod
    def parse(cls, text: str) -> "QualityLabel":
        key = " ".join(text.strip().lower().replace("_", " ").split())
        try:
            return _QUALITY_BY_KEY[key]
        except KeyError:
            raise ValueError(f"unknown quality label: {text!r}") from None


_QUALITY_LABELS = {
    QualityLabel.PERFECT: "Perfect",
    QualityLabel.ALMOST_PERFECT: "Almost Perfect",
    QualityLabel.SOMEWHAT_CORRECT: "Somewhat Correct",
    QualityLabel.INCORRECT: "Incorrect",
    QualityLabel.NO_DESCRIPTION: "No Description",
    QualityLabel.CANT_TELL: "I Can't Tell",
}
_QUALITY_BY_KEY = {
    "perfect": QualityLabel.PERFECT,
    "almost perfect": QualityLabel.ALMOST_PERFECT,
    "somewhat correct": QualityLabel.SOMEWHAT_CORRECT,
    "incorrect": QualityLabel.INCORRECT,
    "no description": QualityLabel.NO_DESCRIPTION,
    "i can't tell": QualityLabel.CANT_TELL,
    "cant tell": QualityLabel.CANT_TELL,
    "can't tell": QualityLabel.CANT_TELL,
}


@dataclass
class ColumnDescriptor:
    """One column's metadata record; the semantic-layer unit."""

    ref: ColumnRef
    original_column_name: str
    column_name: str = ""
    description: str = ""
    data_format: str = ""
    value_description: str = ""
    provenance: Provenance = Provenance.ORIGINAL_BIRD
    model: str = ""
    no_description: bool = False
    ordinal: Optional[int] = None


class TargetKind(str, Enum):
    QUALITY_OF_GENERATION = "quality_of_generation"
    QUALITY_OF_ORIGINAL = "quality_of_original"
    QUALITY_OF_IMPROVED = "quality_of_improved"
    DIFFICULTY = "difficulty"


@dataclass(frozen=True)
class AnnotationTarget:
    kind: TargetKind
    model: str = ""

    def wants_difficulty(self) -> bool:
        return self.kind is TargetKind.DIFFICULTY

    def as_string(self) -> str:
        return f"{self.kind.value}:{self.model}" if self.model else self.kind.value

    @classmethod
    def from_string(cls, text: str) -> "AnnotationTarget":
        kind, _, model = text.partition(":")
        return cls(TargetKind(kind), model)


@dataclass
class AnnotationRecord:
    ref: ColumnRef
    annotator_id: str
    target: AnnotationTarget
    label: QualityLabel | DifficultyLevel
    timestamp: str = ""
    session_id: str = ""
    version: int = 0


def _validate_label(target: AnnotationTarget, label) -> None:
    if target.wants_difficulty():
        if not isinstance(label, DifficultyLevel):
            raise LabelTargetMismatch(
                f"target {target.as_string()} requires a difficulty level,"
                f" got {label!r}"
            )
    elif not isinstance(label, QualityLabel):
        raise LabelTargetMismatch(
            f"target {target.as_string()} requires a quality label, got {label!r}"
        )


def sanitize_text(data: bytes) -> str:
    """Drop byte sequences that do not decode as UTF-8."""
    return data.decode("utf-8", errors="ignore")


def _normalize_header(cells: list[str]) -> list[str]:
    # BIRD shipped one header with the misspelling "desription"; repair on load
    return [c.strip().lstrip("﻿").replace("desription", "description") for c in cells]


def load_bird_csv(
    path: str | Path,
    db_id: str = "",
    table: str = "",
    on_issue: Optional[Callable[[int, str], None]] = None,
) -> list[ColumnDescriptor]:
    """Load one BIRD per-table metadata CSV into descriptors.

    Invalid UTF-8 bytes are stripped, `Unnamed`-and-empty rows are dropped,
    and malformed rows are reported (line number) and skipped, never fatal.
    Table defaults to the file's stem, matching BIRD's one-CSV-per-table layout.
    """
    path = Path(path)
    if not table:
        table = path.stem
    report = on_issue or (lambda line, msg: log.warning("%s:%d: %s", path, line, msg))
    text = sanitize_text(path.read_bytes())
    rows = list(csv.reader(text.splitlines()))
    if not rows or _normalize_header(rows[0]) != BIRD_CSV_HEADER:
        raise MissingHeader(
            f"{path}: expected header {','.join(BIRD_CSV_HEADER)}"
        )
    descriptors: list[ColumnDescriptor] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) > len(BIRD_CSV_HEADER) and not any(
            cell.strip() for cell in row[len(BIRD_CSV_HEADER):]
        ):
            row = row[: len(BIRD_CSV_HEADER)]
        if len(row) != len(BIRD_CSV_HEADER):
            report(line_no, f"expected {len(BIRD_CSV_HEADER)} fields, got {len(row)}")
            continue
        original, human, description, data_format, value_desc = (c.strip() for c in row)
        if original.startswith("Unnamed") and not any(
            (human, description, data_format, value_desc)
        ):
            continue
        descriptors.append(
            ColumnDescriptor(
                ref=ColumnRef(db_id=db_id, table=table, column=original),
                original_column_name=original,
                column_name=human,
                description=description,
                data_format=data_format,
                value_description=value_desc,
                provenance=Provenance.ORIGINAL_BIRD,
                ordinal=len(descriptors),
            )
        )
    return descriptors


def save_bird_csv(descriptors: Iterable[ColumnDescriptor], path: str | Path) -> None:
    """Write descriptors back out in the BIRD per-table CSV schema."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(BIRD_CSV_HEADER)
            for d in descriptors:
                writer.writerow(
                    [
                        d.original_column_name,
                        d.column_name,
                        d.description,
                        d.data_format,
                        d.value_description,
                    ]
                )
    except OSError as exc:
        raise UnwritablePath(str(path)) from exc


@dataclass
class DatasetRow:
    """One line of the gold dataset CSV."""

    ref: ColumnRef
    gold_description: str
    difficulty: DifficultyLevel
    ordinal: int = 0


def save_dataset_csv(rows: Iterable[DatasetRow], path: str | Path) -> None:
    """Write the gold dataset CSV, sorted by (database, table, column order).

    Every row must carry a difficulty; callers assemble rows via
    `dataset_rows` which raises MissingDifficulty with the full offender list.
    """
    path = Path(path)
    ordered = sorted(rows, key=lambda r: (r.ref.db_id, r.ref.table.lower(), r.ordinal))
    try:
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(DATASET_CSV_HEADER)
            for row in ordered:
                writer.writerow(
                    [
                        row.ref.db_id,
                        row.ref.table,
                        row.ref.column,
                        row.gold_description,
                        row.difficulty.label,
                    ]
                )
    except OSError as exc:
        raise UnwritablePath(str(path)) from exc


def load_dataset_csv(path: str | Path) -> list[DatasetRow]:
    path = Path(path)
    text = sanitize_text(path.read_bytes())
    rows = list(csv.reader(text.splitlines()))
    if not rows or _normalize_header(rows[0]) != DATASET_CSV_HEADER:
        raise MissingHeader(f"{path}: expected header {','.join(DATASET_CSV_HEADER)}")
    out = []
    for i, row in enumerate(rows[1:]):
        db, table, column, description, difficulty = row
        out.append(
            DatasetRow(
                ref=ColumnRef(db, table, column),
                gold_description=description,
                difficulty=DifficultyLevel.parse(difficulty),
                ordinal=i,
            )
        )
    return out


def dataset_rows(
    descriptors: Iterable[ColumnDescriptor],
    difficulties: dict[tuple[str, str, str], DifficultyLevel],
) -> list[DatasetRow]:
    """Pair gold descriptors with difficulties; all-or-nothing."""
    missing = []
    rows = []
    for i, d in enumerate(descriptors):
        level = difficulties.get(d.ref.key())
        if level is None:
            missing.append(d.ref)
            continue
        rows.append(
            DatasetRow(
                ref=d.ref,
                gold_description=d.description,
                difficulty=level,
                ordinal=d.ordinal if d.ordinal is not None else i,
            )
        )
    if missing:
        raise MissingDifficulty(missing)
    return rows


_SCHEMA = """
CREATE TABLE IF NOT EXISTS descriptors (
    db_id TEXT NOT NULL COLLATE NOCASE,
    table_name TEXT NOT NULL COLLATE NOCASE,
    column_name TEXT NOT NULL COLLATE NOCASE,
    original_column_name TEXT NOT NULL DEFAULT '',
    human_name TEXT NOT NULL DEFAULT '',
    description TEXT NOT NULL DEFAULT '',
    data_format TEXT NOT NULL DEFAULT '',
    value_description TEXT NOT NULL DEFAULT '',
    provenance TEXT NOT NULL,
    model TEXT NOT NULL DEFAULT '',
    no_description INTEGER NOT NULL DEFAULT 0,
    ordinal INTEGER,
    PRIMARY KEY (db_id, table_name, column_name, provenance, model)
);
CREATE TABLE IF NOT EXISTS difficulties (
    db_id TEXT NOT NULL COLLATE NOCASE,
    table_name TEXT NOT NULL COLLATE NOCASE,
    column_name TEXT NOT NULL COLLATE NOCASE,
    level INTEGER NOT NULL,
    PRIMARY KEY (db_id, table_name, column_name)
);
CREATE TABLE IF NOT EXISTS annotations (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    db_id TEXT NOT NULL COLLATE NOCASE,
    table_name TEXT NOT NULL COLLATE NOCASE,
    column_name TEXT NOT NULL COLLATE NOCASE,
    annotator_id TEXT NOT NULL,
    target TEXT NOT NULL,
    label INTEGER NOT NULL,
    timestamp TEXT NOT NULL,
    session_id TEXT NOT NULL DEFAULT '',
    version INTEGER NOT NULL,
    superseded INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    payload TEXT NOT NULL
);
"""


class MetaStore:
    """Single-file store for descriptors, difficulties, and annotations.

    Single-writer, multi-reader: writes are serialized through one lock,
    reads run against committed state.
    """

    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.executescript(_SCHEMA)
        self._conn.commit()

    def close(self) -> None:
        self._conn.close()

    # -- descriptors ---------------------------------------------------

    def upsert_descriptor(self, d: ColumnDescriptor) -> None:
        if d.provenance is Provenance.GOLD and not d.description.strip():
            raise MetastoreError(
                f"gold descriptor for {d.ref} must have a non-empty description"
            )
        model = d.model if d.provenance is Provenance.GENERATED else ""
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO descriptors VALUES (?,?,?,?,?,?,?,?,?,?,?,?)",
                (
                    d.ref.db_id,
                    d.ref.table,
                    d.ref.column,
                    d.original_column_name,
                    d.column_name,
                    d.description,
                    d.data_format,
                    d.value_description,
                    d.provenance.value,
                    model,
                    int(d.no_description),
                    d.ordinal,
                ),
            )
            self._conn.commit()

    def upsert_descriptors(self, descriptors: Iterable[ColumnDescriptor]) -> int:
        count = 0
        for d in descriptors:
            self.upsert_descriptor(d)
            count += 1
        return count

    def descriptors(
        self,
        provenance: Optional[Provenance] = None,
        model: Optional[str] = None,
        db_id: Optional[str] = None,
    ) -> list[ColumnDescriptor]:
        sql = "SELECT * FROM descriptors"
        clauses, params = [], []
        if provenance is not None:
            clauses.append("provenance = ?")
            params.append(provenance.value)
        if model is not None:
            clauses.append("model = ?")
            params.append(model)
        if db_id is not None:
            clauses.append("db_id = ?")
            params.append(db_id)
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY db_id, table_name, ordinal, column_name"
        rows = self._conn.execute(sql, params).fetchall()
        return [self._row_to_descriptor(r) for r in rows]

    def get_descriptor(
        self, ref: ColumnRef, provenance: Provenance, model: str = ""
    ) -> Optional[ColumnDescriptor]:
        row = self._conn.execute(
            "SELECT * FROM descriptors WHERE db_id=? AND table_name=? AND"
            " column_name=? AND provenance=? AND model=?",
            (ref.db_id, ref.table, ref.column, provenance.value, model),
        ).fetchone()
        return self._row_to_descriptor(row) if row else None

    @staticmethod
    def _row_to_descriptor(row) -> ColumnDescriptor:
        return ColumnDescriptor(
            ref=ColumnRef(row[0], row[1], row[2]),
            original_column_name=row[3],
            column_name=row[4],
            description=row[5],
            data_format=row[6],
            value_description=row[7],
            provenance=Provenance(row[8]),
            model=row[9],
            no_description=bool(row[10]),
            ordinal=row[11],
        )

    def promote_to_gold(self, ref: ColumnRef, description: str) -> ColumnDescriptor:
        """Store an edited description as the column's (single) gold record."""
        base = (
            self.get_descriptor(ref, Provenance.GOLD)
            or self.get_descriptor(ref, Provenance.ORIGINAL_BIRD)
            or ColumnDescriptor(ref=ref, original_column_name=ref.column)
        )
        gold = replace(
            base,
            description=description,
            provenance=Provenance.GOLD,
            model="",
            no_description=False,
        )
        self.upsert_descriptor(gold)
        return gold

    # -- difficulties ----------------------------------------------------

    def set_difficulty(self, ref: ColumnRef, level: DifficultyLevel) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO difficulties VALUES (?,?,?,?)",
                (ref.db_id, ref.table, ref.column, int(level)),
            )
            self._conn.commit()

    def difficulty(self, ref: ColumnRef) -> Optional[DifficultyLevel]:
        row = self._conn.execute(
            "SELECT level FROM difficulties WHERE db_id=? AND table_name=? AND column_name=?",
            (ref.db_id, ref.table, ref.column),
        ).fetchone()
        return DifficultyLevel(row[0]) if row else None

    def difficulties(self) -> dict[tuple[str, str, str], DifficultyLevel]:
        rows = self._conn.execute(
            "SELECT db_id, table_name, column_name, level FROM difficulties"
        ).fetchall()
        return {
            ColumnRef(r[0], r[1], r[2]).key(): DifficultyLevel(r[3]) for r in rows
        }

    # -- annotations -----------------------------------------------------

    def record_annotation(
        self, rec: AnnotationRecord, catalog: Optional[DatabaseCatalog] = None
    ) -> AnnotationRecord:
        """Persist an annotation; supersedes any prior live record for the
        same (column, annotator, target) key. Re-submitting an identical
        label is a no-op, which makes retries safe."""
        _validate_label(rec.target, rec.label)
        if catalog is not None:
            catalog.resolve(rec.ref)  # raises UnknownColumn / UnknownTable
        timestamp = rec.timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat()
        with self._lock:
            live = self._conn.execute(
                "SELECT id, label, version, session_id FROM annotations"
                " WHERE db_id=? AND table_name=? AND column_name=? AND annotator_id=?"
                " AND target=? AND superseded=0",
                (
                    rec.ref.db_id,
                    rec.ref.table,
                    rec.ref.column,
                    rec.annotator_id,
                    rec.target.as_string(),
                ),
            ).fetchone()
            if live is not None and live[1] == int(rec.label):
                return replace(rec, version=live[2], timestamp=timestamp)
            version = 1
            if live is not None:
                version = live[2] + 1
                self._conn.execute(
                    "UPDATE annotations SET superseded=1 WHERE id=?", (live[0],)
                )
            self._conn.execute(
                "INSERT INTO annotations (db_id, table_name, column_name,"
                " annotator_id, target, label, timestamp, session_id, version,"
                " superseded) VALUES (?,?,?,?,?,?,?,?,?,0)",
                (
                    rec.ref.db_id,
                    rec.ref.table,
                    rec.ref.column,
                    rec.annotator_id,
                    rec.target.as_string(),
                    int(rec.label),
                    timestamp,
                    rec.session_id,
                    version,
                ),
            )
            self._conn.commit()
        if rec.target.wants_difficulty():
            self.set_difficulty(rec.ref, rec.label)  # keep the live level handy
        return replace(rec, version=version, timestamp=timestamp)

    def annotations(
        self,
        target: Optional[AnnotationTarget] = None,
        annotator_id: Optional[str] = None,
        session_id: Optional[str] = None,
        live_only: bool = True,
    ) -> list[AnnotationRecord]:
        sql = "SELECT db_id, table_name, column_name, annotator_id, target, label, timestamp, session_id, version FROM annotations"
        clauses, params = [], []
        if live_only:
            clauses.append("superseded=0")
        if target is not None:
            clauses.append("target=?")
            params.append(target.as_string())
        if annotator_id is not None:
            clauses.append("annotator_id=?")
            params.append(annotator_id)
        if session_id is not None:
            clauses.append("session_id=?")
            params.append(session_id)
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY db_id, table_name, column_name, annotator_id, id"
        out = []
        for row in self._conn.execute(sql, params):
            target_obj = AnnotationTarget.from_string(row[4])
            label = (
                DifficultyLevel(row[5])
                if target_obj.wants_difficulty()
                else QualityLabel(row[5])
            )
            out.append(
                AnnotationRecord(
                    ref=ColumnRef(row[0], row[1], row[2]),
                    annotator_id=row[3],
                    target=target_obj,
                    label=label,
                    timestamp=row[6],
                    session_id=row[7],
                    version=row[8],
                )
            )
        return out

    # -- sessions (opaque JSON payloads owned by the server) -------------

    def save_session(self, session_id: str, payload: dict) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO sessions VALUES (?, ?)",
                (session_id, json.dumps(payload, sort_keys=True)),
            )
            self._conn.commit()

    def load_session(self, session_id: str) -> Optional[dict]:
        row = self._conn.execute(
            "SELECT payload FROM sessions WHERE session_id=?", (session_id,)
        ).fetchone()
        return json.loads(row[0]) if row else None

    def session_ids(self) -> list[str]:
        return [
            r[0]
            for r in self._conn.execute(
                "SELECT session_id FROM sessions ORDER BY session_id"
            )
        ]

    # -- export -----------------------------------------------------------

    def export_dataset(self, path: str | Path) -> list[DatasetRow]:
        golds = self.descriptors(provenance=Provenance.GOLD)
        rows = dataset_rows(golds, self.difficulties())
        save_dataset_csv(rows, path)
        return rows

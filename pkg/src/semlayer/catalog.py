"""Read-only introspection of SQLite databases: schema, example rows, unique values.

A catalog is an immutable snapshot taken at open time. Sampling operations
open their own short-lived connections, so a catalog can be shared freely
across threads.
"""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional


class CatalogError(Exception):
    pass


class NotADatabase(CatalogError):
    """File exists but is not a readable SQLite database."""


class UnknownTable(CatalogError):
    pass


class UnknownColumn(CatalogError):
    pass


@dataclass(frozen=True)
class ColumnRef:
    """Address of one column. Comparison for resolution is case-insensitive."""

    db_id: str
    table: str
    column: str

    def key(self) -> tuple[str, str, str]:
        return (self.db_id.lower(), self.table.lower(), self.column.lower())


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    declared_type: str
    is_primary_key: bool


@dataclass(frozen=True)
class ForeignKey:
    column: str
    ref_table: str
    ref_column: str


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[ColumnInfo, ...]
    foreign_keys: tuple[ForeignKey, ...]
    ddl: str

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def find_column(self, name: str) -> Optional[ColumnInfo]:
        lowered = name.lower()
        for col in self.columns:
            if col.name.lower() == lowered:
                return col
        return None


@dataclass(frozen=True)
class DatabaseCatalog:
    db_id: str
    path: Path
    tables: tuple[TableSchema, ...]

    def table_names(self) -> list[str]:
        return [t.name for t in self.tables]

    def find_table(self, name: str) -> Optional[TableSchema]:
        lowered = name.lower()
        for table in self.tables:
            if table.name.lower() == lowered:
                return table
        return None

    def resolve(self, ref: ColumnRef) -> tuple[TableSchema, ColumnInfo]:
        table = self.find_table(ref.table)
        if table is None:
            raise UnknownTable(f"no table {ref.table!r} in database {self.db_id!r}")
        col = table.find_column(ref.column)
        if col is None:
            raise UnknownColumn(
                f"no column {ref.column!r} in table {ref.table!r} of {self.db_id!r}"
            )
        return table, col

    def all_column_refs(self) -> list[ColumnRef]:
        return [
            ColumnRef(self.db_id, t.name, c.name)
            for t in self.tables
            for c in t.columns
        ]

    def connect(self) -> sqlite3.Connection:
        return _connect_readonly(self.path)


@dataclass
class SampleBundle:
    """Prompt inputs sampled from a database: rows grid plus unique values."""

    example_rows: list[list[str]] = field(default_factory=list)
    unique_values: list[str] = field(default_factory=list)


def _connect_readonly(path: Path) -> sqlite3.Connection:
    uri = f"file:{path}?mode=ro"
    conn = sqlite3.connect(uri, uri=True)
    conn.text_factory = lambda b: b.decode("utf-8", errors="replace")
    return conn


def open_catalog(path: str | Path, db_id: Optional[str] = None) -> DatabaseCatalog:
    """Open a SQLite file and snapshot its user-table schema.

    Internal tables (sqlite_* prefix) are excluded. An empty database yields
    a catalog with zero tables. Raises FileNotFoundError for a missing path
    and NotADatabase for a file SQLite cannot read.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    if db_id is None:
        db_id = path.stem
    conn = _connect_readonly(path)
    try:
        try:
            rows = conn.execute(
                "SELECT name, sql FROM sqlite_master"
                " WHERE type = 'table' AND name NOT LIKE 'sqlite_%'"
                " ORDER BY rowid"
            ).fetchall()
        except sqlite3.DatabaseError as exc:
            raise NotADatabase(f"{path}: {exc}") from exc
        tables = []
        for name, sql in rows:
            columns = tuple(
                ColumnInfo(name=r[1], declared_type=r[2] or "", is_primary_key=bool(r[5]))
                for r in conn.execute(f'PRAGMA table_info("{_escape_ident(name)}")')
            )
            fks = tuple(
                ForeignKey(column=r[3], ref_table=r[2], ref_column=r[4] or "")
                for r in conn.execute(f'PRAGMA foreign_key_list("{_escape_ident(name)}")')
            )
            tables.append(
                TableSchema(name=name, columns=columns, foreign_keys=fks, ddl=sql or "")
            )
    finally:
        conn.close()
    return DatabaseCatalog(db_id=db_id, path=path, tables=tuple(tables))


def render_schema(catalog: DatabaseCatalog) -> str:
    """All CREATE TABLE statements in catalog order, one blank line apart."""
    return "\n\n".join(t.ddl for t in catalog.tables)


def schema_statements(rendered: str) -> list[str]:
    """Split render_schema output back into executable statements.

    Statements are separated by blank lines, but a DDL body may itself
    contain blank lines, so chunks are merged until they parse complete.
    """
    statements: list[str] = []
    buf: list[str] = []
    for chunk in rendered.split("\n\n"):
        buf.append(chunk)
        candidate = "\n\n".join(buf)
        if candidate.strip() and sqlite3.complete_statement(candidate + ";"):
            statements.append(candidate)
            buf = []
    if buf and "\n\n".join(buf).strip():
        statements.append("\n\n".join(buf))
    return statements


def stringify_value(value) -> str:
    """Stable human-readable cell rendering used in prompts and samples."""
    if value is None:
        return "NULL"
    if isinstance(value, bytes):
        return f"<blob:{len(value)} bytes>"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sample_rows(catalog: DatabaseCatalog, table: str, n: int) -> list[list[str]]:
    """First n rows of a table in rowid order, prefixed with a header row."""
    if n < 1:
        raise ValueError("n must be >= 1")
    schema = catalog.find_table(table)
    if schema is None:
        raise UnknownTable(f"no table {table!r} in database {catalog.db_id!r}")
    cols = ", ".join(f'"{_escape_ident(c.name)}"' for c in schema.columns)
    conn = catalog.connect()
    try:
        try:
            rows = conn.execute(
                f'SELECT {cols} FROM "{_escape_ident(schema.name)}" ORDER BY rowid LIMIT ?',
                (n,),
            ).fetchall()
        except sqlite3.OperationalError:
            # WITHOUT ROWID tables: fall back to primary-key order
            rows = conn.execute(
                f'SELECT {cols} FROM "{_escape_ident(schema.name)}"'
                f" ORDER BY {_pk_order(schema)} LIMIT ?",
                (n,),
            ).fetchall()
    finally:
        conn.close()
    grid = [[c.name for c in schema.columns]]
    grid.extend([stringify_value(v) for v in row] for row in rows)
    return grid


def _pk_order(schema: TableSchema) -> str:
    pks = [c.name for c in schema.columns if c.is_primary_key]
    names = pks or [schema.columns[0].name]
    return ", ".join(f'"{_escape_ident(n)}"' for n in names)


def sample_unique(catalog: DatabaseCatalog, col: ColumnRef, limit: int = 10) -> list[str]:
    """Up to `limit` distinct stringified values of a column, value-ascending.

    Values are deduplicated again after stringification (distinct storage
    values can render to the same string) before the limit is applied.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    table, column = catalog.resolve(col)
    conn = catalog.connect()
    values: list[str] = []
    seen: set[str] = set()
    try:
        cursor = conn.execute(
            f'SELECT DISTINCT "{_escape_ident(column.name)}"'
            f' FROM "{_escape_ident(table.name)}"'
            f' ORDER BY "{_escape_ident(column.name)}"'
        )
        for (value,) in cursor:
            text = stringify_value(value)
            if text in seen:
                continue
            seen.add(text)
            values.append(text)
            if len(values) >= limit:
                break
    finally:
        conn.close()
    return values


def sample_bundle(
    catalog: DatabaseCatalog, col: ColumnRef, rows_n: int = 3, unique_limit: int = 10
) -> SampleBundle:
    return SampleBundle(
        example_rows=sample_rows(catalog, col.table, rows_n),
        unique_values=sample_unique(catalog, col, unique_limit),
    )


def format_rows(grid: Iterable[Iterable[str]]) -> str:
    """Render a sampled row grid as prompt text: one row per line."""
    return "\n".join(" | ".join(row) for row in grid)


def format_unique(values: Iterable[str]) -> str:
    return ", ".join(values)


def _escape_ident(name: str) -> str:
    return name.replace('"', '""')

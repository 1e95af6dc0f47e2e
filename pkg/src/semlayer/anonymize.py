"""Uninformative-column-name database variants and gold-SQL rewriting.

Columns are renamed positionally within each table (A1, A2, ...) so a
database keeps its structure but loses all naming signal; queries written
against the original names are rewritten token-by-token, with scope
resolution qualifying references that the renaming would make ambiguous.
"""

from __future__ import annotations

import json
import re
import shutil
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .catalog import DatabaseCatalog, TableSchema, open_catalog
from .sqltext import (
    ROWID_ALIASES,
    Analysis,
    SelectScope,
    TableSource,
    Token,
    analyze,
    next_significant,
    prev_significant,
    render,
    tokenize,
)

DEFAULT_SCHEME = "per-table-positional"


class AnonymizeError(Exception):
    pass


class UnwritablePath(AnonymizeError):
    pass


class RenameConflict(AnonymizeError):
    pass


class UnresolvableIdentifier(AnonymizeError):
    def __init__(self, name: str, pos: int):
        self.name = name
        self.pos = pos
        super().__init__(f"cannot bind column identifier {name!r} (at offset {pos})")


@dataclass
class RenameMap:
    """Injective per-table mapping original column name -> anonymized name."""

    scheme: str = DEFAULT_SCHEME
    by_table: dict[str, dict[str, str]] = field(default_factory=dict)
    display_names: dict[str, str] = field(default_factory=dict)

    def add(self, table: str, column: str, new_name: str) -> None:
        bucket = self.by_table.setdefault(table.lower(), {})
        bucket[column.lower()] = new_name
        self.display_names.setdefault(table.lower(), table)

    def target(self, table: str, column: str) -> Optional[str]:
        return self.by_table.get(table.lower(), {}).get(column.lower())

    def table_map(self, table: str) -> dict[str, str]:
        return self.by_table.get(table.lower(), {})

    def targets_of(self, table: str) -> set[str]:
        return {v.lower() for v in self.table_map(table).values()}

    def is_injective(self) -> bool:
        for mapping in self.by_table.values():
            values = [v.lower() for v in mapping.values()]
            if len(values) != len(set(values)):
                return False
        return True

    def to_manifest(self) -> dict:
        tables = {}
        for key, mapping in sorted(self.by_table.items()):
            tables[self.display_names[key]] = dict(sorted(mapping.items()))
        return {"scheme": self.scheme, "tables": tables}

    def write_manifest(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_manifest(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def build_rename_map(catalog: DatabaseCatalog) -> RenameMap:
    """Positional scheme: the j-th column of every table becomes A{j}.

    If a table already has a differently-positioned column literally named
    A{j}, the target gets an `_x` suffix (repeated until free) so the map
    stays collision-free on real databases that use A-style names.
    """
    rename_map = RenameMap()
    for table in catalog.tables:
        names = [c.name for c in table.columns]
        lowered = [n.lower() for n in names]
        for j, original in enumerate(names, start=1):
            target = f"A{j}"
            while any(
                other == target.lower() and k != j - 1
                for k, other in enumerate(lowered)
            ):
                target += "_x"
            rename_map.add(table.name, original, target)
        rename_map.display_names[table.name.lower()] = table.name
    if not rename_map.is_injective():
        raise RenameConflict("rename map is not injective")  # unreachable by scheme
    return rename_map


def apply_to_database(
    catalog: DatabaseCatalog, rename_map: RenameMap, out_path: str | Path
) -> DatabaseCatalog:
    """Copy the database file and rename every column in place.

    Row data is untouched (the file is copied byte-for-byte first);
    SQLite's RENAME COLUMN keeps keys, indexes, and foreign-key clauses
    consistent. The source file is never modified.
    """
    out_path = Path(out_path)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(catalog.path, out_path)
    except OSError as exc:
        raise UnwritablePath(str(out_path)) from exc
    conn = sqlite3.connect(out_path)
    try:
        for table in catalog.tables:
            mapping = rename_map.table_map(table.name)
            for column in table.columns:
                new_name = mapping.get(column.name.lower())
                if new_name is None or new_name == column.name:
                    continue
                try:
                    conn.execute(
                        f'ALTER TABLE "{_q(table.name)}" RENAME COLUMN'
                        f' "{_q(column.name)}" TO "{_q(new_name)}"'
                    )
                except sqlite3.OperationalError as exc:
                    raise RenameConflict(
                        f"{table.name}.{column.name} -> {new_name}: {exc}"
                    ) from exc
        conn.commit()
    finally:
        conn.close()
    return open_catalog(out_path, db_id=catalog.db_id)


def anonymize_database(
    catalog: DatabaseCatalog, out_dir: Optional[str | Path] = None
) -> tuple[DatabaseCatalog, RenameMap, Path]:
    """Full pipeline: build map, write `<name>.anon.sqlite` + manifest."""
    rename_map = build_rename_map(catalog)
    out_dir = Path(out_dir) if out_dir is not None else catalog.path.parent
    out_path = out_dir / f"{catalog.path.stem}.anon.sqlite"
    anon_catalog = apply_to_database(catalog, rename_map, out_path)
    manifest_path = out_dir / f"{catalog.path.stem}.anon.manifest.json"
    rename_map.write_manifest(manifest_path)
    return anon_catalog, rename_map, out_path


_PLAIN_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _q(name: str) -> str:
    return name.replace('"', '""')


def _ident_text(name: str) -> str:
    from .sqltext import KEYWORDS

    if _PLAIN_IDENT.match(name) and name.lower() not in KEYWORDS:
        return name
    return '"' + _q(name) + '"'


class _ColumnsView:
    """Post-rename column knowledge for one FROM source."""

    def __init__(self, originals: dict[str, str], renames: dict[str, Optional[str]]):
        # originals: lower -> display original; renames: lower -> new or None
        self.originals = originals
        self.renames = renames
        self.post = {
            (renames[k] or originals[k]).lower(): (renames[k] or originals[k])
            for k in originals
        }

    def has(self, name_lower: str) -> bool:
        return name_lower in self.originals or name_lower in self.post

    def rename(self, name_lower: str) -> Optional[str]:
        """New name if this identifier must change, else None."""
        if name_lower in self.renames:
            new = self.renames[name_lower]
            if new is not None and new.lower() != name_lower:
                return new
            return None
        return None  # already a post-rename name

    def post_names(self) -> set[str]:
        return set(self.post.keys())

    def final_name(self, name_lower: str) -> str:
        if name_lower in self.renames and self.renames[name_lower]:
            return self.renames[name_lower]
        if name_lower in self.post:
            return self.post[name_lower]
        return name_lower


class QueryRewriter:
    """Rewrites column identifiers in one query through a rename map."""

    def __init__(self, rename_map: RenameMap, catalog: DatabaseCatalog):
        self.map = rename_map
        self.catalog = catalog
        self._table_views: dict[str, _ColumnsView] = {}
        self._scope_views: dict[int, _ColumnsView] = {}

    # -- source views ---------------------------------------------------

    def table_view(self, table: TableSchema) -> _ColumnsView:
        key = table.name.lower()
        if key not in self._table_views:
            mapping = self.map.table_map(table.name)
            originals = {c.name.lower(): c.name for c in table.columns}
            renames: dict[str, Optional[str]] = {}
            for lower, display in originals.items():
                new = mapping.get(lower)
                renames[lower] = new if new and new.lower() != lower else (new or None)
            self._table_views[key] = _ColumnsView(originals, renames)
        return self._table_views[key]

    def source_view(self, src: TableSource, analysis: Analysis) -> Optional[_ColumnsView]:
        if src.subquery is not None:
            return self.scope_view(src.subquery, analysis)
        if src.table is None:
            return None
        cte = analysis.ctes.get(src.table.lower())
        if cte is not None:
            return self.scope_view(cte, analysis)
        table = self.catalog.find_table(src.table)
        if table is None:
            return None
        return self.table_view(table)

    def scope_view(self, scope: SelectScope, analysis: Analysis) -> _ColumnsView:
        """Output columns of a derived table, with pass-through renames."""
        key = id(scope)
        if key in self._scope_views:
            return self._scope_views[key]
        originals: dict[str, str] = {}
        renames: dict[str, Optional[str]] = {}

        def add(name: str, new: Optional[str]):
            originals[name.lower()] = name
            renames[name.lower()] = new if (new and new.lower() != name.lower()) else None

        tokens = analysis.tokens
        for start, end in scope.select_items:
            idxs = [
                i
                for i in range(start, end)
                if tokens[i].kind not in ("ws", "comment")
            ]
            if not idxs:
                continue
            # alias wins: "expr AS alias" exposes alias unchanged; only AS at
            # the item's top level counts (not e.g. CAST(x AS INTEGER))
            alias_idx = None
            depth = 0
            for pos, i in enumerate(idxs):
                if tokens[i].is_op("("):
                    depth += 1
                elif tokens[i].is_op(")"):
                    depth -= 1
                elif tokens[i].is_kw("as") and depth == 0 and pos + 1 < len(idxs):
                    alias_idx = idxs[pos + 1]
            if alias_idx is not None and tokens[alias_idx].kind == "ident":
                add(tokens[alias_idx].value, None)
                continue
            # star: expose every source column
            if len(idxs) == 1 and tokens[idxs[0]].is_op("*"):
                for src in scope.sources:
                    view = self.source_view(src, analysis)
                    if view is None:
                        continue
                    for lower, display in view.originals.items():
                        add(display, view.renames.get(lower))
                continue
            # qualified star: alias.*
            if (
                len(idxs) == 3
                and tokens[idxs[0]].kind == "ident"
                and tokens[idxs[1]].is_op(".")
                and tokens[idxs[2]].is_op("*")
            ):
                src = self._find_source(scope, tokens[idxs[0]].value)
                if src is not None:
                    view = self.source_view(src, analysis)
                    if view is not None:
                        for lower, display in view.originals.items():
                            add(display, view.renames.get(lower))
                continue
            # bare column or alias.column
            if len(idxs) == 1 and tokens[idxs[0]].kind == "ident":
                name = tokens[idxs[0]].value
                resolved = self._resolve_unqualified(scope, name.lower(), analysis)
                if resolved is not None:
                    _, view = resolved
                    add(name, view.renames.get(name.lower()))
                else:
                    add(name, None)
                continue
            if (
                len(idxs) == 3
                and tokens[idxs[0]].kind == "ident"
                and tokens[idxs[1]].is_op(".")
                and tokens[idxs[2]].kind == "ident"
            ):
                src = self._find_source(scope, tokens[idxs[0]].value)
                name = tokens[idxs[2]].value
                if src is not None:
                    view = self.source_view(src, analysis)
                    if view is not None and view.has(name.lower()):
                        add(name, view.renames.get(name.lower()))
                        continue
                add(name, None)
                continue
            # expression without alias: output name is the expression text;
            # renaming inside may change it, but outer references to such
            # names are already fragile, so expose nothing
        view = _ColumnsView(originals, renames)
        self._scope_views[key] = view
        return view

    # -- resolution -------------------------------------------------------

    def _find_source(self, scope: SelectScope, name: str) -> Optional[TableSource]:
        lowered = name.lower()
        current: Optional[SelectScope] = scope
        while current is not None:
            for src in current.sources:
                if src.alias.lower() == lowered:
                    return src
                if (
                    src.table is not None
                    and not src.explicit_alias
                    and src.table.lower() == lowered
                ):
                    return src
            current = current.parent
        return None

    def _resolve_unqualified(
        self, scope: SelectScope, name_lower: str, analysis: Analysis
    ) -> Optional[tuple[TableSource, _ColumnsView]]:
        current: Optional[SelectScope] = scope
        while current is not None:
            matches = []
            for src in current.sources:
                view = self.source_view(src, analysis)
                if view is not None and view.has(name_lower):
                    matches.append((src, view))
            if len(matches) == 1:
                return matches[0]
            if len(matches) > 1:
                return None  # ambiguous here; caller decides
            current = current.parent
        return None

    def _ambiguous_in_scope(
        self, scope: SelectScope, final_lower: str, analysis: Analysis
    ) -> bool:
        count = 0
        for src in scope.sources:
            view = self.source_view(src, analysis)
            if view is not None and final_lower in view.post_names():
                count += 1
        return count >= 2


def rewrite_query(
    sql: str, rename_map: RenameMap, catalog: DatabaseCatalog
) -> str:
    """Rewrite every column identifier through the rename map.

    String literals are untouched; previously unqualified references are
    qualified with their resolved table or alias whenever the anonymized
    name would otherwise be ambiguous in scope. Raises
    UnresolvableIdentifier when a column identifier cannot be bound.
    """
    tokens = tokenize(sql)
    analysis = analyze(tokens)
    rewriter = QueryRewriter(rename_map, catalog)
    replacements: dict[int, str] = {}
    prefixes: dict[int, str] = {}

    def is_function_call(i: int) -> bool:
        nxt = next_significant(tokens, i + 1)
        return nxt is not None and tokens[nxt].is_op("(")

    def chain_at(i: int) -> list[int]:
        chain = [i]
        j = i
        while True:
            dot = next_significant(tokens, j + 1)
            if dot is None or not tokens[dot].is_op("."):
                return chain
            member = next_significant(tokens, dot + 1)
            if member is None or (
                tokens[member].kind != "ident" and not tokens[member].is_op("*")
            ):
                return chain
            chain.append(member)
            j = member

    handled: set[int] = set()
    for i, tok in enumerate(tokens):
        if tok.kind != "ident" or i in handled or i in analysis.structural:
            continue
        prev = prev_significant(tokens, i - 1)
        if prev is not None and tokens[prev].is_op("."):
            continue  # chain member; handled from its head
        if prev is not None and tokens[prev].is_kw("as", "collate"):
            continue  # alias, CAST type name, or collation name
        scope = analysis.scope_of[i]
        if scope is None:
            continue
        if is_function_call(i):
            continue
        chain = chain_at(i)
        handled.update(chain)
        # schema-qualified chains: main.table.column
        names = [tokens[k].value if tokens[k].kind == "ident" else "*" for k in chain]
        if len(chain) == 3 and names[0].lower() in ("main", "temp"):
            chain = chain[1:]
            names = names[1:]
        if len(chain) == 1:
            _rewrite_bare(
                rewriter, analysis, scope, chain[0], replacements, prefixes
            )
        elif len(chain) >= 2:
            _rewrite_qualified(
                rewriter, analysis, scope, chain, replacements
            )

    out = []
    for i, tok in enumerate(tokens):
        if i in prefixes:
            out.append(prefixes[i])
        out.append(replacements.get(i, tok.text))
    return "".join(out)


def _rewrite_bare(
    rewriter: QueryRewriter,
    analysis: Analysis,
    scope: SelectScope,
    idx: int,
    replacements: dict[int, str],
    prefixes: dict[int, str],
) -> None:
    tok = analysis.tokens[idx]
    name_lower = tok.value.lower()
    section = analysis.section_of[idx] or "select"
    if section in ("order", "group", "having") and name_lower in scope.select_aliases:
        return
    resolved = rewriter._resolve_unqualified(scope, name_lower, analysis)
    if resolved is None:
        if name_lower in ROWID_ALIASES:
            return
        # alias references inside the select list itself (rare but legal in
        # SQLite: SELECT x AS a ORDER BY a handled above) or unresolvable
        if name_lower in scope.select_aliases:
            return
        raise UnresolvableIdentifier(tok.value, tok.pos)
    src, view = resolved
    new_name = view.rename(name_lower)
    final = view.final_name(name_lower)
    if new_name is not None:
        replacements[idx] = tok.requote(new_name)
    # qualify when the post-rename name collides across sources in the
    # scope the identifier resolved in
    owner_scope = _owning_scope(rewriter, scope, src)
    if owner_scope is not None and rewriter._ambiguous_in_scope(
        owner_scope, final.lower(), analysis
    ):
        prefixes[idx] = _ident_text(src.alias) + "."


def _owning_scope(
    rewriter: QueryRewriter, scope: SelectScope, src: TableSource
) -> Optional[SelectScope]:
    current: Optional[SelectScope] = scope
    while current is not None:
        if src in current.sources:
            return current
        current = current.parent
    return None


def _rewrite_qualified(
    rewriter: QueryRewriter,
    analysis: Analysis,
    scope: SelectScope,
    chain: list[int],
    replacements: dict[int, str],
) -> None:
    tokens = analysis.tokens
    head = tokens[chain[0]]
    member = tokens[chain[1]]
    if member.is_op("*"):
        return
    src = rewriter._find_source(scope, head.value)
    if src is None:
        raise UnresolvableIdentifier(
            f"{head.value}.{member.value}", head.pos
        )
    view = rewriter.source_view(src, analysis)
    if view is None:
        return
    name_lower = member.value.lower()
    if not view.has(name_lower):
        if name_lower in ROWID_ALIASES:
            return
        if src.subquery is not None or (
            src.table and src.table.lower() in analysis.ctes
        ):
            return  # expression-derived output name; leave untouched
        raise UnresolvableIdentifier(
            f"{head.value}.{member.value}", member.pos
        )
    new_name = view.rename(name_lower)
    if new_name is not None:
        replacements[chain[1]] = member.requote(new_name)

"""SQL lexing and name-scope analysis for query rewriting.

Tokenizes SQLite-dialect SQL losslessly (token texts concatenate back to
the input) and binds column identifiers to tables through FROM/JOIN/alias
analysis, including derived tables and CTEs. This deliberately stops short
of a full parser; the anonymize module's execution-equivalence tests are
the safety net for anything a lexical approach could miss.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

KEYWORDS = {
    "abort", "action", "add", "after", "all", "alter", "analyze", "and", "as",
    "asc", "attach", "autoincrement", "before", "begin", "between", "by",
    "cascade", "case", "cast", "check", "collate", "column", "commit",
    "conflict", "constraint", "create", "cross", "current", "current_date",
    "current_time", "current_timestamp", "database", "default", "deferrable",
    "deferred", "delete", "desc", "detach", "distinct", "do", "drop", "each",
    "else", "end", "escape", "except", "exclude", "exclusive", "exists",
    "explain", "fail", "false", "filter", "first", "following", "for",
    "foreign", "from", "full", "generated", "glob", "group", "groups",
    "having", "if", "ignore", "immediate", "in", "index", "indexed",
    "initially", "inner", "insert", "instead", "intersect", "into", "is",
    "isnull", "join", "key", "last", "left", "like", "limit", "match",
    "materialized", "natural", "no", "not", "nothing", "notnull", "null",
    "nulls", "of", "offset", "on", "or", "order", "others", "outer", "over",
    "partition", "plan", "pragma", "preceding", "primary", "query", "raise",
    "range", "recursive", "references", "regexp", "reindex", "release",
    "rename", "replace", "restrict", "returning", "right", "rollback", "row",
    "rows", "savepoint", "select", "set", "table", "temp", "temporary",
    "then", "ties", "to", "transaction", "trigger", "true", "unbounded",
    "union", "unique", "update", "using", "vacuum", "values", "view",
    "virtual", "when", "where", "window", "with", "without",
}

# names SQLite resolves implicitly even when no declared column matches
ROWID_ALIASES = {"rowid", "oid", "_rowid_"}

_IDENT_START = re.compile(r"[A-Za-z_]")
_IDENT_BODY = re.compile(r"[A-Za-z0-9_$]")


class SqlLexError(Exception):
    pass


class UnsupportedSql(Exception):
    def __init__(self, message: str, pos: int = 0):
        self.pos = pos
        super().__init__(f"{message} (at offset {pos})")


@dataclass
class Token:
    kind: str  # keyword | ident | string | number | op | comment | ws | param
    text: str
    pos: int

    @property
    def value(self) -> str:
        """Identifier name with quoting removed."""
        if self.kind != "ident":
            return self.text
        t = self.text
        if t[:1] == '"' and t[-1:] == '"':
            return t[1:-1].replace('""', '"')
        if t[:1] == "`" and t[-1:] == "`":
            return t[1:-1].replace("``", "`")
        if t[:1] == "[" and t[-1:] == "]":
            return t[1:-1]
        return t

    def requote(self, new_name: str) -> str:
        """Render new_name in this token's quoting style."""
        t = self.text
        if t[:1] == '"' and t[-1:] == '"':
            return '"' + new_name.replace('"', '""') + '"'
        if t[:1] == "`" and t[-1:] == "`":
            return "`" + new_name.replace("`", "``") + "`"
        if t[:1] == "[" and t[-1:] == "]":
            return "[" + new_name + "]"
        return new_name

    def is_kw(self, *words: str) -> bool:
        return self.kind == "keyword" and self.text.lower() in words

    def is_op(self, *ops: str) -> bool:
        return self.kind == "op" and self.text in ops


def tokenize(sql: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(sql)
    while i < n:
        ch = sql[i]
        if ch.isspace():
            j = i
            while j < n and sql[j].isspace():
                j += 1
            tokens.append(Token("ws", sql[i:j], i))
            i = j
            continue
        if ch == "-" and sql.startswith("--", i):
            j = sql.find("\n", i)
            j = n if j == -1 else j
            tokens.append(Token("comment", sql[i:j], i))
            i = j
            continue
        if ch == "/" and sql.startswith("/*", i):
            j = sql.find("*/", i + 2)
            if j == -1:
                raise SqlLexError(f"unterminated block comment at {i}")
            tokens.append(Token("comment", sql[i : j + 2], i))
            i = j + 2
            continue
        if ch == "'":
            j = i + 1
            while j < n:
                if sql[j] == "'":
                    if j + 1 < n and sql[j + 1] == "'":
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise SqlLexError(f"unterminated string literal at {i}")
            tokens.append(Token("string", sql[i : j + 1], i))
            i = j + 1
            continue
        if ch in ('"', "`"):
            j = i + 1
            while j < n:
                if sql[j] == ch:
                    if j + 1 < n and sql[j + 1] == ch:
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise SqlLexError(f"unterminated quoted identifier at {i}")
            tokens.append(Token("ident", sql[i : j + 1], i))
            i = j + 1
            continue
        if ch == "[":
            j = sql.find("]", i)
            if j == -1:
                raise SqlLexError(f"unterminated bracketed identifier at {i}")
            tokens.append(Token("ident", sql[i : j + 1], i))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and sql[i + 1].isdigit()):
            j = i
            while j < n:
                c = sql[j]
                if c.isdigit() or c == ".":
                    j += 1
                elif c in "eE" and j + 1 < n and (sql[j + 1].isdigit() or sql[j + 1] in "+-"):
                    j += 2
                elif c.isalpha():  # hex literals 0x..
                    j += 1
                else:
                    break
            tokens.append(Token("number", sql[i:j], i))
            i = j
            continue
        if _IDENT_START.match(ch):
            j = i
            while j < n and _IDENT_BODY.match(sql[j]):
                j += 1
            word = sql[i:j]
            kind = "keyword" if word.lower() in KEYWORDS else "ident"
            tokens.append(Token(kind, word, i))
            i = j
            continue
        if ch in "?@:":
            j = i + 1
            while j < n and _IDENT_BODY.match(sql[j]):
                j += 1
            tokens.append(Token("param", sql[i:j], i))
            i = j
            continue
        for op in ("<>", "<=", ">=", "==", "!=", "||", "<<", ">>"):
            if sql.startswith(op, i):
                tokens.append(Token("op", op, i))
                i += len(op)
                break
        else:
            tokens.append(Token("op", ch, i))
            i += 1
    return tokens


def render(tokens: list[Token]) -> str:
    return "".join(t.text for t in tokens)


def next_significant(tokens: list[Token], start: int) -> Optional[int]:
    for i in range(start, len(tokens)):
        if tokens[i].kind not in ("ws", "comment"):
            return i
    return None


def prev_significant(tokens: list[Token], start: int) -> Optional[int]:
    for i in range(start, -1, -1):
        if tokens[i].kind not in ("ws", "comment"):
            return i
    return None


@dataclass
class TableSource:
    """One FROM-clause entry: a real table, a CTE, or a derived table."""

    alias: str
    table: Optional[str] = None
    subquery: Optional["SelectScope"] = None
    explicit_alias: bool = False


@dataclass
class SelectScope:
    """Name-resolution scope of one SELECT."""

    parent: Optional["SelectScope"] = None
    sources: list[TableSource] = field(default_factory=list)
    select_aliases: set[str] = field(default_factory=set)
    select_items: list[tuple[int, int]] = field(default_factory=list)
    start: int = 0
    end: int = -1


@dataclass
class Analysis:
    tokens: list[Token]
    scopes: list[SelectScope]
    scope_of: list[Optional[SelectScope]]
    section_of: list[Optional[str]]  # select | from | on | where | group | ...
    structural: set[int]  # token indexes that are table names / aliases
    ctes: dict[str, SelectScope]


_STATEMENT_KEYWORDS = {"insert", "update", "delete", "create", "drop", "alter",
                       "pragma", "attach", "detach", "vacuum", "replace"}

_SECTION_KEYWORDS = {"where", "group", "having", "order", "limit", "offset",
                     "window"}


class _Frame:
    """One open parenthesis."""

    __slots__ = ("scope_height", "opens_scope", "in_from")

    def __init__(self, scope_height: int, opens_scope: bool, in_from: bool):
        self.scope_height = scope_height
        self.opens_scope = opens_scope
        self.in_from = in_from


class _ScopeState:
    __slots__ = ("scope", "section", "expecting_source", "item_start", "paren_depth")

    def __init__(self, scope: SelectScope, paren_depth: int):
        self.scope = scope
        self.section = "select"
        self.expecting_source = False
        self.item_start: Optional[int] = None
        self.paren_depth = paren_depth


def analyze(tokens: list[Token]) -> Analysis:
    """Assign every token to its SELECT scope and collect FROM sources.

    Only read statements (SELECT, WITH) are supported; USING and NATURAL
    joins are refused because renaming can silently change their meaning.
    """
    scopes: list[SelectScope] = []
    scope_of: list[Optional[SelectScope]] = [None] * len(tokens)
    section_of: list[Optional[str]] = [None] * len(tokens)
    structural: set[int] = set()
    ctes: dict[str, SelectScope] = {}

    scope_stack: list[_ScopeState] = []
    paren_stack: list[_Frame] = []

    def state() -> Optional[_ScopeState]:
        return scope_stack[-1] if scope_stack else None

    def close_scope(end: int) -> SelectScope:
        st = scope_stack.pop()
        if st.section == "select" and st.item_start is not None:
            st.scope.select_items.append((st.item_start, end))
        st.scope.end = end
        return st.scope

    def consume_alias(i: int, for_subquery: Optional[SelectScope]) -> int:
        """Capture [AS] alias after a FROM source ending right before i."""
        st = state()
        j = next_significant(tokens, i)
        explicit = False
        alias_idx = None
        if j is not None and tokens[j].is_kw("as"):
            k = next_significant(tokens, j + 1)
            if k is not None and tokens[k].kind == "ident":
                alias_idx = k
                explicit = True
        elif j is not None and tokens[j].kind == "ident":
            alias_idx = j
            explicit = True
        if alias_idx is not None:
            structural.add(alias_idx)
            alias = tokens[alias_idx].value
            end = alias_idx + 1
        else:
            alias = None
            end = i
        if for_subquery is not None:
            st.scope.sources.append(
                TableSource(
                    alias=alias or f"__sub{len(st.scope.sources)}",
                    subquery=for_subquery,
                    explicit_alias=explicit,
                )
            )
        else:
            src = st.scope.sources[-1]
            if alias is not None:
                src.alias = alias
                src.explicit_alias = True
        return end

    i = 0
    first = next_significant(tokens, 0)
    if first is not None and tokens[first].kind == "keyword":
        head = tokens[first].text.lower()
        if head in _STATEMENT_KEYWORDS:
            raise UnsupportedSql(f"only read statements are supported, got {head.upper()}", tokens[first].pos)

    while i < len(tokens):
        tok = tokens[i]
        st = state()
        if st is not None and scope_of[i] is None:
            scope_of[i] = st.scope
            section_of[i] = st.section
        if tok.kind in ("ws", "comment"):
            i += 1
            continue

        if tok.is_kw("select"):
            parent = st.scope if st is not None else None
            scope = SelectScope(parent=parent, start=i)
            scopes.append(scope)
            scope_stack.append(_ScopeState(scope, len(paren_stack)))
            scope_of[i] = scope
            nxt = next_significant(tokens, i + 1)
            if nxt is not None and tokens[nxt].is_kw("distinct", "all"):
                nxt = next_significant(tokens, nxt + 1)
            scope_stack[-1].item_start = nxt
            i += 1
            continue

        if tok.is_kw("with"):
            # WITH [RECURSIVE] name AS (...) [, name AS (...)] SELECT ...
            j = next_significant(tokens, i + 1)
            if j is not None and tokens[j].is_kw("recursive"):
                j = next_significant(tokens, j + 1)
            while j is not None and tokens[j].kind == "ident":
                name_idx = j
                structural.add(name_idx)
                k = next_significant(tokens, j + 1)
                if k is None or not tokens[k].is_kw("as"):
                    raise UnsupportedSql("malformed WITH clause", tokens[j].pos)
                k = next_significant(tokens, k + 1)
                if k is None or not tokens[k].is_op("("):
                    raise UnsupportedSql("malformed WITH clause", tokens[j].pos)
                sub_analysis_end, sub_scope = analyze_clause(
                    tokens, k + 1, scopes, scope_of, section_of, structural, ctes,
                    parent=None,
                )
                ctes[tokens[name_idx].value.lower()] = sub_scope
                j = next_significant(tokens, sub_analysis_end + 1)
                if j is not None and tokens[j].is_op(","):
                    j = next_significant(tokens, j + 1)
                    continue
                break
            i = j if j is not None else len(tokens)
            continue

        if st is None:
            if tok.kind == "keyword" and tok.text.lower() in _STATEMENT_KEYWORDS:
                raise UnsupportedSql(
                    f"only read statements are supported, got {tok.text.upper()}",
                    tok.pos,
                )
            i += 1
            continue

        if tok.is_op("("):
            nxt = next_significant(tokens, i + 1)
            opens = nxt is not None and (
                tokens[nxt].is_kw("select") or tokens[nxt].is_kw("with")
            )
            paren_stack.append(
                _Frame(len(scope_stack), opens, st.section == "from" and st.expecting_source)
            )
            i += 1
            continue

        if tok.is_op(")"):
            if not paren_stack:
                i += 1
                continue
            frame = paren_stack.pop()
            closed: Optional[SelectScope] = None
            while len(scope_stack) > frame.scope_height:
                closed = close_scope(i)
            if closed is not None and frame.in_from and scope_stack:
                i = consume_alias(i + 1, for_subquery=closed)
                state().expecting_source = False
                continue
            i += 1
            continue

        if tok.is_kw("union", "except", "intersect") and len(paren_stack) == st.paren_depth:
            close_scope(i)
            # sibling SELECT follows; VALUES etc. unsupported
            i += 1
            continue

        if tok.is_kw("from") and st.section == "select" and len(paren_stack) == st.paren_depth:
            if st.item_start is not None:
                st.scope.select_items.append((st.item_start, i))
                st.item_start = None
            st.section = "from"
            st.expecting_source = True
            i += 1
            continue

        if tok.is_kw("join") and len(paren_stack) >= st.paren_depth:
            st.section = "from"
            st.expecting_source = True
            i += 1
            continue

        if tok.is_kw("on") and len(paren_stack) >= st.paren_depth and st.section == "from":
            st.section = "on"
            i += 1
            continue

        if tok.is_kw("natural"):
            raise UnsupportedSql("NATURAL joins are not supported", tok.pos)
        if tok.is_kw("using"):
            raise UnsupportedSql("USING clauses are not supported", tok.pos)

        if tok.is_op(",") and len(paren_stack) == st.paren_depth:
            if st.section == "select" and st.item_start is not None:
                st.scope.select_items.append((st.item_start, i))
                st.item_start = next_significant(tokens, i + 1)
            elif st.section == "from":
                st.expecting_source = True
            i += 1
            continue

        if tok.kind == "keyword" and tok.text.lower() in _SECTION_KEYWORDS and len(paren_stack) == st.paren_depth:
            if st.section == "select" and st.item_start is not None:
                st.scope.select_items.append((st.item_start, i))
                st.item_start = None
            st.section = tok.text.lower()
            i += 1
            continue

        if tok.is_kw("as") and st.section == "select" and len(paren_stack) == st.paren_depth:
            nxt = next_significant(tokens, i + 1)
            if nxt is not None and tokens[nxt].kind == "ident":
                st.scope.select_aliases.add(tokens[nxt].value.lower())
                structural.add(nxt)
                scope_of[nxt] = st.scope
                i = nxt + 1
                continue

        if st.section == "from" and st.expecting_source and tok.kind == "ident":
            structural.add(i)
            table_name = tok.value
            j = i + 1
            nxt = next_significant(tokens, j)
            if nxt is not None and tokens[nxt].is_op("."):
                k = next_significant(tokens, nxt + 1)
                if k is not None and tokens[k].kind == "ident":
                    structural.add(k)
                    table_name = tokens[k].value
                    j = k + 1
            st.scope.sources.append(TableSource(alias=table_name, table=table_name))
            st.expecting_source = False
            i = consume_alias(j, for_subquery=None)
            continue

        i += 1

    while scope_stack:
        close_scope(len(tokens))

    return Analysis(tokens=tokens, scopes=scopes, scope_of=scope_of,
                    section_of=section_of, structural=structural, ctes=ctes)


def analyze_clause(tokens, start, scopes, scope_of, section_of, structural, ctes, parent):
    """Helper for WITH bodies: find the matching close paren, then run a
    scoped analysis over the inner token span."""
    depth = 0
    end = None
    for i in range(start, len(tokens)):
        t = tokens[i]
        if t.is_op("("):
            depth += 1
        elif t.is_op(")"):
            if depth == 0:
                end = i
                break
            depth -= 1
    if end is None:
        raise UnsupportedSql("unbalanced parentheses in WITH clause", tokens[start].pos)
    inner = analyze(tokens[start:end])
    # merge inner results back, offsetting indexes
    offset = start
    for scope in inner.scopes:
        scope.start += offset
        scope.end = (scope.end + offset) if scope.end >= 0 else end
        scope.select_items = [(a + offset, b + offset) for a, b in scope.select_items]
        if scope.parent is None:
            scope.parent = parent
        scopes.append(scope)
    for idx, s in enumerate(inner.scope_of):
        if s is not None and scope_of[offset + idx] is None:
            scope_of[offset + idx] = s
            section_of[offset + idx] = inner.section_of[idx]
    structural.update(idx + offset for idx in inner.structural)
    ctes.update(inner.ctes)
    top = next((s for s in inner.scopes if s.parent is parent), None)
    if top is None:
        raise UnsupportedSql("WITH clause without SELECT", tokens[start].pos)
    return end, top

"""Prompt template rendering.

The four templates live as text assets next to this module so their wording
is diffable; rendering substitutes `{name}` placeholders and honors `{{`/`}}`
escapes for literal braces (the judge template's JSON schema line).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from enum import Enum
from importlib import resources
from typing import Optional


class PromptError(Exception):
    pass


class MissingVariable(PromptError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"template requires variable {name!r} but it was not provided")


class UnknownPlaceholder(PromptError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"template placeholder {name!r} is not a known context field")


class TemplateKind(Enum):
    IMPROVE_DESCRIPTION = "improve_description"
    GENERATE_DESCRIPTION = "generate_description"
    ZERO_SHOT_TEXT2SQL = "zero_shot_text2sql"
    JUDGE_DESCRIPTION = "judge_description"


@dataclass
class PromptContext:
    """Every variable any template can reference. None means absent;
    empty string is a legitimate value where a template tolerates it."""

    database_schema: Optional[str] = None
    table: Optional[str] = None
    column: Optional[str] = None
    column_name: Optional[str] = None
    column_description: Optional[str] = None
    example_data: Optional[str] = None
    unique_data: Optional[str] = None
    question: Optional[str] = None
    response: Optional[str] = None
    gold_answer: Optional[str] = None


_FIELD_NAMES = {f.name for f in fields(PromptContext)}
_PLACEHOLDER = re.compile(r"\{\{|\}\}|\{([A-Za-z_][A-Za-z0-9_]*)\}")


def template_text(kind: TemplateKind) -> str:
    """Raw template text, newline-normalized to \\n."""
    data = resources.files(__package__).joinpath(f"templates/{kind.value}.txt")
    return data.read_text(encoding="utf-8").replace("\r\n", "\n")


def render(kind: TemplateKind, ctx: PromptContext) -> str:
    """Substitute every placeholder; rendering is pure and byte-stable."""
    text = template_text(kind)
    out: list[str] = []
    pos = 0
    for match in _PLACEHOLDER.finditer(text):
        out.append(text[pos : match.start()])
        pos = match.end()
        token = match.group(0)
        if token == "{{":
            out.append("{")
            continue
        if token == "}}":
            out.append("}")
            continue
        name = match.group(1)
        if name not in _FIELD_NAMES:
            raise UnknownPlaceholder(name)
        value = getattr(ctx, name)
        if value is None:
            raise MissingVariable(name)
        out.append(value)
    out.append(text[pos:])
    return "".join(out)


def required_variables(kind: TemplateKind) -> set[str]:
    """Names a context must provide for the given template."""
    text = template_text(kind)
    names = set()
    for match in _PLACEHOLDER.finditer(text):
        if match.group(1):
            names.add(match.group(1))
    return names

"""LLM-as-a-judge scoring of a generated description against a gold
description, with strict parsing of the JSON verdict."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .llm import Completion, ModelSpec, Transport, complete
from .metastore import QualityLabel
from .prompts import PromptContext, TemplateKind, render


class JudgeError(Exception):
    pass


class ParseFailure(JudgeError):
    def __init__(self, raw: str, reason: str = "no conforming verdict found"):
        self.raw = raw
        super().__init__(f"{reason}: {raw[:200]!r}")


class OutOfRange(JudgeError):
    def __init__(self, correctness):
        self.correctness = correctness
        super().__init__(f"correctness {correctness!r} outside 1..4")


class UnsupportedLabel(JudgeError):
    pass


@dataclass(frozen=True)
class JudgeVerdict:
    correctness: int
    reasoning: str
    raw: str = ""

    @property
    def quality(self) -> QualityLabel:
        return QualityLabel(self.correctness)


CORRECTNESS_TO_LABEL = {
    4: QualityLabel.PERFECT,
    3: QualityLabel.ALMOST_PERFECT,
    2: QualityLabel.SOMEWHAT_CORRECT,
    1: QualityLabel.INCORRECT,
}


def serialize_verdict(v: JudgeVerdict) -> str:
    return json.dumps({"reasoning": v.reasoning, "correctness": v.correctness})


def _candidate_objects(text: str):
    """Yield balanced top-level {...} slices, string-literal aware."""
    depth = 0
    start = None
    in_string = False
    escape = False
    for i, ch in enumerate(text):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0 and start is not None:
                    yield text[start : i + 1]
                    start = None


def parse_verdict(text: str) -> JudgeVerdict:
    """Parse a judge response into a verdict.

    Accepts a bare JSON object; otherwise recovers the first balanced
    {...} block that parses and contains both keys (covers markdown fences
    and surrounding prose). Correctness outside 1..4 is rejected.
    """
    candidates = []
    stripped = text.strip()
    if stripped.startswith("{"):
        candidates.append(stripped)
    candidates.extend(_candidate_objects(text))
    for candidate in candidates:
        try:
            data = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(data, dict):
            continue
        if "reasoning" not in data or "correctness" not in data:
            continue
        correctness = data["correctness"]
        if isinstance(correctness, bool) or not isinstance(correctness, int):
            raise ParseFailure(text, "correctness is not an integer")
        if correctness not in CORRECTNESS_TO_LABEL:
            raise OutOfRange(correctness)
        reasoning = data["reasoning"]
        if not isinstance(reasoning, str):
            raise ParseFailure(text, "reasoning is not a string")
        return JudgeVerdict(correctness=correctness, reasoning=reasoning, raw=text)
    raise ParseFailure(text)


def judge_description(
    model: ModelSpec,
    response: str,
    gold: str,
    transport: Optional[Transport] = None,
) -> JudgeVerdict:
    """Score one generated description against its gold reference."""
    if not gold.strip():
        raise ValueError("gold description must be non-empty")
    prompt = render(
        TemplateKind.JUDGE_DESCRIPTION,
        PromptContext(response=response, gold_answer=gold),
    )
    completion: Completion = complete(model, prompt, transport=transport)
    return parse_verdict(completion.text)


def collapse_labels(label: QualityLabel) -> QualityLabel:
    """Merge Perfect and Almost Perfect into one bucket; the side study's
    label-collapse transform."""
    if label in (QualityLabel.NO_DESCRIPTION, QualityLabel.CANT_TELL):
        raise UnsupportedLabel(f"{label.label} has no collapsed form")
    if label is QualityLabel.ALMOST_PERFECT:
        return QualityLabel.PERFECT
    return label

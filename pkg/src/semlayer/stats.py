"""Agreement and quality statistics: Cohen's kappa, raw agreement, and
mean quality scores grouped by model and difficulty."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Optional, Sequence

from .catalog import ColumnRef
from .metastore import DifficultyLevel, QualityLabel

Label = Hashable


class StatsError(Exception):
    pass


class LengthMismatch(StatsError):
    pass


class EmptySeries(StatsError):
    pass


class SeriesMisaligned(StatsError):
    pass


class Degenerate(StatsError):
    """Chance agreement is 1 while observed agreement is not; kappa undefined."""


@dataclass
class LabelSeries:
    """One annotator's labels over an ordered set of columns."""

    items: list[tuple[ColumnRef, Label]]
    label_space: Optional[frozenset] = None

    def refs(self) -> list[tuple[str, str, str]]:
        return [ref.key() for ref, _ in self.items]

    def labels(self) -> list[Label]:
        return [label for _, label in self.items]

    def space(self) -> frozenset:
        if self.label_space is not None:
            return self.label_space
        return frozenset(self.labels())


def _check_pair(a: LabelSeries, b: LabelSeries) -> None:
    if len(a.items) != len(b.items):
        raise LengthMismatch(f"series lengths differ: {len(a.items)} vs {len(b.items)}")
    if not a.items:
        raise EmptySeries("cannot compute agreement over zero items")
    if a.refs() != b.refs():
        raise SeriesMisaligned("series cover different columns or orders")


def align(a: LabelSeries, b: LabelSeries) -> tuple[LabelSeries, LabelSeries, int]:
    """Pairwise-drop items present in only one series. Returns the aligned
    series (in a's order) and the number of dropped items."""
    b_by_ref = {ref.key(): (ref, label) for ref, label in b.items}
    a_keys = {ref.key() for ref, _ in a.items}
    kept_a, kept_b = [], []
    for ref, label in a.items:
        if ref.key() in b_by_ref:
            kept_a.append((ref, label))
            kept_b.append(b_by_ref[ref.key()])
    dropped = (len(a.items) - len(kept_a)) + sum(
        1 for key in b_by_ref if key not in a_keys
    )
    return (
        LabelSeries(kept_a, a.label_space),
        LabelSeries(kept_b, b.label_space),
        dropped,
    )


def agreement_pct(a: LabelSeries, b: LabelSeries) -> float:
    """Fraction of positions where both series carry the same label."""
    _check_pair(a, b)
    matches = sum(1 for x, y in zip(a.labels(), b.labels()) if x == y)
    return matches / len(a.items)


def cohens_kappa(a: LabelSeries, b: LabelSeries) -> float:
    """Chance-corrected agreement: (p_o - p_e) / (1 - p_e).

    p_e is derived from each rater's marginal label frequencies. Perfect
    observed agreement returns exactly 1.0; p_e = 1 with imperfect
    agreement raises Degenerate rather than silently returning 0.
    """
    _check_pair(a, b)
    n = len(a.items)
    p_o = agreement_pct(a, b)
    if p_o == 1.0:
        return 1.0
    counts_a = Counter(a.labels())
    counts_b = Counter(b.labels())
    space = a.space() | b.space()
    p_e = sum((counts_a[l] / n) * (counts_b[l] / n) for l in space)
    if p_e == 1.0:
        raise Degenerate("chance agreement is 1 while observed agreement is below 1")
    return (p_o - p_e) / (1.0 - p_e)


@dataclass
class AgreementReport:
    n: int
    dropped: int
    agreement_pct: float
    kappa: Optional[float]
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dropped": self.dropped,
            "agreement_pct": self.agreement_pct,
            "kappa": self.kappa,
            "degenerate": self.degenerate,
        }


def agreement_report(a: LabelSeries, b: LabelSeries) -> AgreementReport:
    """Align two annotators' series, then report both statistics."""
    a2, b2, dropped = align(a, b)
    if not a2.items:
        raise EmptySeries("no commonly annotated items")
    pct = agreement_pct(a2, b2)
    try:
        kappa: Optional[float] = cohens_kappa(a2, b2)
        degenerate = False
    except Degenerate:
        kappa = None
        degenerate = True
    return AgreementReport(
        n=len(a2.items), dropped=dropped, agreement_pct=pct, kappa=kappa,
        degenerate=degenerate,
    )


class GroupBy(Enum):
    MODEL = "model"
    DIFFICULTY = "difficulty"
    BOTH = "both"


@dataclass
class QualityCell:
    """Aggregate for one (model, difficulty) group."""

    model: str = ""
    difficulty: Optional[DifficultyLevel] = None
    n: int = 0
    total: int = 0
    no_description: int = 0
    cant_tell: int = 0

    @property
    def mean(self) -> float:
        return self.total / self.n

    def to_dict(self) -> dict:
        row = {
            "n": self.n,
            "mean": self.mean,
            "no_description": self.no_description,
            "cant_tell": self.cant_tell,
        }
        if self.model:
            row["model"] = self.model
        if self.difficulty is not None:
            row["difficulty"] = self.difficulty.label
        return row


@dataclass
class QualityItem:
    ref: ColumnRef
    model: str
    label: QualityLabel


def mean_quality(
    items: Sequence[QualityItem],
    group_by: GroupBy = GroupBy.MODEL,
    difficulties: Optional[dict[tuple[str, str, str], DifficultyLevel]] = None,
) -> list[QualityCell]:
    """Arithmetic mean of numeric scores (1-4) per group.

    NO_DESCRIPTION and CANT_TELL are tallied separately and never enter a
    mean. Groups with no score-bearing labels and no tallies are absent
    from the result, not reported as zero.
    """
    if group_by in (GroupBy.DIFFICULTY, GroupBy.BOTH) and difficulties is None:
        raise StatsError("difficulty grouping requires a difficulty mapping")
    cells: dict[tuple, QualityCell] = {}
    for item in items:
        model = item.model if group_by in (GroupBy.MODEL, GroupBy.BOTH) else ""
        level = None
        if group_by in (GroupBy.DIFFICULTY, GroupBy.BOTH):
            level = difficulties.get(item.ref.key())
            if level is None:
                continue  # cannot be grouped; caller sees it in the n drop
        key = (model, level)
        cell = cells.setdefault(key, QualityCell(model=model, difficulty=level))
        if item.label is QualityLabel.NO_DESCRIPTION:
            cell.no_description += 1
        elif item.label is QualityLabel.CANT_TELL:
            cell.cant_tell += 1
        elif item.label.score_bearing:
            cell.n += 1
            cell.total += int(item.label)
    ordered = sorted(
        cells.values(),
        key=lambda c: (c.model, int(c.difficulty) if c.difficulty else 0),
    )
    return [c for c in ordered if c.n > 0 or c.no_description or c.cant_tell]

"""Independent brute-force reference implementations used to check the
package's closed-form statistics. Deliberately written from first
principles (explicit contingency table), not shared with library code."""

from __future__ import annotations


def kappa_bruteforce(labels_a: list, labels_b: list) -> float:
    """Cohen's kappa via an explicit contingency table."""
    assert len(labels_a) == len(labels_b) and labels_a
    space = sorted(set(labels_a) | set(labels_b), key=repr)
    index = {label: i for i, label in enumerate(space)}
    k = len(space)
    table = [[0] * k for _ in range(k)]
    for x, y in zip(labels_a, labels_b):
        table[index[x]][index[y]] += 1
    n = len(labels_a)
    observed = sum(table[i][i] for i in range(k)) / n
    expected = 0.0
    for i in range(k):
        row_total = sum(table[i][j] for j in range(k))
        col_total = sum(table[j][i] for j in range(k))
        expected += (row_total / n) * (col_total / n)
    if observed == 1.0:
        return 1.0
    if expected == 1.0:
        raise ZeroDivisionError("degenerate: expected agreement is 1")
    return (observed - expected) / (1.0 - expected)


def agreement_bruteforce(labels_a: list, labels_b: list) -> float:
    assert len(labels_a) == len(labels_b) and labels_a
    return sum(1 for x, y in zip(labels_a, labels_b) if x == y) / len(labels_a)

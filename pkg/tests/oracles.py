"""Independent reference implementations used as test oracles.

Nothing here imports smmpipe: metrics are recomputed by counting (gold, pred)
pairs directly, and the ensemble rules by truth-table enumeration.
"""

import itertools
from fractions import Fraction


def pair_counts(pairs, labels):
    counts = {(g, p): 0 for g in labels for p in labels}
    for g, p in pairs:
        counts[(g, p)] += 1
    return counts


def expand(cells, labels):
    """Confusion matrix -> list of (gold, pred) pairs."""
    pairs = []
    for i, g in enumerate(labels):
        for j, p in enumerate(labels):
            pairs += [(g, p)] * int(cells[i][j])
    return pairs


def prf(pairs, c):
    tp = sum(1 for g, p in pairs if g == c and p == c)
    pred_c = sum(1 for _, p in pairs if p == c)
    gold_c = sum(1 for g, _ in pairs if g == c)
    prec = tp / pred_c if pred_c else 0.0
    rec = tp / gold_c if gold_c else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return prec, rec, f1


def fbeta(prec, rec, beta):
    num = (1 + beta ** 2) * prec * rec
    den = beta ** 2 * prec + rec
    return num / den if den else 0.0


def macro_f1(pairs, labels):
    return sum(prf(pairs, c)[2] for c in labels) / len(labels)


def argmax_with_priority(votes, priority):
    """Brute force: score every candidate, then scan members in priority order."""
    best = max(votes.count(v) for v in set(votes))
    winners = [v for v in sorted(set(votes)) if votes.count(v) == best]
    for member in priority:
        if votes[member] in winners:
            return votes[member]


def all_binary_vectors(n):
    return itertools.product((0, 1), repeat=n)


def exact_median(values):
    s = sorted(Fraction(v).limit_denominator(10 ** 9) for v in values)
    n = len(s)
    mid = n // 2
    return float(s[mid]) if n % 2 else float((s[mid - 1] + s[mid]) / 2)

"""Independent reference implementations used to check the library.

Everything here is deliberately written in the most literal way possible
(plain loops, exact rational arithmetic, no numpy, no imports from the
package under test) so that agreement between library and oracle is
meaningful evidence rather than a shared bug.
"""
from __future__ import annotations

from fractions import Fraction


def exact_mean(values: list[float]) -> Fraction:
    """Unweighted mean in exact rational arithmetic."""
    if not values:
        raise ValueError("empty value list")
    total = Fraction(0)
    for v in values:
        total += Fraction(str(v))
    return total / len(values)


def exact_weighted_mean(values: list[float], weights: list[float]) -> Fraction:
    """Weighted mean sum(w*v)/sum(w) in exact rational arithmetic.

    Weights and values are converted through their decimal string form so
    two-decimal survey votes like 4.71 are represented exactly.
    """
    if len(values) != len(weights):
        raise ValueError("length mismatch")
    num = Fraction(0)
    den = Fraction(0)
    for v, w in zip(values, weights):
        fv = Fraction(str(v))
        fw = Fraction(str(w))
        num += fw * fv
        den += fw
    if den == 0:
        raise ValueError("zero total weight")
    return num / den


def tau_by_counting(pairs: list[tuple[float, float, float, float]]) -> float:
    """Kendall's tau over (gold_a, gold_b, metric_a, metric_b) tuples.

    Counts concordant and discordant pairs directly.  Pairs whose gold
    values tie are skipped entirely; pairs where only the metric ties
    stay in the denominator but count for neither side.
    """
    concordant = 0
    discordant = 0
    usable = 0
    for ga, gb, ma, mb in pairs:
        if ga == gb:
            continue
        usable += 1
        if ma == mb:
            continue
        gold_says_a = ga > gb
        metric_says_a = ma > mb
        if gold_says_a == metric_says_a:
            concordant += 1
        else:
            discordant += 1
    if usable == 0:
        raise ValueError("no pairs with a strict gold order")
    return (concordant - discordant) / usable


def _accuracy_at_eps(
    pairs: list[tuple[float, float, float, float]], eps: float
) -> float:
    correct = 0
    for ga, gb, ma, mb in pairs:
        d = ma - mb
        if ga == gb:
            if abs(d) <= eps:
                correct += 1
        else:
            if abs(d) > eps and (d > 0) == (ga > gb):
                correct += 1
    return correct / len(pairs)


def acc_eq_exhaustive(
    pairs: list[tuple[float, float, float, float]]
) -> tuple[float, float]:
    """Tie-calibrated pairwise accuracy by exhaustive threshold search.

    Candidate thresholds are 0 plus the midpoints between consecutive
    distinct absolute metric differences; every candidate is evaluated
    and the smallest maximizer is returned.
    """
    if not pairs:
        raise ValueError("no pairs")
    abs_diffs = sorted({abs(ma - mb) for ga, gb, ma, mb in pairs})
    candidates = [0.0]
    for lo, hi in zip(abs_diffs, abs_diffs[1:]):
        candidates.append((lo + hi) / 2.0)
    best_acc = -1.0
    best_eps = 0.0
    for eps in candidates:
        acc = _accuracy_at_eps(pairs, eps)
        if acc > best_acc:
            best_acc = acc
            best_eps = eps
    return best_acc, best_eps


def adequacy_by_loop(
    segments: list[dict],
    scores: dict[tuple[str, str], float],
    machine_filter,
) -> tuple[int, int]:
    """(successes, cases) for best-human-beats-all-machines, plain loops.

    `segments` entries: {"id": str, "humans": [(system_id, gold)],
    "machines": [system_id, ...]}.  `scores` keyed by (segment id,
    system id).  `machine_filter(system_id) -> bool` narrows the
    comparison set.
    """
    successes = 0
    cases = 0
    for seg in segments:
        humans = seg["humans"]
        if not humans:
            continue
        if len(humans) == 1:
            best = humans[0][0]
        else:
            top = max(g for _, g in humans)
            best = min(s for s, g in humans if g == top)
        comparison = [m for m in seg["machines"] if machine_filter(m)]
        if not comparison:
            continue
        cases += 1
        h = scores[(seg["id"], best)]
        if all(h > scores[(seg["id"], m)] for m in comparison):
            successes += 1
    return successes, cases

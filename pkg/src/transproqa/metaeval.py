"""Meta-evaluation of metric scores against gold judgments.

Implements segment-level Kendall's tau over within-segment translation
pairs, tie-calibrated pairwise accuracy (a threshold below which metric
differences count as predicted ties, calibrated to maximize accuracy),
three-level adequacy (does the metric put the best human translation
strictly above machine outputs), and a paired sign-flip permutation test
for comparing two metrics.

Kendall's tau here is (C - D) / n where C and D count strict agreements
and disagreements between metric and gold order, and n counts the pairs
with a strict gold order.  Gold-tied pairs are skipped entirely;
metric-tied pairs stay in n but count for neither side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import (
    BestHumanError,
    Corpus,
    Origin,
    PreferenceJudgment,
    QualityJudgment,
    best_human,
)

__all__ = [
    "ScoredPair",
    "CorrelationReport",
    "AdequacyLevel",
    "AdequacyReport",
    "MetaEvalError",
    "MissingScoreError",
    "DEFAULT_TOP_SET",
    "make_pairs",
    "kendall_tau",
    "acc_eq",
    "adequacy",
    "permutation_test",
    "evaluate_scores",
]

DEFAULT_TOP_SET = ("gpt-4o", "deepl", "google-translate", "qwen2")

ScoreMap = Mapping[tuple[str, str, str, str], float]


class MetaEvalError(Exception):
    """Statistic preconditions violated (e.g. no usable pairs)."""


class MissingScoreError(MetaEvalError):
    """Records to be paired or compared lack metric scores."""

    def __init__(self, missing: list[tuple]):
        preview = ", ".join(map(str, missing[:5]))
        more = f" (+{len(missing) - 5} more)" if len(missing) > 5 else ""
        super().__init__(f"missing metric scores for: {preview}{more}")
        self.missing = missing


@dataclass(frozen=True)
class ScoredPair:
    """Two scored translations of one segment, with oriented gold values.

    For preference annotations the preferred side gets gold 1.0 and the
    other 0.0; an annotated tie gives both 0.5.
    """

    segment_ref: tuple[str, str, str]
    lang_pair: str
    system_a: str
    system_b: str
    gold_a: float
    gold_b: float
    metric_a: float
    metric_b: float


def make_pairs(corpus: Corpus, scores: ScoreMap) -> list[ScoredPair]:
    """Build the evaluation pair list for a corpus.

    Quality corpora contribute every unordered within-segment pair of
    gold-rated records; preference corpora contribute exactly the
    annotated pairs.  Order is deterministic: segments by key, then
    system-id pairs lexicographically; preference pairs by pair id.
    """
    pairs: list[ScoredPair] = []
    missing: list[tuple] = []

    def metric_for(record) -> float:
        value = scores.get(record.key)
        if value is None:
            missing.append(record.key)
            return float("nan")
        return value

    for segment, records in sorted(corpus.by_segment(), key=lambda t: t[0].key):
        rated = sorted(
            (r for r in records if isinstance(r.gold, QualityJudgment)),
            key=lambda r: r.system_id,
        )
        for i in range(len(rated)):
            for j in range(i + 1, len(rated)):
                a, b = rated[i], rated[j]
                pairs.append(
                    ScoredPair(
                        segment_ref=segment.key,
                        lang_pair=segment.lang_pair,
                        system_a=a.system_id,
                        system_b=b.system_id,
                        gold_a=a.gold.score,
                        gold_b=b.gold.score,
                        metric_a=metric_for(a),
                        metric_b=metric_for(b),
                    )
                )

    for pair_id, (a, b) in corpus.preference_pairs().items():
        tie = pair_id in corpus.preference_ties
        pairs.append(
            ScoredPair(
                segment_ref=a.segment.key,
                lang_pair=a.segment.lang_pair,
                system_a=a.system_id,
                system_b=b.system_id,
                gold_a=0.5 if tie else float(a.gold.preferred),
                gold_b=0.5 if tie else float(b.gold.preferred),
                metric_a=metric_for(a),
                metric_b=metric_for(b),
            )
        )

    if missing:
        raise MissingScoreError(sorted(set(missing)))
    return pairs


def _arrays(pairs: Sequence[ScoredPair]) -> tuple[np.ndarray, np.ndarray]:
    """(metric difference, gold order sign) vectors for a pair list."""
    d = np.array([p.metric_a - p.metric_b for p in pairs], dtype=float)
    g = np.sign([p.gold_a - p.gold_b for p in pairs])
    return d, g


def kendall_tau(pairs: Sequence[ScoredPair]) -> float:
    if not pairs:
        raise MetaEvalError("no pairs given")
    d, g = _arrays(pairs)
    strict = g != 0
    n = int(strict.sum())
    if n == 0:
        raise MetaEvalError("no pairs with a strict gold order")
    s = np.sign(d[strict]) * g[strict]
    return float(s.sum() / n)


def _acc_eq_arrays(d: np.ndarray, g: np.ndarray) -> tuple[float, float]:
    """Core tie-calibrated accuracy over difference/gold-sign vectors."""
    abs_d = np.abs(d)
    uniq = np.unique(abs_d)
    if uniq.size > 1:
        candidates = np.concatenate([[0.0], (uniq[:-1] + uniq[1:]) / 2.0])
    else:
        candidates = np.array([0.0])
    tie_abs = np.sort(abs_d[g == 0])
    good = (g != 0) & (np.sign(d) == g)
    good_abs = np.sort(abs_d[good])
    # At threshold e: gold ties are right when |d| <= e; correctly signed
    # strict pairs are right when |d| > e.
    tie_right = np.searchsorted(tie_abs, candidates, side="right")
    strict_right = good_abs.size - np.searchsorted(good_abs, candidates, side="right")
    correct = tie_right + strict_right
    best = int(np.argmax(correct))  # first maximizer = smallest threshold
    return float(correct[best] / d.size), float(candidates[best])


def acc_eq(pairs: Sequence[ScoredPair]) -> tuple[float, float]:
    """(accuracy, epsilon_star) with the calibrated tie threshold.

    The threshold is picked from 0 plus the midpoints of consecutive
    distinct absolute metric differences, maximizing accuracy; the
    smallest maximizer wins.
    """
    if not pairs:
        raise MetaEvalError("no pairs given")
    d, g = _arrays(pairs)
    return _acc_eq_arrays(d, g)


class AdequacyLevel(str, Enum):
    TOP_SYSTEMS = "top_systems"
    ALL_SYSTEMS = "all_systems"
    ALL_BUT_TOP = "all_but_top"


@dataclass(frozen=True)
class AdequacyReport:
    level: AdequacyLevel
    success_rate: Optional[float]  # fraction in [0,1]; None when no cases
    n_cases: int
    top_set: tuple[str, ...]
    skipped: Mapping[str, int] = field(default_factory=dict)
    # Alternative accounting: one case per (human, machine) comparison.
    pairwise_rate: Optional[float] = None
    n_pairwise: int = 0

    def to_json_dict(self) -> dict:
        return {
            "level": self.level.value,
            "success_rate": self.success_rate,
            "n_cases": self.n_cases,
            "top_set": list(self.top_set),
            "skipped": dict(self.skipped),
            "pairwise_rate": self.pairwise_rate,
            "n_pairwise": self.n_pairwise,
        }


def adequacy(
    corpus: Corpus,
    scores: ScoreMap,
    level: AdequacyLevel,
    top_set: Sequence[str] = DEFAULT_TOP_SET,
) -> AdequacyReport:
    """Fraction of segments whose best human strictly out-scores every
    machine output in the level's comparison set.

    Segments without humans, without machines in the comparison set, or
    with an unresolvable best human are skipped and counted.
    """
    top = set(top_set)
    successes = 0
    cases = 0
    pair_wins = 0
    pair_total = 0
    skipped = {"no_human": 0, "empty_comparison": 0, "unresolved_best_human": 0}
    missing: list[tuple] = []

    for segment, records in sorted(corpus.by_segment(), key=lambda t: t[0].key):
        humans = [r for r in records if r.origin is Origin.HUMAN]
        if not humans:
            skipped["no_human"] += 1
            continue
        machines = [r for r in records if r.origin is Origin.MACHINE]
        if level is AdequacyLevel.TOP_SYSTEMS:
            comparison = [m for m in machines if m.system_id in top]
        elif level is AdequacyLevel.ALL_BUT_TOP:
            comparison = [m for m in machines if m.system_id not in top]
        else:
            comparison = machines
        if not comparison:
            skipped["empty_comparison"] += 1
            continue
        try:
            best = best_human(records)
        except BestHumanError:
            skipped["unresolved_best_human"] += 1
            continue
        needed = [best] + comparison
        absent = [r.key for r in needed if r.key not in scores]
        if absent:
            missing.extend(absent)
            continue
        cases += 1
        h = scores[best.key]
        wins = [h > scores[m.key] for m in comparison]
        pair_wins += sum(wins)
        pair_total += len(wins)
        if all(wins):
            successes += 1

    if missing:
        raise MissingScoreError(sorted(set(missing)))
    return AdequacyReport(
        level=level,
        success_rate=successes / cases if cases else None,
        n_cases=cases,
        top_set=tuple(top_set),
        skipped=skipped,
        pairwise_rate=pair_wins / pair_total if pair_total else None,
        n_pairwise=pair_total,
    )


def _validate_aligned(pairs_a: Sequence[ScoredPair], pairs_b: Sequence[ScoredPair]):
    if len(pairs_a) != len(pairs_b):
        raise MetaEvalError(
            f"pair lists differ in length: {len(pairs_a)} vs {len(pairs_b)}"
        )
    for a, b in zip(pairs_a, pairs_b):
        if (
            a.segment_ref != b.segment_ref
            or a.system_a != b.system_a
            or a.system_b != b.system_b
            or a.gold_a != b.gold_a
            or a.gold_b != b.gold_b
        ):
            raise MetaEvalError(
                f"pair lists are not aligned at {a.segment_ref} "
                f"({a.system_a} vs {a.system_b})"
            )


def permutation_test(
    pairs_a: Sequence[ScoredPair],
    pairs_b: Sequence[ScoredPair],
    statistic: str = "acc_eq",
    n_perm: int = 1000,
    seed: int = 0,
) -> float:
    """One-sided paired permutation test that metric A beats metric B.

    Each permutation swaps the A/B score assignment independently per
    segment and recomputes the statistic difference; the p-value is
    (1 + #{permuted diff >= observed diff}) / (1 + n_perm).
    Deterministic for a fixed seed.
    """
    if statistic not in ("acc_eq", "kendall_tau"):
        raise ValueError(f"unknown statistic {statistic!r}")
    if n_perm < 1:
        raise ValueError("n_perm must be >= 1")
    if not pairs_a:
        raise MetaEvalError("no pairs given")
    _validate_aligned(pairs_a, pairs_b)

    d_a, g = _arrays(pairs_a)
    d_b, _ = _arrays(pairs_b)
    segment_refs = [p.segment_ref for p in pairs_a]
    seg_index = {ref: i for i, ref in enumerate(dict.fromkeys(segment_refs))}
    pair_seg = np.array([seg_index[ref] for ref in segment_refs])
    n_segments = len(seg_index)

    rng = np.random.default_rng(seed)
    flips = rng.random((n_perm, n_segments)) < 0.5
    flip_matrix = flips[:, pair_seg]  # (n_perm, n_pairs)

    if statistic == "kendall_tau":
        strict = g != 0
        n = int(strict.sum())
        if n == 0:
            raise MetaEvalError("no pairs with a strict gold order")
        s_a = np.sign(d_a) * g
        s_b = np.sign(d_b) * g
        contrib = s_a - s_b  # zero on gold ties already
        observed = float(contrib.sum() / n)
        signs = 1.0 - 2.0 * flip_matrix
        perm_diffs = signs @ contrib / n
    else:
        observed = _acc_eq_arrays(d_a, g)[0] - _acc_eq_arrays(d_b, g)[0]
        perm_diffs = np.empty(n_perm)
        for k in range(n_perm):
            f = flip_matrix[k]
            da = np.where(f, d_b, d_a)
            db = np.where(f, d_a, d_b)
            perm_diffs[k] = _acc_eq_arrays(da, g)[0] - _acc_eq_arrays(db, g)[0]

    return float((1 + int((perm_diffs >= observed).sum())) / (1 + n_perm))


@dataclass(frozen=True)
class CorrelationReport:
    """Pooled correlation statistics, optionally with per-language splits
    and deltas against a baseline metric."""

    acc_eq: float
    epsilon_star: float
    kendall_tau: Optional[float]
    n_pairs: int
    n_gold_strict: int
    per_lang: Mapping[str, "CorrelationReport"] = field(default_factory=dict)
    delta_vs_baseline: Optional[Mapping[str, float]] = None

    def to_json_dict(self) -> dict:
        out = {
            "acc_eq": self.acc_eq,
            "epsilon_star": self.epsilon_star,
            "kendall_tau": self.kendall_tau,
            "n_pairs": self.n_pairs,
            "n_gold_strict": self.n_gold_strict,
        }
        if self.per_lang:
            out["per_lang"] = {
                lang: rep.to_json_dict() for lang, rep in sorted(self.per_lang.items())
            }
        if self.delta_vs_baseline is not None:
            out["delta_vs_baseline"] = dict(self.delta_vs_baseline)
        return out


def _single_report(pairs: Sequence[ScoredPair]) -> CorrelationReport:
    accuracy, eps = acc_eq(pairs)
    _, g = _arrays(pairs)
    n_strict = int((g != 0).sum())
    tau = kendall_tau(pairs) if n_strict else None
    return CorrelationReport(
        acc_eq=accuracy,
        epsilon_star=eps,
        kendall_tau=tau,
        n_pairs=len(pairs),
        n_gold_strict=n_strict,
    )


def correlation_report(
    pairs: Sequence[ScoredPair],
    baseline_pairs: Sequence[ScoredPair] | None = None,
    n_perm: int = 1000,
    seed: int = 0,
) -> CorrelationReport:
    """Pooled report with per-language splits; micro-average semantics.

    With a baseline, adds absolute deltas and one-sided permutation
    p-values for both statistics.
    """
    if not pairs:
        raise MetaEvalError("no pairs given")
    pooled = _single_report(pairs)
    per_lang: dict[str, CorrelationReport] = {}
    langs = sorted({p.lang_pair for p in pairs})
    for lang in langs:
        per_lang[lang] = _single_report([p for p in pairs if p.lang_pair == lang])
    delta = None
    if baseline_pairs is not None:
        base = _single_report(baseline_pairs)
        delta = {
            "acc_eq": pooled.acc_eq - base.acc_eq,
            "kendall_tau": (
                pooled.kendall_tau - base.kendall_tau
                if pooled.kendall_tau is not None and base.kendall_tau is not None
                else None
            ),
            "baseline_acc_eq": base.acc_eq,
            "baseline_kendall_tau": base.kendall_tau,
            "p_acc_eq": permutation_test(
                pairs, baseline_pairs, "acc_eq", n_perm=n_perm, seed=seed
            ),
            "p_kendall_tau": (
                permutation_test(
                    pairs, baseline_pairs, "kendall_tau", n_perm=n_perm, seed=seed
                )
                if pooled.n_gold_strict
                else None
            ),
        }
    return CorrelationReport(
        acc_eq=pooled.acc_eq,
        epsilon_star=pooled.epsilon_star,
        kendall_tau=pooled.kendall_tau,
        n_pairs=pooled.n_pairs,
        n_gold_strict=pooled.n_gold_strict,
        per_lang=per_lang,
        delta_vs_baseline=delta,
    )


def _macro_average(per_lang: Mapping[str, CorrelationReport]) -> dict:
    accs = [r.acc_eq for r in per_lang.values()]
    taus = [r.kendall_tau for r in per_lang.values() if r.kendall_tau is not None]
    return {
        "acc_eq": sum(accs) / len(accs) if accs else None,
        "kendall_tau": sum(taus) / len(taus) if taus else None,
        "n_langs": len(per_lang),
    }


def evaluate_scores(
    corpus: Corpus,
    scores: ScoreMap,
    baseline: ScoreMap | None = None,
    top_set: Sequence[str] = DEFAULT_TOP_SET,
    n_perm: int = 1000,
    seed: int = 0,
) -> dict:
    """Full meta-evaluation: correlation + adequacy, JSON-ready.

    Pooled figures micro-average over all pairs; a macro average over
    language pairs is reported alongside, since either convention is
    defensible.
    """
    pairs = make_pairs(corpus, scores)
    baseline_pairs = make_pairs(corpus, baseline) if baseline is not None else None
    report = correlation_report(pairs, baseline_pairs, n_perm=n_perm, seed=seed)
    adequacy_reports = {}
    for level in AdequacyLevel:
        adequacy_reports[level.value] = adequacy(
            corpus, scores, level, top_set=top_set
        ).to_json_dict()
    return {
        "correlation": report.to_json_dict(),
        "macro_avg": _macro_average(report.per_lang),
        "adequacy": adequacy_reports,
        "top_set": list(top_set),
        "n_perm": n_perm,
        "seed": seed,
    }

"""Walkthrough: judging the judge with correlation, adequacy, and
significance statistics.

Given gold human judgments (an MQM-style quality score per translation)
and metric scores, the meta-evaluation asks three questions:

1. Correlation: over within-segment translation pairs, does the metric
   order agree with the gold order?  Reported as Kendall's tau and as
   tie-calibrated pairwise accuracy (acc-eq), which credits correctly
   predicted ties once a tie threshold is calibrated.
2. Adequacy: does the metric put the best human translation strictly
   above machine outputs?  Reported at three levels of machine
   competition.
3. Significance: is metric A better than metric B beyond what score
   shuffling explains?  A paired sign-flip permutation test answers that.

Run:
    python3 demos/meta_evaluation.py
"""
from __future__ import annotations

import json
import random
import tempfile
from pathlib import Path

from transproqa import evaluate_scores, ingest_jsonl

SYSTEMS = [
    ("trans-ed1", "human"),
    ("gpt-4o", "machine"),
    ("deepl", "machine"),
    ("mt-basic", "machine"),
]
# MQM-style penalties per system: lower raw penalty = better translation.
TRUE_QUALITY = {"trans-ed1": 1.0, "gpt-4o": 3.0, "deepl": 4.5, "mt-basic": 8.0}


def synthetic_corpus(path: Path, n_segments: int = 40) -> None:
    rng = random.Random(7)
    header = {
        "format": "transproqa-corpus",
        "version": 1,
        "orientation": "lower-is-better",
    }
    lines = [json.dumps(header)]
    for i in range(n_segments):
        for system_id, origin in SYSTEMS:
            penalty = TRUE_QUALITY[system_id] + rng.uniform(-0.4, 0.4)
            lines.append(
                json.dumps(
                    {
                        "dataset": "demo",
                        "lang_pair": "de-en" if i % 2 else "zh-en",
                        "segment_id": f"seg-{i:03d}",
                        "source": f"Quelltext {i}",
                        "system_id": system_id,
                        "origin": origin,
                        "target": f"{system_id} rendering of segment {i}",
                        "gold_kind": "quality",
                        "gold_score": round(penalty, 3),
                    }
                )
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def metric_scores(corpus, noise: float, seed: int) -> dict:
    """A metric = the (oriented) gold score plus Gaussian noise."""
    rng = random.Random(seed)
    return {
        r.key: r.gold.score + rng.gauss(0.0, noise) for r in corpus.records
    }


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        corpus_path = Path(tmp) / "demo_corpus.jsonl"
        synthetic_corpus(corpus_path)
        corpus = ingest_jsonl(corpus_path)
        print(f"corpus: {corpus.stats['segments']} segments, "
              f"{corpus.stats['records']} records")
        print()

        sharp = metric_scores(corpus, noise=1.2, seed=1)
        blurry = metric_scores(corpus, noise=6.0, seed=2)

        report = evaluate_scores(
            corpus, sharp, baseline=blurry, top_set=("gpt-4o", "deepl"),
            n_perm=1000, seed=0,
        )

        corr = report["correlation"]
        print("=== Correlation with gold (pooled over language pairs) ===")
        print(f"  acc-eq       {corr['acc_eq']:.3f} "
              f"(tie threshold {corr['epsilon_star']:.4f})")
        print(f"  kendall tau  {corr['kendall_tau']:.3f} "
              f"over {corr['n_gold_strict']} strictly ordered pairs")
        for lang, sub in corr["per_lang"].items():
            print(f"    {lang}: acc-eq {sub['acc_eq']:.3f}, "
                  f"tau {sub['kendall_tau']:.3f}")
        print()

        print("=== Adequacy: best human strictly above machines? ===")
        for level, sub in report["adequacy"].items():
            rate = sub["success_rate"]
            print(f"  {level:<13} {100 * rate:5.1f}%  ({sub['n_cases']} segments)")
        print()

        delta = corr["delta_vs_baseline"]
        print("=== Sharp metric vs blurry baseline ===")
        print(f"  delta acc-eq  {delta['acc_eq']:+.3f}   "
              f"p = {delta['p_acc_eq']:.4f}")
        print(f"  delta tau     {delta['kendall_tau']:+.3f}   "
              f"p = {delta['p_kendall_tau']:.4f}")
        print()
        print("Small p-values mean the sharp metric's advantage survives")
        print("paired sign-flip permutation; rerunning with the same seed")
        print("reproduces them exactly.")


if __name__ == "__main__":
    main()

"""Walkthrough: how the 25-question list was distilled from 45 candidates.

Two filters run over the full catalogue:

* Vote filter: professional translators rated every question 1-5; a mean
  vote below 4.00 rejects it.
* Sensitivity filter, from answer distributions on a development set:
  a question whose single most common answer exceeds 90% of all answers
  is uninformative (rejected for general insensitivity); a question
  answered No/Maybe on at least 20% of verified human translations
  penalizes exactly the translations it should endorse (rejected for
  human insensitivity).

A sensitivity rejection labels the question even when the vote also
fails.  The package bundles the per-question answer distributions, so
the final statuses are reproducible offline.

Run:
    python3 demos/question_selection.py
"""
from __future__ import annotations

from collections import Counter

from transproqa import (
    load_bank,
    load_fixture_distributions,
    resolve_statuses,
    selection_report,
    sensitivity_filter,
    vote_filter,
)


def main() -> None:
    bank = load_bank()
    dists = load_fixture_distributions()

    print(f"catalogue: {len(bank)} questions across "
          f"{len({q.aspect for q in bank})} aspects")
    print()

    print("=== Highest and lowest voted questions ===")
    ordered = list(bank)  # bank order: vote descending, then id
    for q in [ordered[0], ordered[-1]]:
        print(f"  Q{q.id:>2} vote {q.vote:.2f} [{q.aspect.value}] "
              f"{q.text[:70]}...")
    print()

    keep = vote_filter(bank, threshold=4.0)
    sens = sensitivity_filter(dists, general_threshold=0.90, human_threshold=0.20)
    final = resolve_statuses(bank, keep, sens)

    print("=== Status tally after both filters ===")
    for status, count in sorted(Counter(s.value for s in final.values()).items()):
        print(f"  {status:<32} {count}")
    print()

    selected = sorted(qid for qid, s in final.items() if s.value == "selected")
    print(f"=== Selected ids ({len(selected)}) ===")
    print(f"  {selected}")
    print()

    mismatches = [q.id for q in bank if final[q.id] is not q.status]
    print(f"catalogue statuses reproduced exactly: {not mismatches}")
    print()

    print("=== Tightening the vote bar to 4.50 ===")
    report = selection_report(bank, dists, vote_threshold=4.5)
    print(f"  selected shrinks to {len(report['selected_ids'])}: "
          f"{report['selected_ids']}")
    print()
    print("Per-question evidence (votes, answer shares, human No/Maybe rate)")
    print("lives in report['questions']; the CLI command `transproqa")
    print("select-questions --distributions bundled` emits the same report.")


if __name__ == "__main__":
    main()

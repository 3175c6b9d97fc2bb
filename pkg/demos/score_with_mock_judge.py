"""Walkthrough: scoring translations with a scripted judge, no network.

The metric asks a judge model 25 Yes/No/Maybe questions about one
(source, translation) pair, maps the answers to 1/0/0.5, and averages
them, optionally weighting each question by its mean translator vote.
Everything below runs offline: a MockJudge replays canned responses, so
the demo doubles as a template for writing deterministic experiment
scripts.

Run:
    python3 demos/score_with_mock_judge.py
"""
from __future__ import annotations

import json

from transproqa import (
    MockJudge,
    ScoringMode,
    TemplateVariant,
    build_prompt,
    load_bank,
    score_translation,
    selected_questions,
)

SOURCE = (
    "Am wiederholtesten aber fragte der treue Diener, fast so oft er "
    "Ottilien sah, nach der Rückkunft des Herrn und nach dem Termin derselben."
)
HUMAN = (
    "But almost every time the faithful servant saw Ottilie what he most "
    "repeatedly asked about was the master's return and when that was going "
    "to happen."
)
MACHINE = (
    "Most frequently, however, the faithful servant asked, almost every time "
    "he saw Ottilie, about the return of his master and the date of that return."
)


def show_prompt(bank) -> None:
    questions = selected_questions(bank)
    prompt = build_prompt(TemplateVariant.VANILLA, SOURCE, HUMAN, questions)
    print("=== What the judge sees (first 400 characters) ===")
    print(prompt.text[:400] + " ...")
    print(f"... 25 numbered questions, fingerprint {prompt.fingerprint[:16]}…")
    print()


def scripted_judge(bank) -> MockJudge:
    """Script one answer sheet per translation; fall back to all-Maybe."""
    n = len(selected_questions(bank))

    def sheet(yes_count: int) -> str:
        words = ["YES"] * yes_count + ["MAYBE"] * 3
        words += ["NO"] * (n - len(words))
        return json.dumps({str(i + 1): w for i, w in enumerate(words)})

    return MockJudge(
        script={
            (SOURCE, HUMAN): sheet(21),
            (SOURCE, MACHINE): sheet(14),
        },
        default_rule="all-maybe",
    )


def main() -> None:
    bank = load_bank()
    show_prompt(bank)
    judge = scripted_judge(bank)

    print("=== Scores (unweighted vs translator-vote weighted) ===")
    for label, translation in (("human", HUMAN), ("machine", MACHINE)):
        row = [label]
        for mode in (ScoringMode.UNWEIGHTED, ScoringMode.WEIGHTED):
            score = score_translation(
                SOURCE, translation, TemplateVariant.VANILLA, mode, bank, judge
            )
            row.append(f"{mode.value}={score.overall:.4f}")
        print("  " + "  ".join(row))
    print()

    score = score_translation(
        SOURCE, MACHINE, TemplateVariant.VANILLA, ScoringMode.UNWEIGHTED, bank, judge
    )
    print("=== Per-question verdicts for the machine output ===")
    negatives = sorted(qid for qid, v in score.per_question.items() if v == 0.0)
    print(f"  questions answered No: {negatives}")
    print(f"  fraction answered Maybe: {score.maybe_fraction:.2f}")
    print()

    print("=== Template variants share the question list ===")
    for variant in TemplateVariant:
        s = score_translation(
            SOURCE, HUMAN, variant, ScoringMode.UNWEIGHTED, bank, judge
        )
        print(f"  {variant.value:<12} -> {s.overall:.4f}")
    print()
    print("The scripted sheets key on (source, translation), so every variant")
    print("replays the same answers here; with a live judge the step-instructed")
    print("variants usually shift the answer distribution.")


if __name__ == "__main__":
    main()

"""Question-selection pipeline: translator-vote filter plus LLM
sensitivity analysis.

A question survives when (a) its mean translator vote reaches the
threshold and (b) its answer distribution on a development set is
informative: no single answer dominates (general sensitivity) and it is
not routinely answered No/Maybe on verified human translations (human
sensitivity).  Rejection by sensitivity takes precedence over rejection
by vote when labeling, matching the catalogued statuses.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .corpus import Corpus, Origin
from .gateway import complete_validated, fan_out
from .prompts import Answer, TemplateVariant, build_prompt
from .questions import QuestionBank, QuestionStatus

__all__ = [
    "AnswerDistribution",
    "SelectionError",
    "run_sensitivity",
    "vote_filter",
    "sensitivity_filter",
    "resolve_statuses",
    "load_fixture_distributions",
    "selection_report",
]


class SelectionError(Exception):
    pass


@dataclass(frozen=True)
class AnswerDistribution:
    """Tallied Yes/No/Maybe answers for one question over a dev set.

    `human_counts` covers the subset of answers given on human-origin
    translations; it is None when the dev set had no human records, in
    which case the human-insensitivity rule cannot fire.
    """

    question_id: int
    counts: Mapping[Answer, int]
    human_counts: Optional[Mapping[Answer, int]] = None

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def max_share(self) -> float:
        if self.total == 0:
            raise SelectionError(
                f"question {self.question_id}: empty answer distribution"
            )
        return max(self.counts.values()) / self.total

    @property
    def human_no_maybe_rate(self) -> Optional[float]:
        if self.human_counts is None:
            return None
        human_total = sum(self.human_counts.values())
        if human_total == 0:
            return None
        no_maybe = self.human_counts.get(Answer.NO, 0) + self.human_counts.get(
            Answer.MAYBE, 0
        )
        return no_maybe / human_total


def _empty_tally() -> dict[Answer, int]:
    return {Answer.YES: 0, Answer.NO: 0, Answer.MAYBE: 0}


def run_sensitivity(
    bank: QuestionBank,
    dev: Corpus,
    judge,
    parallelism: int | None = None,
) -> list[AnswerDistribution]:
    """Query all questions over every dev record and tally the answers.

    Uses the plain template with the full catalogue (display indices
    follow bank order).  Distributions come back in bank order.  Judge
    failures propagate; pairing the judge with a cache makes partial
    runs resumable.
    """
    if len(dev) == 0:
        raise SelectionError("development corpus has no records")
    questions = list(bank)
    workers = parallelism if parallelism is not None else judge.config.parallelism

    def ask(record):
        prompt = build_prompt(
            TemplateVariant.VANILLA, record.segment.source_text, record.text, questions
        )
        _, sheet = complete_validated(judge, prompt, len(questions))
        return sheet

    totals = {q.id: _empty_tally() for q in questions}
    has_humans = any(r.origin is Origin.HUMAN for r in dev)
    human_totals = {q.id: _empty_tally() for q in questions} if has_humans else None

    outcomes = fan_out(ask, dev.records, workers)
    for record, (sheet, error) in zip(dev.records, outcomes):
        if error is not None:
            raise error
        for idx, answer in sheet.answers.items():
            qid = questions[idx - 1].id
            totals[qid][answer] += 1
            if human_totals is not None and record.origin is Origin.HUMAN:
                human_totals[qid][answer] += 1

    return [
        AnswerDistribution(
            question_id=q.id,
            counts=totals[q.id],
            human_counts=human_totals[q.id] if human_totals is not None else None,
        )
        for q in questions
    ]


def vote_filter(bank: QuestionBank, threshold: float = 4.0) -> dict[int, bool]:
    """question id -> keep?  Rejects votes strictly below the threshold."""
    if not 1.0 <= threshold <= 5.0:
        raise SelectionError(f"vote threshold {threshold} outside [1, 5]")
    return {q.id: q.vote >= threshold for q in bank}


def sensitivity_filter(
    dists: Sequence[AnswerDistribution],
    general_threshold: float = 0.90,
    human_threshold: float = 0.20,
) -> dict[int, QuestionStatus]:
    """question id -> sensitivity verdict.

    A share strictly above `general_threshold` for any single answer
    rejects for general insensitivity; otherwise a No/Maybe rate on
    human translations at or above `human_threshold` rejects for human
    insensitivity; otherwise the question is kept (status Selected).
    """
    for name, value in (("general", general_threshold), ("human", human_threshold)):
        if not 0 < value <= 1:
            raise SelectionError(f"{name} threshold {value} outside (0, 1]")
    statuses: dict[int, QuestionStatus] = {}
    for dist in dists:
        if dist.max_share > general_threshold:
            statuses[dist.question_id] = QuestionStatus.REJECTED_GENERAL_INSENSITIVITY
        else:
            rate = dist.human_no_maybe_rate
            if rate is not None and rate >= human_threshold:
                statuses[dist.question_id] = (
                    QuestionStatus.REJECTED_HUMAN_INSENSITIVITY
                )
            else:
                statuses[dist.question_id] = QuestionStatus.SELECTED
    return statuses


def resolve_statuses(
    bank: QuestionBank,
    vote_keep: Mapping[int, bool],
    sensitivity: Mapping[int, QuestionStatus],
) -> dict[int, QuestionStatus]:
    """Combine both filters into final statuses.

    A question is Selected iff it passes both filters.  For rejected
    questions the sensitivity verdict labels the status; the vote label
    applies only to questions the sensitivity analysis kept.
    """
    final: dict[int, QuestionStatus] = {}
    for q in bank:
        sens = sensitivity.get(q.id, QuestionStatus.SELECTED)
        if sens is not QuestionStatus.SELECTED:
            final[q.id] = sens
        elif not vote_keep.get(q.id, True):
            final[q.id] = QuestionStatus.REJECTED_TRANSLATOR_VOTE
        else:
            final[q.id] = QuestionStatus.SELECTED
    return final


def load_fixture_distributions(path: str | Path | None = None) -> list[AnswerDistribution]:
    """Load bundled (or user-supplied) per-question answer distributions."""
    if path is None:
        data = (
            resources.files("transproqa")
            .joinpath("data/sensitivity_dev.json")
            .read_text("utf-8")
        )
    else:
        data = Path(path).read_text("utf-8")
    payload = json.loads(data)
    if payload.get("format") != "transproqa-sensitivity":
        raise SelectionError("missing or unknown format marker in distribution data")

    def tally(raw: Mapping[str, int]) -> dict[Answer, int]:
        return {Answer(k): int(v) for k, v in raw.items()}

    dists = []
    for row in payload["distributions"]:
        dists.append(
            AnswerDistribution(
                question_id=int(row["question_id"]),
                counts=tally(row["counts"]),
                human_counts=(
                    tally(row["human_counts"])
                    if row.get("human_counts") is not None
                    else None
                ),
            )
        )
    return dists


def selection_report(
    bank: QuestionBank,
    dists: Sequence[AnswerDistribution],
    vote_threshold: float = 4.0,
    general_threshold: float = 0.90,
    human_threshold: float = 0.20,
) -> dict:
    """Run both filters and assemble a JSON-ready report."""
    keep = vote_filter(bank, vote_threshold)
    sens = sensitivity_filter(dists, general_threshold, human_threshold)
    final = resolve_statuses(bank, keep, sens)
    by_id: dict[int, AnswerDistribution] = {d.question_id: d for d in dists}
    rows = []
    for q in bank:
        dist = by_id.get(q.id)
        rows.append(
            {
                "id": q.id,
                "aspect": q.aspect.value,
                "vote": q.vote,
                "vote_keep": keep[q.id],
                "counts": (
                    {a.value: c for a, c in dist.counts.items()} if dist else None
                ),
                "max_share": dist.max_share if dist else None,
                "human_no_maybe_rate": dist.human_no_maybe_rate if dist else None,
                "status": final[q.id].value,
            }
        )
    return {
        "thresholds": {
            "vote": vote_threshold,
            "general_insensitivity": general_threshold,
            "human_insensitivity": human_threshold,
        },
        "questions": rows,
        "selected_ids": sorted(
            qid for qid, st in final.items() if st is QuestionStatus.SELECTED
        ),
    }

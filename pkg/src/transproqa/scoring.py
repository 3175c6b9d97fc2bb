"""Answer-to-score mapping and aggregation into the final metric value.

Yes maps to 1, No to 0, Maybe to 0.5.  The overall score is either the
plain mean of the per-question values or the translator-vote-weighted
mean sum(w*v)/sum(w); votes are used exactly as catalogued, since the
weighted mean is invariant under positive rescaling of the weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

from .corpus import Corpus, TranslationRecord
from .gateway import GatewayError, complete_validated, fan_out
from .prompts import (
    Answer,
    AnswerFormatError,
    AnswerSheet,
    TemplateVariant,
    build_prompt,
)
from .questions import Question, QuestionBank, selected_questions

__all__ = [
    "ScoringMode",
    "MetricScore",
    "ScoreRecord",
    "ScoringError",
    "answer_value",
    "aggregate",
    "score_translation",
    "score_corpus",
]


class ScoringError(Exception):
    """Aggregation preconditions violated."""


class ScoringMode(str, Enum):
    UNWEIGHTED = "unweighted"
    WEIGHTED = "weighted"

    @property
    def weighted(self) -> bool:
        return self is ScoringMode.WEIGHTED


_ANSWER_VALUES = {Answer.YES: 1.0, Answer.NO: 0.0, Answer.MAYBE: 0.5}


def answer_value(a: Answer) -> float:
    """Yes -> 1.0, No -> 0.0, Maybe -> 0.5."""
    return _ANSWER_VALUES[a]


@dataclass(frozen=True)
class MetricScore:
    """Final score in [0,1] with its per-question breakdown.

    `per_question` is keyed by original question id, not display index.
    """

    overall: float
    per_question: Mapping[int, float]
    mode: ScoringMode
    variant: Optional[TemplateVariant] = None

    @property
    def maybe_fraction(self) -> float:
        values = list(self.per_question.values())
        return sum(v == 0.5 for v in values) / len(values)


def aggregate(
    sheet: AnswerSheet,
    questions: Sequence[Question],
    mode: ScoringMode,
    variant: Optional[TemplateVariant] = None,
) -> MetricScore:
    """Aggregate one answer sheet over its question list.

    The sheet's display index i corresponds to questions[i-1]; the
    returned breakdown is re-keyed by original question id.
    """
    if sheet.n != len(questions):
        raise ScoringError(
            f"answer sheet has {sheet.n} answers but {len(questions)} questions given"
        )
    values = [answer_value(a) for a in sheet.values_in_order()]
    per_question = {q.id: v for q, v in zip(questions, values)}
    if mode.weighted:
        weights = [q.vote for q in questions]
        if any(w is None for w in weights):
            missing = [q.id for q in questions if q.vote is None]
            raise ScoringError(f"weighted mode needs votes; missing on {missing}")
        total = math.fsum(weights)
        if total <= 0:
            raise ScoringError("weighted mode needs a positive total vote mass")
        overall = math.fsum(w * v for w, v in zip(weights, values)) / total
    else:
        overall = math.fsum(values) / len(values)
    return MetricScore(
        overall=overall, per_question=per_question, mode=mode, variant=variant
    )


def score_translation(
    source: str,
    translation: str,
    variant: TemplateVariant,
    mode: ScoringMode,
    bank: QuestionBank,
    judge,
) -> MetricScore:
    """Run the full metric once: prompt, judge, parse, aggregate."""
    questions = selected_questions(bank)
    prompt = build_prompt(variant, source, translation, questions)
    _, sheet = complete_validated(judge, prompt, len(questions))
    return aggregate(sheet, questions, mode, variant=variant)


@dataclass(frozen=True)
class ScoreRecord:
    """One scored (segment, system) pair, ready for JSONL serialization."""

    dataset: str
    lang_pair: str
    segment_id: str
    system_id: str
    variant: TemplateVariant
    mode: ScoringMode
    overall: float
    per_question: Mapping[int, float]
    maybe_fraction: float
    cached: bool

    def to_json_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "lang_pair": self.lang_pair,
            "segment_id": self.segment_id,
            "system_id": self.system_id,
            "variant": self.variant.value,
            "mode": self.mode.value,
            "overall": self.overall,
            "per_question": {str(k): v for k, v in sorted(self.per_question.items())},
            "maybe_fraction": self.maybe_fraction,
        }


@dataclass(frozen=True)
class ScoreFailure:
    """A record that could not be scored, and why."""

    dataset: str
    lang_pair: str
    segment_id: str
    system_id: str
    error: str


def score_corpus(
    corpus: Corpus,
    variant: TemplateVariant,
    mode: ScoringMode,
    bank: QuestionBank,
    judge,
    parallelism: int | None = None,
) -> tuple[list[ScoreRecord], list[ScoreFailure]]:
    """Score every record of a corpus with bounded concurrent judging.

    Results follow corpus order regardless of completion order.  Judge
    and parse failures on individual items are collected rather than
    aborting the run.
    """
    questions = selected_questions(bank)
    workers = parallelism if parallelism is not None else judge.config.parallelism

    def score_one(record: TranslationRecord) -> ScoreRecord:
        prompt = build_prompt(variant, record.segment.source_text, record.text, questions)
        response, sheet = complete_validated(judge, prompt, len(questions))
        metric = aggregate(sheet, questions, mode, variant=variant)
        return ScoreRecord(
            dataset=record.segment.dataset,
            lang_pair=record.segment.lang_pair,
            segment_id=record.segment.segment_id,
            system_id=record.system_id,
            variant=variant,
            mode=mode,
            overall=metric.overall,
            per_question=metric.per_question,
            maybe_fraction=metric.maybe_fraction,
            cached=response.cached,
        )

    results: list[ScoreRecord] = []
    failures: list[ScoreFailure] = []
    for record, (scored, error) in zip(
        corpus.records, fan_out(score_one, corpus.records, workers)
    ):
        if error is None:
            results.append(scored)
        elif isinstance(error, (GatewayError, AnswerFormatError)):
            failures.append(
                ScoreFailure(
                    dataset=record.segment.dataset,
                    lang_pair=record.segment.lang_pair,
                    segment_id=record.segment.segment_id,
                    system_id=record.system_id,
                    error=f"{type(error).__name__}: {error}",
                )
            )
        else:
            raise error
    return results, failures

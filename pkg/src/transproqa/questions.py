"""The 45-question evaluation catalogue and its selected 25-question list.

The bank ships with the package as a checksummed JSON file.  Each question
carries the aspect it probes, the mean 1-5 rating assigned by professional
literary translators, a selection status, and (for selected questions) a
step-instructed variant of the question text.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterator, Optional

__all__ = [
    "Aspect",
    "QuestionStatus",
    "Question",
    "QuestionBank",
    "BankFormatError",
    "load_bank",
    "selected_questions",
]


class BankFormatError(Exception):
    """Bundled or user-supplied question data failed validation."""


class Aspect(str, Enum):
    """Translation-quality aspect a question belongs to."""

    GL = "GL"
    LD = "LD"
    CCA = "CCA"
    TA = "TA"
    CO = "CO"
    GE = "GE"

    @property
    def label(self) -> str:
        return _ASPECT_LABELS[self]


_ASPECT_LABELS = {
    Aspect.GL: "Grammar & linguistics",
    Aspect.LD: "Literary devices",
    Aspect.CCA: "Cultural understanding, context, & adaptation",
    Aspect.TA: "Tone & authorial voice",
    Aspect.CO: "Consistency & coherence",
    Aspect.GE: "General equivalence",
}


class QuestionStatus(str, Enum):
    """Outcome of the two-stage question-selection pipeline."""

    SELECTED = "selected"
    REJECTED_GENERAL_INSENSITIVITY = "rejected_general_insensitivity"
    REJECTED_HUMAN_INSENSITIVITY = "rejected_human_insensitivity"
    REJECTED_TRANSLATOR_VOTE = "rejected_translator_vote"


@dataclass(frozen=True)
class Question:
    """One evaluation question.

    `vote` is the mean translator rating on a 1-5 scale (two decimals).
    `step_text` is the step-instructed rewrite used by the QuestionStep
    template; only selected questions carry one.  `note` preserves the
    printed rejection reason, if any.
    """

    id: int
    aspect: Aspect
    text: str
    vote: float
    status: QuestionStatus
    note: Optional[str] = None
    step_text: Optional[str] = None

    @property
    def selected(self) -> bool:
        return self.status is QuestionStatus.SELECTED


@dataclass(frozen=True)
class QuestionBank:
    """Immutable, ordered question catalogue.

    Order is descending translator vote, ties broken by ascending id.
    Safe to share across threads.
    """

    questions: tuple[Question, ...]

    def __len__(self) -> int:
        return len(self.questions)

    def __iter__(self) -> Iterator[Question]:
        return iter(self.questions)

    @cached_property
    def by_id(self) -> dict[int, Question]:
        return {q.id: q for q in self.questions}

    def __getitem__(self, question_id: int) -> Question:
        return self.by_id[question_id]


def _canonical_checksum(raw_questions: list[dict]) -> str:
    canon = json.dumps(
        raw_questions, ensure_ascii=False, sort_keys=True, separators=(",", ":")
    )
    return "sha256:" + hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _parse_question(row: dict) -> Question:
    try:
        qid = int(row["id"])
        aspect = Aspect(row["aspect"])
        status = QuestionStatus(row["status"])
        text = row["text"]
        vote = float(row["vote"])
    except (KeyError, ValueError) as exc:
        raise BankFormatError(f"malformed question record {row.get('id')!r}: {exc}")
    if not isinstance(text, str) or not text:
        raise BankFormatError(f"question {qid}: empty or non-string text")
    if not 1.0 <= vote <= 5.0:
        raise BankFormatError(f"question {qid}: vote {vote} outside [1.00, 5.00]")
    return Question(
        id=qid,
        aspect=aspect,
        text=text,
        vote=vote,
        status=status,
        note=row.get("note"),
        step_text=row.get("step_text"),
    )


def _validate_bundled_invariants(bank: QuestionBank) -> None:
    ids = [q.id for q in bank]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise BankFormatError(f"duplicate question ids: {dupes}")
    if sorted(ids) != list(range(1, 46)):
        raise BankFormatError(f"expected ids 1..45, got {len(ids)} ids")
    n_selected = sum(q.selected for q in bank)
    if n_selected != 25:
        raise BankFormatError(f"expected 25 selected questions, found {n_selected}")
    for q in bank:
        if q.selected and not q.step_text:
            raise BankFormatError(f"selected question {q.id} lacks a step variant")
        if q.status is QuestionStatus.REJECTED_TRANSLATOR_VOTE and q.vote >= 4.0:
            raise BankFormatError(
                f"question {q.id}: vote-rejected status but vote {q.vote} >= 4.00"
            )
    order_keys = [(-q.vote, q.id) for q in bank]
    if order_keys != sorted(order_keys):
        raise BankFormatError("bank not ordered by descending vote then ascending id")


def load_bank(path: str | Path | None = None) -> QuestionBank:
    """Load the bundled question bank, or one from an explicit path.

    The file-level checksum is recomputed and verified; any mismatch or
    malformed record raises BankFormatError naming the problem.
    """
    if path is None:
        data = (
            resources.files("transproqa").joinpath("data/questions.json").read_text("utf-8")
        )
    else:
        data = Path(path).read_text("utf-8")
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise BankFormatError(f"question data is not valid JSON: {exc}")
    if payload.get("format") != "transproqa-questions":
        raise BankFormatError("missing or unknown format marker in question data")
    raw = payload.get("questions")
    if not isinstance(raw, list):
        raise BankFormatError("question data lacks a questions list")
    declared = payload.get("checksum")
    actual = _canonical_checksum(raw)
    if declared != actual:
        raise BankFormatError(
            f"question data checksum mismatch: declared {declared}, actual {actual}"
        )
    bank = QuestionBank(tuple(_parse_question(row) for row in raw))
    _validate_bundled_invariants(bank)
    return bank


def selected_questions(bank: QuestionBank) -> list[Question]:
    """The selected questions, in bank order.  Stable across calls."""
    return [q for q in bank if q.selected]

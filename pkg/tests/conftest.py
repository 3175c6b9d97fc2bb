from __future__ import annotations

import json
from pathlib import Path

import pytest

from transproqa import (
    Answer,
    AnswerSheet,
    Aspect,
    Question,
    QuestionBank,
    QuestionStatus,
    load_bank,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def bank() -> QuestionBank:
    return load_bank()


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def make_question(
    qid: int,
    vote: float = 4.5,
    aspect: Aspect = Aspect.GL,
    status: QuestionStatus = QuestionStatus.SELECTED,
    text: str | None = None,
    step_text: str | None = None,
) -> Question:
    return Question(
        id=qid,
        aspect=aspect,
        text=text or f"Question number {qid}?",
        vote=vote,
        status=status,
        step_text=step_text or f"First, think. Then answer question {qid}.",
    )


def make_sheet(answers: list[Answer]) -> AnswerSheet:
    return AnswerSheet(
        answers={i + 1: a for i, a in enumerate(answers)}, n=len(answers)
    )


def sheet_json(answers: list[str]) -> str:
    return json.dumps({str(i + 1): a for i, a in enumerate(answers)})

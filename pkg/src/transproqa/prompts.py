"""Prompt assembly and judge-answer parsing.

Three template variants exist.  Vanilla presents the questions with a
minimal instruction; PromptStep swaps in a preamble with explicit
stepwise instructions; QuestionStep keeps the Vanilla preamble but uses
step-instructed rewrites of the question texts.  All variants share the
same body: the source/translation pair, the numbered question block, and
an instruction to answer with a JSON object of YES/NO/MAYBE values.
"""
from __future__ import annotations

import ast
import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .questions import Question

__all__ = [
    "TemplateVariant",
    "Prompt",
    "Answer",
    "AnswerSheet",
    "PromptBuildError",
    "AnswerFormatError",
    "VANILLA_PREAMBLE",
    "PROMPT_STEP_PREAMBLE",
    "SHARED_BODY",
    "FORMAT_REMINDER",
    "render_question_block",
    "build_prompt",
    "parse_answers",
]


VANILLA_PREAMBLE = (
    "You are a professional literary translator with extensive experience. "
    "Now you are translating a work of great aesthetic value and cultural "
    "significance. You need to check if the translation covers all translation "
    "aspects by answering YES, NO or MAYBE to the following questions. Please "
    "be honest with your assessment and consider all aspects of translation "
    "quality."
)

PROMPT_STEP_PREAMBLE = (
    "You are a professional literary translator with extensive experience. "
    "Now you're translating a work of great aesthetic value and cultural "
    "significance. You need to check if the translation covers all translation "
    "aspects by answering YES, NO or MAYBE to the following questions.\n"
    "\n"
    "For each of the questions,\n"
    "1. Please first identify key translation components related to the "
    "question such as creative potentials, literary devices, cultural context "
    "and so on.\n"
    "2. After thoughtful reflection, clearly indicate your answer by "
    "responding YES, NO, or MAYBE. Be honest and precise in your assessment, "
    "ensuring each judgment is thoughtfully justified by your analysis."
)

SHARED_BODY = (
    "Source text: {source}\n"
    "Translation: {translation}\n"
    "\n"
    "Please answer YES, NO, or MAYBE to each of the following questions:\n"
    "{questions}\n"
    "\n"
    "Format your response as a JSON object where each question number is a "
    "key and the answer (YES, NO, or MAYBE) is the value.\n"
    "Do not include explanations, only YES, NO, or MAYBE answers.\n"
    "Example format:\n"
    "{{ '1': 'YES', '2': 'NO', '3': 'MAYBE' }}\n"
    "\n"
    "Answer:"
)

# Appended verbatim when a judge response could not be parsed and the
# item is re-asked.
FORMAT_REMINDER = (
    "Reminder: respond with ONLY a JSON object mapping each question number "
    'from "1" to "{n}" to "YES", "NO", or "MAYBE", with no other text.'
)


class PromptBuildError(Exception):
    """Invalid inputs to prompt assembly."""


class AnswerFormatError(Exception):
    """A judge response could not be parsed into a complete answer sheet.

    `key` names the offending question number when one is identifiable.
    """

    def __init__(self, message: str, key: int | str | None = None):
        super().__init__(message)
        self.key = key


class TemplateVariant(str, Enum):
    VANILLA = "vanilla"
    PROMPT_STEP = "promptstep"
    QUESTION_STEP = "questionstep"

    @property
    def preamble(self) -> str:
        # QuestionStep reuses the Vanilla preamble; only its question
        # texts differ.
        if self is TemplateVariant.PROMPT_STEP:
            return PROMPT_STEP_PREAMBLE
        return VANILLA_PREAMBLE


class Answer(str, Enum):
    YES = "yes"
    NO = "no"
    MAYBE = "maybe"


@dataclass(frozen=True)
class AnswerSheet:
    """Complete Yes/No/Maybe verdicts keyed by display index 1..n."""

    answers: Mapping[int, Answer]
    n: int

    def __post_init__(self):
        expected = set(range(1, self.n + 1))
        got = set(self.answers)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise AnswerFormatError(
                f"answer sheet keys must be exactly 1..{self.n}; "
                f"missing {missing}, extra {extra}",
                key=(missing + extra or [None])[0],
            )

    def values_in_order(self) -> list[Answer]:
        return [self.answers[i] for i in range(1, self.n + 1)]


@dataclass(frozen=True)
class Prompt:
    """A fully rendered judge prompt.

    `text` is `preamble` + blank line + `body`.  The fingerprint is a
    content hash over the variant, the source/translation pair, and the
    question texts actually used, so distinct inputs yield distinct
    fingerprints (up to hash collision).
    """

    text: str
    variant: TemplateVariant
    question_count: int
    fingerprint: str
    preamble: str
    body: str
    source: str
    translation: str


def render_question_block(
    questions: Sequence[Question], variant: TemplateVariant
) -> str:
    """Number the questions 1..n and join them one per line.

    Display indices are consecutive and independent of the original
    question ids.  QuestionStep uses each question's step-instructed
    text and refuses questions that lack one.
    """
    if not questions:
        raise PromptBuildError("cannot render an empty question list")
    lines = []
    for i, q in enumerate(questions, start=1):
        if variant is TemplateVariant.QUESTION_STEP:
            if not q.step_text:
                raise PromptBuildError(
                    f"question {q.id} has no step-instructed text; "
                    "it cannot be used with the questionstep template"
                )
            body = q.step_text
        else:
            body = q.text
        lines.append(f"{i}. {body}")
    return "\n".join(lines)


def _fingerprint(
    variant: TemplateVariant, source: str, translation: str, block: str
) -> str:
    payload = json.dumps(
        [variant.value, source, translation, block],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_prompt(
    variant: TemplateVariant,
    source: str,
    translation: str,
    questions: Sequence[Question],
) -> Prompt:
    """Assemble the full prompt for one (source, translation) pair."""
    if not source:
        raise PromptBuildError("source text must be non-empty")
    if not translation:
        raise PromptBuildError("translation text must be non-empty")
    block = render_question_block(questions, variant)
    body = SHARED_BODY.format(
        source=source, translation=translation, questions=block
    )
    preamble = variant.preamble
    return Prompt(
        text=preamble + "\n\n" + body,
        variant=variant,
        question_count=len(questions),
        fingerprint=_fingerprint(variant, source, translation, block),
        preamble=preamble,
        body=body,
        source=source,
        translation=translation,
    )


_FENCE_RE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.DOTALL)


def _json_candidates(raw: str):
    """Yield substrings of `raw` that plausibly hold the answer object."""
    fenced = _FENCE_RE.search(raw)
    if fenced:
        yield fenced.group(1)
    start = raw.find("{")
    if start == -1:
        return
    # Balanced-brace scan from the first opening brace.
    depth = 0
    for i in range(start, len(raw)):
        if raw[i] == "{":
            depth += 1
        elif raw[i] == "}":
            depth -= 1
            if depth == 0:
                yield raw[start : i + 1]
                break
    end = raw.rfind("}")
    if end > start:
        yield raw[start : end + 1]


def _load_object(candidate: str) -> dict | None:
    for loader in (json.loads, ast.literal_eval):
        try:
            obj = loader(candidate)
        except (ValueError, SyntaxError):
            continue
        if isinstance(obj, dict):
            return obj
    # Last resort: the single-quoted example format with gremlins that
    # literal_eval rejects (e.g. unquoted keys are not handled; quote
    # normalization covers the common single-vs-double mix).
    try:
        obj = json.loads(candidate.replace("'", '"'))
    except ValueError:
        return None
    return obj if isinstance(obj, dict) else None


def parse_answers(raw: str, n: int) -> AnswerSheet:
    """Extract the first JSON answer object from a judge response.

    Tolerates surrounding prose, code fences, single-quoted objects, and
    case differences in the YES/NO/MAYBE values.  Requires keys exactly
    "1".."n"; every violation is reported with the offending key.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    obj = None
    for candidate in _json_candidates(raw):
        obj = _load_object(candidate)
        if obj is not None:
            break
    if obj is None:
        raise AnswerFormatError("no JSON object found in judge response")

    answers: dict[int, Answer] = {}
    for key, value in obj.items():
        try:
            idx = int(str(key).strip())
        except ValueError:
            raise AnswerFormatError(f"non-numeric answer key {key!r}", key=key)
        if not 1 <= idx <= n:
            raise AnswerFormatError(
                f"unknown answer key {idx} (expected 1..{n})", key=idx
            )
        if idx in answers:
            raise AnswerFormatError(f"duplicate answer key {idx}", key=idx)
        norm = str(value).strip().lower()
        if norm not in ("yes", "no", "maybe"):
            raise AnswerFormatError(
                f"answer for key {idx} is {value!r}, not YES/NO/MAYBE", key=idx
            )
        answers[idx] = Answer(norm)
    for idx in range(1, n + 1):
        if idx not in answers:
            raise AnswerFormatError(f"missing answer for key {idx}", key=idx)
    return AnswerSheet(answers=answers, n=n)

"""Evaluation-corpus data model, JSONL ingestion, and triplet construction.

A corpus file is JSON Lines: a header object first, then one record per
line.  The header declares the format and, when quality judgments are
present, their orientation.  Penalty-style scores (lower is better) are
negated at ingestion so that a larger stored score always means a better
translation; serialization always emits the normalized orientation.

Example::

    {"format": "transproqa-corpus", "version": 1, "orientation": "lower-is-better"}
    {"dataset": "d", "lang_pair": "de-en", "segment_id": "s1", "source": "...",
     "system_id": "gpt-4o", "origin": "machine", "target": "...",
     "gold_kind": "quality", "gold_score": 5.0}
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

__all__ = [
    "Origin",
    "QualityJudgment",
    "PreferenceJudgment",
    "GoldJudgment",
    "Segment",
    "TranslationRecord",
    "Corpus",
    "Triplet",
    "TripletStats",
    "CorpusFormatError",
    "BestHumanError",
    "ingest_jsonl",
    "write_jsonl",
    "best_human",
    "build_triplets",
    "write_triplets",
]

HEADER_FORMAT = "transproqa-corpus"


class CorpusFormatError(Exception):
    """Schema or consistency violation, with the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class BestHumanError(Exception):
    """best_human preconditions not met for a segment's records."""


class Origin(str, Enum):
    HUMAN = "human"
    MACHINE = "machine"


@dataclass(frozen=True)
class QualityJudgment:
    """Scalar gold quality; stored oriented so higher is always better."""

    score: float


@dataclass(frozen=True)
class PreferenceJudgment:
    """Membership in a direct pairwise preference annotation."""

    pair_id: str
    preferred: bool


GoldJudgment = Union[QualityJudgment, PreferenceJudgment]


@dataclass(frozen=True)
class Segment:
    dataset: str
    lang_pair: str
    segment_id: str
    source_text: str

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.dataset, self.lang_pair, self.segment_id)


@dataclass(frozen=True)
class TranslationRecord:
    segment: Segment
    system_id: str
    origin: Origin
    text: str
    gold: Optional[GoldJudgment] = None

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (*self.segment.key, self.system_id)


@dataclass
class Corpus:
    """Immutable-after-ingest container preserving file order.

    `preference_ties` lists pair ids annotated with no preferred side.
    `stats` echoes ingestion counts (records read, pairs dropped, ...).
    """

    segments: list[Segment] = field(default_factory=list)
    records: list[TranslationRecord] = field(default_factory=list)
    preference_ties: set[str] = field(default_factory=set)
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TranslationRecord]:
        return iter(self.records)

    def records_for(self, segment: Segment) -> list[TranslationRecord]:
        return [r for r in self.records if r.segment.key == segment.key]

    def by_segment(self) -> list[tuple[Segment, list[TranslationRecord]]]:
        grouped: dict[tuple, list[TranslationRecord]] = {}
        for r in self.records:
            grouped.setdefault(r.segment.key, []).append(r)
        return [(seg, grouped.get(seg.key, [])) for seg in self.segments]

    def preference_pairs(self) -> dict[str, tuple[TranslationRecord, TranslationRecord]]:
        """pair_id -> its two records, ordered by system id."""
        found: dict[str, list[TranslationRecord]] = {}
        for r in self.records:
            if isinstance(r.gold, PreferenceJudgment):
                found.setdefault(r.gold.pair_id, []).append(r)
        return {
            pid: tuple(sorted(pair, key=lambda r: r.system_id))
            for pid, pair in sorted(found.items())
        }


def _parse_header(line: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"header is not valid JSON: {exc}", line=1)
    if not isinstance(header, dict) or header.get("format") != HEADER_FORMAT:
        raise CorpusFormatError(
            f'first line must be a header object with "format": "{HEADER_FORMAT}"',
            line=1,
        )
    orientation = header.get("orientation")
    if orientation not in (None, "higher-is-better", "lower-is-better"):
        raise CorpusFormatError(
            f"unknown orientation {orientation!r} "
            '(expected "higher-is-better" or "lower-is-better")',
            line=1,
        )
    return header


_REQUIRED_FIELDS = ("dataset", "lang_pair", "segment_id", "source", "system_id", "origin", "target")


def _parse_record(
    row: dict, line_no: int, orientation: Optional[str]
) -> TranslationRecord:
    for name in _REQUIRED_FIELDS:
        if name not in row:
            raise CorpusFormatError(f"missing field {name!r}", line=line_no)
        if not isinstance(row[name], str) or row[name] == "":
            raise CorpusFormatError(
                f"field {name!r} must be a non-empty string", line=line_no
            )
    try:
        origin = Origin(row["origin"])
    except ValueError:
        raise CorpusFormatError(
            f"origin must be \"human\" or \"machine\", got {row['origin']!r}",
            line=line_no,
        )
    gold: Optional[GoldJudgment] = None
    kind = row.get("gold_kind")
    if kind == "quality":
        if orientation is None:
            raise CorpusFormatError(
                "quality judgment present but the header declares no orientation",
                line=line_no,
            )
        score = row.get("gold_score")
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise CorpusFormatError(
                f"gold_score must be a number, got {score!r}", line=line_no
            )
        oriented = float(score) if orientation == "higher-is-better" else -float(score)
        gold = QualityJudgment(score=oriented)
    elif kind == "preference":
        pair_id = row.get("gold_pair_id")
        preferred = row.get("gold_preferred")
        if not isinstance(pair_id, str) or not pair_id:
            raise CorpusFormatError(
                "preference judgment requires a non-empty gold_pair_id", line=line_no
            )
        if not isinstance(preferred, bool):
            raise CorpusFormatError(
                "preference judgment requires boolean gold_preferred", line=line_no
            )
        gold = PreferenceJudgment(pair_id=pair_id, preferred=preferred)
    elif kind is not None:
        raise CorpusFormatError(f"unknown gold_kind {kind!r}", line=line_no)
    segment = Segment(
        dataset=row["dataset"],
        lang_pair=row["lang_pair"],
        segment_id=row["segment_id"],
        source_text=row["source"],
    )
    return TranslationRecord(
        segment=segment,
        system_id=row["system_id"],
        origin=origin,
        text=row["target"],
        gold=gold,
    )


def ingest_jsonl(
    path: str | Path, drop_machine_preferred_pairs: bool = False
) -> Corpus:
    """Read and validate a corpus file.

    `drop_machine_preferred_pairs` removes preference pairs in which a
    machine output was preferred over a human translation (both records
    of the pair are dropped and counted in stats).
    """
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines:
        raise CorpusFormatError("empty file: missing header line", line=1)
    header = _parse_header(lines[0])
    orientation = header.get("orientation")

    records: list[TranslationRecord] = []
    record_lines: dict[tuple, int] = {}
    segments: dict[tuple, Segment] = {}
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            row = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"invalid JSON: {exc}", line=line_no)
        if not isinstance(row, dict):
            raise CorpusFormatError("record line must be a JSON object", line=line_no)
        rec = _parse_record(row, line_no, orientation)
        if rec.key in record_lines:
            raise CorpusFormatError(
                f"duplicate record for segment {rec.segment.key} "
                f"system {rec.system_id!r} (first seen at line {record_lines[rec.key]})",
                line=line_no,
            )
        record_lines[rec.key] = line_no
        seen = segments.get(rec.segment.key)
        if seen is None:
            segments[rec.segment.key] = rec.segment
        elif seen.source_text != rec.segment.source_text:
            raise CorpusFormatError(
                f"segment {rec.segment.key} re-declared with a different source text",
                line=line_no,
            )
        records.append(rec)

    pair_members: dict[str, list[TranslationRecord]] = {}
    for rec in records:
        if isinstance(rec.gold, PreferenceJudgment):
            pair_members.setdefault(rec.gold.pair_id, []).append(rec)
    ties: set[str] = set()
    for pid, members in pair_members.items():
        if len(members) != 2:
            raise CorpusFormatError(
                f"preference pair {pid!r} has {len(members)} record(s), expected 2"
            )
        a, b = members
        if a.segment.key != b.segment.key:
            raise CorpusFormatError(
                f"preference pair {pid!r} spans two different segments"
            )
        n_pref = sum(m.gold.preferred for m in members)
        if n_pref == 2:
            raise CorpusFormatError(
                f"preference pair {pid!r} marks both records preferred"
            )
        if n_pref == 0:
            ties.add(pid)

    dropped_pairs = 0
    if drop_machine_preferred_pairs:
        to_drop: set[str] = set()
        for pid, members in pair_members.items():
            origins = {m.origin for m in members}
            if origins == {Origin.HUMAN, Origin.MACHINE}:
                winner = next((m for m in members if m.gold.preferred), None)
                if winner is not None and winner.origin is Origin.MACHINE:
                    to_drop.add(pid)
        if to_drop:
            records = [
                r
                for r in records
                if not (
                    isinstance(r.gold, PreferenceJudgment)
                    and r.gold.pair_id in to_drop
                )
            ]
            dropped_pairs = len(to_drop)
            ties -= to_drop
            kept_keys = {r.segment.key for r in records}
            segments = {k: s for k, s in segments.items() if k in kept_keys}

    corpus = Corpus(
        segments=list(segments.values()),
        records=records,
        preference_ties=ties,
        stats={
            "segments": len(segments),
            "records": len(records),
            "quality_records": sum(
                isinstance(r.gold, QualityJudgment) for r in records
            ),
            "preference_pairs": len(pair_members) - dropped_pairs,
            "preference_ties": len(ties),
            "dropped_machine_preferred_pairs": dropped_pairs,
        },
    )
    return corpus


def write_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Serialize a corpus; scores are emitted in higher-is-better form."""
    out = [
        json.dumps(
            {"format": HEADER_FORMAT, "version": 1, "orientation": "higher-is-better"},
            sort_keys=True,
        )
    ]
    for rec in corpus.records:
        row = {
            "dataset": rec.segment.dataset,
            "lang_pair": rec.segment.lang_pair,
            "segment_id": rec.segment.segment_id,
            "source": rec.segment.source_text,
            "system_id": rec.system_id,
            "origin": rec.origin.value,
            "target": rec.text,
        }
        if isinstance(rec.gold, QualityJudgment):
            row["gold_kind"] = "quality"
            row["gold_score"] = rec.gold.score
        elif isinstance(rec.gold, PreferenceJudgment):
            row["gold_kind"] = "preference"
            row["gold_pair_id"] = rec.gold.pair_id
            row["gold_preferred"] = rec.gold.preferred
        out.append(json.dumps(row, ensure_ascii=False, sort_keys=True))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def best_human(records: Iterable[TranslationRecord]) -> TranslationRecord:
    """The highest-rated human translation among one segment's records.

    A single human record wins by default, rated or not.  With several,
    every human must carry a quality judgment; ties break toward the
    lexicographically smallest system id.
    """
    humans = [r for r in records if r.origin is Origin.HUMAN]
    if not humans:
        raise BestHumanError("no human record for this segment")
    if len(humans) == 1:
        return humans[0]
    unrated = [r.system_id for r in humans if not isinstance(r.gold, QualityJudgment)]
    if unrated:
        raise BestHumanError(
            f"multiple human records but no quality judgment on: {sorted(unrated)}"
        )
    top = max(r.gold.score for r in humans)
    return min(
        (r for r in humans if r.gold.score == top), key=lambda r: r.system_id
    )


@dataclass(frozen=True)
class Triplet:
    source: str
    positive: str
    negative: str
    lang_pair: str
    negative_system: str


@dataclass(frozen=True)
class TripletStats:
    emitted: int
    segments_used: int
    skipped_no_human: int
    skipped_short_source: int


def _triplet_positive(humans: list[TranslationRecord]) -> TranslationRecord:
    # Triplet building must not fail on unrated multi-human segments the
    # way best_human does, so fall back to the smallest system id there.
    try:
        return best_human(humans)
    except BestHumanError:
        return min(humans, key=lambda r: r.system_id)


def build_triplets(
    corpus: Corpus, min_tokens: int = 10
) -> tuple[list[Triplet], TripletStats]:
    """One (source, best human, machine) triplet per machine record.

    Segments without a human translation are skipped, as are segments
    whose source has fewer than `min_tokens` whitespace-delimited
    tokens.  Output order is (segment key, machine system id).
    """
    triplets: list[Triplet] = []
    used = 0
    no_human = 0
    short = 0
    for segment, records in sorted(corpus.by_segment(), key=lambda t: t[0].key):
        humans = [r for r in records if r.origin is Origin.HUMAN]
        if not humans:
            no_human += 1
            continue
        if len(segment.source_text.split()) < min_tokens:
            short += 1
            continue
        machines = sorted(
            (r for r in records if r.origin is Origin.MACHINE),
            key=lambda r: r.system_id,
        )
        if not machines:
            continue
        positive = _triplet_positive(humans)
        used += 1
        for m in machines:
            triplets.append(
                Triplet(
                    source=segment.source_text,
                    positive=positive.text,
                    negative=m.text,
                    lang_pair=segment.lang_pair,
                    negative_system=m.system_id,
                )
            )
    return triplets, TripletStats(
        emitted=len(triplets),
        segments_used=used,
        skipped_no_human=no_human,
        skipped_short_source=short,
    )


def write_triplets(triplets: Iterable[Triplet], path: str | Path) -> int:
    """Write triplets as JSONL; returns the number written."""
    rows = [
        json.dumps(
            {
                "src": t.source,
                "pos": t.positive,
                "neg": t.negative,
                "lang_pair": t.lang_pair,
                "neg_system": t.negative_system,
            },
            ensure_ascii=False,
            sort_keys=True,
        )
        for t in triplets
    ]
    Path(path).write_text("\n".join(rows) + ("\n" if rows else ""), encoding="utf-8")
    return len(rows)

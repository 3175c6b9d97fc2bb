from __future__ import annotations

import json

import pytest

from transproqa import (
    BestHumanError,
    Corpus,
    CorpusFormatError,
    Origin,
    PreferenceJudgment,
    QualityJudgment,
    Triplet,
    best_human,
    build_triplets,
    ingest_jsonl,
    write_jsonl,
    write_triplets,
)

HEADER = {"format": "transproqa-corpus", "version": 1}


def record(
    segment_id="s1",
    system_id="sys-a",
    origin="machine",
    source="ein Quelltext mit vielen Wörtern darin, mehr als zehn Stück",
    target="a target text",
    **gold,
):
    row = {
        "dataset": "d",
        "lang_pair": "de-en",
        "segment_id": segment_id,
        "source": source,
        "system_id": system_id,
        "origin": origin,
        "target": target,
    }
    row.update(gold)
    return row


def corpus_file(tmp_path, rows, header=None, name="c.jsonl"):
    lines = [json.dumps(header or HEADER, ensure_ascii=False)]
    lines += [json.dumps(r, ensure_ascii=False) for r in rows]
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


QUALITY_HEADER = {**HEADER, "orientation": "lower-is-better"}


def test_ingest_basic_grouping(tmp_path):
    rows = [
        record(system_id="sys-a", origin="human"),
        record(system_id="sys-b"),
        record(system_id="sys-c"),
    ]
    corpus = ingest_jsonl(corpus_file(tmp_path, rows))
    assert len(corpus.segments) == 1
    assert len(corpus.records) == 3
    assert corpus.stats["segments"] == 1
    assert corpus.stats["records"] == 3
    assert corpus.stats["quality_records"] == 0
    segment, records = corpus.by_segment()[0]
    assert segment.segment_id == "s1"
    assert [r.system_id for r in records] == ["sys-a", "sys-b", "sys-c"]
    assert records[0].origin is Origin.HUMAN


def test_duplicate_record_rejected_with_line_numbers(tmp_path):
    rows = [record(system_id="sys-a"), record(system_id="sys-a")]
    with pytest.raises(CorpusFormatError) as info:
        ingest_jsonl(corpus_file(tmp_path, rows))
    message = str(info.value)
    assert message.startswith("line 3:")
    assert "first seen at line 2" in message


def test_source_redeclaration_rejected(tmp_path):
    rows = [
        record(system_id="sys-a", source="erste Fassung der Quelle hier"),
        record(system_id="sys-b", source="eine ganz andere Quelle"),
    ]
    with pytest.raises(CorpusFormatError, match="different source text"):
        ingest_jsonl(corpus_file(tmp_path, rows))


def test_missing_header_rejected(tmp_path):
    path = tmp_path / "no_header.jsonl"
    path.write_text(json.dumps(record()) + "\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError, match="header"):
        ingest_jsonl(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(CorpusFormatError):
        ingest_jsonl(path)


def test_unknown_orientation_rejected(tmp_path):
    header = {**HEADER, "orientation": "sideways"}
    with pytest.raises(CorpusFormatError, match="orientation"):
        ingest_jsonl(corpus_file(tmp_path, [record()], header=header))


def test_quality_without_orientation_rejected(tmp_path):
    rows = [record(gold_kind="quality", gold_score=3.0)]
    with pytest.raises(CorpusFormatError, match="orientation"):
        ingest_jsonl(corpus_file(tmp_path, rows))


def test_missing_field_rejected(tmp_path):
    row = record()
    del row["target"]
    with pytest.raises(CorpusFormatError, match="target"):
        ingest_jsonl(corpus_file(tmp_path, [row]))


def test_lower_is_better_scores_negated(tmp_path):
    rows = [
        record(system_id="sys-a", gold_kind="quality", gold_score=2.0),
        record(system_id="sys-b", gold_kind="quality", gold_score=5.0),
    ]
    corpus = ingest_jsonl(corpus_file(tmp_path, rows, header=QUALITY_HEADER))
    by_id = {r.system_id: r for r in corpus.records}
    assert by_id["sys-a"].gold == QualityJudgment(score=-2.0)
    assert by_id["sys-b"].gold == QualityJudgment(score=-5.0)
    # after orientation the penalty-2 system ranks above the penalty-5 one
    assert by_id["sys-a"].gold.score > by_id["sys-b"].gold.score


def test_higher_is_better_scores_kept(tmp_path):
    header = {**HEADER, "orientation": "higher-is-better"}
    rows = [record(gold_kind="quality", gold_score=4.5)]
    corpus = ingest_jsonl(corpus_file(tmp_path, rows, header=header))
    assert corpus.records[0].gold == QualityJudgment(score=4.5)


def preference_rows(a_preferred=True, b_preferred=False):
    return [
        record(
            system_id="sys-a", origin="human",
            gold_kind="preference", gold_pair_id="p1", gold_preferred=a_preferred,
        ),
        record(
            system_id="sys-b",
            gold_kind="preference", gold_pair_id="p1", gold_preferred=b_preferred,
        ),
    ]


def test_preference_pair_ingest(tmp_path):
    corpus = ingest_jsonl(corpus_file(tmp_path, preference_rows()))
    pairs = corpus.preference_pairs()
    assert list(pairs) == ["p1"]
    a, b = pairs["p1"]
    assert (a.system_id, b.system_id) == ("sys-a", "sys-b")
    assert a.gold == PreferenceJudgment(pair_id="p1", preferred=True)
    assert corpus.preference_ties == set()
    assert corpus.stats["preference_pairs"] == 1


def test_preference_tie_flagged(tmp_path):
    corpus = ingest_jsonl(
        corpus_file(tmp_path, preference_rows(a_preferred=False, b_preferred=False))
    )
    assert corpus.preference_ties == {"p1"}
    assert corpus.stats["preference_ties"] == 1


def test_both_preferred_rejected(tmp_path):
    rows = preference_rows(a_preferred=True, b_preferred=True)
    with pytest.raises(CorpusFormatError, match="both"):
        ingest_jsonl(corpus_file(tmp_path, rows))


def test_orphan_preference_rejected(tmp_path):
    rows = preference_rows()[:1]
    with pytest.raises(CorpusFormatError, match="expected 2"):
        ingest_jsonl(corpus_file(tmp_path, rows))


def test_cross_segment_pair_rejected(tmp_path):
    rows = preference_rows()
    rows[1]["segment_id"] = "s2"
    with pytest.raises(CorpusFormatError, match="two different segments"):
        ingest_jsonl(corpus_file(tmp_path, rows))


def test_drop_machine_preferred_pairs(tmp_path):
    rows = preference_rows(a_preferred=False, b_preferred=True)  # machine wins
    rows += [
        record(
            segment_id="s2", system_id="sys-a", origin="human",
            gold_kind="preference", gold_pair_id="p2", gold_preferred=True,
        ),
        record(
            segment_id="s2", system_id="sys-b",
            gold_kind="preference", gold_pair_id="p2", gold_preferred=False,
        ),
    ]
    kept = ingest_jsonl(corpus_file(tmp_path, rows))
    assert kept.stats["preference_pairs"] == 2

    filtered = ingest_jsonl(
        corpus_file(tmp_path, rows, name="f.jsonl"), drop_machine_preferred_pairs=True
    )
    assert filtered.stats["dropped_machine_preferred_pairs"] == 1
    assert filtered.stats["preference_pairs"] == 1
    assert list(filtered.preference_pairs()) == ["p2"]
    assert len(filtered.records) == 2
    assert len(filtered.segments) == 1


def test_write_ingest_round_trip(tmp_path):
    rows = [
        record(system_id="sys-a", origin="human", gold_kind="quality", gold_score=1.0),
        record(system_id="sys-b", gold_kind="quality", gold_score=6.5),
        record(
            segment_id="s2", system_id="sys-a", origin="human",
            gold_kind="preference", gold_pair_id="p1", gold_preferred=True,
        ),
        record(
            segment_id="s2", system_id="sys-b",
            gold_kind="preference", gold_pair_id="p1", gold_preferred=False,
        ),
    ]
    corpus = ingest_jsonl(corpus_file(tmp_path, rows, header=QUALITY_HEADER))
    out = tmp_path / "round.jsonl"
    write_jsonl(corpus, out)
    again = ingest_jsonl(out)
    assert again.records == corpus.records
    assert [s.key for s in again.segments] == [s.key for s in corpus.segments]
    # second serialization is byte-identical (canonical form reached)
    out2 = tmp_path / "round2.jsonl"
    write_jsonl(again, out2)
    assert out.read_bytes() == out2.read_bytes()


# --- best human ------------------------------------------------------------


def human(system_id, score=None):
    gold = QualityJudgment(score=score) if score is not None else None
    from transproqa import Segment, TranslationRecord

    seg = Segment(dataset="d", lang_pair="de-en", segment_id="s1", source_text="x")
    return TranslationRecord(
        segment=seg, system_id=system_id, origin=Origin.HUMAN, text=f"t-{system_id}",
        gold=gold,
    )


def machine(system_id):
    from transproqa import Segment, TranslationRecord

    seg = Segment(dataset="d", lang_pair="de-en", segment_id="s1", source_text="x")
    return TranslationRecord(
        segment=seg, system_id=system_id, origin=Origin.MACHINE, text=f"t-{system_id}"
    )


def test_best_human_singleton_needs_no_score():
    only = human("trans-a")
    assert best_human([only, machine("mt-1")]) is only


def test_best_human_prefers_higher_oriented_score():
    a = human("trans-a", score=-5.0)
    b = human("trans-b", score=-2.0)
    assert best_human([a, b]) is b


def test_best_human_tie_breaks_by_system_id():
    a = human("trans-a", score=-2.0)
    b = human("trans-b", score=-2.0)
    assert best_human([b, a]) is a


def test_best_human_requires_humans():
    with pytest.raises(BestHumanError, match="no human"):
        best_human([machine("mt-1")])


def test_best_human_multi_unrated_rejected():
    a = human("trans-a", score=-2.0)
    b = human("trans-b")
    with pytest.raises(BestHumanError, match="trans-b"):
        best_human([a, b])


# --- triplets ----------------------------------------------------------------


def test_paired_fixture_yields_exact_triplet(fixtures_dir):
    corpus = ingest_jsonl(fixtures_dir / "paired_lit_corpus.jsonl")
    triplets, stats = build_triplets(corpus, min_tokens=10)
    assert stats.emitted == 1
    assert triplets[0] == Triplet(
        source=(
            "Am wiederholtesten aber fragte der treue Diener, fast so oft er "
            "Ottilien sah, nach der Rückkunft des Herrn und nach dem Termin "
            "derselben."
        ),
        positive=(
            "But almost every time the faithful servant saw Ottilie what he "
            "most repeatedly asked about was the master’s return and when "
            "that was going to happen."
        ),
        negative=(
            "Most frequently, however, the faithful servant asked, almost "
            "every time he saw Ottilie, about the return of his master and "
            "the date of that return."
        ),
        lang_pair="de-en",
        negative_system="gpt-4o-mini",
    )


def test_one_human_two_machines_give_two_triplets(tmp_path):
    rows = [
        record(system_id="trans-a", origin="human"),
        record(system_id="mt-b"),
        record(system_id="mt-a"),
    ]
    corpus = ingest_jsonl(corpus_file(tmp_path, rows))
    triplets, stats = build_triplets(corpus)
    assert stats.emitted == 2
    assert [t.negative_system for t in triplets] == ["mt-a", "mt-b"]
    assert all(t.positive == "a target text" for t in triplets)


def test_token_filter_boundary(fixtures_dir):
    corpus = ingest_jsonl(fixtures_dir / "token_filter_corpus.jsonl")
    triplets, stats = build_triplets(corpus, min_tokens=10)
    assert stats.emitted == 1
    assert stats.skipped_short_source == 1
    assert len(triplets[0].source.split()) == 10

    relaxed, relaxed_stats = build_triplets(corpus, min_tokens=9)
    assert relaxed_stats.emitted == 2
    assert relaxed_stats.skipped_short_source == 0


def test_no_human_segment_skipped_and_counted(tmp_path):
    rows = [
        record(system_id="mt-a"),
        record(segment_id="s2", system_id="trans-a", origin="human"),
        record(segment_id="s2", system_id="mt-a"),
    ]
    corpus = ingest_jsonl(corpus_file(tmp_path, rows))
    triplets, stats = build_triplets(corpus)
    assert stats.skipped_no_human == 1
    assert stats.segments_used == 1
    assert stats.emitted == 1


def test_multi_unrated_humans_fall_back_to_smallest_id(tmp_path):
    rows = [
        record(system_id="trans-b", origin="human", target="translation b"),
        record(system_id="trans-a", origin="human", target="translation a"),
        record(system_id="mt-x"),
    ]
    corpus = ingest_jsonl(corpus_file(tmp_path, rows))
    triplets, _ = build_triplets(corpus)
    assert triplets[0].positive == "translation a"


def test_triplet_count_matches_machine_count(tmp_path):
    rows = []
    machine_total = 0
    for i, n_machines in enumerate((1, 3, 2)):
        seg = f"s{i}"
        rows.append(record(segment_id=seg, system_id="trans-a", origin="human"))
        for j in range(n_machines):
            rows.append(record(segment_id=seg, system_id=f"mt-{j}"))
        machine_total += n_machines
    corpus = ingest_jsonl(corpus_file(tmp_path, rows))
    triplets, stats = build_triplets(corpus)
    assert stats.emitted == machine_total == len(triplets)
    assert stats.segments_used == 3


def test_write_triplets_format(tmp_path):
    t = Triplet(
        source="s", positive="p", negative="n", lang_pair="zh-en",
        negative_system="mt",
    )
    out = tmp_path / "t.jsonl"
    assert write_triplets([t], out) == 1
    row = json.loads(out.read_text("utf-8"))
    assert row == {
        "src": "s", "pos": "p", "neg": "n", "lang_pair": "zh-en", "neg_system": "mt",
    }


def test_write_triplets_empty(tmp_path):
    out = tmp_path / "empty.jsonl"
    assert write_triplets([], out) == 0
    assert out.read_text("utf-8") == ""

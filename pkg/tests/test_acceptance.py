"""Acceptance gate: one test per release criterion.

Each test prints a single PASS line when its criterion holds (visible
with ``pytest -s``); with plain ``pytest -v`` the test names themselves
give the per-criterion pass/fail report.  Tolerances are part of the
criteria and are asserted as stated, not loosened.
"""
from __future__ import annotations

import json
import random
import time

import numpy as np
import pytest

from transproqa import (
    AdequacyLevel,
    ScoredPair,
    ScoringMode,
    TemplateVariant,
    acc_eq,
    adequacy,
    aggregate,
    answer_value,
    build_triplets,
    ingest_jsonl,
    kendall_tau,
    load_bank,
    load_fixture_distributions,
    permutation_test,
    resolve_statuses,
    sensitivity_filter,
    vote_filter,
)
from transproqa.cli import main as cli_main
from transproqa.prompts import Answer
from transproqa.questions import QuestionStatus

from .conftest import FIXTURES, make_question, make_sheet
from .oracles import (
    acc_eq_exhaustive,
    exact_mean,
    exact_weighted_mean,
    tau_by_counting,
)

SELECTED_IDS = {
    1, 4, 7, 12, 13, 14, 15, 18, 20, 21, 22, 24, 26, 28, 29, 30, 31, 33, 35,
    36, 39, 41, 42, 44, 45,
}


def _passed(label: str) -> None:
    print(f"PASS {label}")


def test_criterion_question_bank_integrity():
    start = time.perf_counter()
    bank = load_bank()
    elapsed = time.perf_counter() - start

    assert len(bank) == 45
    selected = [q for q in bank if q.status is QuestionStatus.SELECTED]
    assert len(selected) == 25
    assert all(q.vote >= 4.00 for q in selected)
    assert all(q.step_text for q in selected)
    # load_bank verifies the bundled checksum internally; reloading would
    # have raised if the texts had drifted from the recorded digest.
    assert elapsed < 1.0
    _passed(
        "question bank: 45 questions, 25 selected with vote >= 4.00 and "
        f"step variants, checksum verified, loaded in {elapsed:.3f}s"
    )


def test_criterion_selection_reconstruction():
    bank = load_bank()
    dists = load_fixture_distributions()
    final = resolve_statuses(bank, vote_filter(bank, 4.0), sensitivity_filter(dists))
    reconstructed = {
        qid for qid, status in final.items() if status is QuestionStatus.SELECTED
    }
    assert reconstructed == SELECTED_IDS
    for q in bank:
        assert final[q.id] is q.status
    _passed("selection reconstruction: fixture filters rebuild all 25 selected ids")


def test_criterion_scoring_matches_arithmetic_oracle():
    rng = random.Random(20240817)
    answers_pool = [Answer.YES, Answer.NO, Answer.MAYBE]
    for _ in range(200):
        n = rng.randint(1, 25)
        answers = [rng.choice(answers_pool) for _ in range(n)]
        votes = [rng.randint(100, 500) / 100 for _ in range(n)]
        questions = [make_question(i + 1, vote=votes[i]) for i in range(n)]
        sheet = make_sheet(answers)
        values = [answer_value(a) for a in answers]

        unweighted = aggregate(sheet, questions, ScoringMode.UNWEIGHTED).overall
        assert abs(unweighted - float(exact_mean(values))) <= 1e-12
        weighted = aggregate(sheet, questions, ScoringMode.WEIGHTED).overall
        assert abs(weighted - float(exact_weighted_mean(values, votes))) <= 1e-12

        flat = [make_question(i + 1, vote=4.5) for i in range(n)]
        assert (
            abs(
                aggregate(sheet, flat, ScoringMode.WEIGHTED).overall
                - aggregate(sheet, flat, ScoringMode.UNWEIGHTED).overall
            )
            <= 1e-12
        )

    ladder = [Answer.NO, Answer.MAYBE, Answer.YES]
    for _ in range(1000):
        n = rng.randint(2, 25)
        answers = [rng.choice(answers_pool) for _ in range(n)]
        votes = [rng.randint(100, 500) / 100 for _ in range(n)]
        questions = [make_question(i + 1, vote=votes[i]) for i in range(n)]
        mode = rng.choice(list(ScoringMode))
        idx = rng.randrange(n)
        rank = ladder.index(answers[idx])
        new_rank = rng.choice([r for r in range(3) if r != rank])
        before = aggregate(make_sheet(answers), questions, mode).overall
        flipped = list(answers)
        flipped[idx] = ladder[new_rank]
        after = aggregate(make_sheet(flipped), questions, mode).overall
        if new_rank > rank:
            assert after > before
        else:
            assert after < before
    _passed(
        "scoring oracle: 200 random sheets within 1e-12 in both modes, "
        "mode agreement under equal votes, 1000 monotone flips"
    )


def _random_pairs(rng, n, grid=8):
    tuples = []
    for _ in range(n):
        tuples.append(
            (
                rng.randint(0, grid) / 4,
                rng.randint(0, grid) / 4,
                rng.randint(0, grid) / 4,
                rng.randint(0, grid) / 4,
            )
        )
    return tuples


def _as_scored_pairs(tuples):
    return [
        ScoredPair(
            segment_ref=("d", "xx-yy", f"s{i}"),
            lang_pair="xx-yy",
            system_a="sys-a",
            system_b="sys-b",
            gold_a=ga,
            gold_b=gb,
            metric_a=ma,
            metric_b=mb,
        )
        for i, (ga, gb, ma, mb) in enumerate(tuples)
    ]


def test_criterion_acc_eq_matches_exhaustive_search():
    rng = random.Random(11)
    checked = 0
    while checked < 500:
        tuples = _random_pairs(rng, rng.randint(1, 8))
        pairs = _as_scored_pairs(tuples)
        accuracy, eps = acc_eq(pairs)
        oracle_acc, oracle_eps = acc_eq_exhaustive(tuples)
        assert accuracy == oracle_acc
        assert eps == oracle_eps

        d = np.array([ma - mb for _, _, ma, mb in tuples])
        g = np.sign([ga - gb for ga, gb, _, _ in tuples])
        acc_at_zero = float(
            np.mean(((g == 0) & (d == 0)) | ((g != 0) & (np.sign(d) == g)))
        )
        assert accuracy >= acc_at_zero
        checked += 1
    _passed(
        "acc-eq oracle: 500 random instances equal exhaustive threshold "
        "search exactly; calibrated accuracy never below the zero threshold"
    )


def test_criterion_kendall_tau_matches_pair_counting():
    rng = random.Random(13)
    checked = 0
    while checked < 500:
        tuples = _random_pairs(rng, rng.randint(1, 50))
        if all(ga == gb for ga, gb, _, _ in tuples):
            continue
        pairs = _as_scored_pairs(tuples)
        assert kendall_tau(pairs) == tau_by_counting(tuples)
        checked += 1

    agree = _as_scored_pairs([(1.0, 0.0, 0.9, 0.1), (0.0, 1.0, 0.2, 0.7)])
    assert kendall_tau(agree) == 1.0
    flipped = _as_scored_pairs([(1.0, 0.0, 0.1, 0.9), (0.0, 1.0, 0.7, 0.2)])
    assert kendall_tau(flipped) == -1.0
    _passed(
        "kendall tau oracle: 500 random instances equal direct counting; "
        "perfect agreement 1.0, reversal -1.0"
    )


def _adequacy_corpus(tmp_path, tie=False):
    header = {
        "format": "transproqa-corpus",
        "version": 1,
        "orientation": "higher-is-better",
    }
    systems = [("trans-ed1", "human"), ("gpt-4o", "machine"), ("mt-basic", "machine")]
    lines = [json.dumps(header)]
    for i in range(5):
        for system_id, origin in systems:
            lines.append(
                json.dumps(
                    {
                        "dataset": "synthetic",
                        "lang_pair": "de-en",
                        "segment_id": f"s{i}",
                        "source": f"Quelle {i}",
                        "system_id": system_id,
                        "origin": origin,
                        "target": f"{system_id}-{i}",
                        "gold_kind": "quality",
                        "gold_score": 1.0,
                    }
                )
            )
    path = tmp_path / "adequacy.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    corpus = ingest_jsonl(path)
    metric = {"trans-ed1": 0.9, "gpt-4o": 0.6, "mt-basic": 0.3}
    if tie:
        metric["gpt-4o"] = metric["trans-ed1"]
    scores = {r.key: metric[r.system_id] for r in corpus.records}
    return corpus, scores


def test_criterion_adequacy_levels(tmp_path):
    corpus, scores = _adequacy_corpus(tmp_path)
    for level in AdequacyLevel:
        report = adequacy(corpus, scores, level, top_set=("gpt-4o",))
        assert report.success_rate == 1.0, level
        assert report.n_cases == 5

    tied_corpus, tied_scores = _adequacy_corpus(tmp_path, tie=True)
    top = adequacy(tied_corpus, tied_scores, AdequacyLevel.TOP_SYSTEMS,
                   top_set=("gpt-4o",))
    assert top.success_rate == 0.0
    allsys = adequacy(tied_corpus, tied_scores, AdequacyLevel.ALL_SYSTEMS,
                      top_set=("gpt-4o",))
    assert allsys.success_rate == 0.0
    rest = adequacy(tied_corpus, tied_scores, AdequacyLevel.ALL_BUT_TOP,
                    top_set=("gpt-4o",))
    assert rest.success_rate == 1.0
    _passed(
        "adequacy: strictly-best human scores 100% at all levels; a tie "
        "drops the affected levels to 0%"
    )


def test_criterion_permutation_test():
    start = time.perf_counter()
    rng = np.random.default_rng(99)
    gold_pairs = []
    noise_pairs = []
    for i in range(200):
        ga, gb = 2.0, 1.0
        ref = ("d", "xx-yy", f"s{i}")
        gold_pairs.append(
            ScoredPair(ref, "xx-yy", "sys-a", "sys-b", ga, gb, ga, gb)
        )
        na, nb = rng.random(2)
        noise_pairs.append(
            ScoredPair(ref, "xx-yy", "sys-a", "sys-b", ga, gb, float(na), float(nb))
        )

    for statistic in ("acc_eq", "kendall_tau"):
        p_same = permutation_test(
            gold_pairs, gold_pairs, statistic, n_perm=1000, seed=0
        )
        assert p_same >= 0.5, statistic
        p_beat = permutation_test(
            gold_pairs, noise_pairs, statistic, n_perm=1000, seed=0
        )
        assert p_beat < 0.05, statistic
        again = permutation_test(
            gold_pairs, noise_pairs, statistic, n_perm=1000, seed=0
        )
        assert again == p_beat, statistic

    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    _passed(
        "permutation test: identical metrics p >= 0.5, gold beats noise "
        f"with p < 0.05 at n_perm=1000, deterministic, in {elapsed:.2f}s"
    )


def test_criterion_end_to_end_determinism(tmp_path, capsys):
    start = time.perf_counter()
    corpus = str(FIXTURES / "e2e_corpus.jsonl")
    script = str(FIXTURES / "e2e_mock_script.json")
    cache_dir = str(tmp_path / "cache")

    outputs = []
    summaries = []
    for name in ("first.jsonl", "second.jsonl"):
        out = tmp_path / name
        code = cli_main(
            [
                "score", "--corpus", corpus, "--mock-script", script,
                "--cache-dir", cache_dir, "--out", str(out),
            ]
        )
        err = capsys.readouterr().err
        assert code == 0
        outputs.append(out.read_bytes())
        summaries.append(
            json.loads(err.splitlines()[0].removeprefix("score summary: "))
        )
    assert outputs[0] == outputs[1]
    assert summaries[1]["judge_calls"] == 0  # warm rerun: cache only

    scores_path = tmp_path / "first.jsonl"
    report_path = tmp_path / "report.json"
    code = cli_main(
        [
            "evaluate", "--corpus", corpus, "--scores", str(scores_path),
            "--out", str(report_path), "--n-perm", "1000",
        ]
    )
    capsys.readouterr()
    assert code == 0
    report = json.loads(report_path.read_text("utf-8"))
    assert report["correlation"]["n_pairs"] == 30

    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    _passed(
        "end-to-end: byte-identical score runs, zero judge calls when "
        f"cached, score+evaluate in {elapsed:.2f}s offline"
    )


def test_criterion_triplet_construction():
    corpus = ingest_jsonl(FIXTURES / "paired_lit_corpus.jsonl")
    triplets, stats = build_triplets(corpus, min_tokens=10)
    assert stats.emitted == 1
    only = triplets[0]
    assert only.source.startswith("Am wiederholtesten aber fragte der treue Diener")
    assert only.positive.startswith("But almost every time the faithful servant")
    assert only.negative.startswith("Most frequently, however, the faithful servant")
    assert only.lang_pair == "de-en"
    assert only.negative_system == "gpt-4o-mini"

    filter_corpus = ingest_jsonl(FIXTURES / "token_filter_corpus.jsonl")
    filtered, fstats = build_triplets(filter_corpus, min_tokens=10)
    sources = {len(t.source.split()) for t in filtered}
    assert sources == {10}
    assert fstats.skipped_short_source == 1
    _passed(
        "triplets: the paired-dataset fixture emits exactly its printed "
        "triplet; 9-token source excluded, 10-token source admitted"
    )

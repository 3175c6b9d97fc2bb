"""Batch command-line interface.

Subcommands: ``score`` (run the metric over a corpus), ``evaluate``
(meta-evaluate a scores file against gold judgments), ``select-questions``
(run the selection pipeline), ``make-triplets`` (build ranking training
triplets), and ``cache stats`` / ``cache clear``.

Settings resolve in three layers: built-in defaults, then a JSON config
file (``--config``), then explicit flags.  The API credential is only
ever read from the environment.  Logs go to stderr; data goes to files
or stdout.  Every report embeds the resolved configuration and seed, and
runs are deterministic given a fixed config and a cached or scripted
judge.

Exit codes: 0 success, 1 validation error, 2 judge failure, 3 partial
failure (some items scored, some not).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .corpus import (
    CorpusFormatError,
    build_triplets,
    ingest_jsonl,
    write_triplets,
)
from .gateway import (
    CachingJudge,
    GatewayError,
    HttpJudge,
    JudgeConfig,
    MockJudge,
    ResponseCache,
)
from .metaeval import DEFAULT_TOP_SET, MetaEvalError, evaluate_scores
from .prompts import AnswerFormatError, TemplateVariant
from .questions import BankFormatError, load_bank
from .scoring import ScoringMode, score_corpus
from .selection import (
    SelectionError,
    load_fixture_distributions,
    run_sensitivity,
    selection_report,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_JUDGE = 2
EXIT_PARTIAL = 3

SCORES_FORMAT = "transproqa-scores"


class CLIValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are validation errors (exit 1), not argparse's
    # default exit 2, which this tool reserves for judge failures.
    def error(self, message):
        raise CLIValidationError(message)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


_CONFIG_DEFAULTS = {
    "base_url": "",
    "model_name": "mock",
    "temperature": 0.0,
    "max_retries": 2,
    "parallelism": 4,
    "timeout": 60.0,
    "api_key_env": "TRANSPROQA_API_KEY",
    "preamble_as_system": False,
    "variant": "vanilla",
    "mode": "unweighted",
    "cache_dir": None,
    "mock_script": None,
    "seed": 0,
    "n_perm": 1000,
    "top_set": list(DEFAULT_TOP_SET),
    "min_tokens": 10,
    "vote_threshold": 4.0,
    "general_threshold": 0.90,
    "human_threshold": 0.20,
}


@dataclass
class RunConfig:
    """Fully resolved settings for one command invocation."""

    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name)

    def judge_config(self) -> JudgeConfig:
        v = self.values
        return JudgeConfig(
            base_url=v["base_url"],
            model_name=v["model_name"],
            temperature=v["temperature"],
            max_retries=v["max_retries"],
            parallelism=v["parallelism"],
            timeout=v["timeout"],
            api_key_env=v["api_key_env"],
            preamble_as_system=v["preamble_as_system"],
        )

    def echo(self) -> dict:
        return dict(sorted(self.values.items()))


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = dict(_CONFIG_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise CLIValidationError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise CLIValidationError(f"config file is not valid JSON: {exc}")
        if not isinstance(loaded, dict):
            raise CLIValidationError("config file must hold a JSON object")
        unknown = set(loaded) - set(values)
        if unknown:
            raise CLIValidationError(
                f"unknown config keys: {sorted(unknown)}"
            )
        values.update(loaded)
    for key in values:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    if isinstance(values["top_set"], str):
        values["top_set"] = [s.strip() for s in values["top_set"].split(",") if s.strip()]
    try:
        values["variant"] = TemplateVariant(values["variant"])
        values["mode"] = ScoringMode(values["mode"])
    except ValueError as exc:
        raise CLIValidationError(str(exc))
    return RunConfig(values=values)


def _load_mock_script(path: str, config: JudgeConfig) -> MockJudge:
    try:
        payload = json.loads(Path(path).read_text("utf-8"))
    except FileNotFoundError:
        raise CLIValidationError(f"mock script not found: {path}")
    except json.JSONDecodeError as exc:
        raise CLIValidationError(f"mock script is not valid JSON: {exc}")
    script = {}
    for i, row in enumerate(payload.get("responses", [])):
        text = row.get("text")
        if not isinstance(text, str):
            raise CLIValidationError(f"mock script response {i} lacks a text field")
        if "fingerprint" in row:
            script[row["fingerprint"]] = text
        elif "source" in row and "translation" in row:
            script[(row["source"], row["translation"])] = text
        else:
            raise CLIValidationError(
                f"mock script response {i} needs either a fingerprint "
                "or a source/translation pair"
            )
    default = payload.get("default")
    if default is not None and default not in ("all-yes", "all-no", "all-maybe"):
        raise CLIValidationError(f"unknown mock default rule {default!r}")
    return MockJudge(script=script, default_rule=default, config=config)


def build_judge(cfg: RunConfig):
    judge_config = cfg.judge_config()
    if cfg.mock_script:
        judge = _load_mock_script(cfg.mock_script, judge_config)
    elif cfg.base_url:
        judge = HttpJudge(judge_config)
    else:
        raise CLIValidationError(
            "no judge configured: set base_url (config/--config) or --mock-script"
        )
    if cfg.cache_dir:
        judge = CachingJudge(judge, ResponseCache(cfg.cache_dir))
    return judge


def _require_file(path: Optional[str], what: str) -> Path:
    if not path:
        raise CLIValidationError(f"missing required {what} path")
    p = Path(path)
    if not p.exists():
        raise CLIValidationError(f"{what} file not found: {p}")
    return p


def _emit(text: str, out: Optional[str]) -> None:
    if out and out != "-":
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CLIValidationError(f"cannot write output {out}: {exc}")
    else:
        sys.stdout.write(text)


def _judge_call_stats(judge) -> dict:
    stats = {}
    inner = judge
    if isinstance(judge, CachingJudge):
        stats["cache_hits"] = judge.hits
        stats["cache_misses"] = judge.misses
        inner = judge.inner
    if isinstance(inner, MockJudge):
        stats["judge_calls"] = inner.calls
    elif isinstance(inner, HttpJudge):
        stats["judge_calls"] = inner.requests_made
    return stats


def cmd_score(cfg: RunConfig, args: argparse.Namespace) -> int:
    corpus_path = _require_file(args.corpus, "corpus")
    corpus = ingest_jsonl(corpus_path)
    bank = load_bank()
    judge = build_judge(cfg)
    records, failures = score_corpus(
        corpus,
        cfg.variant,
        cfg.mode,
        bank,
        judge,
        parallelism=cfg.parallelism,
    )
    header = {
        "format": SCORES_FORMAT,
        "version": 1,
        "variant": cfg.variant.value,
        "mode": cfg.mode.value,
        "model": cfg.model_name,
        "seed": cfg.seed,
        "config": _jsonable(cfg.echo()),
    }
    lines = [json.dumps(header, ensure_ascii=False, sort_keys=True)]
    lines += [
        json.dumps(r.to_json_dict(), ensure_ascii=False, sort_keys=True)
        for r in records
    ]
    _emit("\n".join(lines) + "\n", args.out)

    summary = {
        "records": len(corpus),
        "scored": len(records),
        "failed": len(failures),
        **_judge_call_stats(judge),
    }
    _log(f"score summary: {json.dumps(summary, sort_keys=True)}")
    for f in failures:
        _log(
            f"failed: {f.dataset}/{f.lang_pair}/{f.segment_id}/{f.system_id}: {f.error}"
        )
    if failures and records:
        return EXIT_PARTIAL
    if failures:
        return EXIT_JUDGE
    return EXIT_OK


def _read_scores(path: Path) -> dict[tuple[str, str, str, str], float]:
    scores: dict[tuple[str, str, str, str], float] = {}
    lines = path.read_text("utf-8").splitlines()
    if not lines:
        raise CLIValidationError(f"scores file {path} is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CLIValidationError(f"{path}:1: invalid JSON: {exc}")
    if not isinstance(header, dict) or header.get("format") != SCORES_FORMAT:
        raise CLIValidationError(
            f'{path}: first line must be a header with "format": "{SCORES_FORMAT}"'
        )
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            row = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CLIValidationError(f"{path}:{line_no}: invalid JSON: {exc}")
        try:
            key = (
                row["dataset"],
                row["lang_pair"],
                row["segment_id"],
                row["system_id"],
            )
            overall = float(row["overall"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CLIValidationError(f"{path}:{line_no}: malformed score record: {exc}")
        if key in scores:
            raise CLIValidationError(f"{path}:{line_no}: duplicate score for {key}")
        scores[key] = overall
    if not scores:
        raise CLIValidationError(f"scores file {path} holds no score records")
    return scores


def _format_text_table(report: dict) -> str:
    corr = report["correlation"]
    adequacy = report["adequacy"]

    def pct(value) -> str:
        return "-" if value is None else f"{100 * value:.1f}%"

    def num(value) -> str:
        return "-" if value is None else f"{value:.3f}"

    headers = ["acc-eq", "tau", "adequacy-top", "adequacy-all", "adequacy-all-but-top"]
    row = [
        num(corr["acc_eq"]),
        num(corr["kendall_tau"]),
        pct(adequacy["top_systems"]["success_rate"]),
        pct(adequacy["all_systems"]["success_rate"]),
        pct(adequacy["all_but_top"]["success_rate"]),
    ]
    if corr.get("delta_vs_baseline"):
        delta = corr["delta_vs_baseline"]
        headers += ["d-acc-eq", "d-tau", "p-acc-eq", "p-tau"]
        row += [
            num(delta["acc_eq"]),
            num(delta["kendall_tau"]),
            num(delta["p_acc_eq"]),
            num(delta["p_kendall_tau"]),
        ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
    line1 = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    line2 = "  ".join(v.ljust(w) for v, w in zip(row, widths))
    return line1 + "\n" + line2


def cmd_evaluate(cfg: RunConfig, args: argparse.Namespace) -> int:
    corpus = ingest_jsonl(_require_file(args.corpus, "corpus"))
    scores = _read_scores(_require_file(args.scores, "scores"))
    baseline = None
    if args.baseline:
        baseline = _read_scores(_require_file(args.baseline, "baseline scores"))
    report = evaluate_scores(
        corpus,
        scores,
        baseline=baseline,
        top_set=tuple(cfg.top_set),
        n_perm=cfg.n_perm,
        seed=cfg.seed,
    )
    report["config"] = _jsonable(cfg.echo())
    _emit(json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2) + "\n", args.out)
    if args.text_table:
        _log(_format_text_table(report))
    return EXIT_OK


def cmd_select_questions(cfg: RunConfig, args: argparse.Namespace) -> int:
    bank = load_bank()
    if args.distributions:
        path = None if args.distributions == "bundled" else args.distributions
        if path is not None:
            _require_file(path, "distributions")
        dists = load_fixture_distributions(path)
    elif args.dev_corpus:
        dev = ingest_jsonl(_require_file(args.dev_corpus, "development corpus"))
        if len(dev) == 0:
            raise CLIValidationError("development corpus has no records")
        judge = build_judge(cfg)
        dists = run_sensitivity(bank, dev, judge, parallelism=cfg.parallelism)
    else:
        raise CLIValidationError("need --distributions or --dev-corpus")
    report = selection_report(
        bank,
        dists,
        vote_threshold=cfg.vote_threshold,
        general_threshold=cfg.general_threshold,
        human_threshold=cfg.human_threshold,
    )
    report["config"] = _jsonable(cfg.echo())
    report["seed"] = cfg.seed
    _emit(json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2) + "\n", args.out)
    _log(f"selected {len(report['selected_ids'])} of {len(bank)} questions")
    return EXIT_OK


def cmd_make_triplets(cfg: RunConfig, args: argparse.Namespace) -> int:
    corpus = ingest_jsonl(_require_file(args.corpus, "corpus"))
    triplets, stats = build_triplets(corpus, min_tokens=cfg.min_tokens)
    if args.out and args.out != "-":
        write_triplets(triplets, args.out)
    else:
        for t in triplets:
            sys.stdout.write(
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
                + "\n"
            )
    _log(
        "triplet summary: "
        + json.dumps(
            {
                "emitted": stats.emitted,
                "segments_used": stats.segments_used,
                "skipped_no_human": stats.skipped_no_human,
                "skipped_short_source": stats.skipped_short_source,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def cmd_cache(cfg: RunConfig, args: argparse.Namespace) -> int:
    if not cfg.cache_dir:
        raise CLIValidationError("cache commands need --cache-dir")
    cache = ResponseCache(cfg.cache_dir)
    if args.cache_action == "stats":
        _emit(json.dumps(cache.stats(), sort_keys=True, indent=2) + "\n", None)
    else:
        removed = cache.clear()
        _emit(json.dumps({"removed": removed}, sort_keys=True) + "\n", None)
    return EXIT_OK


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (TemplateVariant, ScoringMode)):
        return value.value
    return value


def _add_judge_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--base-url", dest="base_url", help="chat-completion endpoint base URL")
    sub.add_argument("--model", dest="model_name", help="served model identifier")
    sub.add_argument("--temperature", type=float, dest="temperature")
    sub.add_argument("--max-retries", type=int, dest="max_retries")
    sub.add_argument("--timeout", type=float, dest="timeout")
    sub.add_argument("--parallelism", type=int, dest="parallelism")
    sub.add_argument("--cache-dir", dest="cache_dir", help="response cache directory")
    sub.add_argument(
        "--mock-script",
        dest="mock_script",
        help="JSON file scripting judge responses (offline runs)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="transproqa",
        description="Question-answering metric for literary translation quality.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    score = sub.add_parser("score", help="score a corpus with the metric")
    score.add_argument("--config", help="JSON config file")
    score.add_argument("--corpus", required=True, help="corpus JSONL path")
    score.add_argument("--out", help="scores JSONL output path (default stdout)")
    score.add_argument(
        "--variant",
        choices=[v.value for v in TemplateVariant],
        help="prompt template variant",
    )
    mode = score.add_mutually_exclusive_group()
    mode.add_argument(
        "--weighted", dest="mode", action="store_const", const="weighted",
        help="translator-vote-weighted mean",
    )
    mode.add_argument(
        "--unweighted", dest="mode", action="store_const", const="unweighted",
        help="plain mean (default)",
    )
    score.add_argument("--seed", type=int)
    _add_judge_flags(score)
    score.set_defaults(handler=cmd_score, mode=None)

    evaluate = sub.add_parser("evaluate", help="meta-evaluate scores against gold")
    evaluate.add_argument("--config", help="JSON config file")
    evaluate.add_argument("--corpus", required=True, help="corpus JSONL path")
    evaluate.add_argument("--scores", required=True, help="scores JSONL path")
    evaluate.add_argument("--baseline", help="baseline scores JSONL path")
    evaluate.add_argument("--out", help="report JSON output path (default stdout)")
    evaluate.add_argument(
        "--top-set", dest="top_set", help="comma-separated top system ids"
    )
    evaluate.add_argument("--seed", type=int)
    evaluate.add_argument("--n-perm", dest="n_perm", type=int)
    evaluate.add_argument(
        "--text-table", action="store_true", help="also log a plain-text table"
    )
    evaluate.set_defaults(handler=cmd_evaluate)

    select = sub.add_parser(
        "select-questions", help="run the question-selection pipeline"
    )
    select.add_argument("--config", help="JSON config file")
    select.add_argument(
        "--dev-corpus", dest="dev_corpus", help="development corpus JSONL path"
    )
    select.add_argument(
        "--distributions",
        help='answer-distribution JSON path, or "bundled" for the shipped fixture',
    )
    select.add_argument("--out", help="report JSON output path (default stdout)")
    select.add_argument("--vote-threshold", dest="vote_threshold", type=float)
    select.add_argument("--general-threshold", dest="general_threshold", type=float)
    select.add_argument("--human-threshold", dest="human_threshold", type=float)
    select.add_argument("--seed", type=int)
    _add_judge_flags(select)
    select.set_defaults(handler=cmd_select_questions)

    triplets = sub.add_parser(
        "make-triplets", help="build (source, human, machine) training triplets"
    )
    triplets.add_argument("--config", help="JSON config file")
    triplets.add_argument("--corpus", required=True, help="corpus JSONL path")
    triplets.add_argument("--out", help="triplet JSONL output path (default stdout)")
    triplets.add_argument("--min-tokens", dest="min_tokens", type=int)
    triplets.set_defaults(handler=cmd_make_triplets)

    cache = sub.add_parser("cache", help="inspect or clear the response cache")
    cache_sub = cache.add_subparsers(dest="cache_action", required=True)
    for action in ("stats", "clear"):
        action_parser = cache_sub.add_parser(action)
        action_parser.add_argument("--config", help="JSON config file")
        action_parser.add_argument("--cache-dir", dest="cache_dir")
        action_parser.set_defaults(handler=cmd_cache)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
        return args.handler(cfg, args)
    except CLIValidationError as exc:
        _log(f"error: {exc}")
        return EXIT_VALIDATION
    except (CorpusFormatError, BankFormatError, SelectionError, MetaEvalError) as exc:
        _log(f"error: {exc}")
        return EXIT_VALIDATION
    except (GatewayError, AnswerFormatError) as exc:
        _log(f"judge failure: {exc}")
        return EXIT_JUDGE


if __name__ == "__main__":
    sys.exit(main())

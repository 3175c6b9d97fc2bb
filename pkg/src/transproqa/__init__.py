"""TransProQA: a question-answering metric for literary translation.

A judge model answers a curated list of translation-quality questions
with Yes/No/Maybe for each (source, translation) pair; answers map to
1/0/0.5 and aggregate into a score in [0, 1], optionally weighted by
professional translators' votes on each question.  The package also
ships the meta-evaluation machinery used to validate such metrics
(Kendall's tau, tie-calibrated pairwise accuracy, adequacy, permutation
significance tests) and the question-selection pipeline that produced
the bundled 25-question list.
"""
from .corpus import (
    BestHumanError,
    Corpus,
    CorpusFormatError,
    Origin,
    PreferenceJudgment,
    QualityJudgment,
    Segment,
    TranslationRecord,
    Triplet,
    TripletStats,
    best_human,
    build_triplets,
    ingest_jsonl,
    write_jsonl,
    write_triplets,
)
from .gateway import (
    CachingJudge,
    GatewayError,
    HttpJudge,
    JudgeConfig,
    JudgeResponse,
    JudgeTimeoutError,
    JudgeUnavailableError,
    MockJudge,
    ProtocolError,
    ResponseCache,
    UnscriptedPromptError,
    cache_key,
    complete_validated,
)
from .metaeval import (
    DEFAULT_TOP_SET,
    AdequacyLevel,
    AdequacyReport,
    CorrelationReport,
    MetaEvalError,
    MissingScoreError,
    ScoredPair,
    acc_eq,
    adequacy,
    correlation_report,
    evaluate_scores,
    kendall_tau,
    make_pairs,
    permutation_test,
)
from .prompts import (
    Answer,
    AnswerFormatError,
    AnswerSheet,
    Prompt,
    PromptBuildError,
    TemplateVariant,
    build_prompt,
    parse_answers,
    render_question_block,
)
from .questions import (
    Aspect,
    BankFormatError,
    Question,
    QuestionBank,
    QuestionStatus,
    load_bank,
    selected_questions,
)
from .scoring import (
    MetricScore,
    ScoreFailure,
    ScoreRecord,
    ScoringError,
    ScoringMode,
    aggregate,
    answer_value,
    score_corpus,
    score_translation,
)
from .selection import (
    AnswerDistribution,
    SelectionError,
    load_fixture_distributions,
    resolve_statuses,
    run_sensitivity,
    selection_report,
    sensitivity_filter,
    vote_filter,
)

__version__ = "0.1.0"

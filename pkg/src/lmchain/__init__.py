"""Contextual date extraction with cascading language model chains."""

from .cascade import (
    ChainConfig,
    ChainRunError,
    PredictionRecord,
    StageTrace,
    load_chain_config,
    merge,
    run_chain,
    run_chain_recursive,
    save_chain_config,
    validate_response,
)
from .chain_builder import (
    ChainProposal,
    CorrelationLine,
    FitError,
    ModelBenchmark,
    fit_correlation,
    propose_chains,
    rank_by_residual,
)
from .corpus import Corpus, CorpusError, Document, load_corpus, normalize_text
from .dates import (
    CandidateSet,
    CanonicalDate,
    DateMatch,
    extract_candidates,
    normalize_textual_date,
    parse_strict_ddmmyyyy,
    resolve_two_digit_year,
)
from .evaluation import (
    ConfusionMatrix,
    Metrics,
    MetricsReport,
    TpsStats,
    build_report,
    chain_tps,
    compute_metrics,
    reciprocal_mean_tps,
    score,
    summarize_tps,
    tokens_per_second,
)
from .gateway import (
    DEFAULT_PROMPT,
    BackendError,
    BackendTimeout,
    ConfigError,
    GenerationOptions,
    GenerationResult,
    MockBackend,
    ModelSpec,
    OllamaBackend,
    PromptTemplate,
    extract_answer,
    render_prompt,
)

__version__ = "0.1.0"

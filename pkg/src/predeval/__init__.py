"""predeval: instruction-following evaluation through typed predicates.

An analysis agent decomposes an instruction into atomic, typed requirements;
a judgment agent checks each requirement against a response with
type-specific criteria (lenient for content, strict for numbers), in
isolation or inside a multi-turn dialogue; scoring aggregates the binary
verdicts into exact-fraction scores and validates them against human
annotation with correlation and significance statistics.
"""

from .analyzer import (
    ParseFailure,
    UnparseableOutput,
    ValidationFailed,
    decompose,
    parse_analyzer_output,
    repair_output,
)
from .evaluator import (
    BOOLEAN_ALIASES,
    DuplicateVerdict,
    MissingVerdict,
    evaluate,
    evaluate_dialogue,
    parse_evaluator_output,
)
from .model import (
    AnnotatedPair,
    Decomposition,
    DecompositionMeta,
    DialogueContext,
    DialogueTranscript,
    EvaluationReport,
    Predicate,
    PredicateType,
    ReportMeta,
    SatisfactionResult,
    UnknownTypeLabel,
    Utterance,
    ValidationVerdict,
    aggregate_human_scores,
    decomposition_from_dict,
    decomposition_to_dict,
    report_from_dict,
    report_to_dict,
    topological_order,
    validate_decomposition,
)
from .prompting import (
    PromptBundle,
    PromptError,
    PromptKnowledgeBase,
    PromptMode,
    TEMPLATE_VERSION,
    prompt_digest,
    render_analyzer_prompt,
    render_evaluator_prompt,
)
from .provider import (
    AuthError,
    BackendRefusal,
    CompletionRequest,
    CompletionResponse,
    HttpConfig,
    HttpProvider,
    MockProvider,
    MockScriptMiss,
    ProviderError,
    RateLimited,
    ResponseCache,
    RetryPolicy,
    TransportError,
    mock_provider,
)
from .scoring import (
    DialogueScore,
    ErrorDistribution,
    ValidationPair,
    ValidationSummary,
    accuracy,
    build_validation_summary,
    classify_errors,
    difs,
    inter_type_correlation,
    paired_t,
    pearson,
    spearman,
    type_score_matrix,
)

__version__ = "0.1.0"

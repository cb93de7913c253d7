"""Linear text segmentation toolkit.

Subsystems:

* corpus: document model, JSONL ingestion, sentence splitting, splits.
* pairgen: sentence-pair training examples (adjacent pairs, balancing,
  hard negatives).
* segloss: segmentation-aware training loss and analytic gradients.
* scorer: feature hashing, the built-in trainable linear pair scorer,
  model persistence, external probability intake.
* segmenter: probability thresholding and threshold tuning.
* texttiling: lexical-cohesion baseline segmenter.
* metrics: P_k, WindowDiff, boundary matching, boundary F1, boundary
  similarity, macro-averaging.
* synth: synthetic corpora with controllable topic separation.
* harness: run configs, evaluation reports, and the CLI entry point.
"""

from .corpus import (
    CorpusSplit,
    Document,
    GroupFold,
    Segmentation,
    ValidationError,
    boundaries_to_masses,
    chronological_split,
    group_folds,
    load_abbreviations,
    masses_to_boundaries,
    parse_corpus,
    split_sentences,
    write_corpus,
)
from .metrics import (
    DocScores,
    MacroScores,
    MatchResult,
    MetricConfig,
    PrecisionRecallF1,
    WindowScore,
    boundary_f1,
    boundary_prf,
    boundary_similarity,
    compute_k,
    compute_k_segments,
    evaluate_document,
    macro_average,
    match_boundaries,
    p_k,
    pk_segments,
    score_corpus,
    score_document,
    window_diff,
    window_diff_segments,
)
from .pairgen import (
    BalanceResult,
    PairExample,
    PairSet,
    balance,
    build_training_pairs,
    derive_seed,
    extract_adjacent_pairs,
    read_pairs,
    sample_hard_negatives,
    write_pairs,
)
from .scorer import (
    LinearScorer,
    PairFeatures,
    ProbabilityRecord,
    TrainConfig,
    TrainLog,
    featurize,
    load_model,
    predict,
    read_external_probs,
    save_model,
    tokenize,
    train,
    write_probs,
)
from .scorer import score_document as score_document_probs
from .segloss import (
    LossBatch,
    LossConfig,
    LossValue,
    grad_wrt_probs,
    seg_loss,
    seg_loss_grad_logits,
    sigmoid,
)
from .segmenter import (
    SegmenterConfig,
    SweepRow,
    infer_boundaries,
    segment_document,
    tune_threshold,
)
from .synth import SynthConfig, generate_corpus
from .texttiling import (
    TilingConfig,
    depth_scores,
    gap_similarities,
    select_boundaries,
    smooth,
    texttiling_boundaries,
    texttiling_segment,
    to_pseudosentences,
)

__version__ = "0.1.0"

__all__ = [
    "BalanceResult",
    "CorpusSplit",
    "DocScores",
    "Document",
    "GroupFold",
    "LinearScorer",
    "LossBatch",
    "LossConfig",
    "LossValue",
    "MacroScores",
    "MatchResult",
    "MetricConfig",
    "PairExample",
    "PairFeatures",
    "PairSet",
    "PrecisionRecallF1",
    "ProbabilityRecord",
    "Segmentation",
    "SegmenterConfig",
    "SweepRow",
    "SynthConfig",
    "TilingConfig",
    "TrainConfig",
    "TrainLog",
    "ValidationError",
    "WindowScore",
    "balance",
    "boundaries_to_masses",
    "boundary_f1",
    "boundary_prf",
    "boundary_similarity",
    "build_training_pairs",
    "chronological_split",
    "compute_k",
    "compute_k_segments",
    "depth_scores",
    "derive_seed",
    "evaluate_document",
    "extract_adjacent_pairs",
    "featurize",
    "gap_similarities",
    "generate_corpus",
    "grad_wrt_probs",
    "group_folds",
    "infer_boundaries",
    "load_abbreviations",
    "load_model",
    "macro_average",
    "masses_to_boundaries",
    "match_boundaries",
    "p_k",
    "parse_corpus",
    "pk_segments",
    "predict",
    "read_external_probs",
    "read_pairs",
    "sample_hard_negatives",
    "save_model",
    "score_corpus",
    "score_document",
    "score_document_probs",
    "seg_loss",
    "seg_loss_grad_logits",
    "segment_document",
    "select_boundaries",
    "sigmoid",
    "smooth",
    "split_sentences",
    "texttiling_boundaries",
    "texttiling_segment",
    "to_pseudosentences",
    "tokenize",
    "train",
    "tune_threshold",
    "window_diff",
    "window_diff_segments",
    "write_corpus",
    "write_pairs",
    "write_probs",
]

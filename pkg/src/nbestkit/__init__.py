"""Backend-agnostic N-best re-ranking and transcription evaluation.

The package takes newline-delimited JSON manifests of ASR candidate
lists, re-scores each candidate with a language model (in process or
via a line-protocol subprocess), picks one per utterance, and reports
WER, nWER, CER and BLEU against references.
"""
from .errors import (
    ConfigError,
    DataError,
    ManifestError,
    ModelFormatError,
    ScorerError,
    ToolkitError,
)
from .manifest import (
    Hypothesis,
    ScoredHypothesis,
    Utterance,
    parse_manifest,
    read_transcripts,
    serialize_manifest,
    write_transcripts,
)
from .metrics import (
    AlignmentCounts,
    aggregate_corpus,
    cer,
    corpus_bleu,
    edit_distance,
    nwer,
    wer,
)
from .normalize import (
    LM_PROFILE,
    NWER_PROFILE,
    NormalizationProfile,
    normalize,
    tokenize_chars,
    tokenize_words,
)
from .rerank import (
    NGramScorer,
    RerankResult,
    SelectionPolicy,
    oracle_bounds,
    rerank_corpus,
    score_candidates,
    select,
)
from .sidecar import SidecarScorer

__version__ = "0.1.0"

__all__ = [
    "ToolkitError",
    "DataError",
    "ManifestError",
    "ModelFormatError",
    "ScorerError",
    "ConfigError",
    "Hypothesis",
    "Utterance",
    "ScoredHypothesis",
    "parse_manifest",
    "serialize_manifest",
    "write_transcripts",
    "read_transcripts",
    "AlignmentCounts",
    "edit_distance",
    "wer",
    "nwer",
    "cer",
    "corpus_bleu",
    "aggregate_corpus",
    "NormalizationProfile",
    "NWER_PROFILE",
    "LM_PROFILE",
    "normalize",
    "tokenize_words",
    "tokenize_chars",
    "NGramScorer",
    "SelectionPolicy",
    "score_candidates",
    "select",
    "rerank_corpus",
    "oracle_bounds",
    "RerankResult",
    "SidecarScorer",
    "__version__",
]

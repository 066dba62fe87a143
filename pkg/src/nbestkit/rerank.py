"""N-best candidate scoring and selection.

A Scorer turns candidate text into (lm_logprob, token_count); the
selection policy picks one scored candidate per utterance.  The default
policy keeps the candidate with minimal perplexity, which normalizes
away length differences between candidates.  Ties always fall back to
the ASR rank, so re-ranking with a constant scorer is the identity.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import ConfigError, DataError, ScorerError
from .manifest import ScoredHypothesis, Utterance
from .metrics import aggregate_corpus, edit_distance
from .ngram import NGramModel
from .normalize import NWER_PROFILE, NormalizationProfile, tokenize_words
from .report import EvalReport

__all__ = [
    "Scorer",
    "NGramScorer",
    "SelectionPolicy",
    "POLICIES",
    "score_candidates",
    "select",
    "rerank_corpus",
    "RerankResult",
    "oracle_bounds",
]

POLICIES = ("min-perplexity", "max-logprob", "interpolated")


class Scorer(Protocol):
    """Anything that scores text deterministically."""

    def score(self, text: str) -> tuple[float, int]:
        """Return (lm_logprob, token_count) for the given text."""
        ...


@dataclass(frozen=True)
class NGramScorer:
    """In-process scorer backed by a trained n-gram model."""

    model: NGramModel

    def score(self, text: str) -> tuple[float, int]:
        return self.model.logprob(text)


@dataclass(frozen=True)
class SelectionPolicy:
    """Selection criterion plus the interpolation weight.

    weight is the lambda in
    lambda * asr_logprob + (1 - lambda) * lm_logprob / token_count
    and only matters for the interpolated criterion.
    """

    criterion: str = "min-perplexity"
    weight: float = 0.5

    def __post_init__(self):
        if self.criterion not in POLICIES:
            raise ConfigError(f"unknown selection criterion {self.criterion!r}")
        if not 0.0 <= self.weight <= 1.0:
            raise ConfigError(f"interpolation weight must be in [0, 1], got {self.weight}")


def score_candidates(scorer: Scorer, utterance: Utterance, n: int) -> list[ScoredHypothesis]:
    """Score the top-n candidates of one utterance.

    Scorer failures are re-raised as ScorerError naming the utterance
    and the candidate index; nothing is skipped silently.
    """
    if not utterance.candidates:
        raise DataError(f"utterance {utterance.id!r} has no candidates")
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    scored = []
    for idx, cand in enumerate(utterance.candidates[:n]):
        try:
            lm_logprob, token_count = scorer.score(cand.text)
        except ScorerError as exc:
            raise ScorerError(
                f"utterance {utterance.id!r}, candidate {idx}: {exc}"
            ) from exc
        if token_count < 1:
            raise ScorerError(
                f"utterance {utterance.id!r}, candidate {idx}: "
                f"scorer returned token_count {token_count}"
            )
        try:
            ppl = math.exp(-lm_logprob / token_count)
        except OverflowError:
            ppl = math.inf
        scored.append(ScoredHypothesis(
            text=cand.text,
            asr_rank=cand.asr_rank,
            asr_logprob=cand.asr_logprob,
            lm_logprob=lm_logprob,
            token_count=token_count,
            perplexity=ppl,
        ))
    return scored


def select(scored: Sequence[ScoredHypothesis], policy: SelectionPolicy) -> ScoredHypothesis:
    """Pick one candidate under the policy; ties go to the lower ASR rank."""
    if not scored:
        raise DataError("nothing to select from")
    if policy.criterion == "min-perplexity":
        return min(scored, key=lambda h: (h.perplexity, h.asr_rank))
    if policy.criterion == "max-logprob":
        return min(scored, key=lambda h: (-h.lm_logprob, h.asr_rank))
    missing = [h.asr_rank for h in scored if h.asr_logprob is None]
    if missing:
        raise ConfigError(
            "interpolated selection needs asr_logprob on every candidate; "
            f"missing at ranks {missing}"
        )
    lam = policy.weight

    def combined(h: ScoredHypothesis) -> float:
        return lam * h.asr_logprob + (1.0 - lam) * h.lm_logprob / h.token_count

    return min(scored, key=lambda h: (-combined(h), h.asr_rank))


@dataclass
class RerankResult:
    """Everything rerank_corpus produces in one pass."""

    transcripts: dict[str, str]
    selected: dict[str, ScoredHypothesis]
    baseline: EvalReport | None
    reranked: EvalReport | None
    errors: list[tuple[str, str]]


def rerank_corpus(
    scorer: Scorer,
    utterances: Sequence[Utterance],
    n: int = 5,
    policy: SelectionPolicy = SelectionPolicy(),
    profile: NormalizationProfile = NWER_PROFILE,
    workers: int = 1,
    bleu_smooth: bool = True,
) -> RerankResult:
    """Re-rank a whole manifest and, when references exist, score it.

    Utterances without candidates end up in result.errors instead of
    aborting the run; scorer failures do abort.  Output order follows
    the manifest regardless of the worker count, and the transcripts
    carry the raw candidate text, never the normalized form.
    """
    errors: list[tuple[str, str]] = []
    todo = []
    for utt in utterances:
        if not utt.candidates:
            errors.append((utt.id, "no candidates"))
        else:
            todo.append(utt)

    def job(utt: Utterance) -> ScoredHypothesis:
        return select(score_candidates(scorer, utt, n), policy)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            picks = list(pool.map(job, todo))
    else:
        picks = [job(utt) for utt in todo]

    transcripts = {utt.id: pick.text for utt, pick in zip(todo, picks)}
    selected = dict(zip((u.id for u in todo), picks))

    baseline = reranked = None
    with_refs = [(utt, pick) for utt, pick in zip(todo, picks) if utt.reference is not None]
    if with_refs:
        ids = [utt.id for utt, _ in with_refs]
        baseline = aggregate_corpus(
            [(utt.reference, utt.candidates[0].text) for utt, _ in with_refs],
            profile=profile, ids=ids, label="baseline", bleu_smooth=bleu_smooth,
        )
        reranked = aggregate_corpus(
            [(utt.reference, pick.text) for utt, pick in with_refs],
            profile=profile, ids=ids, label="reranked", bleu_smooth=bleu_smooth,
        )
    return RerankResult(transcripts, selected, baseline, reranked, errors)


def oracle_bounds(utterances: Sequence[Utterance], n: int = 5) -> tuple[float, float]:
    """Corpus WER of the best and worst per-utterance candidate choices.

    The oracle picks the candidate with the fewest word edits against
    the reference, the anti-oracle the most; both pool counts the same
    way as the corpus WER, so any selection policy lands in between.
    """
    best_edits = 0
    worst_edits = 0
    ref_words = 0
    scored_any = False
    for utt in utterances:
        if utt.reference is None or not utt.candidates:
            continue
        scored_any = True
        ref_tokens = tokenize_words(utt.reference)
        totals = [
            edit_distance(ref_tokens, tokenize_words(c.text)).total
            for c in utt.candidates[:n]
        ]
        best_edits += min(totals)
        worst_edits += max(totals)
        ref_words += len(ref_tokens)
    if not scored_any or ref_words == 0:
        raise DataError("oracle bounds need candidates and non-empty references")
    return best_edits / ref_words, worst_edits / ref_words

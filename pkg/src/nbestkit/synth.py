"""Synthetic N-best manifest generation for pipeline tests and demos.

Each corpus sentence becomes one utterance whose candidate list mixes
the true sentence with seeded corruptions drawn from a confusion pool.
The true sentence lands at rank 0 with probability true_rank_p0 and
otherwise at rank r >= 1 with probability proportional to
true_rank_decay ** r, which mimics how real N-best lists get worse
further down.  Every corruption differs from the truth by at least one
word, and the whole construction is a pure function of the seed.
"""
from __future__ import annotations

import random
from typing import Sequence

from .errors import DataError
from .manifest import Hypothesis, Utterance
from .normalize import tokenize_words

__all__ = ["generate_manifest"]


def _corrupt(words: list[str], pool: Sequence[str], rng: random.Random, corrupt_prob: float) -> list[str]:
    out: list[str] = []
    for word in words:
        if rng.random() >= corrupt_prob:
            out.append(word)
            continue
        action = rng.random()
        if action < 0.6:
            out.append(rng.choice(pool))
        elif action < 0.8:
            pass  # deletion
        else:
            out.append(rng.choice(pool))
            out.append(word)
    if out == words or not out:
        # force a visible edit so a "wrong" candidate is never the truth
        out = list(out or words)
        position = rng.randrange(len(out) + 1)
        out.insert(position, rng.choice(pool))
    return out


def _true_rank(rng: random.Random, n: int, p0: float, decay: float) -> int:
    if n == 1 or rng.random() < p0:
        return 0
    weights = [decay ** r for r in range(1, n)]
    pick = rng.random() * sum(weights)
    acc = 0.0
    for r, w in enumerate(weights, start=1):
        acc += w
        if pick < acc:
            return r
    return n - 1


def generate_manifest(
    corpus: Sequence[str],
    n_candidates: int = 5,
    seed: int = 0,
    corrupt_prob: float = 0.3,
    true_rank_p0: float = 0.5,
    true_rank_decay: float = 0.6,
) -> list[Utterance]:
    """Build one utterance per corpus sentence, deterministically.

    The confusion pool is the corpus vocabulary.  Synthetic durations
    scale with the character count and every candidate carries a
    strictly rank-decreasing asr_logprob, so interpolated selection has
    something to work with.
    """
    sentences = [s.strip() for s in corpus if s.strip()]
    if not sentences:
        raise DataError("empty corpus: nothing to synthesize")
    if n_candidates < 1:
        raise DataError(f"n_candidates must be >= 1, got {n_candidates}")
    if not 0.0 <= true_rank_p0 <= 1.0:
        raise DataError(f"true_rank_p0 must be in [0, 1], got {true_rank_p0}")
    if not 0.0 < true_rank_decay <= 1.0:
        raise DataError(f"true_rank_decay must be in (0, 1], got {true_rank_decay}")
    pool = sorted({w for s in sentences for w in tokenize_words(s)})
    rng = random.Random(seed)
    utterances = []
    for index, sentence in enumerate(sentences):
        words = tokenize_words(sentence)
        rank_of_truth = _true_rank(rng, n_candidates, true_rank_p0, true_rank_decay)
        texts = []
        for rank in range(n_candidates):
            if rank == rank_of_truth:
                texts.append(sentence)
            else:
                texts.append(" ".join(_corrupt(words, pool, rng, corrupt_prob)))
        duration = round(max(0.2, 0.11 * len(sentence)), 2)
        hyps = []
        penalty = 0.2 + 0.08 * len(sentence)
        for rank, text in enumerate(texts):
            if rank:
                # cumulative step keeps the scores strictly rank-decreasing
                penalty += 0.3 + 0.1 * rng.random()
            hyps.append(Hypothesis(text=text, asr_rank=rank, asr_logprob=round(-penalty, 4)))
        candidates = tuple(hyps)
        utterances.append(Utterance(
            id=f"utt{index:05d}",
            reference=sentence,
            duration_s=duration,
            candidates=candidates,
        ))
    return utterances

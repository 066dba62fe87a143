"""Transcription quality metrics: WER, nWER, CER and corpus BLEU.

Corpus values are micro-averaged: error counts and reference lengths
are pooled over all utterances and divided once, never averaged per
utterance.  WER and CER run on raw text; nWER runs both sides through
the normalizer first so case, punctuation and spacing differences stop
counting as errors.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import DataError
from .normalize import NWER_PROFILE, NormalizationProfile, normalize, tokenize_chars, tokenize_words
from .report import EvalReport, UtteranceScores

__all__ = [
    "AlignmentCounts",
    "edit_distance",
    "wer",
    "nwer",
    "cer",
    "corpus_bleu",
    "aggregate_corpus",
]


@dataclass(frozen=True)
class AlignmentCounts:
    """Error decomposition of one alignment.

    hits + substitutions + deletions always equals ref_len; the total
    edit distance is substitutions + deletions + insertions.
    """

    substitutions: int
    deletions: int
    insertions: int
    hits: int
    ref_len: int

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "AlignmentCounts") -> "AlignmentCounts":
        return AlignmentCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.hits + other.hits,
            self.ref_len + other.ref_len,
        )


_ZERO = AlignmentCounts(0, 0, 0, 0, 0)


def edit_distance(ref: Sequence, hyp: Sequence) -> AlignmentCounts:
    """Minimal-cost alignment of hyp against ref with unit edit costs.

    Two-row dynamic program; memory stays proportional to the shorter
    of the two sequences.  When several decompositions share the minimal
    cost the tie is broken deterministically, preferring substitution
    over insertion over deletion (the total never depends on this).
    """
    if len(hyp) > len(ref):
        # compute in the cheaper orientation; deletions and insertions
        # swap roles, substitutions and hits are symmetric
        t = edit_distance(hyp, ref)
        return AlignmentCounts(t.substitutions, t.insertions, t.deletions, t.hits, len(ref))

    cols = len(hyp) + 1
    prev_cost = list(range(cols))
    prev_s = [0] * cols
    prev_d = [0] * cols
    prev_i = list(range(cols))
    for i, r in enumerate(ref, start=1):
        cur_cost = [i]
        cur_s = [0]
        cur_d = [i]
        cur_i = [0]
        for j, h in enumerate(hyp, start=1):
            if r == h:
                # a diagonal match never costs more than going around it
                cost, s, d, ins = prev_cost[j - 1], prev_s[j - 1], prev_d[j - 1], prev_i[j - 1]
            else:
                sub_c = prev_cost[j - 1] + 1
                ins_c = cur_cost[j - 1] + 1
                del_c = prev_cost[j] + 1
                if sub_c <= ins_c and sub_c <= del_c:
                    cost, s, d, ins = sub_c, prev_s[j - 1] + 1, prev_d[j - 1], prev_i[j - 1]
                elif ins_c <= del_c:
                    cost, s, d, ins = ins_c, cur_s[j - 1], cur_d[j - 1], cur_i[j - 1] + 1
                else:
                    cost, s, d, ins = del_c, prev_s[j], prev_d[j] + 1, prev_i[j]
            cur_cost.append(cost)
            cur_s.append(s)
            cur_d.append(d)
            cur_i.append(ins)
        prev_cost, prev_s, prev_d, prev_i = cur_cost, cur_s, cur_d, cur_i

    s, d, ins = prev_s[-1], prev_d[-1], prev_i[-1]
    return AlignmentCounts(s, d, ins, len(ref) - s - d, len(ref))


def _rate(counts: AlignmentCounts) -> float:
    if counts.ref_len == 0:
        # empty reference: perfect when the hypothesis is empty too,
        # otherwise each inserted token counts in full
        return 0.0 if counts.insertions == 0 else float(counts.insertions)
    return counts.total / counts.ref_len


def _word_counts(ref: str, hyp: str) -> AlignmentCounts:
    return edit_distance(tokenize_words(ref), tokenize_words(hyp))


def _char_counts(ref: str, hyp: str) -> AlignmentCounts:
    return edit_distance(tokenize_chars(ref), tokenize_chars(hyp))


def wer(ref: str, hyp: str) -> float:
    """Word error rate on raw text: (S + D + I) / reference words."""
    return _rate(_word_counts(ref, hyp))


def nwer(ref: str, hyp: str, profile: NormalizationProfile = NWER_PROFILE) -> float:
    """WER after normalizing both sides with the given profile."""
    return _rate(_word_counts(normalize(ref, profile), normalize(hyp, profile)))


def cer(ref: str, hyp: str) -> float:
    """Character error rate on raw text; spaces count as symbols."""
    return _rate(_char_counts(ref, hyp))


def _ngrams(tokens: list, n: int):
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def corpus_bleu(pairs, max_order: int = 4, smooth: bool = True) -> float:
    """Corpus BLEU over (reference, hypothesis) pairs, 0..100 scale.

    Single reference per hypothesis, modified n-gram precisions pooled
    over the corpus, brevity penalty from pooled lengths.  Orders whose
    pooled denominator is zero (every hypothesis shorter than n words)
    drop out of the geometric mean.  With smooth on, a zero precision at
    order >= 2 becomes (matches + 1) / (total + 1); a zero unigram
    precision makes the score 0 regardless.
    """
    pairs = list(pairs)
    if not pairs:
        raise DataError("corpus BLEU needs at least one sentence pair")
    matches = [0] * (max_order + 1)
    totals = [0] * (max_order + 1)
    ref_len = 0
    hyp_len = 0
    for ref_text, hyp_text in pairs:
        ref_tokens = tokenize_words(ref_text)
        hyp_tokens = tokenize_words(hyp_text)
        ref_len += len(ref_tokens)
        hyp_len += len(hyp_tokens)
        for n in range(1, max_order + 1):
            clip = Counter(_ngrams(ref_tokens, n))
            seen = Counter(_ngrams(hyp_tokens, n))
            totals[n] += sum(seen.values())
            matches[n] += sum(min(c, clip[g]) for g, c in seen.items())
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    effective = 0
    for n in range(1, max_order + 1):
        if totals[n] == 0:
            continue
        effective += 1
        if matches[n] > 0:
            log_sum += math.log(matches[n] / totals[n])
        elif smooth and n >= 2:
            log_sum += math.log((matches[n] + 1) / (totals[n] + 1))
        else:
            return 0.0
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_sum / effective)


def aggregate_corpus(
    pairs,
    profile: NormalizationProfile = NWER_PROFILE,
    ids: Sequence[str] | None = None,
    label: str = "model",
    bleu_smooth: bool = True,
) -> EvalReport:
    """Pool (reference, hypothesis) pairs into one EvalReport.

    Raises DataError for an empty corpus or when any metric would divide
    by a zero pooled reference length.
    """
    pairs = list(pairs)
    if not pairs:
        raise DataError("empty corpus: nothing to evaluate")
    if ids is not None and len(ids) != len(pairs):
        raise DataError("ids and pairs must have the same length")
    word_total = _ZERO
    norm_total = _ZERO
    char_total = _ZERO
    rows = []
    for idx, (ref, hyp) in enumerate(pairs):
        w = _word_counts(ref, hyp)
        n = _word_counts(normalize(ref, profile), normalize(hyp, profile))
        c = _char_counts(ref, hyp)
        word_total += w
        norm_total += n
        char_total += c
        rows.append(UtteranceScores(
            id=ids[idx] if ids is not None else str(idx),
            wer=_rate(w),
            nwer=_rate(n),
            cer=_rate(c),
            ref_words=w.ref_len,
        ))
    for name, total in (("WER", word_total), ("nWER", norm_total), ("CER", char_total)):
        if total.ref_len == 0:
            raise DataError(f"corpus has zero reference length for {name}")
    return EvalReport(
        wer=word_total.total / word_total.ref_len,
        nwer=norm_total.total / norm_total.ref_len,
        cer=char_total.total / char_total.ref_len,
        bleu=corpus_bleu(pairs, smooth=bleu_smooth),
        n_utterances=len(pairs),
        n_ref_words=word_total.ref_len,
        label=label,
        per_utterance=tuple(rows),
    )

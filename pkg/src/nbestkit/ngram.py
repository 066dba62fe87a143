"""Word n-gram language model with additive smoothing.

The model is a plain counting model: order-k contexts map to token
counts, probabilities are (count + k) / (context_total + k * V) with V
the number of predictable token types (the vocabulary minus BOS).
Sentences are padded with order-1 BOS tokens and closed with one EOS;
BOS is never predicted and never counts toward token_count, EOS does
both.  Tokens outside the vocabulary are mapped to UNK on both the
context and the predicted side.

Training and scoring are deterministic: the same corpus and parameters
produce bit-identical models, and a model file written by save() is a
stable, versioned format that load() round-trips exactly.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .errors import DataError, ModelFormatError
from .ioutils import atomic_write_text
from .normalize import LM_PROFILE, NormalizationProfile, normalize, tokenize_words

__all__ = [
    "UNK",
    "BOS",
    "EOS",
    "NGramModel",
    "train",
    "save",
    "load",
    "perplexity_corpus",
]

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"

_FORMAT_NAME = "nbestkit-ngram"
_FORMAT_VERSION = 1


@dataclass
class NGramModel:
    """Counts, vocabulary and smoothing weight for one trained model."""

    order: int
    k: float
    vocab: dict[str, int]
    counts: dict[int, dict[tuple[str, ...], Counter]]
    profile: NormalizationProfile = LM_PROFILE
    min_count: int = 1
    _totals: dict[tuple[str, ...], int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.order < 1:
            raise DataError(f"order must be >= 1, got {self.order}")
        if not (self.k >= 0):
            raise DataError(f"smoothing k must be >= 0, got {self.k}")
        for reserved in (UNK, BOS, EOS):
            if reserved not in self.vocab:
                raise DataError(f"vocabulary is missing reserved token {reserved!r}")
        top = self.counts.get(self.order, {})
        self._totals = {ctx: sum(c.values()) for ctx, c in top.items()}

    @property
    def effective_vocab_size(self) -> int:
        """Number of token types the model can predict (BOS excluded)."""
        return len(self.vocab) - 1

    def _lookup(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def prob(self, token: str, context: Sequence[str]) -> float:
        """P(token | context) under additive smoothing.

        context is the preceding tokens; only the last order-1 are used
        and shorter contexts are padded with BOS on the left.  Unknown
        tokens on either side are mapped to UNK first.
        """
        token = self._lookup(token)
        ctx = tuple(self._lookup(t) for t in context)[max(0, len(context) - (self.order - 1)):]
        if len(ctx) < self.order - 1:
            ctx = (BOS,) * (self.order - 1 - len(ctx)) + ctx
        table = self.counts.get(self.order, {})
        count = table.get(ctx, {}).get(token, 0) if table else 0
        total = self._totals.get(ctx, 0)
        denom = total + self.k * self.effective_vocab_size
        if denom == 0:
            return 0.0
        return (count + self.k) / denom

    def next_distribution(self, context: Sequence[str]) -> dict[str, float]:
        """Full next-token distribution over the predictable vocabulary."""
        return {t: self.prob(t, context) for t in self.vocab if t != BOS}

    def logprob(self, sentence: str) -> tuple[float, int]:
        """Natural-log probability of the sentence and the token count.

        The sentence is normalized with the model's profile, tokenized
        on whitespace, OOV-mapped, and scored left to right including
        the closing EOS.  token_count = words + 1, so an empty sentence
        still scores one EOS position.
        """
        words = tokenize_words(normalize(sentence, self.profile))
        tokens = [self._lookup(w) for w in words] + [EOS]
        ctx: tuple[str, ...] = (BOS,) * (self.order - 1)
        logprob = 0.0
        for token in tokens:
            p = self.prob(token, ctx)
            logprob += math.log(p) if p > 0 else -math.inf
            if self.order > 1:
                ctx = (ctx + (token,))[1:]
        return logprob, len(tokens)

    def perplexity(self, sentence: str) -> float:
        lp, count = self.logprob(sentence)
        try:
            return math.exp(-lp / count)
        except OverflowError:
            return math.inf

    def save(self, path) -> None:
        """Write the versioned model file (atomically) to path."""
        atomic_write_text(path, serialize_model(self))


def _pad(tokens: list[str], n: int) -> list[str]:
    return [BOS] * (n - 1) + tokens + [EOS]


def train(
    corpus: Iterable[str],
    order: int = 2,
    k: float = 0.1,
    min_count: int = 1,
    profile: NormalizationProfile = LM_PROFILE,
    vocab: Iterable[str] | None = None,
) -> NGramModel:
    """Count n-grams of every order up to `order` over the corpus.

    Sentences are normalized with the profile before tokenization
    (a no-op when the corpus is already normalized).  The vocabulary is
    every token with frequency >= min_count plus the reserved tokens;
    pass `vocab` to fix it explicitly instead.  Rarer tokens are folded
    into UNK before counting so the UNK estimates carry real mass.
    """
    sentences = [tokenize_words(normalize(s, profile)) for s in corpus]
    if not sentences:
        raise DataError("empty training corpus")
    if vocab is not None:
        kept = set(vocab)
    else:
        freq = Counter(t for sent in sentences for t in sent)
        kept = {t for t, c in freq.items() if c >= min_count}
    kept -= {UNK, BOS, EOS}
    vocab_map = {UNK: 0, BOS: 1, EOS: 2}
    for token in sorted(kept):
        vocab_map[token] = len(vocab_map)

    counts: dict[int, dict[tuple[str, ...], Counter]] = {n: {} for n in range(1, order + 1)}
    for sent in sentences:
        mapped = [t if t in vocab_map else UNK for t in sent]
        for n in range(1, order + 1):
            padded = _pad(mapped, n)
            table = counts[n]
            for i in range(n - 1, len(padded)):
                ctx = tuple(padded[i - n + 1 : i])
                counter = table.get(ctx)
                if counter is None:
                    counter = table[ctx] = Counter()
                counter[padded[i]] += 1
    return NGramModel(order=order, k=k, vocab=vocab_map, counts=counts,
                      profile=profile, min_count=min_count)


def perplexity_corpus(model: NGramModel, sentences: Iterable[str]) -> float:
    """Token-weighted corpus perplexity: exp(-sum logprob / sum tokens)."""
    total_lp = 0.0
    total_tokens = 0
    for sentence in sentences:
        lp, count = model.logprob(sentence)
        total_lp += lp
        total_tokens += count
    if total_tokens == 0:
        raise DataError("empty corpus: no tokens to score")
    try:
        return math.exp(-total_lp / total_tokens)
    except OverflowError:
        return math.inf


def serialize_model(model: NGramModel) -> str:
    """Stable two-line text form: a version header, then sorted JSON."""
    body = {
        "order": model.order,
        "k": model.k,
        "min_count": model.min_count,
        "profile": asdict(model.profile),
        "vocab": [t for t, _ in sorted(model.vocab.items(), key=lambda kv: kv[1])],
        "counts": {
            str(n): [
                [list(ctx), sorted(counter.items())]
                for ctx, counter in sorted(table.items())
            ]
            for n, table in model.counts.items()
        },
    }
    header = f"{_FORMAT_NAME} v{_FORMAT_VERSION}"
    return header + "\n" + json.dumps(body, ensure_ascii=False, sort_keys=True) + "\n"


def save(model: NGramModel, path) -> None:
    model.save(path)


def load(path) -> NGramModel:
    """Read a model file written by save(); rejects unknown versions."""
    with open(path, "r", encoding="utf-8") as fp:
        header = fp.readline().strip()
        parts = header.split()
        if len(parts) != 2 or parts[0] != _FORMAT_NAME or not parts[1].startswith("v"):
            raise ModelFormatError(f"not a {_FORMAT_NAME} file: header {header!r}")
        if parts[1] != f"v{_FORMAT_VERSION}":
            raise ModelFormatError(
                f"unsupported model version {parts[1]}; this build reads v{_FORMAT_VERSION}"
            )
        try:
            body = json.load(fp)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"corrupt model body: {exc.msg}") from exc
    try:
        vocab = {token: idx for idx, token in enumerate(body["vocab"])}
        counts = {
            int(n): {
                tuple(ctx): Counter({t: int(c) for t, c in pairs})
                for ctx, pairs in table
            }
            for n, table in body["counts"].items()
        }
        return NGramModel(
            order=int(body["order"]),
            k=float(body["k"]),
            vocab=vocab,
            counts=counts,
            profile=NormalizationProfile(**body["profile"]),
            min_count=int(body.get("min_count", 1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model body: {exc}") from exc

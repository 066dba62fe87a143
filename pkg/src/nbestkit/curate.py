"""Dataset curation: rule checks, manifest partitioning, corpus stats.

Rules never mutate records and never throw on missing fields: a rule
that cannot be evaluated because the field it needs is absent reports
that as a Violation, so audits see exactly why each record left the
dataset.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Protocol, Sequence

from .manifest import Utterance
from .normalize import NWER_PROFILE, normalize, tokenize_words

__all__ = [
    "Violation",
    "CurationRule",
    "RequireTimestamps",
    "DurationBounds",
    "NonemptyTranscript",
    "CharsetWhitelist",
    "CharsPerSecondBounds",
    "TranscriptLengthBounds",
    "check_record",
    "filter_manifest",
    "CurationResult",
    "corpus_stats",
    "CorpusStats",
]


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str


class CurationRule(Protocol):
    name: str

    def check(self, utt: Utterance) -> Violation | None: ...


@dataclass(frozen=True)
class RequireTimestamps:
    """Reject records whose segment timing (duration) is missing."""

    name: str = "require_timestamps"

    def check(self, utt: Utterance) -> Violation | None:
        if utt.duration_s is None:
            return Violation(self.name, "missing duration")
        return None


@dataclass(frozen=True)
class DurationBounds:
    min_s: float = 0.0
    max_s: float = float("inf")
    name: str = "duration_bounds"

    def check(self, utt: Utterance) -> Violation | None:
        if utt.duration_s is None:
            return Violation(self.name, "missing duration")
        if not self.min_s <= utt.duration_s <= self.max_s:
            return Violation(
                self.name,
                f"duration {utt.duration_s}s outside [{self.min_s}, {self.max_s}]",
            )
        return None


@dataclass(frozen=True)
class NonemptyTranscript:
    name: str = "nonempty_transcript"

    def check(self, utt: Utterance) -> Violation | None:
        if utt.reference is None or not utt.reference.strip():
            return Violation(self.name, "missing or blank transcript")
        return None


def _char_class(ch: str) -> str:
    code = ord(ch)
    if 0x0370 <= code <= 0x03FF or 0x1F00 <= code <= 0x1FFF:
        return "greek"
    if ch.isascii() and ch.isalpha() or 0x00C0 <= code <= 0x024F:
        return "latin"
    if ch.isdigit():
        return "digit"
    if ch.isspace():
        return "space"
    category = unicodedata.category(ch)
    if category[0] == "P" or category == "Mn":
        return "punct"
    return "other"


@dataclass(frozen=True)
class CharsetWhitelist:
    """Flag transcripts dominated by out-of-script characters.

    The default whitelist is Greek script, Latin letters, digits and
    punctuation; whitespace never counts either way.  A record is
    rejected once the foreign fraction of its non-space characters
    exceeds max_foreign_ratio.
    """

    max_foreign_ratio: float = 0.5
    name: str = "charset_whitelist"

    def check(self, utt: Utterance) -> Violation | None:
        if utt.reference is None:
            return Violation(self.name, "missing transcript")
        classes = [_char_class(c) for c in utt.reference]
        counted = [c for c in classes if c != "space"]
        if not counted:
            return None
        foreign = sum(1 for c in counted if c == "other")
        ratio = foreign / len(counted)
        if ratio > self.max_foreign_ratio:
            return Violation(
                self.name,
                f"{100 * ratio:.0f}% of characters outside the allowed scripts",
            )
        return None


@dataclass(frozen=True)
class CharsPerSecondBounds:
    """Speaking-rate sanity check on normalized characters per second."""

    min_cps: float = 4.0
    max_cps: float = 30.0
    name: str = "chars_per_second_bounds"

    def check(self, utt: Utterance) -> Violation | None:
        if utt.reference is None:
            return Violation(self.name, "missing transcript")
        if utt.duration_s is None:
            return Violation(self.name, "missing duration")
        if utt.duration_s <= 0:
            return Violation(self.name, "non-positive duration")
        cps = len(normalize(utt.reference, NWER_PROFILE)) / utt.duration_s
        if not self.min_cps <= cps <= self.max_cps:
            return Violation(
                self.name,
                f"{cps:.1f} chars/s outside [{self.min_cps}, {self.max_cps}]",
            )
        return None


@dataclass(frozen=True)
class TranscriptLengthBounds:
    min_chars: int = 1
    max_chars: int | None = None
    name: str = "transcript_length_bounds"

    def check(self, utt: Utterance) -> Violation | None:
        if utt.reference is None:
            return Violation(self.name, "missing transcript")
        length = len(utt.reference)
        if length < self.min_chars or (self.max_chars is not None and length > self.max_chars):
            upper = "inf" if self.max_chars is None else str(self.max_chars)
            return Violation(
                self.name, f"transcript length {length} outside [{self.min_chars}, {upper}]"
            )
        return None


def check_record(utt: Utterance, rules: Sequence[CurationRule]) -> list[Violation]:
    """Evaluate every rule; an empty result means the record is kept."""
    return [v for v in (rule.check(utt) for rule in rules) if v is not None]


@dataclass
class CurationResult:
    kept: list[Utterance]
    rejected: list[tuple[Utterance, list[Violation]]]
    rule_counts: dict[str, int]


def filter_manifest(utterances: Sequence[Utterance], rules: Sequence[CurationRule]) -> CurationResult:
    """Order-preserving partition into kept and rejected records."""
    kept: list[Utterance] = []
    rejected: list[tuple[Utterance, list[Violation]]] = []
    rule_counts = {rule.name: 0 for rule in rules}
    for utt in utterances:
        violations = check_record(utt, rules)
        if violations:
            rejected.append((utt, violations))
            for v in violations:
                rule_counts[v.rule] += 1
        else:
            kept.append(utt)
    return CurationResult(kept, rejected, rule_counts)


@dataclass(frozen=True)
class CorpusStats:
    n_utterances: int
    hours: float
    n_ref_words: int
    n_ref_chars: int
    vocab_size: int
    n_missing_duration: int
    n_missing_reference: int
    n_with_candidates: int


def corpus_stats(utterances: Sequence[Utterance]) -> CorpusStats:
    """Totals over a manifest; durations sum to hours, vocab is counted
    over normalized words."""
    seconds = 0.0
    words = 0
    chars = 0
    vocab: set[str] = set()
    missing_duration = 0
    missing_reference = 0
    with_candidates = 0
    for utt in utterances:
        if utt.duration_s is None:
            missing_duration += 1
        else:
            seconds += utt.duration_s
        if utt.reference is None:
            missing_reference += 1
        else:
            words += len(tokenize_words(utt.reference))
            chars += len(utt.reference)
            vocab.update(tokenize_words(normalize(utt.reference, NWER_PROFILE)))
        if utt.candidates:
            with_candidates += 1
    return CorpusStats(
        n_utterances=len(utterances),
        hours=seconds / 3600.0,
        n_ref_words=words,
        n_ref_chars=chars,
        vocab_size=len(vocab),
        n_missing_duration=missing_duration,
        n_missing_reference=missing_reference,
        n_with_candidates=with_candidates,
    )

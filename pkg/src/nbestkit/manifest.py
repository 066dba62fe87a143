"""Utterance data model and newline-delimited JSON manifest IO.

One utterance per line:

    {"id": "utt0", "audio_path": "a.wav", "reference": "...",
     "duration_s": 3.2,
     "candidates": [{"text": "...", "asr_rank": 0, "asr_logprob": -12.5}, ...]}

id is required and unique; everything else is optional.  Candidate
lists are best-first and their asr_rank values must be exactly
0..len-1 in order.  Unknown fields are carried through untouched so
foreign manifests survive a round trip.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ManifestError

__all__ = [
    "Hypothesis",
    "Utterance",
    "ScoredHypothesis",
    "parse_manifest",
    "serialize_manifest",
    "utterance_to_obj",
    "write_transcripts",
    "read_transcripts",
]

_UTT_FIELDS = ("id", "audio_path", "reference", "duration_s", "candidates")
_HYP_FIELDS = ("text", "asr_rank", "asr_logprob")


@dataclass(frozen=True)
class Hypothesis:
    """One ASR candidate: raw text plus its rank in the N-best list."""

    text: str
    asr_rank: int
    asr_logprob: float | None = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Utterance:
    id: str
    audio_path: str | None = None
    reference: str | None = None
    duration_s: float | None = None
    candidates: tuple[Hypothesis, ...] | None = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScoredHypothesis:
    """A candidate with language-model scores attached.

    perplexity is exp(-lm_logprob / token_count); token_count is the
    number of scored positions and is at least 1.
    """

    text: str
    asr_rank: int
    asr_logprob: float | None
    lm_logprob: float
    token_count: int
    perplexity: float


def _is_number(value) -> bool:
    # bool is an int subclass and must not pass as a number here
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _finite_number(value, what: str, line: int) -> float:
    if not _is_number(value) or not math.isfinite(value):
        raise ManifestError(f"{what} must be a finite number, got {value!r}", line)
    return float(value)


def _parse_hypothesis(obj, position: int, line: int) -> Hypothesis:
    if not isinstance(obj, dict):
        raise ManifestError(f"candidate {position} must be an object", line)
    if "text" not in obj or not isinstance(obj["text"], str):
        raise ManifestError(f"candidate {position} needs a string 'text' field", line)
    rank = obj.get("asr_rank")
    if not isinstance(rank, int) or isinstance(rank, bool):
        raise ManifestError(f"candidate {position} needs an integer 'asr_rank'", line)
    if rank != position:
        raise ManifestError(
            f"candidate ranks must be 0..n-1 in order; found rank {rank} at position {position}",
            line,
        )
    logprob = obj.get("asr_logprob")
    if logprob is not None:
        logprob = _finite_number(logprob, f"candidate {position} asr_logprob", line)
    extras = {k: v for k, v in obj.items() if k not in _HYP_FIELDS}
    return Hypothesis(text=obj["text"], asr_rank=rank, asr_logprob=logprob, extras=extras)


def _parse_utterance(obj, line: int) -> Utterance:
    if not isinstance(obj, dict):
        raise ManifestError("each manifest line must be a JSON object", line)
    utt_id = obj.get("id")
    if not isinstance(utt_id, str) or not utt_id:
        raise ManifestError("utterance needs a non-empty string 'id'", line)
    for key in ("audio_path", "reference"):
        if obj.get(key) is not None and not isinstance(obj[key], str):
            raise ManifestError(f"'{key}' must be a string when present", line)
    duration = obj.get("duration_s")
    if duration is not None:
        duration = _finite_number(duration, "duration_s", line)
        if duration < 0:
            raise ManifestError(f"duration_s must be >= 0, got {duration}", line)
    candidates = None
    if obj.get("candidates") is not None:
        raw = obj["candidates"]
        if not isinstance(raw, list) or not raw:
            raise ManifestError("'candidates' must be a non-empty list when present", line)
        candidates = tuple(_parse_hypothesis(c, i, line) for i, c in enumerate(raw))
    extras = {k: v for k, v in obj.items() if k not in _UTT_FIELDS}
    return Utterance(
        id=utt_id,
        audio_path=obj.get("audio_path"),
        reference=obj.get("reference"),
        duration_s=duration,
        candidates=candidates,
        extras=extras,
    )


def _iter_lines(source) -> Iterable:
    # split on \n exactly: splitlines() also breaks on form feeds and
    # U+2028/U+2029, which are legal inside JSON strings and TSV text
    if isinstance(source, bytes):
        return source.split(b"\n")
    if isinstance(source, str):
        return source.split("\n")
    return source


def parse_manifest(source) -> list[Utterance]:
    """Parse a manifest from a string, bytes, or an iterable of lines.

    Never lets a decoding or JSON failure escape as anything other than
    ManifestError, and the error always names the 1-based line.
    """
    lines = _iter_lines(source)
    utterances = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ManifestError(f"invalid UTF-8: {exc}", lineno) from exc
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid JSON: {exc.msg}", lineno) from exc
        utt = _parse_utterance(obj, lineno)
        if utt.id in seen:
            raise ManifestError(
                f"duplicate utterance id {utt.id!r} (first seen on line {seen[utt.id]})",
                lineno,
            )
        seen[utt.id] = lineno
        utterances.append(utt)
    return utterances


def _hyp_to_obj(hyp: Hypothesis) -> dict:
    obj: dict = {"text": hyp.text, "asr_rank": hyp.asr_rank}
    if hyp.asr_logprob is not None:
        obj["asr_logprob"] = hyp.asr_logprob
    for key in sorted(hyp.extras):
        obj[key] = hyp.extras[key]
    return obj


def utterance_to_obj(utt: Utterance) -> dict:
    """Plain-dict form of an utterance with a fixed field order."""
    obj: dict = {"id": utt.id}
    if utt.audio_path is not None:
        obj["audio_path"] = utt.audio_path
    if utt.reference is not None:
        obj["reference"] = utt.reference
    if utt.duration_s is not None:
        obj["duration_s"] = utt.duration_s
    if utt.candidates is not None:
        obj["candidates"] = [_hyp_to_obj(h) for h in utt.candidates]
    for key in sorted(utt.extras):
        obj[key] = utt.extras[key]
    return obj


def serialize_manifest(utterances: Iterable[Utterance]) -> str:
    """Render utterances back to manifest text, one JSON object per line.

    Field order and extras ordering are fixed, so serialization is
    deterministic and parse(serialize(x)) == x for valid inputs.
    """
    lines = [
        json.dumps(utterance_to_obj(utt), ensure_ascii=False,
                   separators=(",", ":"), allow_nan=False)
        for utt in utterances
    ]
    return "\n".join(lines) + "\n" if lines else ""


_TSV_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}


def _tsv_escape(text: str) -> str:
    return "".join(_TSV_ESCAPES.get(c, c) for c in text)


_TSV_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def _tsv_unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text) and text[i + 1] in _TSV_UNESCAPES:
            out.append(_TSV_UNESCAPES[text[i + 1]])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def write_transcripts(transcripts: dict[str, str]) -> str:
    """Render id<TAB>text lines; tabs and newlines on either side are
    escaped so any id/text pair survives a round trip."""
    return "".join(
        f"{_tsv_escape(utt_id)}\t{_tsv_escape(text)}\n"
        for utt_id, text in transcripts.items()
    )


def read_transcripts(source) -> dict[str, str]:
    """Parse id<TAB>text lines produced by write_transcripts."""
    lines = _iter_lines(source)
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ManifestError(f"invalid UTF-8: {exc}", lineno) from exc
        line = raw.rstrip("\n")
        if line.endswith("\r"):
            line = line[:-1]
        if not line:
            continue
        if "\t" not in line:
            raise ManifestError("expected id<TAB>text", lineno)
        utt_id, text = line.split("\t", 1)
        if not utt_id:
            raise ManifestError("empty utterance id", lineno)
        utt_id = _tsv_unescape(utt_id)
        if utt_id in out:
            raise ManifestError(f"duplicate utterance id {utt_id!r}", lineno)
        out[utt_id] = _tsv_unescape(text)
    return out

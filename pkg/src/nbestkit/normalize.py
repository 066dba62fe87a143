"""Unicode normalization and tokenization for Greek transcripts.

The normalizer is a pure function of (text, profile).  A profile names
the transformations to apply; the two stock profiles cover the common
cases: NWER_PROFILE is the one metric code uses to make WER insensitive
to case, punctuation and spacing, LM_PROFILE is the default text shape
for language-model training and scoring (punctuation kept).
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass

__all__ = [
    "NormalizationProfile",
    "NWER_PROFILE",
    "LM_PROFILE",
    "normalize",
    "tokenize_words",
    "tokenize_chars",
]


@dataclass(frozen=True)
class NormalizationProfile:
    """Switches for each normalization step.

    unicode_form is applied first in all profiles so that composed and
    decomposed inputs compare equal.  Diacritics are kept by default:
    Greek tonos distinguishes words, so stripping is strictly opt-in.
    """

    lowercase: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True
    strip_diacritics: bool = False
    unicode_form: str = "NFC"


NWER_PROFILE = NormalizationProfile()
LM_PROFILE = NormalizationProfile(strip_punctuation=False)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("P", "S")


def normalize(text: str, profile: NormalizationProfile = NWER_PROFILE) -> str:
    """Apply the profile's steps in a fixed order and return the result.

    Order: canonical composition, lowercasing, optional diacritic
    stripping, punctuation and symbols to spaces, whitespace collapse.
    The function is idempotent for any profile.
    """
    text = unicodedata.normalize(profile.unicode_form, text)
    if profile.lowercase:
        # str.lower applies the Unicode final-sigma rule, so a
        # word-final capital sigma comes out as ς rather than σ.
        # Lowercasing can emit decomposed sequences (Ϊ́ -> ΐ), so
        # recompose to keep case-folded text comparable.
        text = unicodedata.normalize(profile.unicode_form, text.lower())
    if profile.strip_diacritics:
        decomposed = unicodedata.normalize("NFD", text)
        stripped = "".join(c for c in decomposed if unicodedata.category(c) != "Mn")
        text = unicodedata.normalize(profile.unicode_form, stripped)
    if profile.strip_punctuation:
        text = "".join(" " if _is_punct(c) else c for c in text)
    if profile.collapse_whitespace:
        text = " ".join(text.split())
    return text


def tokenize_words(text: str) -> list[str]:
    """Split on runs of Unicode whitespace."""
    return text.split()


def tokenize_chars(text: str) -> list[str]:
    """Character tokens after canonical composition; whitespace is kept."""
    return list(unicodedata.normalize("NFC", text))

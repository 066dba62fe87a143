"""Evaluation report containers and renderers.

All renderers are byte-deterministic: same report in, same text out.
WER, nWER and CER are stored as ratios and rendered as percentages with
two decimals; BLEU is already on the 0..100 scale.  Column order is
fixed (WER, nWER, CER, BLEU) so tables from different runs line up.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

__all__ = [
    "UtteranceScores",
    "EvalReport",
    "FORMATS",
    "write_report",
    "render_reports",
    "render_perplexity_comparison",
]

FORMATS = ("plain", "csv", "markdown", "structured")


@dataclass(frozen=True)
class UtteranceScores:
    """Per-utterance metric row, kept for the structured output."""

    id: str
    wer: float
    nwer: float
    cer: float
    ref_words: int


@dataclass(frozen=True)
class EvalReport:
    wer: float
    nwer: float
    cer: float
    bleu: float
    n_utterances: int
    n_ref_words: int
    label: str = "model"
    per_utterance: tuple[UtteranceScores, ...] = ()


def _pct(ratio: float) -> str:
    return f"{100.0 * ratio:.2f}"


def _cells(report: EvalReport) -> list[str]:
    return [
        report.label,
        _pct(report.wer),
        _pct(report.nwer),
        _pct(report.cer),
        f"{report.bleu:.2f}",
    ]


def _report_dict(report: EvalReport) -> dict:
    return {
        "label": report.label,
        "wer": report.wer,
        "nwer": report.nwer,
        "cer": report.cer,
        "bleu": report.bleu,
        "n_utterances": report.n_utterances,
        "n_ref_words": report.n_ref_words,
        "per_utterance": [
            {
                "id": row.id,
                "wer": row.wer,
                "nwer": row.nwer,
                "cer": row.cer,
                "ref_words": row.ref_words,
            }
            for row in report.per_utterance
        ],
    }


_HEADER = ("model", "WER", "nWER", "CER", "BLEU")


def render_reports(reports, fmt: str = "plain", extra: dict | None = None) -> str:
    """Render one table/document covering several report rows.

    extra carries format-specific trailers: for the text formats each
    key/value pair becomes one line after the table, for structured
    output the pairs are merged into the top-level object.
    """
    reports = list(reports)
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format: {fmt!r}")
    if fmt == "structured":
        doc: dict = {"reports": [_report_dict(r) for r in reports]}
        if extra:
            doc.update(extra)
        return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(h.lower() for h in _HEADER)
        for r in reports:
            writer.writerow(_cells(r))
        return buf.getvalue()
    rows = [_cells(r) for r in reports]
    if fmt == "markdown":
        lines = [
            "| " + " | ".join(_HEADER) + " |",
            "| --- | ---: | ---: | ---: | ---: |",
        ]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        if extra:
            lines.append("")
            lines += [f"{key}: {value}" for key, value in extra.items()]
        return "\n".join(lines) + "\n"
    # plain: space-aligned table, label left, numbers right
    widths = [max(len(_HEADER[i]), *(len(r[i]) for r in rows)) for i in range(5)]
    out = ["  ".join(
        _HEADER[i].ljust(widths[i]) if i == 0 else _HEADER[i].rjust(widths[i])
        for i in range(5)
    )]
    for row in rows:
        out.append("  ".join(
            row[i].ljust(widths[i]) if i == 0 else row[i].rjust(widths[i])
            for i in range(5)
        ))
    if extra:
        out += [f"{key}: {value}" for key, value in extra.items()]
    return "\n".join(out) + "\n"


def write_report(report: EvalReport, fmt: str = "plain") -> str:
    """Render a single report in the chosen format."""
    return render_reports([report], fmt)


def render_perplexity_comparison(rows) -> str:
    """Two-column perplexity table with the relative drop per row.

    rows: iterable of (label, before, after).  The drop is
    100 * (before - after) / before, shown with one decimal.
    """
    out = ["model  ppl_before  ppl_after  delta_pct"]
    for label, before, after in rows:
        delta = 100.0 * (before - after) / before
        out.append(f"{label}  {before:.2f}  {after:.2f}  {delta:.1f}")
    return "\n".join(out) + "\n"

"""Command-line harness.

Subcommands: eval, rerank, pipeline, sweep-n, lm train, lm ppl, curate,
synth.  Exit codes: 0 success, 1 usage error, 2 data error, 3 scorer
failure.  Output files are written to a temp file and renamed into
place, so a failing run never leaves a partial file.  A config file of
"section.key = value" lines supplies defaults; explicit flags win.
"""
from __future__ import annotations

import os
import sys
from dataclasses import replace

import click

from . import ngram
from .curate import (
    CharsetWhitelist,
    CharsPerSecondBounds,
    DurationBounds,
    NonemptyTranscript,
    RequireTimestamps,
    TranscriptLengthBounds,
    corpus_stats,
    filter_manifest,
)
from .errors import ConfigError, DataError, ScorerError, ToolkitError
from .ioutils import atomic_write_text
from .manifest import (
    parse_manifest,
    read_transcripts,
    serialize_manifest,
    utterance_to_obj,
    write_transcripts,
)
from .metrics import aggregate_corpus
from .normalize import NormalizationProfile
from .rerank import POLICIES, NGramScorer, SelectionPolicy, rerank_corpus
from .report import FORMATS, render_perplexity_comparison, render_reports, write_report
from .sidecar import SidecarScorer
from .synth import generate_manifest

_EXT = {"plain": ".txt", "csv": ".csv", "markdown": ".md", "structured": ".json"}


def _load_config(path: str) -> dict:
    """Parse "section.key = value" lines into a nested defaults tree."""
    tree: dict = {}
    with open(path, encoding="utf-8") as fp:
        for lineno, raw in enumerate(fp, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            parts = [p.strip().replace("-", "_") for p in key.strip().split(".")]
            if not all(parts):
                raise ConfigError(f"{path}:{lineno}: empty key segment")
            node = tree
            for part in parts[:-1]:
                node = node.setdefault(part, {})
                if not isinstance(node, dict):
                    raise ConfigError(f"{path}:{lineno}: {part!r} is both key and section")
            node[parts[-1]] = value.strip()
    return tree


def _read_manifest(path: str):
    with open(path, "rb") as fp:
        return parse_manifest(fp)


def _read_corpus(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fp:
            text = fp.read()
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not valid UTF-8: {exc}") from exc
    return [line for line in text.splitlines() if line.strip()]


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        click.echo(text, nl=False)


def _norm_options(fn):
    fn = click.option("--strip-diacritics", is_flag=True,
                      help="Remove combining marks before comparing.")(fn)
    fn = click.option("--keep-punct", is_flag=True,
                      help="Keep punctuation in the normalized form.")(fn)
    fn = click.option("--no-lowercase", is_flag=True,
                      help="Keep letter case in the normalized form.")(fn)
    return fn


def _profile(no_lowercase: bool, keep_punct: bool, strip_diacritics: bool) -> NormalizationProfile:
    return NormalizationProfile(
        lowercase=not no_lowercase,
        strip_punctuation=not keep_punct,
        strip_diacritics=strip_diacritics,
    )


def _scorer_options(fn):
    fn = click.option("--scorer-timeout", type=float, default=30.0, show_default=True,
                      help="Seconds to wait for each sidecar response.")(fn)
    fn = click.option("--scorer-startup-timeout", type=float, default=30.0, show_default=True,
                      help="Seconds to wait for the sidecar handshake.")(fn)
    fn = click.option("--scorer-cmd", default=None,
                      help="Launch an external scorer process with this command.")(fn)
    fn = click.option("--lm", type=click.Path(exists=True, dir_okay=False), default=None,
                      help="Score with this n-gram model file, in process.")(fn)
    return fn


def _build_scorer(lm, scorer_cmd, startup_timeout, read_timeout):
    if (lm is None) == (scorer_cmd is None):
        raise click.UsageError("exactly one of --lm and --scorer-cmd is required")
    if lm is not None:
        return NGramScorer(ngram.load(lm)), None
    scorer = SidecarScorer(
        scorer_cmd, startup_timeout=startup_timeout, read_timeout=read_timeout
    )
    return scorer, scorer


def _errors_extra(errors, fmt: str) -> dict | None:
    if not errors:
        return None
    if fmt == "structured":
        return {"errors": [{"id": uid, "message": msg} for uid, msg in errors]}
    return {"errors": "; ".join(f"{uid}: {msg}" for uid, msg in errors)}


def _report_failures(errors) -> None:
    for uid, msg in errors:
        click.echo(f"skipped {uid}: {msg}", err=True)
    raise DataError(f"{len(errors)} utterance(s) could not be processed (outputs written)")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Defaults file with section.key = value lines; flags override it.")
@click.pass_context
def cli(ctx, config):
    """Re-rank ASR N-best lists and evaluate transcription quality."""
    if config:
        ctx.default_map = _load_config(config)


@cli.command("eval")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Manifest with references (JSON lines).")
@click.option("--hyp-tsv", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Hypotheses as id<TAB>text lines; default is each utterance's "
                   "rank-0 candidate.  Ids missing from the manifest are ignored.")
@click.option("--format", type=click.Choice(FORMATS), default="plain", show_default=True,
              help="Report format.")
@click.option("--label", default="model", show_default=True, help="Row label in the report.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report here instead of stdout.")
@click.option("--no-bleu-smooth", is_flag=True, help="Disable add-one BLEU smoothing.")
@_norm_options
def cmd_eval(manifest_path, hyp_tsv, format, label, out, no_bleu_smooth,
             no_lowercase, keep_punct, strip_diacritics):
    """Score hypotheses against a reference manifest (WER/nWER/CER/BLEU)."""
    utterances = _read_manifest(manifest_path)
    transcripts = None
    if hyp_tsv:
        with open(hyp_tsv, "rb") as fp:
            transcripts = read_transcripts(fp)
    problems = []
    pairs = []
    ids = []
    for utt in utterances:
        if utt.reference is None:
            problems.append(f"{utt.id}: missing reference")
            continue
        if transcripts is not None:
            if utt.id not in transcripts:
                problems.append(f"{utt.id}: no hypothesis in {hyp_tsv}")
                continue
            hyp = transcripts[utt.id]
        else:
            if not utt.candidates:
                problems.append(f"{utt.id}: no candidates")
                continue
            hyp = utt.candidates[0].text
        pairs.append((utt.reference, hyp))
        ids.append(utt.id)
    if problems:
        for problem in problems:
            click.echo(problem, err=True)
        raise DataError(f"{len(problems)} utterance(s) cannot be evaluated")
    report = aggregate_corpus(
        pairs,
        profile=_profile(no_lowercase, keep_punct, strip_diacritics),
        ids=ids,
        label=label,
        bleu_smooth=not no_bleu_smooth,
    )
    _emit(write_report(report, format), out)


def _run_rerank(manifest_path, lm, scorer_cmd, n, policy, weight, workers,
                startup_timeout, read_timeout, profile, bleu_smooth):
    utterances = _read_manifest(manifest_path)
    selection = SelectionPolicy(criterion=policy, weight=weight)
    scorer, owned = _build_scorer(lm, scorer_cmd, startup_timeout, read_timeout)
    try:
        return rerank_corpus(
            scorer, utterances, n=n, policy=selection, profile=profile,
            workers=workers, bleu_smooth=bleu_smooth,
        )
    finally:
        if owned is not None:
            owned.close()


@cli.command("rerank")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Manifest with candidate lists.")
@_scorer_options
@click.option("--n", type=int, default=5, show_default=True,
              help="How many candidates per utterance to score.")
@click.option("--policy", type=click.Choice(POLICIES), default="min-perplexity",
              show_default=True, help="Selection criterion.")
@click.option("--weight", type=float, default=0.5, show_default=True,
              help="Lambda for the interpolated criterion.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Transcript file (id<TAB>text); stdout when omitted.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Also write a baseline-vs-reranked report here.")
@click.option("--format", type=click.Choice(FORMATS), default="plain", show_default=True,
              help="Report format.")
@click.option("--workers", type=int, default=os.cpu_count() or 1,
              help="Scoring parallelism; the output does not depend on it.")
@click.option("--no-bleu-smooth", is_flag=True, help="Disable add-one BLEU smoothing.")
@_norm_options
def cmd_rerank(manifest_path, lm, scorer_cmd, scorer_startup_timeout, scorer_timeout,
               n, policy, weight, out, report_path, format, workers, no_bleu_smooth,
               no_lowercase, keep_punct, strip_diacritics):
    """Pick one candidate per utterance with a language-model scorer."""
    result = _run_rerank(
        manifest_path, lm, scorer_cmd, n, policy, weight, workers,
        scorer_startup_timeout, scorer_timeout,
        _profile(no_lowercase, keep_punct, strip_diacritics), not no_bleu_smooth,
    )
    _emit(write_transcripts(result.transcripts), out)
    if report_path:
        if result.baseline is None:
            raise DataError("manifest has no references; cannot write a report")
        atomic_write_text(report_path, render_reports(
            [result.baseline, result.reranked], format,
            extra=_errors_extra(result.errors, format),
        ))
    if result.errors:
        _report_failures(result.errors)


@cli.command("pipeline")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Manifest with references and candidate lists.")
@_scorer_options
@click.option("--n", type=int, default=5, show_default=True,
              help="How many candidates per utterance to score.")
@click.option("--policy", type=click.Choice(POLICIES), default="min-perplexity",
              show_default=True, help="Selection criterion.")
@click.option("--weight", type=float, default=0.5, show_default=True,
              help="Lambda for the interpolated criterion.")
@click.option("--transcripts", "transcripts_path", type=click.Path(dir_okay=False),
              default=None, help="Also write the selected transcripts here.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report here instead of stdout.")
@click.option("--format", type=click.Choice(FORMATS), default="plain", show_default=True,
              help="Report format.")
@click.option("--workers", type=int, default=os.cpu_count() or 1,
              help="Scoring parallelism; the output does not depend on it.")
@click.option("--no-bleu-smooth", is_flag=True, help="Disable add-one BLEU smoothing.")
@_norm_options
def cmd_pipeline(manifest_path, lm, scorer_cmd, scorer_startup_timeout, scorer_timeout,
                 n, policy, weight, transcripts_path, out, format, workers, no_bleu_smooth,
                 no_lowercase, keep_punct, strip_diacritics):
    """Re-rank and report baseline vs reranked quality in one run."""
    result = _run_rerank(
        manifest_path, lm, scorer_cmd, n, policy, weight, workers,
        scorer_startup_timeout, scorer_timeout,
        _profile(no_lowercase, keep_punct, strip_diacritics), not no_bleu_smooth,
    )
    if result.baseline is None:
        raise DataError("manifest has no references; pipeline needs them")
    before = result.baseline.wer
    after = result.reranked.wer
    reduction = 0.0 if before == 0 else 100.0 * (before - after) / before
    extra = _errors_extra(result.errors, format) or {}
    if format == "structured":
        extra["relative_wer_reduction_pct"] = round(reduction, 2)
    else:
        extra["relative WER reduction"] = f"{reduction:.2f}%"
    if transcripts_path:
        atomic_write_text(transcripts_path, write_transcripts(result.transcripts))
    _emit(render_reports([result.baseline, result.reranked], format, extra=extra), out)
    if result.errors:
        _report_failures(result.errors)


@cli.command("sweep-n")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Manifest with references and candidate lists.")
@_scorer_options
@click.option("--n", "n_list", default="3,5,8", show_default=True,
              help="Comma-separated list-depth values to compare.")
@click.option("--policy", type=click.Choice(POLICIES), default="min-perplexity",
              show_default=True, help="Selection criterion.")
@click.option("--weight", type=float, default=0.5, show_default=True,
              help="Lambda for the interpolated criterion.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Write one report pair per N into this directory.")
@click.option("--format", type=click.Choice(FORMATS), default="plain", show_default=True,
              help="Report format.")
@click.option("--workers", type=int, default=os.cpu_count() or 1,
              help="Scoring parallelism; the output does not depend on it.")
@click.option("--no-bleu-smooth", is_flag=True, help="Disable add-one BLEU smoothing.")
@_norm_options
def cmd_sweep_n(manifest_path, lm, scorer_cmd, scorer_startup_timeout, scorer_timeout,
                n_list, policy, weight, out_dir, format, workers, no_bleu_smooth,
                no_lowercase, keep_punct, strip_diacritics):
    """Re-rank at several list depths and compare the reports."""
    try:
        ns = [int(part) for part in n_list.split(",") if part.strip()]
    except ValueError:
        raise click.UsageError(f"--n wants comma-separated integers, got {n_list!r}")
    if not ns or any(n < 1 for n in ns):
        raise click.UsageError(f"--n wants integers >= 1, got {n_list!r}")
    utterances = _read_manifest(manifest_path)
    selection = SelectionPolicy(criterion=policy, weight=weight)
    profile = _profile(no_lowercase, keep_punct, strip_diacritics)
    scorer, owned = _build_scorer(lm, scorer_cmd, scorer_startup_timeout, scorer_timeout)
    baseline = None
    errors = []
    per_n = {}
    try:
        for n in ns:
            result = rerank_corpus(
                scorer, utterances, n=n, policy=selection, profile=profile,
                workers=workers, bleu_smooth=not no_bleu_smooth,
            )
            if result.reranked is None:
                raise DataError("manifest has no references; sweep needs them")
            if baseline is None:
                baseline = result.baseline
                errors = result.errors
            per_n[n] = replace(result.reranked, label=f"n={n}")
    finally:
        if owned is not None:
            owned.close()
    reports = [baseline] + [per_n[n] for n in ns]
    click.echo(render_reports(reports, format, extra=_errors_extra(errors, format)), nl=False)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for n in ns:
            atomic_write_text(
                os.path.join(out_dir, f"sweep_n{n}{_EXT[format]}"),
                render_reports([baseline, per_n[n]], format),
            )
    if errors:
        _report_failures(errors)


@cli.group("lm")
def lm_group():
    """Train and query n-gram language models."""


@lm_group.command("train")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Training text, one sentence per line (UTF-8).")
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Model file to write.")
@click.option("--order", type=int, default=2, show_default=True, help="N-gram order.")
@click.option("--k", type=float, default=0.1, show_default=True,
              help="Additive smoothing weight.")
@click.option("--min-count", type=int, default=1, show_default=True,
              help="Tokens rarer than this fold into the unknown token.")
@click.option("--no-lowercase", is_flag=True, help="Keep letter case.")
@click.option("--strip-punct", is_flag=True,
              help="Drop punctuation before counting (kept by default).")
@click.option("--strip-diacritics", is_flag=True, help="Remove combining marks.")
def cmd_lm_train(corpus_path, out, order, k, min_count,
                 no_lowercase, strip_punct, strip_diacritics):
    """Count n-grams over a text corpus and write the model file."""
    sentences = _read_corpus(corpus_path)
    profile = NormalizationProfile(
        lowercase=not no_lowercase,
        strip_punctuation=strip_punct,
        strip_diacritics=strip_diacritics,
    )
    model = ngram.train(sentences, order=order, k=k, min_count=min_count, profile=profile)
    model.save(out)
    click.echo(f"trained order-{order} model on {len(sentences)} sentences: {out}")


@lm_group.command("ppl")
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Model file.")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Text to score, one sentence per line.")
@click.option("--compare-model", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Second model; prints a before/after table with the relative drop.")
def cmd_lm_ppl(model_path, corpus_path, compare_model):
    """Token-weighted corpus perplexity of a model on a text file."""
    sentences = _read_corpus(corpus_path)
    model = ngram.load(model_path)
    ppl = ngram.perplexity_corpus(model, sentences)
    if compare_model is None:
        click.echo(f"perplexity: {ppl:.4f}")
        return
    after = ngram.perplexity_corpus(ngram.load(compare_model), sentences)
    label = os.path.basename(corpus_path)
    click.echo(render_perplexity_comparison([(label, ppl, after)]), nl=False)


@cli.command("curate")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Manifest to filter.")
@click.option("--require-timestamps", is_flag=True, help="Reject records without duration.")
@click.option("--require-transcript", is_flag=True, help="Reject blank transcripts.")
@click.option("--min-dur", type=float, default=None, help="Minimal duration in seconds.")
@click.option("--max-dur", type=float, default=None, help="Maximal duration in seconds.")
@click.option("--cps", default=None, metavar="MIN:MAX",
              help="Allowed normalized chars-per-second range, e.g. 4:30.")
@click.option("--min-chars", type=int, default=None, help="Minimal transcript length.")
@click.option("--max-chars", type=int, default=None, help="Maximal transcript length.")
@click.option("--charset", is_flag=True,
              help="Reject transcripts dominated by non-Greek/Latin characters.")
@click.option("--max-foreign-ratio", type=float, default=0.5, show_default=True,
              help="Foreign-character fraction tolerated by --charset.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write kept records here (JSON lines).")
@click.option("--rejects", type=click.Path(dir_okay=False), default=None,
              help="Write rejected records with their violations here (JSON lines).")
@click.option("--summary", type=click.Path(dir_okay=False), default=None,
              help="Write a human-readable summary here.")
def cmd_curate(manifest_path, require_timestamps, require_transcript, min_dur, max_dur,
               cps, min_chars, max_chars, charset, max_foreign_ratio, out, rejects, summary):
    """Partition a manifest into kept and rejected records by rule."""
    import json

    utterances = _read_manifest(manifest_path)
    rules = []
    if require_timestamps:
        rules.append(RequireTimestamps())
    if min_dur is not None or max_dur is not None:
        rules.append(DurationBounds(
            min_s=0.0 if min_dur is None else min_dur,
            max_s=float("inf") if max_dur is None else max_dur,
        ))
    if require_transcript:
        rules.append(NonemptyTranscript())
    if min_chars is not None or max_chars is not None:
        rules.append(TranscriptLengthBounds(
            min_chars=1 if min_chars is None else min_chars, max_chars=max_chars,
        ))
    if charset:
        rules.append(CharsetWhitelist(max_foreign_ratio=max_foreign_ratio))
    if cps is not None:
        lo, sep, hi = cps.partition(":")
        try:
            rules.append(CharsPerSecondBounds(min_cps=float(lo), max_cps=float(hi)))
        except ValueError:
            raise click.UsageError(f"--cps wants MIN:MAX, got {cps!r}")
    result = filter_manifest(utterances, rules)
    if out:
        atomic_write_text(out, serialize_manifest(result.kept))
    if rejects:
        lines = []
        for utt, violations in result.rejected:
            lines.append(json.dumps({
                "id": utt.id,
                "violations": [{"rule": v.rule, "message": v.message} for v in violations],
                "record": utterance_to_obj(utt),
            }, ensure_ascii=False, separators=(",", ":")))
        atomic_write_text(rejects, "\n".join(lines) + "\n" if lines else "")
    if summary:
        stats = corpus_stats(result.kept)
        text = [
            f"input: {len(utterances)}",
            f"kept: {len(result.kept)}",
            f"rejected: {len(result.rejected)}",
            "rejected by rule:",
        ]
        text += [f"  {rule.name}: {result.rule_counts[rule.name]}" for rule in rules]
        text += [
            "kept totals:",
            f"  hours: {stats.hours:.4f}",
            f"  reference words: {stats.n_ref_words}",
            f"  reference chars: {stats.n_ref_chars}",
            f"  normalized vocabulary: {stats.vocab_size}",
            f"  missing duration: {stats.n_missing_duration}",
            f"  missing reference: {stats.n_missing_reference}",
            f"  with candidates: {stats.n_with_candidates}",
        ]
        atomic_write_text(summary, "\n".join(text) + "\n")
    click.echo(f"kept {len(result.kept)} of {len(utterances)}; rejected {len(result.rejected)}")


@cli.command("synth")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Source sentences, one per line; each becomes an utterance.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Manifest file to write; stdout when omitted.")
@click.option("--seed", type=int, default=0, show_default=True, help="RNG seed.")
@click.option("--n-candidates", type=int, default=5, show_default=True,
              help="Candidates per utterance.")
@click.option("--corrupt-prob", type=float, default=0.3, show_default=True,
              help="Per-word corruption probability for wrong candidates.")
@click.option("--true-rank-p0", type=float, default=0.5, show_default=True,
              help="Probability that the true sentence sits at rank 0.")
@click.option("--true-rank-decay", type=float, default=0.6, show_default=True,
              help="Geometric decay of the true sentence's rank when not 0.")
def cmd_synth(corpus_path, out, seed, n_candidates, corrupt_prob, true_rank_p0,
              true_rank_decay):
    """Generate a synthetic N-best manifest from a text corpus."""
    sentences = _read_corpus(corpus_path)
    utterances = generate_manifest(
        sentences,
        n_candidates=n_candidates,
        seed=seed,
        corrupt_prob=corrupt_prob,
        true_rank_p0=true_rank_p0,
        true_rank_decay=true_rank_decay,
    )
    _emit(serialize_manifest(utterances), out)
    if out:
        click.echo(f"wrote {len(utterances)} utterances: {out}")


def main(argv=None) -> int:
    """Run the CLI and map failures onto the exit-code contract."""
    try:
        cli.main(args=argv, prog_name="nbestkit", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except ScorerError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except (ToolkitError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


def run() -> None:
    sys.exit(main(sys.argv[1:]))

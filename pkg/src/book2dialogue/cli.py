"""Command-line pipeline: ingest -> synthesize -> evaluate -> stats /
correlate -> export.

Exit codes: 2 config error, 3 corpus/data error, 4 all sections failed,
5 provider exhaustion. Machine-parseable ``error_code=`` lines go to stderr.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, bundled_minibook_path
from .analytics import (dataset_stats, join_annotations, pearson,
                        read_annotations, render_stats_table, spearman)
from .corpus import InfoLevel, book_to_dict, parse_textbook
from .dialogue import Strategy, read_jsonl, render_history, write_jsonl
from .errors import (Book2DialogueError, ConfigError, JoinError,
                     ProviderError, SchemaError)
from .metrics import METRIC_COLUMNS, evaluate_dialogue
from .providers import (GenerationParams, HttpEndpoints, HttpProviderSet,
                        MockProviderSet)
from .synthesis import SynthesisConfig, synthesize

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ALL_FAILED = 4
EXIT_PROVIDER = 5


def _fail(code: int, message: str):
    click.echo(f"error_code={code} {message}", err=True)
    sys.exit(code)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        _fail(EXIT_CONFIG, f"config file not found: {path}")
    raw = p.read_bytes()
    try:
        if p.suffix in (".toml", ".tml"):
            return tomllib.loads(raw.decode("utf-8"))
        return json.loads(raw.decode("utf-8"))
    except Exception as exc:
        _fail(EXIT_CONFIG, f"cannot parse config file {path}: {exc}")


def _build_providers(cfg: dict, mock: bool, seed: int, verbose: bool):
    if mock:
        return MockProviderSet(seed=seed,
                               embedding_mode=cfg.get("mock_embedding_mode",
                                                      "identity"))
    endpoints = HttpEndpoints(
        chat_url=cfg.get("chat_url", ""),
        embeddings_url=cfg.get("embeddings_url", ""),
        qa_url=cfg.get("qa_url", ""),
        api_key=os.environ.get("B2D_API_KEY", cfg.get("api_key", "")),
        chat_model=cfg.get("chat_model", ""),
        embedding_model=cfg.get("embedding_model", ""),
    )
    return HttpProviderSet(endpoints,
                           max_in_flight=int(cfg.get("max_in_flight", 4)),
                           verbose=verbose)


def _load_corpus(path: str):
    try:
        return parse_textbook(Path(path))
    except (SchemaError, Book2DialogueError, json.JSONDecodeError, OSError) as exc:
        _fail(EXIT_DATA, f"corpus error: {exc}")


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


@click.group()
@click.version_option(__version__)
@click.option("--verbose", is_flag=True, help="Log provider requests/responses.")
@click.pass_context
def main(ctx, verbose):
    """Generate teacher-student QA dialogues from textbooks and score them."""
    level = logging.INFO if verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Write the normalized corpus JSON here.")
def ingest(corpus_path, output):
    """Parse and validate a textbook file; optionally re-emit it normalized."""
    book = _load_corpus(corpus_path)
    n_sections = sum(len(c.sections) for c in book.chapters)
    click.echo(f"book={book.id} title={book.title!r} domain={book.domain_label} "
               f"chapters={len(book.chapters)} sections={n_sections}")
    if output:
        Path(output).write_text(
            json.dumps(book_to_dict(book), ensure_ascii=False, indent=2),
            encoding="utf-8")
        click.echo(f"wrote {output}")


@main.command()
@click.option("--corpus", type=click.Path(), default=None,
              help="Textbook JSON (defaults to the bundled mini-textbook).")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="TOML or JSON config file; flags override it.")
@click.option("--output-dir", "-o", type=click.Path(), default="out")
@click.option("--strategy", type=click.Choice([s.value for s in Strategy]),
              default=None)
@click.option("--info-level", type=click.Choice([l.value for l in InfoLevel]),
              default=None)
@click.option("--max-turns", type=int, default=None)
@click.option("--temperature", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--mock", is_flag=True, help="Use deterministic offline providers.")
@click.pass_context
def synthesize_cmd(ctx, corpus, config_path, output_dir, strategy, info_level,
                   max_turns, temperature, seed, mock):
    """Generate one dialogue per eligible section of the corpus."""
    cfg = _load_config_file(config_path)
    strategy = strategy or cfg.get("strategy", Strategy.PERSONA_DUAL.value)
    info_level = info_level or cfg.get("info_level", InfoLevel.HIGH.value)
    max_turns = max_turns if max_turns is not None else int(cfg.get("max_turns", 12))
    temperature = temperature if temperature is not None else float(
        cfg.get("temperature", 0.7))
    seed = seed if seed is not None else int(cfg.get("seed", 0))
    mock = mock or bool(cfg.get("mock", False))
    corpus = corpus or cfg.get("corpus") or str(bundled_minibook_path())

    try:
        synth_config = SynthesisConfig(
            strategy=Strategy(strategy),
            info_level=InfoLevel(info_level),
            max_turns=max_turns,
            params=GenerationParams(temperature=temperature),
            seed=seed,
        )
    except (ConfigError, ValueError) as exc:
        _fail(EXIT_CONFIG, f"config error: {exc}")

    book = _load_corpus(corpus)
    providers = _build_providers(cfg, mock, seed, ctx.obj["verbose"])

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset_path = out / f"dialogues-{strategy}.jsonl"

    dialogues = []
    failures = []
    from dataclasses import replace as _replace
    for chapter, section in book.iter_sections():
        if not section.content.strip():
            continue
        try:
            dialogue = synthesize(section, synth_config, providers)
        except ProviderError as exc:
            failures.append({"section_id": section.id, "error": str(exc)})
            continue
        except Book2DialogueError as exc:
            failures.append({"section_id": section.id, "error": str(exc)})
            continue
        meta = _replace(dialogue.meta, book_id=book.id,
                        chapter_index=chapter.index)
        dialogues.append(_replace(dialogue, meta=meta))

    if not dialogues:
        _fail(EXIT_ALL_FAILED, "all sections failed to synthesize")

    write_jsonl(dialogues, dataset_path)
    config_payload = {"strategy": strategy, "info_level": info_level,
                      "max_turns": max_turns, "temperature": temperature,
                      "seed": seed, "mock": mock, "corpus": str(corpus)}
    manifest = {
        "config": config_payload,
        "config_hash": _config_hash(config_payload),
        "created_at": datetime.now(timezone.utc).isoformat(),
        "n_dialogues": len(dialogues),
        "n_failures": len(failures),
        "failures": failures,
        "dataset": str(dataset_path),
    }
    manifest_path = out / f"manifest-{strategy}.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    click.echo(f"wrote {dataset_path} ({len(dialogues)} dialogues, "
               f"{len(failures)} failures)")
    click.echo(f"manifest: {manifest_path}")


main.add_command(synthesize_cmd, name="synthesize")


@main.command()
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--corpus", type=click.Path(), default=None,
              help="Textbook JSON (defaults to the bundled mini-textbook).")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--output-dir", "-o", type=click.Path(), default="reports")
@click.option("--mock", is_flag=True, help="Use deterministic offline providers.")
@click.option("--offline", is_flag=True,
              help="Skip provider-backed metrics; compute the rest.")
@click.option("--alpha", type=float, default=1.0)
@click.option("--beta", type=float, default=1.0)
@click.option("--seed", type=int, default=0)
@click.pass_context
def evaluate(ctx, dataset, corpus, config_path, output_dir, mock, offline,
             alpha, beta, seed):
    """Score every dialogue in DATASET against its grounding sections."""
    cfg = _load_config_file(config_path)
    corpus = corpus or cfg.get("corpus") or str(bundled_minibook_path())
    book = _load_corpus(corpus)

    dialogues = list(read_jsonl(dataset))
    if not dialogues:
        _fail(EXIT_DATA, f"dataset is empty: {dataset}")

    providers = None
    skipped_reason = None
    if offline:
        skipped_reason = "offline mode: provider-backed metrics skipped"
    else:
        providers = _build_providers(cfg, mock, seed, ctx.obj["verbose"])

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for dialogue in dialogues:
        section = book.find_section(dialogue.meta.section_id)
        if section is None:
            _fail(EXIT_DATA, f"unresolved grounding: section id "
                  f"{dialogue.meta.section_id!r} not in corpus {book.id!r}")
        try:
            report = evaluate_dialogue(dialogue, section.content, providers,
                                       alpha=alpha, beta=beta)
        except ProviderError as exc:
            _fail(EXIT_PROVIDER, f"provider exhaustion: {exc}")
        payload = report.to_dict()
        if skipped_reason:
            payload["skipped"] = {name: skipped_reason for name in METRIC_COLUMNS
                                  if name not in report.per_dialogue}
        report_path = out / f"{report.dialogue_id.replace(':', '_')}.json"
        report_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        rows.append((report.dialogue_id, report.per_dialogue))

    csv_path = out / "metrics.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("dialogue_id",) + METRIC_COLUMNS)
        sums = {name: [] for name in METRIC_COLUMNS}
        for dialogue_id, per_dialogue in rows:
            out_row = [dialogue_id]
            for name in METRIC_COLUMNS:
                value = per_dialogue.get(name)
                if value is None:
                    out_row.append("")
                else:
                    out_row.append(f"{value:.6f}")
                    sums[name].append(value)
            writer.writerow(out_row)
        summary = ["MEAN"]
        for name in METRIC_COLUMNS:
            values = sums[name]
            summary.append(f"{sum(values) / len(values):.6f}" if values else "")
        writer.writerow(summary)
    click.echo(f"wrote {csv_path} ({len(rows)} dialogues)")


@main.command()
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Write stats JSON here as well as printing the table.")
def stats(dataset, output):
    """Dataset-level statistics: question types, lengths, bigram entropy."""
    dialogues = list(read_jsonl(dataset))
    if not dialogues or not any(d.pairs for d in dialogues):
        _fail(EXIT_DATA, f"dataset is empty: {dataset}")
    result = dataset_stats(dialogues)
    click.echo(render_stats_table(result))
    if output:
        Path(output).write_text(json.dumps(result.to_dict(), indent=2),
                                encoding="utf-8")
        click.echo(f"wrote {output}")


@main.command()
@click.argument("reports_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("annotations", type=click.Path(exists=True))
@click.option("--metric", required=True, help="Metric column to correlate.")
@click.option("--criterion", required=True, help="Human-eval criterion name.")
@click.option("--output", "-o", type=click.Path(), default=None)
def correlate(reports_dir, annotations, metric, criterion, output):
    """Correlate a metric against human yes/no annotations."""
    reports = {}
    for path in sorted(Path(reports_dir).glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        if "dialogue_id" in data:
            reports[data["dialogue_id"]] = data
    try:
        records = read_annotations(annotations)
        scores, human = join_annotations(records, reports, metric, criterion)
    except JoinError as exc:
        _fail(EXIT_DATA, f"join error: {exc}")
    try:
        pearson_result = pearson(scores, human)
        spearman_result = spearman(scores, human)
    except Book2DialogueError as exc:
        _fail(EXIT_DATA, f"correlation error: {exc}")
    payload = {
        "metric": metric,
        "criterion": criterion,
        "n": pearson_result.n,
        "pearson": {"coefficient": pearson_result.coefficient,
                    "p_value": pearson_result.p_value},
        "spearman": {"coefficient": spearman_result.coefficient,
                     "p_value": spearman_result.p_value},
    }
    text = json.dumps(payload, indent=2)
    click.echo(text)
    if output:
        Path(output).write_text(text, encoding="utf-8")


@main.command()
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--corpus", type=click.Path(), default=None,
              help="Textbook JSON (defaults to the bundled mini-textbook).")
@click.option("--format", "fmt", type=click.Choice(["pretrain"]),
              default="pretrain")
@click.option("--output", "-o", type=click.Path(), required=True)
def export(dataset, corpus, fmt, output):
    """Flatten dialogues into training-ready (history, source, question ->
    answer) records."""
    corpus = corpus or str(bundled_minibook_path())
    book = _load_corpus(corpus)
    dialogues = list(read_jsonl(dataset))
    if not dialogues:
        _fail(EXIT_DATA, f"dataset is empty: {dataset}")
    count = 0
    with open(output, "w", encoding="utf-8") as fh:
        for dialogue in dialogues:
            section = book.find_section(dialogue.meta.section_id)
            if section is None:
                _fail(EXIT_DATA, f"unresolved grounding: section id "
                      f"{dialogue.meta.section_id!r}")
            from .dialogue import Dialogue as _Dialogue
            for t, pair in enumerate(dialogue.pairs):
                history = render_history(
                    _Dialogue(pairs=dialogue.pairs[:t], meta=dialogue.meta))
                record = {"history": history, "source": section.content,
                          "question": pair.question, "answer": pair.answer}
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                count += 1
    click.echo(f"wrote {output} ({count} records)")


if __name__ == "__main__":
    main()

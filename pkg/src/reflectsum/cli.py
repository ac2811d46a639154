"""Command-line entry points.

Subcommands: ingest, train-extractor, extract, eval-extraction,
train-similarity, build-lsa, summarize, crossval, eval. Exit codes: 0 on
success, 1 on corpus validation errors, 2 on runtime errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from . import extractor, similarity
from .corpus import CorpusError, PROMPT_KINDS, corpus_stats, load_corpus
from .evalmetrics import student_coverage
from .pipeline import (PipelineConfig, ResourcePaths, VARIANTS, crossval_extraction,
                       load_resources, report, run_crossval, score_summary,
                       summarize, train_models)

log = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="responses.jsonl path")
    parser.add_argument("--annotations", required=True, help="annotations.jsonl path")
    parser.add_argument("--config", help="pipeline config JSON path")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--jobs", type=int, default=1, help="parallel folds")
    parser.add_argument("--out", help="output path (default: stdout)")


def _add_resources(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--vectors", help="word-embedding vector file")
    parser.add_argument("--lsa", help="pre-built LSA vector file")
    parser.add_argument("--taxonomy-dir", help="WordNet 3.0 database directory")
    parser.add_argument("--taxonomy-ic", help="information-content file")
    parser.add_argument("--background", help="plain-text LSA background corpus")


def _config(args) -> PipelineConfig:
    config = (PipelineConfig.from_json(args.config) if args.config
              else PipelineConfig())
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "variant", None):
        updates["variant"] = args.variant
    path_updates = {
        name: value for name, value in (
            ("vectors", getattr(args, "vectors", None)),
            ("lsa", getattr(args, "lsa", None)),
            ("taxonomy_dir", getattr(args, "taxonomy_dir", None)),
            ("taxonomy_ic", getattr(args, "taxonomy_ic", None)),
            ("background", getattr(args, "background", None)),
        ) if value
    }
    if path_updates:
        updates["paths"] = dataclasses.replace(config.paths, **path_updates)
    return dataclasses.replace(config, **updates) if updates else config


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _variants(args, config) -> tuple[str, ...]:
    if getattr(args, "variants", None):
        return tuple(args.variants.split(","))
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
        if "variants" in raw:
            return tuple(raw["variants"])
    return (config.variant,)


def cmd_ingest(args) -> int:
    corpus = load_corpus(args.corpus, args.annotations)
    stats = corpus_stats(corpus)
    coverage = []
    for (lecture, prompt, _), ann in corpus.annotations.items():
        cell = corpus.cell_responses(lecture, prompt)
        if cell:
            coverage.append(student_coverage(ann, cell))
    record = {
        "course_id": corpus.course_id,
        "lectures": corpus.lectures(),
        "annotators": list(corpus.annotator_ids),
        "cells": stats.n_cells,
        "mean_responses": stats.mean_responses,
        "mean_words": stats.mean_words,
        "mean_words_per_response": stats.mean_words_per_response,
        "mean_highlights": stats.mean_highlights,
        "mean_student_coverage": (sum(coverage) / len(coverage)
                                  if coverage else None),
    }
    _emit(json.dumps(record, indent=2) + "\n", args.out)
    return 0


def cmd_train_extractor(args) -> int:
    corpus = load_corpus(args.corpus, args.annotations)
    config = _config(args)
    crf_config = dataclasses.replace(config.extractor,
                                     seed=config.stage_seed("extractor"))
    model = extractor.train_extractor(corpus, crf_config)
    extractor.save_model(model, args.model_out)
    log.info("wrote %s (%d features)", args.model_out, len(model.alphabet))
    return 0


def cmd_extract(args) -> int:
    corpus = load_corpus(args.corpus, args.annotations)
    model = extractor.load_model(args.model)
    lectures = [args.lecture] if args.lecture else corpus.lectures()
    prompts = [args.prompt] if args.prompt else list(PROMPT_KINDS)
    lines = []
    for lecture in lectures:
        for prompt in prompts:
            if not corpus.cell_responses(lecture, prompt):
                continue
            for phrase in extractor.extract_phrases(model, corpus, lecture, prompt):
                lines.append(json.dumps({
                    "lecture_id": lecture, "prompt": prompt,
                    "student_id": phrase.student_id,
                    "start": phrase.start, "end": phrase.end,
                    "text": phrase.text}))
    _emit("".join(line + "\n" for line in lines), args.out)
    return 0


def cmd_eval_extraction(args) -> int:
    corpus = load_corpus(args.corpus, args.annotations)
    scores = crossval_extraction(corpus, _config(args))
    lines = ["system\tP\tR\tF"]
    for system, score in scores.items():
        lines.append(f"{system}\t{score.p:.3f}\t{score.r:.3f}\t{score.f:.3f}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_train_similarity(args) -> int:
    corpus = load_corpus(args.corpus, args.annotations)
    config = _config(args)
    resources = load_resources(config, corpus)
    sim_config = dataclasses.replace(config.similarity,
                                     seed=config.stage_seed("similarity"))
    pairs = similarity.build_pair_training_set(corpus)
    features = [similarity.pair_features(p.phrase_a, p.phrase_b, resources)
                for p in pairs]
    model = similarity.train_similarity(pairs, features, sim_config)
    similarity.save_model(model, args.model_out)
    log.info("wrote %s from %d pairs", args.model_out, len(pairs))
    return 0


def cmd_build_lsa(args) -> int:
    from .pipeline import build_lsa_clamped
    from .similarity import load_background, corpus_background

    config = _config(args)
    if args.background:
        background = load_background(args.background)
    else:
        corpus = load_corpus(args.corpus, args.annotations)
        background = corpus_background(corpus)
    table = build_lsa_clamped(background, args.dim, config.stage_seed("lsa"))
    similarity.save_vectors(table, args.vectors_out)
    log.info("wrote %s (%d terms, dim %d)", args.vectors_out, len(table), table.dim)
    return 0


def cmd_summarize(args) -> int:
    corpus = load_corpus(args.corpus, args.annotations)
    config = _config(args)
    resources = load_resources(config, corpus)
    from .pipeline import TrainedModels, _needs_crf, _needs_sim

    models = TrainedModels(resources=resources)
    if args.crf_model:
        models.crf = extractor.load_model(args.crf_model)
    if args.sim_model:
        models.sim = similarity.load_model(args.sim_model)
    needs_training = ((_needs_crf(config.variant) and models.crf is None)
                      or (_needs_sim(config.variant) and models.sim is None))
    if needs_training:
        training_view = corpus.without_lecture(args.lecture)
        trained = train_models(training_view, config, resources,
                               (config.variant,))
        models.crf = models.crf or trained.crf
        models.sim = models.sim or trained.sim
    summary = summarize(corpus, args.lecture, args.prompt, models, config)
    if args.text:
        _emit(summary.render() + "\n", args.out)
    else:
        _emit(summary.to_json() + "\n", args.out)
    return 0


def cmd_crossval(args) -> int:
    corpus = load_corpus(args.corpus, args.annotations)
    config = _config(args)
    result = run_crossval(corpus, config, variants=_variants(args, config),
                          jobs=args.jobs)
    _emit(report(result, args.format), args.out)
    return 0


def cmd_eval(args) -> int:
    corpus = load_corpus(args.corpus, args.annotations)
    from .corpus import ResponseRef, tokenize
    from .extractor.phrases import CandidatePhrase
    from .ranking import Summary, SummaryEntry

    lines = ["course\tlecture\tprompt\tsystem\tmetric\tP\tR\tF"]
    with open(args.summaries, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            entries = []
            for bullet in record["bullets"]:
                ref = ResponseRef(bullet["source_student"], record["lecture_id"],
                                  record["prompt"])
                start, end = bullet["span"]
                response = corpus.response(ref)
                phrase = CandidatePhrase(response_ref=ref, start=start, end=end,
                                         tokens=response.tokens[start:end])
                entries.append(SummaryEntry(phrase=phrase,
                                            supporters=bullet["supporters"]))
            summary = Summary(lecture_id=record["lecture_id"],
                              prompt_kind=record["prompt"],
                              system=record.get("system", "external"),
                              entries=tuple(entries))
            for metric, score in score_summary(summary, corpus).items():
                lines.append("\t".join([
                    corpus.course_id, summary.lecture_id, summary.prompt_kind,
                    summary.system, metric,
                    f"{score.p:.3f}", f"{score.r:.3f}", f"{score.f:.3f}"]))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reflectsum",
        description="Phrase summaries of student reflections, with evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus and print statistics")
    _add_common(p)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("train-extractor", help="train the CRF phrase extractor")
    _add_common(p)
    p.add_argument("--model-out", required=True, help="model file to write")
    p.set_defaults(fn=cmd_train_extractor)

    p = sub.add_parser("extract", help="decode candidate phrases with a model")
    _add_common(p)
    p.add_argument("--model", required=True, help="crf-model file")
    p.add_argument("--lecture", help="restrict to one lecture")
    p.add_argument("--prompt", choices=PROMPT_KINDS, help="restrict to one prompt")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("eval-extraction",
                       help="cross-validated exact-match extraction scores")
    _add_common(p)
    p.set_defaults(fn=cmd_eval_extraction)

    p = sub.add_parser("train-similarity", help="train the similarity ensemble")
    _add_common(p)
    _add_resources(p)
    p.add_argument("--model-out", required=True, help="model file to write")
    p.set_defaults(fn=cmd_train_similarity)

    p = sub.add_parser("build-lsa", help="build an LSA vector table")
    _add_common(p)
    p.add_argument("--background", help="plain-text background corpus")
    p.add_argument("--dim", type=int, default=50, help="latent dimension")
    p.add_argument("--vectors-out", required=True, help="vector file to write")
    p.set_defaults(fn=cmd_build_lsa)

    p = sub.add_parser("summarize", help="summarize one (lecture, prompt) cell")
    _add_common(p)
    _add_resources(p)
    p.add_argument("--variant", choices=VARIANTS, help="system variant")
    p.add_argument("--lecture", required=True)
    p.add_argument("--prompt", required=True, choices=PROMPT_KINDS)
    p.add_argument("--crf-model", help="pre-trained crf-model file")
    p.add_argument("--sim-model", help="pre-trained sim-model file")
    p.add_argument("--text", action="store_true", help="render plain bullets")
    p.set_defaults(fn=cmd_summarize)

    p = sub.add_parser("crossval", help="leave-one-lecture-out evaluation")
    _add_common(p)
    _add_resources(p)
    p.add_argument("--variant", choices=VARIANTS, help="single system variant")
    p.add_argument("--variants", help="comma-separated variant list")
    p.add_argument("--format", choices=("tsv", "json", "markdown"),
                   default="tsv")
    p.set_defaults(fn=cmd_crossval)

    p = sub.add_parser("eval", help="score a summaries JSONL file")
    _add_common(p)
    p.add_argument("--summaries", required=True, help="summary JSONL to score")
    p.set_defaults(fn=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CorpusError as exc:
        log.error("validation failed: %s", exc)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.error("%s: %s", type(exc).__name__, exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())

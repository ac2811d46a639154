"""End-to-end orchestration: system variants, cross-validation, reports.

Five systems share the same pipeline skeleton (extract -> pair similarity ->
cluster -> rank):

  lexrank_baseline   whole responses ranked by LexRank, no clustering
  phrasesum_np       chunk-tag noun phrases + LSA similarity + K-medoids
  sequencesum        CRF extraction + LSA similarity + K-medoids
  simsum             CRF extraction + learned similarity + K-medoids
  cdsum              CRF extraction + learned similarity + community detection

Cross-validation leaves one lecture out at a time: models only ever see the
other lectures, and every metric is scored against both annotators of the
held-out cell and averaged.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .clustering import (CommunityConfig, detect_communities, ensemble_predictor,
                         build_phrase_graph, kmedoids, lsa_predictor)
from .corpus import PROMPT_KINDS, ReflectionCorpus
from .evalmetrics import (PrfScore, assign_colors, color_match,
                          human_colored_summary, paired_ttest, rouge_n, rouge_su4)
from .extractor import (CrfConfig, CrfModel, MissingChunkTags, extract_np_phrases,
                        extract_phrases, train_extractor)
from .ranking import Summary, assemble_summary, lexrank_response_baseline
from .similarity import (Resources, SimConfig, SimilarityModel, build_lsa,
                         build_pair_training_set, corpus_background,
                         load_background, load_taxonomy, load_vectors,
                         pair_features, train_similarity)

log = logging.getLogger(__name__)

VARIANTS = ("lexrank_baseline", "phrasesum_np", "sequencesum", "simsum", "cdsum")

# master seed fans out to stage seeds as seed + stage index
STAGE_INDEX = {"extractor": 0, "similarity": 1, "lsa": 2, "clustering": 3,
               "kmedoids": 4}

SUMMARY_METRICS = ("rouge_1", "rouge_2", "rouge_su4", "color_match")


@dataclass(frozen=True)
class ResourcePaths:
    vectors: Optional[str] = None
    lsa: Optional[str] = None
    taxonomy_dir: Optional[str] = None
    taxonomy_ic: Optional[str] = None
    background: Optional[str] = None


@dataclass(frozen=True)
class PipelineConfig:
    variant: str = "cdsum"
    seed: int = 0
    max_phrases: int = 5
    count_students: bool = False
    lsa_dim: int = 50
    lsa_threshold: float = 0.4
    damping: float = 0.85
    kmedoids_max_iter: int = 100
    community_trials: int = 10
    community_pvalue: float = 1.0
    extractor: CrfConfig = field(default_factory=CrfConfig)
    similarity: SimConfig = field(default_factory=SimConfig)
    paths: ResourcePaths = field(default_factory=ResourcePaths)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; "
                             f"expected one of {VARIANTS}")

    def stage_seed(self, stage: str) -> int:
        return self.seed + STAGE_INDEX[stage]

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {"variant", "seed", "max_phrases", "count_students", "lsa_dim",
                 "lsa_threshold", "damping", "kmedoids_max_iter",
                 "community_trials", "community_pvalue", "extractor",
                 "similarity", "paths", "variants"}
        for key in set(raw) - known:
            log.warning("ignoring unknown config field %r", key)
        kwargs = {k: raw[k] for k in known & set(raw) if k != "variants"}
        if "extractor" in kwargs:
            kwargs["extractor"] = CrfConfig(**kwargs["extractor"])
        if "similarity" in kwargs:
            kwargs["similarity"] = SimConfig(**kwargs["similarity"])
        if "paths" in kwargs:
            kwargs["paths"] = ResourcePaths(**kwargs["paths"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def load_resources(config: PipelineConfig, corpus: ReflectionCorpus) -> Resources:
    """Load or build the similarity resources the configured paths describe.

    The LSA table defaults to a model built over all student responses when
    no pre-built table is given (a stand-in for an external background
    corpus, which is configurable through paths.background).
    """
    vectors = load_vectors(config.paths.vectors) if config.paths.vectors else None
    taxonomy = None
    if config.paths.taxonomy_dir and config.paths.taxonomy_ic:
        taxonomy = load_taxonomy(config.paths.taxonomy_dir, config.paths.taxonomy_ic)
    if config.paths.lsa:
        lsa = load_vectors(config.paths.lsa)
    else:
        if config.paths.background:
            background = load_background(config.paths.background)
        else:
            background = corpus_background(corpus)
        lsa = build_lsa_clamped(background, config.lsa_dim,
                                config.stage_seed("lsa"))
    return Resources(vectors=vectors, lsa=lsa, taxonomy=taxonomy)


def build_lsa_clamped(background: Sequence[str], dim: int, seed: int):
    """build_lsa with the dimension clamped to what the corpus can support."""
    from .corpus import tokenize
    documents = [doc for doc in background if tokenize(doc)]
    terms = {t.lower for doc in documents for t in tokenize(doc)}
    k = max(1, min(dim, len(terms), len(documents)))
    if k < dim:
        log.warning("reducing LSA dimension from %d to %d (corpus size)", dim, k)
    return build_lsa(documents, k=k, seed=seed)


@dataclass
class TrainedModels:
    crf: Optional[CrfModel] = None
    sim: Optional[SimilarityModel] = None
    resources: Resources = field(default_factory=Resources)


def _needs_crf(variant: str) -> bool:
    return variant in ("sequencesum", "simsum", "cdsum")


def _needs_sim(variant: str) -> bool:
    return variant in ("simsum", "cdsum")


def train_models(corpus: ReflectionCorpus, config: PipelineConfig,
                 resources: Resources,
                 variants: Sequence[str] = ()) -> TrainedModels:
    """Train whichever models the requested variants need."""
    wanted = set(variants) or {config.variant}
    models = TrainedModels(resources=resources)
    if any(_needs_crf(v) for v in wanted):
        crf_config = replace(config.extractor, seed=config.stage_seed("extractor"))
        models.crf = train_extractor(corpus, crf_config)
    if any(_needs_sim(v) for v in wanted):
        sim_config = replace(config.similarity, seed=config.stage_seed("similarity"))
        pairs = build_pair_training_set(corpus)
        features = [pair_features(p.phrase_a, p.phrase_b, resources) for p in pairs]
        models.sim = train_similarity(pairs, features, sim_config)
    return models


def summarize(corpus: ReflectionCorpus, lecture_id: str, prompt_kind: str,
              models: TrainedModels, config: PipelineConfig,
              variant: Optional[str] = None) -> Summary:
    """Run the configured variant on one (lecture, prompt) cell."""
    variant = variant or config.variant
    responses = corpus.cell_responses(lecture_id, prompt_kind)
    empty = Summary(lecture_id=lecture_id, prompt_kind=prompt_kind,
                    system=variant, entries=())
    if not responses:
        log.warning("no responses for (%s, %s); emitting empty summary",
                    lecture_id, prompt_kind)
        return empty

    if variant == "lexrank_baseline":
        return lexrank_response_baseline(responses,
                                         max_units=config.max_phrases,
                                         damping=config.damping, system=variant)

    if variant == "phrasesum_np":
        phrases = extract_np_phrases(corpus, lecture_id, prompt_kind)
    else:
        phrases = extract_phrases(models.crf, corpus, lecture_id, prompt_kind)
    if not phrases:
        log.warning("no candidate phrases for (%s, %s); emitting empty summary",
                    lecture_id, prompt_kind)
        return empty

    if _needs_sim(variant):
        predictor = ensemble_predictor(models.sim, models.resources)
    else:
        predictor = lsa_predictor(models.resources.lsa, config.lsa_threshold)
    graph = build_phrase_graph(phrases, predictor)

    if variant == "cdsum":
        clustering = detect_communities(graph, CommunityConfig(
            pvalue=config.community_pvalue, seed=config.stage_seed("clustering"),
            trials=config.community_trials))
    else:
        clustering = kmedoids(graph, seed=config.stage_seed("kmedoids"),
                              max_iter=config.kmedoids_max_iter)
    return assemble_summary(clustering, graph, phrases, lecture_id, prompt_kind,
                            system=variant, max_phrases=config.max_phrases,
                            count_students=config.count_students,
                            damping=config.damping)


# --- scoring one summary against the annotators ------------------------------


def _mean_prf(scores: Sequence[PrfScore]) -> PrfScore:
    p = sum(s.p for s in scores) / len(scores)
    r = sum(s.r for s in scores) / len(scores)
    return PrfScore.from_pr(p, r, degenerate=any(s.degenerate for s in scores))


def score_summary(summary: Summary, corpus: ReflectionCorpus) -> dict[str, PrfScore]:
    """ROUGE-1/2/SU4 and color matching against every annotator, averaged."""
    annotations = corpus.cell_annotations(summary.lecture_id, summary.prompt_kind)
    if not annotations:
        raise ValueError(f"no annotations for ({summary.lecture_id}, "
                         f"{summary.prompt_kind})")
    candidate = [[t for t in e.phrase.tokens] for e in summary.entries]
    references = [[[t for t in p.tokens] for p in ann.summary]
                  for ann in annotations]
    scores = {
        "rouge_1": rouge_n(candidate, references, 1),
        "rouge_2": rouge_n(candidate, references, 2),
        "rouge_su4": rouge_su4(candidate, references),
    }
    per_annotator = []
    for ann in annotations:
        system = assign_colors([(e.phrase, e.supporters) for e in summary.entries],
                               ann)
        per_annotator.append(color_match(system, human_colored_summary(ann)))
    scores["color_match"] = _mean_prf(per_annotator)
    return scores


# --- cross-validation ---------------------------------------------------------


@dataclass
class FoldResult:
    lecture_id: str
    summaries: dict[tuple[str, str], Summary]          # (system, prompt)
    scores: dict[tuple[str, str, str], PrfScore]       # (system, prompt, metric)


@dataclass
class CrossvalResult:
    course_id: str
    variants: tuple[str, ...]
    folds: list[FoldResult]

    def cells(self, system: str, metric: str) -> list[tuple[str, str, PrfScore]]:
        out = []
        for fold in self.folds:
            for (sys_name, prompt), _ in fold.summaries.items():
                if sys_name != system:
                    continue
                key = (system, prompt, metric)
                if key in fold.scores:
                    out.append((fold.lecture_id, prompt, fold.scores[key]))
        return out


def run_fold(corpus: ReflectionCorpus, lecture_id: str, config: PipelineConfig,
             resources: Resources, variants: Sequence[str]) -> FoldResult:
    training_view = corpus.without_lecture(lecture_id)
    models = train_models(training_view, config, resources, variants)
    summaries: dict[tuple[str, str], Summary] = {}
    scores: dict[tuple[str, str, str], PrfScore] = {}
    for prompt in PROMPT_KINDS:
        if not corpus.cell_responses(lecture_id, prompt):
            continue
        if not corpus.cell_annotations(lecture_id, prompt):
            continue
        for variant in variants:
            try:
                summary = summarize(corpus, lecture_id, prompt, models, config,
                                    variant=variant)
            except MissingChunkTags:
                log.warning("skipping %s for (%s, %s): responses lack chunk tags",
                            variant, lecture_id, prompt)
                continue
            except Exception as exc:
                raise RuntimeError(
                    f"fold {lecture_id}/{prompt}, system {variant}: {exc}") from exc
            summaries[(variant, prompt)] = summary
            for metric, score in score_summary(summary, corpus).items():
                scores[(variant, prompt, metric)] = score
    return FoldResult(lecture_id=lecture_id, summaries=summaries, scores=scores)


def run_crossval(corpus: ReflectionCorpus, config: PipelineConfig,
                 variants: Optional[Sequence[str]] = None,
                 jobs: int = 1) -> CrossvalResult:
    """Leave-one-lecture-out evaluation of one or more system variants."""
    lectures = corpus.lectures()
    if len(lectures) < 2:
        raise ValueError("cross-validation needs at least two lectures")
    variants = tuple(variants) if variants else (config.variant,)
    for variant in variants:
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
    resources = load_resources(config, corpus)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(
                lambda lec: run_fold(corpus, lec, config, resources, variants),
                lectures))
    else:
        folds = [run_fold(corpus, lec, config, resources, variants)
                 for lec in lectures]
    return CrossvalResult(course_id=corpus.course_id, variants=variants,
                          folds=folds)


# --- intrinsic cross-validated evaluations ------------------------------------


def crossval_extraction(corpus: ReflectionCorpus,
                        config: PipelineConfig) -> dict[str, PrfScore]:
    """Leave-one-lecture-out exact-match phrase extraction scores per system."""
    from .extractor import evaluate_extraction, gold_phrases

    crf_scores, np_scores = [], []
    for lecture_id in corpus.lectures():
        training_view = corpus.without_lecture(lecture_id)
        crf_config = replace(config.extractor, seed=config.stage_seed("extractor"))
        model = train_extractor(training_view, crf_config)
        for prompt in PROMPT_KINDS:
            if not corpus.cell_responses(lecture_id, prompt):
                continue
            gold = gold_phrases(corpus, lecture_id, prompt)
            if not gold:
                continue
            predicted = extract_phrases(model, corpus, lecture_id, prompt)
            crf_scores.append(evaluate_extraction(predicted, gold))
            try:
                baseline = extract_np_phrases(corpus, lecture_id, prompt)
            except Exception:
                continue
            np_scores.append(evaluate_extraction(baseline, gold))
    out = {"sequence_labeling": _mean_prf(crf_scores)}
    if np_scores:
        out["np_chunks"] = _mean_prf(np_scores)
    return out


def crossval_pairs(corpus: ReflectionCorpus, config: PipelineConfig,
                   resources: Optional[Resources] = None) -> dict[str, PrfScore]:
    """Similarity-pair classification, learned ensemble vs LSA baseline."""
    from .similarity import evaluate_pairs, lsa_baseline_similar

    resources = resources or load_resources(config, corpus)
    learned, baseline = [], []
    for lecture_id in corpus.lectures():
        training_view = corpus.without_lecture(lecture_id)
        train_pairs = build_pair_training_set(training_view)
        test_pairs = [p for p in build_pair_training_set(corpus)
                      if p.lecture_id == lecture_id]
        if not test_pairs:
            continue
        sim_config = replace(config.similarity,
                             seed=config.stage_seed("similarity"))
        features = [pair_features(p.phrase_a, p.phrase_b, resources)
                    for p in train_pairs]
        model = train_similarity(train_pairs, features, sim_config)
        learned.append(evaluate_pairs(model, test_pairs, resources))
        tp = fp = fn = 0
        for pair in test_pairs:
            predicted = lsa_baseline_similar(resources.lsa, pair.phrase_a,
                                             pair.phrase_b, config.lsa_threshold)
            tp += predicted and pair.similar
            fp += predicted and not pair.similar
            fn += (not predicted) and pair.similar
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        baseline.append(PrfScore.from_pr(p, r))
    return {"similarity_learning": _mean_prf(learned),
            "lsa_baseline": _mean_prf(baseline)}


def crossval_purity(corpus: ReflectionCorpus, config: PipelineConfig,
                    resources: Optional[Resources] = None) -> dict[str, float]:
    """Clustering purity over gold phrases, community detection vs K-medoids."""
    from .clustering import purity
    from .extractor import gold_phrases

    resources = resources or load_resources(config, corpus)
    cd_scores, km_scores = [], []
    for lecture_id in corpus.lectures():
        training_view = corpus.without_lecture(lecture_id)
        models = train_models(training_view, config, resources,
                              variants=("cdsum",))
        predictor = ensemble_predictor(models.sim, resources)
        for prompt in PROMPT_KINDS:
            phrases = gold_phrases(corpus, lecture_id, prompt)
            if len(phrases) < 2:
                continue
            color_of = {}
            for annotation in corpus.cell_annotations(lecture_id, prompt):
                for h in annotation.highlights:
                    for i, phrase in enumerate(phrases):
                        if (phrase.response_ref == h.response_ref
                                and phrase.span == (h.start, h.end)):
                            color_of.setdefault(i, h.color)
            if not color_of:
                continue
            graph = build_phrase_graph(phrases, predictor)
            cd = detect_communities(graph, CommunityConfig(
                pvalue=config.community_pvalue,
                seed=config.stage_seed("clustering"),
                trials=config.community_trials))
            km = kmedoids(graph, seed=config.stage_seed("kmedoids"),
                          max_iter=config.kmedoids_max_iter)
            cd_scores.append(purity(cd, color_of))
            km_scores.append(purity(km, color_of))
    return {"community_detection": sum(cd_scores) / len(cd_scores),
            "kmedoids": sum(km_scores) / len(km_scores)}


# --- reporting -----------------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    course: str
    lecture: str
    prompt: str
    system: str
    metric: str
    p: Optional[float]
    r: Optional[float]
    f: Optional[float]
    marker: str = ""


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3f}"


def report_rows(result: CrossvalResult) -> list[ReportRow]:
    """Aggregate rows (mean over fold x prompt cells) with significance
    markers: '*' where the variant differs from the first variant at
    p < 0.05 on per-cell F scores (two-tailed paired t-test)."""
    rows = []
    baseline = result.variants[0]
    for system in result.variants:
        for metric in SUMMARY_METRICS:
            cells = result.cells(system, metric)
            if not cells:
                continue
            marker = ""
            if system != baseline:
                base_cells = {(lec, prompt): s.f for lec, prompt, s
                              in result.cells(baseline, metric)}
                shared = [(key, score.f) for lec, prompt, score in cells
                          if (key := (lec, prompt)) in base_cells]
                if len(shared) >= 2:
                    ours = [f for _, f in shared]
                    theirs = [base_cells[key] for key, _ in shared]
                    test = paired_ttest(ours, theirs)
                    if not test.degenerate and test.p_two_tailed < 0.05:
                        marker = "*"
            rows.append(ReportRow(
                course=result.course_id, lecture="ALL", prompt="ALL",
                system=system, metric=metric,
                p=sum(s.p for _, _, s in cells) / len(cells),
                r=sum(s.r for _, _, s in cells) / len(cells),
                f=sum(s.f for _, _, s in cells) / len(cells),
                marker=marker))
    for fold in result.folds:
        for (system, prompt), _ in fold.summaries.items():
            for metric in SUMMARY_METRICS:
                score = fold.scores.get((system, prompt, metric))
                if score is None:
                    continue
                rows.append(ReportRow(
                    course=result.course_id, lecture=fold.lecture_id,
                    prompt=prompt, system=system, metric=metric,
                    p=score.p, r=score.r, f=score.f))
    return rows


_COLUMNS = ("course", "lecture", "prompt", "system", "metric", "P", "R", "F")


def render_tsv(rows: Sequence[ReportRow]) -> str:
    lines = ["\t".join(_COLUMNS)]
    for row in rows:
        lines.append("\t".join([
            row.course, row.lecture, row.prompt, row.system, row.metric,
            _fmt(row.p), _fmt(row.r), _fmt(row.f) + row.marker]))
    return "\n".join(lines) + "\n"


def render_markdown(rows: Sequence[ReportRow]) -> str:
    lines = ["| " + " | ".join(_COLUMNS) + " |",
             "|" + "---|" * len(_COLUMNS)]
    for row in rows:
        lines.append("| " + " | ".join([
            row.course, row.lecture, row.prompt, row.system, row.metric,
            _fmt(row.p), _fmt(row.r), _fmt(row.f) + row.marker]) + " |")
    return "\n".join(lines) + "\n"


def render_json(rows: Sequence[ReportRow]) -> str:
    return json.dumps([
        {"course": row.course, "lecture": row.lecture, "prompt": row.prompt,
         "system": row.system, "metric": row.metric, "P": _fmt(row.p),
         "R": _fmt(row.r), "F": _fmt(row.f) + row.marker}
        for row in rows], indent=2) + "\n"


def parse_markdown(text: str) -> list[dict[str, str]]:
    """Read a rendered markdown table back into row dictionaries."""
    lines = [l for l in text.strip().splitlines() if l.startswith("|")]
    header = [c.strip() for c in lines[0].strip("|").split("|")]
    out = []
    for line in lines[2:]:
        cells = [c.strip() for c in line.strip("|").split("|")]
        out.append(dict(zip(header, cells)))
    return out


def report(result: CrossvalResult, fmt: str = "tsv") -> str:
    rows = report_rows(result)
    if fmt == "tsv":
        return render_tsv(rows)
    if fmt == "markdown":
        return render_markdown(rows)
    if fmt == "json":
        return render_json(rows)
    raise ValueError(f"unknown report format {fmt!r}")

"""BIO training-sequence construction and phrase span decoding.

A training instance is a full response labeled with B/I/O. Highlights from
both annotators are merged: spans identical across annotators collapse to a
single instance, while partially overlapping spans cannot share one BIO
labeling and are spread across separate instances.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus import ReflectionCorpus, Response, ResponseRef, Token
from ..evalmetrics import PrfScore

BIO_LABELS = ("B", "I", "O")


class OverlappingHighlightsSameAnnotator(ValueError):
    pass


class MalformedLabels(ValueError):
    pass


class MissingChunkTags(ValueError):
    pass


@dataclass(frozen=True)
class LabeledSequence:
    response_ref: ResponseRef
    labels: tuple[str, ...]

    def __post_init__(self):
        check_well_formed(self.labels)


@dataclass(frozen=True)
class CandidatePhrase:
    response_ref: ResponseRef
    start: int
    end: int
    tokens: tuple[Token, ...]

    @property
    def student_id(self) -> str:
        return self.response_ref.student_id

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def text(self) -> str:
        return " ".join(t.raw for t in self.tokens)


def check_well_formed(labels) -> None:
    previous = "O"
    for i, label in enumerate(labels):
        if label not in BIO_LABELS:
            raise MalformedLabels(f"unknown label {label!r} at position {i}")
        if label == "I" and previous == "O":
            raise MalformedLabels(f"I at position {i} does not continue a phrase")
        previous = label
    # also rejects I at position 0 because previous starts as O


def encode_labels(spans: list[tuple[int, int]], length: int) -> tuple[str, ...]:
    """Label a sequence from non-overlapping [start, end) spans."""
    labels = ["O"] * length
    for start, end in spans:
        labels[start] = "B"
        for i in range(start + 1, end):
            labels[i] = "I"
    return tuple(labels)


def phrase_from_span(response: Response, start: int, end: int) -> CandidatePhrase:
    return CandidatePhrase(response_ref=response.ref, start=start, end=end,
                           tokens=response.tokens[start:end])


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def _merged_spans(corpus: ReflectionCorpus, response: Response) -> list[tuple[int, int]]:
    """Distinct highlight spans for one response, merged across annotators."""
    per_annotator: dict[str, list[tuple[int, int]]] = {}
    for ann in corpus.cell_annotations(response.lecture_id, response.prompt_kind):
        for h in ann.highlights:
            if h.response_ref == response.ref:
                per_annotator.setdefault(ann.annotator_id, []).append((h.start, h.end))
    for annotator_id, spans in per_annotator.items():
        spans.sort()
        for left, right in zip(spans, spans[1:]):
            if _overlaps(left, right):
                raise OverlappingHighlightsSameAnnotator(
                    f"annotator {annotator_id!r} has overlapping highlights "
                    f"{left} and {right} in response {tuple(response.ref)}")
    distinct = sorted({span for spans in per_annotator.values() for span in spans})
    return distinct


def build_training_sequences(corpus: ReflectionCorpus) -> list[LabeledSequence]:
    """One labeled sequence per response and compatible highlight configuration.

    Spans that partially overlap (necessarily from different annotators) are
    split across instances; each instance holds a maximal set of mutually
    disjoint spans so that non-conflicting phrases are never labeled O.
    """
    sequences = []
    for (lecture_id, prompt), cell in corpus.responses.items():
        for response in cell:
            spans = _merged_spans(corpus, response)
            if not spans:
                sequences.append(LabeledSequence(
                    response.ref, encode_labels([], len(response.tokens))))
                continue
            uncovered = list(spans)
            while uncovered:
                members = [uncovered[0]]
                for span in spans:
                    if span not in members and all(not _overlaps(span, m) for m in members):
                        members.append(span)
                uncovered = [s for s in uncovered if s not in members]
                sequences.append(LabeledSequence(
                    response.ref, encode_labels(sorted(members), len(response.tokens))))
    return sequences


def gold_phrases(corpus: ReflectionCorpus, lecture_id: str | None = None,
                 prompt_kind: str | None = None) -> list[CandidatePhrase]:
    """Merged-deduplicated highlight spans as phrases (the gold standard)."""
    phrases = []
    for (lec, pk), cell in corpus.responses.items():
        if lecture_id is not None and lec != lecture_id:
            continue
        if prompt_kind is not None and pk != prompt_kind:
            continue
        for response in cell:
            for start, end in _merged_spans(corpus, response):
                phrases.append(phrase_from_span(response, start, end))
    return phrases


def decode_phrases(response: Response, labels) -> list[CandidatePhrase]:
    """One phrase per maximal B I* run, in sequence order."""
    check_well_formed(labels)
    phrases = []
    start = None
    for i, label in enumerate(labels):
        if label == "B":
            if start is not None:
                phrases.append(phrase_from_span(response, start, i))
            start = i
        elif label == "O":
            if start is not None:
                phrases.append(phrase_from_span(response, start, i))
                start = None
    if start is not None:
        phrases.append(phrase_from_span(response, start, len(labels)))
    return phrases


def np_chunk_baseline(response: Response) -> list[CandidatePhrase]:
    """Noun-phrase extraction from IOB chunk tags (B-NP / I-NP runs)."""
    if any(t.chunk is None for t in response.tokens):
        raise MissingChunkTags(
            f"response {tuple(response.ref)} lacks chunk tags")
    phrases = []
    start = None
    for i, token in enumerate(response.tokens):
        if token.chunk == "B-NP":
            if start is not None:
                phrases.append(phrase_from_span(response, start, i))
            start = i
        elif token.chunk == "I-NP":
            if start is None:
                start = i  # tolerate I-NP openings from external taggers
        else:
            if start is not None:
                phrases.append(phrase_from_span(response, start, i))
                start = None
    if start is not None:
        phrases.append(phrase_from_span(response, start, len(response.tokens)))
    return phrases


def evaluate_extraction(predicted: list[CandidatePhrase],
                        gold: list[CandidatePhrase]) -> PrfScore:
    """Exact-match P/R/F: a hit is an identical (response_ref, span) pair."""
    gold_keys = {(p.response_ref, p.span) for p in gold}
    predicted_keys = {(p.response_ref, p.span) for p in predicted}
    tp = len(gold_keys & predicted_keys)
    p = tp / len(predicted_keys) if predicted_keys else 0.0
    r = tp / len(gold_keys) if gold_keys else 0.0
    return PrfScore.from_pr(p, r)

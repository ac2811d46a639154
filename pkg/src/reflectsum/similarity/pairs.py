"""Labeled phrase pairs from per-annotator highlight colors.

Within one (lecture, prompt, annotator), every unordered pair of highlights
becomes a training pair: same color means similar, different colors mean
dissimilar. Pairs from both annotators are pooled; no pair spans lectures.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus import ReflectionCorpus
from ..extractor.phrases import CandidatePhrase, phrase_from_span


@dataclass(frozen=True)
class LabeledPair:
    phrase_a: CandidatePhrase
    phrase_b: CandidatePhrase
    similar: bool
    lecture_id: str
    prompt_kind: str
    annotator_id: str


def build_pair_training_set(corpus: ReflectionCorpus) -> list[LabeledPair]:
    pairs: list[LabeledPair] = []
    for (lecture_id, prompt_kind, annotator_id), ann in corpus.annotations.items():
        entries = []
        for h in ann.highlights:
            response = corpus.response(h.response_ref)
            entries.append((phrase_from_span(response, h.start, h.end), h.color))
        entries.sort(key=lambda e: (e[0].response_ref, e[0].span, e[1].color_key))
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                (pa, ca), (pb, cb) = entries[i], entries[j]
                if pa.response_ref == pb.response_ref and pa.span == pb.span:
                    continue  # duplicate highlight entries are not a pair
                pairs.append(LabeledPair(
                    phrase_a=pa, phrase_b=pb, similar=(ca == cb),
                    lecture_id=lecture_id, prompt_kind=prompt_kind,
                    annotator_id=annotator_id))
    return pairs

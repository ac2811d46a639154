"""Load, validate, tokenize and index highlight-annotated reflection corpora.

The corpus is the immutable data substrate for everything downstream: student
responses per (lecture, prompt) cell, plus per-annotator annotations that pair
a short phrase summary with color-coded highlight spans in the responses.
"""

from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, NamedTuple, Optional

from .porter import stem

log = logging.getLogger(__name__)

PROMPT_KINDS = ("interesting", "confusing")

# The two reflection prompts students respond to after each lecture.
PROMPT_TEXTS = {
    "interesting": "Describe what you found most interesting in today's class",
    "confusing": "Describe what was confusing or needed more detail",
}

_PUNCT = frozenset(string.punctuation)


class CorpusError(Exception):
    """Base class for corpus validation failures."""


class MalformedRecord(CorpusError):
    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class SpanOutOfBounds(CorpusError):
    pass


class OrphanColor(CorpusError):
    pass


class DuplicateKey(CorpusError):
    pass


class EmptyCorpus(CorpusError):
    pass


@dataclass(frozen=True)
class Token:
    raw: str
    lower: str
    stem: str
    char_start: int
    char_end: int
    pos: Optional[str] = None
    chunk: Optional[str] = None


def make_token(raw: str, char_start: int, char_end: int,
               pos: Optional[str] = None, chunk: Optional[str] = None) -> Token:
    lower = raw.lower()
    return Token(raw=raw, lower=lower, stem=stem(lower),
                 char_start=char_start, char_end=char_end, pos=pos, chunk=chunk)


def tokenize(text: str) -> list[Token]:
    """Split text into tokens on whitespace, peeling boundary punctuation.

    Leading and trailing punctuation characters of each whitespace-delimited
    chunk become single-character tokens; internal punctuation is kept, so
    "q-q" stays one token. Character offsets index into the original string.
    """
    tokens: list[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        end = pos
        while end < n and not text[end].isspace():
            end += 1
        i, j = pos, end
        while i < j and text[i] in _PUNCT:
            tokens.append(make_token(text[i], i, i + 1))
            i += 1
        trailing = []
        while j > i and text[j - 1] in _PUNCT:
            trailing.append(make_token(text[j - 1], j - 1, j))
            j -= 1
        if i < j:
            tokens.append(make_token(text[i:j], i, j))
        tokens.extend(reversed(trailing))
        pos = end
    return tokens


class ResponseRef(NamedTuple):
    student_id: str
    lecture_id: str
    prompt_kind: str


@dataclass(frozen=True)
class Response:
    student_id: str
    lecture_id: str
    prompt_kind: str
    tokens: tuple[Token, ...]
    text: str

    @property
    def ref(self) -> ResponseRef:
        return ResponseRef(self.student_id, self.lecture_id, self.prompt_kind)


@dataclass(frozen=True)
class ColorId:
    annotator_id: str
    color_key: str


@dataclass(frozen=True)
class Highlight:
    response_ref: ResponseRef
    start: int
    end: int
    color: ColorId


@dataclass(frozen=True)
class SummaryPhrase:
    tokens: tuple[Token, ...]
    supporters: int
    color: Optional[ColorId] = None

    @property
    def text(self) -> str:
        return " ".join(t.raw for t in self.tokens)


@dataclass(frozen=True)
class LectureAnnotation:
    lecture_id: str
    prompt_kind: str
    annotator_id: str
    summary: tuple[SummaryPhrase, ...]
    highlights: tuple[Highlight, ...]


@dataclass(frozen=True)
class ReflectionCorpus:
    course_id: str
    responses: dict[tuple[str, str], tuple[Response, ...]]
    annotations: dict[tuple[str, str, str], LectureAnnotation]
    annotator_ids: tuple[str, ...]
    _by_ref: dict[ResponseRef, Response] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        by_ref = {r.ref: r for cell in self.responses.values() for r in cell}
        object.__setattr__(self, "_by_ref", by_ref)

    def response(self, ref: ResponseRef) -> Response:
        return self._by_ref[ref]

    def lectures(self) -> list[str]:
        seen: dict[str, None] = {}
        for lecture_id, _ in self.responses:
            seen.setdefault(lecture_id, None)
        return list(seen)

    def cells(self) -> list[tuple[str, str]]:
        return list(self.responses)

    def cell_responses(self, lecture_id: str, prompt_kind: str) -> tuple[Response, ...]:
        return self.responses.get((lecture_id, prompt_kind), ())

    def cell_annotations(self, lecture_id: str, prompt_kind: str) -> list[LectureAnnotation]:
        return [ann for (lec, pk, _), ann in self.annotations.items()
                if lec == lecture_id and pk == prompt_kind]

    def without_lecture(self, lecture_id: str) -> "ReflectionCorpus":
        """Fold-filtered view: every response and annotation of one lecture removed."""
        responses = {k: v for k, v in self.responses.items() if k[0] != lecture_id}
        annotations = {k: v for k, v in self.annotations.items() if k[0] != lecture_id}
        return ReflectionCorpus(self.course_id, responses, annotations, self.annotator_ids)


def _warn(message: str) -> None:
    log.warning(message)


_RESPONSE_FIELDS = {"course_id", "lecture_id", "prompt", "student_id", "text", "tokens"}
_ANNOTATION_FIELDS = {"lecture_id", "prompt", "annotator_id", "summary", "highlights"}


def _parse_line(line: str, line_no: int, path: str) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"{path}: invalid JSON ({exc.msg})", line_no) from exc
    if not isinstance(record, dict):
        raise MalformedRecord(f"{path}: expected a JSON object", line_no)
    return record


def _file_tokens(text: str, entries: list, line_no: int) -> tuple[Token, ...]:
    tokens = []
    cursor = 0
    for entry in entries:
        if not isinstance(entry, dict) or "text" not in entry:
            raise MalformedRecord("token entries need a 'text' field", line_no)
        raw = entry["text"]
        at = text.find(raw, cursor)
        if at < 0:
            raise MalformedRecord(f"token {raw!r} not found in response text", line_no)
        tokens.append(make_token(raw, at, at + len(raw),
                                 pos=entry.get("pos"), chunk=entry.get("chunk")))
        cursor = at + len(raw)
    return tuple(tokens)


def load_corpus(responses_path, annotations_path) -> ReflectionCorpus:
    """Load and fully validate a responses/annotations JSONL pair."""
    responses: dict[tuple[str, str], list[Response]] = {}
    by_ref: dict[ResponseRef, Response] = {}
    course_id: Optional[str] = None

    with open(responses_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = _parse_line(line, line_no, str(responses_path))
            for unknown in set(record) - _RESPONSE_FIELDS:
                _warn(f"{responses_path}:{line_no}: ignoring unknown field {unknown!r}")
            try:
                lecture_id = record["lecture_id"]
                prompt = record["prompt"]
                student_id = record["student_id"]
                text = record["text"]
            except KeyError as exc:
                raise MalformedRecord(f"missing field {exc.args[0]!r}", line_no) from exc
            if prompt not in PROMPT_KINDS:
                raise MalformedRecord(f"unknown prompt kind {prompt!r}", line_no)
            if course_id is None:
                course_id = record.get("course_id", "")
            elif record.get("course_id", course_id) != course_id:
                raise MalformedRecord(
                    f"mixed course ids: {record['course_id']!r} vs {course_id!r}", line_no)
            if "tokens" in record and record["tokens"] is not None:
                tokens = _file_tokens(text, record["tokens"], line_no)
            else:
                tokens = tuple(tokenize(text))
            if not tokens:
                _warn(f"{responses_path}:{line_no}: empty response skipped "
                      f"(student {student_id!r})")
                continue
            resp = Response(student_id=student_id, lecture_id=lecture_id,
                            prompt_kind=prompt, tokens=tokens, text=text)
            if resp.ref in by_ref:
                raise DuplicateKey(f"duplicate response {resp.ref}")
            by_ref[resp.ref] = resp
            responses.setdefault((lecture_id, prompt), []).append(resp)

    annotations: dict[tuple[str, str, str], LectureAnnotation] = {}
    annotator_ids: dict[str, None] = {}

    with open(annotations_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = _parse_line(line, line_no, str(annotations_path))
            for unknown in set(record) - _ANNOTATION_FIELDS:
                _warn(f"{annotations_path}:{line_no}: ignoring unknown field {unknown!r}")
            try:
                lecture_id = record["lecture_id"]
                prompt = record["prompt"]
                annotator_id = record["annotator_id"]
                summary_entries = record["summary"]
                highlight_entries = record["highlights"]
            except KeyError as exc:
                raise MalformedRecord(f"missing field {exc.args[0]!r}", line_no) from exc
            if prompt not in PROMPT_KINDS:
                raise MalformedRecord(f"unknown prompt kind {prompt!r}", line_no)
            key = (lecture_id, prompt, annotator_id)
            if key in annotations:
                raise DuplicateKey(f"duplicate annotation for {key}")

            summary = []
            summary_colors = set()
            for entry in summary_entries:
                color = None
                if entry.get("color") is not None:
                    color = ColorId(annotator_id, entry["color"])
                    summary_colors.add(entry["color"])
                supporters = int(entry["supporters"])
                if supporters < 0:
                    raise MalformedRecord(
                        f"negative supporter count for {entry['text']!r}", line_no)
                summary.append(SummaryPhrase(tokens=tuple(tokenize(entry["text"])),
                                             supporters=supporters, color=color))

            highlights = []
            color_counts: dict[str, int] = {}
            for entry in highlight_entries:
                ref = ResponseRef(entry["student_id"], lecture_id, prompt)
                if ref not in by_ref:
                    raise MalformedRecord(
                        f"highlight refers to unknown response {tuple(ref)}", line_no)
                start, end = int(entry["start"]), int(entry["end"])
                n_tokens = len(by_ref[ref].tokens)
                if not (0 <= start < end <= n_tokens):
                    raise SpanOutOfBounds(
                        f"{annotations_path}:{line_no}: span [{start}, {end}) out of "
                        f"bounds for response {tuple(ref)} with {n_tokens} tokens")
                color_key = entry["color"]
                if color_key not in summary_colors:
                    raise OrphanColor(
                        f"{annotations_path}:{line_no}: highlight color {color_key!r} "
                        f"has no summary phrase for annotator {annotator_id!r}")
                color_counts[color_key] = color_counts.get(color_key, 0) + 1
                highlights.append(Highlight(response_ref=ref, start=start, end=end,
                                            color=ColorId(annotator_id, color_key)))

            for phrase in summary:
                if phrase.color is None:
                    continue
                n_high = color_counts.get(phrase.color.color_key, 0)
                if n_high > 0 and phrase.supporters < 1:
                    raise MalformedRecord(
                        f"phrase {phrase.text!r} has highlights but zero supporters",
                        line_no)
                if n_high != phrase.supporters:
                    _warn(f"{annotations_path}:{line_no}: supporter count "
                          f"{phrase.supporters} for {phrase.text!r} does not match "
                          f"{n_high} highlights; trusting the asserted count")

            annotations[key] = LectureAnnotation(
                lecture_id=lecture_id, prompt_kind=prompt, annotator_id=annotator_id,
                summary=tuple(summary), highlights=tuple(highlights))
            annotator_ids.setdefault(annotator_id, None)

    return ReflectionCorpus(
        course_id=course_id or "",
        responses={k: tuple(v) for k, v in responses.items()},
        annotations=annotations,
        annotator_ids=tuple(annotator_ids),
    )


def save_corpus(corpus: ReflectionCorpus, responses_path, annotations_path) -> None:
    """Write the corpus back out as the JSONL pair accepted by load_corpus."""
    with open(responses_path, "w", encoding="utf-8") as fh:
        for (lecture_id, prompt), cell in corpus.responses.items():
            for resp in cell:
                record = {
                    "course_id": corpus.course_id,
                    "lecture_id": lecture_id,
                    "prompt": prompt,
                    "student_id": resp.student_id,
                    "text": resp.text,
                    "tokens": [
                        {"text": t.raw,
                         **({"pos": t.pos} if t.pos is not None else {}),
                         **({"chunk": t.chunk} if t.chunk is not None else {})}
                        for t in resp.tokens
                    ],
                }
                fh.write(json.dumps(record) + "\n")
    with open(annotations_path, "w", encoding="utf-8") as fh:
        for ann in corpus.annotations.values():
            record = {
                "lecture_id": ann.lecture_id,
                "prompt": ann.prompt_kind,
                "annotator_id": ann.annotator_id,
                "summary": [
                    {"text": p.text, "supporters": p.supporters,
                     **({"color": p.color.color_key} if p.color is not None else {})}
                    for p in ann.summary
                ],
                "highlights": [
                    {"student_id": h.response_ref.student_id, "start": h.start,
                     "end": h.end, "color": h.color.color_key}
                    for h in ann.highlights
                ],
            }
            fh.write(json.dumps(record) + "\n")


def _is_word(token: Token) -> bool:
    return any(ch.isalnum() for ch in token.raw)


@dataclass(frozen=True)
class CorpusStats:
    n_cells: int
    mean_responses: float
    mean_words: float
    mean_words_per_response: float
    mean_highlights: float


def corpus_stats(corpus: ReflectionCorpus) -> CorpusStats:
    """Per-(lecture, prompt) averages of response, word and highlight counts.

    Highlight counts are averaged over the annotators that annotated a cell;
    cells nobody annotated contribute zero.
    """
    cells = corpus.cells()
    if not cells:
        raise EmptyCorpus("corpus has no (lecture, prompt) cells")
    n_resp, n_words, wpr, n_high = [], [], [], []
    for lecture_id, prompt in cells:
        cell = corpus.cell_responses(lecture_id, prompt)
        words = sum(sum(1 for t in r.tokens if _is_word(t)) for r in cell)
        n_resp.append(len(cell))
        n_words.append(words)
        wpr.append(words / len(cell) if cell else 0.0)
        anns = corpus.cell_annotations(lecture_id, prompt)
        if anns:
            n_high.append(sum(len(a.highlights) for a in anns) / len(anns))
        else:
            n_high.append(0.0)
    k = len(cells)
    return CorpusStats(
        n_cells=k,
        mean_responses=sum(n_resp) / k,
        mean_words=sum(n_words) / k,
        mean_words_per_response=sum(wpr) / k,
        mean_highlights=sum(n_high) / k,
    )

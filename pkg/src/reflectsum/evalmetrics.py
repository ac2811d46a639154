"""Summary evaluation: ROUGE-1/2/SU4, color matching, coverage, paired t-test.

ROUGE counts are computed over Porter stems of lowercased tokens with
stopwords retained. The color-matching metric credits each color shared
between a system and a human summary with the smaller of the two supporter
estimates.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from scipy.special import betainc

from .corpus import ColorId, LectureAnnotation, Response, Token
from .porter import stem


class NoResponses(ValueError):
    pass


@dataclass(frozen=True)
class PrfScore:
    p: float
    r: float
    f: float
    degenerate: bool = False

    @classmethod
    def from_pr(cls, p: float, r: float, degenerate: bool = False) -> "PrfScore":
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p=p, r=r, f=f, degenerate=degenerate)


def _segments(text) -> list[list[str]]:
    """Normalize input to a list of stem lists.

    Accepts a flat token sequence (strings or Tokens) or a list of such
    segments (one per bullet / sentence).
    """
    items = list(text)
    if not items:
        return []
    if isinstance(items[0], (str, Token)):
        segments = [items]
    else:
        segments = [list(seg) for seg in items]
    out = []
    for seg in segments:
        out.append([t.stem if isinstance(t, Token) else stem(t.lower()) for t in seg])
    return out


def _ngrams(segments: list[list[str]], n: int) -> Counter:
    counts: Counter = Counter()
    for seg in segments:
        for i in range(len(seg) - n + 1):
            counts[tuple(seg[i:i + n])] += 1
    return counts


def _su_units(segments: list[list[str]], max_gap: int = 4) -> Counter:
    """Unigrams plus ordered skip-bigrams at most max_gap tokens apart."""
    counts: Counter = Counter()
    for seg in segments:
        for tok in seg:
            counts[("u", tok)] += 1
        for i in range(len(seg)):
            for j in range(i + 1, min(i + max_gap + 2, len(seg))):
                counts[("s", seg[i], seg[j])] += 1
    return counts


def _clipped_prf(candidate: Counter, references: list[Counter]) -> PrfScore:
    ps, rs = [], []
    degenerate = False
    n_cand = sum(candidate.values())
    for ref in references:
        matches = sum(min(c, ref[g]) for g, c in candidate.items())
        n_ref = sum(ref.values())
        if n_cand == 0 or n_ref == 0:
            degenerate = True
        ps.append(matches / n_cand if n_cand else 0.0)
        rs.append(matches / n_ref if n_ref else 0.0)
    p = sum(ps) / len(ps)
    r = sum(rs) / len(rs)
    return PrfScore.from_pr(p, r, degenerate=degenerate)


def rouge_n(candidate, references: Sequence, n: int) -> PrfScore:
    """Clipped n-gram overlap, averaged over the references."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not references:
        raise ValueError("at least one reference is required")
    cand = _ngrams(_segments(candidate), n)
    refs = [_ngrams(_segments(ref), n) for ref in references]
    return _clipped_prf(cand, refs)


def rouge_su4(candidate, references: Sequence) -> PrfScore:
    """Unigram + skip-bigram (gap <= 4, within a bullet) overlap."""
    if not references:
        raise ValueError("at least one reference is required")
    cand = _su_units(_segments(candidate))
    refs = [_su_units(_segments(ref)) for ref in references]
    return _clipped_prf(cand, refs)


@dataclass(frozen=True)
class ColoredEntry:
    color: Optional[ColorId]
    estimate: int


@dataclass(frozen=True)
class ColoredSummary:
    entries: tuple[ColoredEntry, ...]

    def total_estimate(self) -> int:
        return sum(e.estimate for e in self.entries)


def merge_same_colors(entries: Sequence[ColoredEntry]) -> ColoredSummary:
    """Canonical form: one entry per color with summed estimate."""
    slots: list[ColoredEntry] = []
    index: dict[ColorId, int] = {}
    for entry in entries:
        if entry.color is None:
            slots.append(entry)
        elif entry.color in index:
            at = index[entry.color]
            slots[at] = ColoredEntry(entry.color, slots[at].estimate + entry.estimate)
        else:
            index[entry.color] = len(slots)
            slots.append(entry)
    return ColoredSummary(entries=tuple(slots))


def assign_colors(system_entries: Sequence[tuple], annotation: LectureAnnotation) -> ColoredSummary:
    """Inherit highlight colors for extracted system phrases.

    Each (phrase, estimate) pair inherits the color of the highlight covering
    more than half of its tokens; ambiguity resolves to the larger overlap,
    then the earlier-starting highlight. Phrases covered by no highlight stay
    colorless. Same-color entries are merged afterwards.
    """
    entries = []
    for phrase, estimate in system_entries:
        best: Optional[ColorId] = None
        best_key = None
        for h in annotation.highlights:
            if h.response_ref != phrase.response_ref:
                continue
            overlap = min(phrase.end, h.end) - max(phrase.start, h.start)
            if overlap <= 0:
                continue
            key = (-overlap, h.start, h.end, h.color.color_key)
            if best_key is None or key < best_key:
                best_key = key
                best = h.color
        color = None
        if best_key is not None and -best_key[0] * 2 > (phrase.end - phrase.start):
            color = best
        entries.append(ColoredEntry(color=color, estimate=estimate))
    return merge_same_colors(entries)


def human_colored_summary(annotation: LectureAnnotation) -> ColoredSummary:
    return merge_same_colors(tuple(
        ColoredEntry(color=p.color, estimate=p.supporters) for p in annotation.summary))


def color_match(system: ColoredSummary, human: ColoredSummary) -> PrfScore:
    """P/R/F over shared colors, each weighted by the smaller estimate.

    Colorless entries contribute to their own side's denominator only.
    """
    system = merge_same_colors(system.entries)
    human = merge_same_colors(human.entries)
    sys_by_color = {e.color: e.estimate for e in system.entries if e.color is not None}
    hum_by_color = {e.color: e.estimate for e in human.entries if e.color is not None}
    tp = sum(min(est, hum_by_color[c]) for c, est in sys_by_color.items()
             if c in hum_by_color)
    p_den = system.total_estimate()
    r_den = human.total_estimate()
    if p_den == 0 or r_den == 0:
        return PrfScore(p=0.0, r=0.0, f=0.0, degenerate=True)
    return PrfScore.from_pr(tp / p_den, tp / r_den)


def student_coverage(annotation: LectureAnnotation,
                     responses: Sequence[Response]) -> float:
    """Fraction of responding students with at least one highlighted token."""
    if not responses:
        raise NoResponses(
            f"no responses for ({annotation.lecture_id}, {annotation.prompt_kind})")
    students = {r.student_id for r in responses}
    covered = {h.response_ref.student_id for h in annotation.highlights
               if h.response_ref.student_id in students}
    return len(covered) / len(students)


@dataclass(frozen=True)
class TtestResult:
    t: float
    p_two_tailed: float
    degenerate: bool = False


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> TtestResult:
    """Two-tailed paired t-test via the regularized incomplete beta CDF.

    Zero variance of the differences is reported with the degenerate flag:
    p = 1 for identical inputs, p = 0 in the constant-shift limit.
    """
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two pairs")
    diffs = [x - y for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return TtestResult(t=0.0, p_two_tailed=1.0, degenerate=True)
        return TtestResult(t=math.copysign(math.inf, mean), p_two_tailed=0.0,
                           degenerate=True)
    t = mean / math.sqrt(var / n)
    nu = n - 1
    p = float(betainc(nu / 2.0, 0.5, nu / (nu + t * t)))
    return TtestResult(t=t, p_two_tailed=p)

"""
ASR latency with continuous Levenshtein alignment, WER/CER, and the
context-duration estimate for a token-limited translation model.

The character alignment minimizes (edits, class transitions)
lexicographically, where Copy and Substitute share one class and Delete and
Insert each form their own. A run of copies is therefore not broken up by
deletions or insertions unless that saves an edit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np
from numba import njit

from .core import TimedWord, check_transcript

COPY = "C"
SUBSTITUTE = "S"
DELETE = "D"
INSERT = "I"

_M, _D, _I, _START = 0, 1, 2, 3
DEFAULT_CHAR_CAP = 50_000


@dataclass(frozen=True)
class EditOp:
    kind: str
    gold_index: Optional[int] = None
    hyp_index: Optional[int] = None


@dataclass
class CharAlignment:
    ops: list
    edits: int
    transitions: int

    def kinds(self) -> str:
        return "".join(op.kind for op in self.ops)


def op_class(kind: str) -> str:
    return "M" if kind in (COPY, SUBSTITUTE) else kind


def count_transitions(kinds: Sequence[str]) -> int:
    classes = [op_class(k) for k in kinds]
    return sum(1 for a, b in zip(classes, classes[1:]) if a != b)


def normalize(text: str, lowercase: bool = False) -> str:
    text = " ".join(text.split())
    return text.lower() if lowercase else text


@njit(cache=True)
def _align_kernel(a, b):
    m, n = a.shape[0], b.shape[0]
    w = m + n + 2  # one edit outweighs any number of transitions
    big = np.int64(1) << 60
    ptr = np.zeros((m + 1, n + 1), dtype=np.uint8)
    prev = np.full((3, n + 1), big, dtype=np.int64)
    cur = np.full((3, n + 1), big, dtype=np.int64)
    for i in range(m + 1):
        for k in range(3):
            for j in range(n + 1):
                cur[k, j] = big
        for j in range(n + 1):
            packed = 0
            # match layer from (i-1, j-1)
            if i > 0 and j > 0:
                e = w if a[i - 1] != b[j - 1] else 0
                if i == 1 and j == 1:
                    best, arg = e, _START
                else:
                    best, arg = big, _START
                    for k in range(3):
                        c = prev[k, j - 1]
                        if c < big:
                            c += e + (1 if k != _M else 0)
                            if c < best:
                                best, arg = c, k
                cur[_M, j] = best
                packed |= arg
            # delete layer from (i-1, j)
            if i > 0:
                if i == 1 and j == 0:
                    best, arg = w, _START
                else:
                    best, arg = big, _START
                    for k in range(3):
                        c = prev[k, j]
                        if c < big:
                            c += w + (1 if k != _D else 0)
                            if c < best:
                                best, arg = c, k
                cur[_D, j] = best
                packed |= arg << 2
            # insert layer from (i, j-1)
            if j > 0:
                if i == 0 and j == 1:
                    best, arg = w, _START
                else:
                    best, arg = big, _START
                    for k in range(3):
                        c = cur[k, j - 1]
                        if c < big:
                            c += w + (1 if k != _I else 0)
                            if c < best:
                                best, arg = c, k
                cur[_I, j] = best
                packed |= arg << 4
            ptr[i, j] = packed
        prev, cur = cur, prev
    return ptr, prev[:, n].copy(), w


def _encode(*texts):
    vocab: dict = {}
    return [np.array([vocab.setdefault(ch, len(vocab)) for ch in t], dtype=np.int64) for t in texts]


def char_align(gold: str, hyp: str, char_cap: int = DEFAULT_CHAR_CAP) -> CharAlignment:
    """Minimum-edit character alignment with fewest class transitions.

    Remaining ties prefer Copy/Substitute over Delete over Insert.
    """
    if len(gold) > char_cap or len(hyp) > char_cap:
        raise ValueError(
            f"transcript longer than {char_cap} characters; split it into segments first"
        )
    m, n = len(gold), len(hyp)
    if m == 0 and n == 0:
        return CharAlignment([], 0, 0)
    a, b = _encode(gold, hyp)
    ptr, final, w = _align_kernel(a, b)
    layer = int(np.argmin(final))  # argmin keeps the first of equal costs: M, D, I
    ops = []
    i, j = m, n
    while layer != _START:
        packed = int(ptr[i, j])
        if layer == _M:
            kind = COPY if gold[i - 1] == hyp[j - 1] else SUBSTITUTE
            ops.append(EditOp(kind, i - 1, j - 1))
            nxt = packed & 3
            i, j = i - 1, j - 1
        elif layer == _D:
            ops.append(EditOp(DELETE, i - 1, None))
            nxt = (packed >> 2) & 3
            i -= 1
        else:
            ops.append(EditOp(INSERT, None, j - 1))
            nxt = (packed >> 4) & 3
            j -= 1
        layer = nxt
    assert i == 0 and j == 0
    ops.reverse()
    kinds = [op.kind for op in ops]
    edits = sum(1 for k in kinds if k != COPY)
    transitions = count_transitions(kinds)
    assert edits * w + transitions == int(final.min())
    return CharAlignment(ops, edits, transitions)


def apply_ops(gold: str, hyp: str, alignment: CharAlignment) -> str:
    """Rebuild the hypothesis from gold and the ops (substitutes read hyp)."""
    out = []
    for op in alignment.ops:
        if op.kind == COPY:
            out.append(gold[op.gold_index])
        elif op.kind in (SUBSTITUTE, INSERT):
            out.append(hyp[op.hyp_index])
    return "".join(out)


def _word_index(text: str) -> list:
    idx, w = [], 0
    for k, ch in enumerate(text):
        if ch == " ":
            idx.append(None)
            if k > 0 and text[k - 1] != " ":
                w += 1
        else:
            idx.append(w)
    return idx


@dataclass
class WordAlignment:
    links: dict
    unaligned: set


def words_from_chars(alignment: CharAlignment, gold: str, hyp: str) -> WordAlignment:
    gold_words = _word_index(gold)
    hyp_words = _word_index(hyp)
    counts: dict = {}
    for op in alignment.ops:
        if op.kind not in (COPY, SUBSTITUTE):
            continue
        if not (0 <= op.gold_index < len(gold) and 0 <= op.hyp_index < len(hyp)):
            raise ValueError("alignment does not match the texts")
        if op.kind == COPY and gold[op.gold_index] != hyp[op.hyp_index]:
            raise ValueError("copy op over different characters")
        v, w = gold_words[op.gold_index], hyp_words[op.hyp_index]
        if v is None or w is None:
            continue
        c = counts.setdefault(w, {}).setdefault(v, [0, 0])
        c[0] += 1
        c[1] += op.kind == COPY
    n_hyp = len(hyp.split())
    links = {}
    for w in range(n_hyp):
        cands = counts.get(w)
        if cands:
            links[w] = max(cands, key=lambda v: (cands[v][0], cands[v][1], -v))
    return WordAlignment(links, set(range(n_hyp)) - set(links))


@dataclass
class LatencyReport:
    per_word: list = field(default_factory=list)  # (hyp index, gold index, seconds)
    mean_latency: Optional[float] = None  # None when nothing aligned
    aligned_count: int = 0
    unaligned_count: int = 0

    @property
    def mean_latency_ms(self) -> Optional[float]:
        return None if self.mean_latency is None else self.mean_latency * 1000.0


def asr_latency(
    gold: Sequence[TimedWord],
    hyp: Sequence[TimedWord],
    lowercase: bool = False,
    char_cap: int = DEFAULT_CHAR_CAP,
) -> LatencyReport:
    """Average emission-time minus gold-start-time over aligned hypothesis words."""
    check_transcript(gold)
    check_transcript(hyp)
    gold_text = normalize(" ".join(w.text for w in gold), lowercase)
    hyp_text = normalize(" ".join(w.text for w in hyp), lowercase)
    if not hyp:
        return LatencyReport()
    alignment = char_align(gold_text, hyp_text, char_cap)
    words = words_from_chars(alignment, gold_text, hyp_text)
    per_word = [(h, g, hyp[h].time - gold[g].time) for h, g in sorted(words.links.items())]
    mean = math.fsum(x[2] for x in per_word) / len(per_word) if per_word else None
    return LatencyReport(per_word, mean, len(per_word), len(words.unaligned))


@dataclass
class ErrorRateReport:
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def rate(self) -> float:
        return self.errors / self.reference_length


@njit(cache=True)
def _levenshtein_kernel(a, b):
    m, n = a.shape[0], b.shape[0]
    # per cell: cost, substitutions, deletions, insertions
    prev = np.zeros((n + 1, 4), dtype=np.int64)
    cur = np.zeros((n + 1, 4), dtype=np.int64)
    for j in range(1, n + 1):
        prev[j, 0] = j
        prev[j, 3] = j
    for i in range(1, m + 1):
        cur[0, 0] = i
        cur[0, 1] = 0
        cur[0, 2] = i
        cur[0, 3] = 0
        for j in range(1, n + 1):
            sub = 1 if a[i - 1] != b[j - 1] else 0
            diag = prev[j - 1, 0] + sub
            dele = prev[j, 0] + 1
            ins = cur[j - 1, 0] + 1
            if diag <= dele and diag <= ins:
                cur[j, 0] = diag
                cur[j, 1] = prev[j - 1, 1] + sub
                cur[j, 2] = prev[j - 1, 2]
                cur[j, 3] = prev[j - 1, 3]
            elif dele <= ins:
                cur[j, 0] = dele
                cur[j, 1] = prev[j, 1]
                cur[j, 2] = prev[j, 2] + 1
                cur[j, 3] = prev[j, 3]
            else:
                cur[j, 0] = ins
                cur[j, 1] = cur[j - 1, 1]
                cur[j, 2] = cur[j - 1, 2]
                cur[j, 3] = cur[j - 1, 3] + 1
        prev, cur = cur, prev
    return prev[n, 1], prev[n, 2], prev[n, 3]


def error_rate(gold: Sequence[Hashable], hyp: Sequence[Hashable]) -> ErrorRateReport:
    """S/D/I of a minimum edit script; words for WER, characters for CER."""
    if len(gold) == 0:
        raise ValueError("error rate is undefined for an empty reference")
    a, b = _encode(list(gold), list(hyp))
    s, d, i = _levenshtein_kernel(a, b)
    return ErrorRateReport(int(s), int(d), int(i), len(gold))


def wer(gold_text: str, hyp_text: str, lowercase: bool = False) -> ErrorRateReport:
    return error_rate(normalize(gold_text, lowercase).split(), normalize(hyp_text, lowercase).split())


def cer(gold_text: str, hyp_text: str, lowercase: bool = False) -> ErrorRateReport:
    # separator spaces count as characters
    return error_rate(list(normalize(gold_text, lowercase)), list(normalize(hyp_text, lowercase)))


def max_context_duration(src_tokens: float, tgt_tokens: float, max_tokens: int, avg_duration: float):
    """Share of an average recording whose source and target fit in the
    context, and the corresponding duration (same unit as ``avg_duration``)."""
    if min(src_tokens, tgt_tokens, max_tokens, avg_duration) <= 0:
        raise ValueError("token counts, context size and duration must be positive")
    proportion = max_tokens / (src_tokens + tgt_tokens)
    return proportion, proportion * avg_duration

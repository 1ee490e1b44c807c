"""Text-to-text simultaneous translation with LocalAgreement.

Targets are handled as token lists. A token is a run of non-space,
non-CJK characters, or a single CJK character/punctuation mark, so the same
code serves German and Chinese/Japanese targets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from .core import EmissionEvent, TimedWord, unaware_clock_stamp

SENTENCES = "sentences"
SEGMENTS = "segments"

_CJK = "\u3000-\u303f\u3040-\u30ff\u3400-\u4dbf\u4e00-\u9fff\uac00-\ud7af\uff00-\uffef"
_TOKEN_RE = re.compile(rf"[{_CJK}]|[^\s{_CJK}]+")
_IS_CJK = re.compile(rf"[{_CJK}]")
_ASCII_TERMINATORS = ".!?"
_WIDE_TERMINATORS = "\u3002\uff01\uff1f"  # 。！？


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def detokenize(tokens: Sequence[str]) -> str:
    out = []
    for tok in tokens:
        if out and not (_IS_CJK.match(tok) or _IS_CJK.match(out[-1][-1])):
            out.append(" ")
        out.append(tok)
    return "".join(out)


def count_tokens(text: str) -> int:
    """Whitespace words; CJK text counts one per character."""
    return len(tokenize(text))


def split_sentences(tokens: Sequence[str]) -> list[list[str]]:
    """Split after tokens ending in . ! ? and after full-width terminators."""
    sentences, cur = [], []
    for tok in tokens:
        cur.append(tok)
        if tok[-1] in _ASCII_TERMINATORS or tok in _WIDE_TERMINATORS:
            sentences.append(cur)
            cur = []
    if cur:
        sentences.append(cur)
    return sentences


@dataclass(frozen=True)
class MtConfig:
    min_chunk_words: int = 1
    max_context_length: int = 300
    trimming: str = SEGMENTS
    counter: Callable[[str], int] = count_tokens

    def __post_init__(self):
        if self.min_chunk_words < 1 or self.max_context_length < 1:
            raise ValueError("min_chunk_words and max_context_length must be >= 1")
        if self.trimming not in (SENTENCES, SEGMENTS):
            raise ValueError(f"unknown trimming strategy {self.trimming!r}")


@dataclass(frozen=True)
class PromptTemplate:
    system_text: str = (
        "You are a simultaneous interpreter at a conference. "
        "Translate the English speech into German. Continue the translation."
    )
    example_source: str = "Thank you very much for the invitation."
    example_target: str = "Vielen Dank für die Einladung."

    def __post_init__(self):
        if not self.example_source.strip() or not self.example_target.strip():
            raise ValueError("in-context example pair must be non-empty")


@dataclass(frozen=True)
class SegmentPair:
    source_words: tuple
    target: tuple = ()  # confirmed target tokens

    def __post_init__(self):
        if not self.source_words:
            raise ValueError("segment source must be non-empty")


@dataclass(frozen=True)
class TranslationState:
    pairs: tuple = ()
    previous_hypothesis: Optional[tuple] = None
    emitted: tuple = ()
    last_time: float = 0.0

    def source_tokens(self) -> list[str]:
        return [w for p in self.pairs for w in p.source_words]

    def target_tokens(self) -> list[str]:
        return [t for p in self.pairs for t in p.target]


def chunk_words(words: Sequence[TimedWord], min_chunk_words: int) -> list[tuple[list, bool]]:
    """Group words into updates; the last group is flagged final.

    When the word count divides evenly a trailing empty flush is added.
    """
    if not words:
        return []
    groups = [list(words[i : i + min_chunk_words]) for i in range(0, len(words), min_chunk_words)]
    out = [(g, False) for g in groups]
    if len(groups[-1]) < min_chunk_words:
        out[-1] = (groups[-1], True)
    else:
        out.append(([], True))
    return out


def assemble_prompt(state: TranslationState, template: PromptTemplate) -> list[dict]:
    chat = [
        {"role": "system", "content": template.system_text},
        {"role": "user", "content": template.example_source},
        {"role": "assistant", "content": template.example_target},
    ]
    source = detokenize(state.source_tokens())
    if source:
        chat.append({"role": "user", "content": source})
    chat.append({"role": "assistant", "content": detokenize(state.target_tokens())})
    return chat


def common_prefix_len(a: Sequence, b: Sequence) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def local_agreement(previous: Optional[Sequence], current: Sequence, already_emitted: int) -> list:
    if previous is None:
        return []
    n = common_prefix_len(previous, current)
    return list(current[already_emitted:n])


def _total(state: TranslationState, cfg: MtConfig) -> int:
    return cfg.counter(detokenize(state.source_tokens())) + cfg.counter(detokenize(state.target_tokens()))


def trim_sentences(state: TranslationState, cfg: MtConfig) -> TranslationState:
    src = split_sentences(state.source_tokens())
    tgt = split_sentences(state.target_tokens())
    dropped = False

    def over():
        s = detokenize([t for x in src for t in x])
        t = detokenize([t for x in tgt for t in x])
        return cfg.counter(s) + cfg.counter(t) > cfg.max_context_length

    while over() and len(src) >= 2 and len(tgt) >= 2:
        src.pop(0)
        tgt.pop(0)
        dropped = True
    if not dropped:
        return state
    pair = SegmentPair(tuple(t for x in src for t in x), tuple(t for x in tgt for t in x))
    return replace(state, pairs=(pair,))


def trim_segments(state: TranslationState, cfg: MtConfig) -> TranslationState:
    pairs = list(state.pairs)
    while len(pairs) > 1 and _total(replace(state, pairs=tuple(pairs)), cfg) > cfg.max_context_length:
        pairs.pop(0)
    if len(pairs) == len(state.pairs):
        return state
    return replace(state, pairs=tuple(pairs))


def translate_update(
    state: TranslationState,
    words: Sequence[TimedWord],
    decoder,
    template: PromptTemplate,
    cfg: MtConfig,
    is_final: bool = False,
) -> tuple[TranslationState, list[EmissionEvent]]:
    """One update: append source, query the decoder, confirm by agreement.

    On the final update the whole hypothesis is confirmed.
    """
    if words:
        pair = SegmentPair(tuple(w.text for w in words))
        state = replace(state, pairs=state.pairs + (pair,), last_time=words[-1].time)
    if not state.pairs:
        return state, []
    buffered = state.target_tokens()
    continuation = decoder.generate(assemble_prompt(state, template))
    hypothesis = tuple(buffered + tokenize(continuation))
    if is_final:
        confirmed = list(hypothesis[len(buffered) :])
    else:
        confirmed = local_agreement(state.previous_hypothesis, hypothesis, len(buffered))
    newest = state.pairs[-1]
    pairs = state.pairs[:-1] + (replace(newest, target=newest.target + tuple(confirmed)),)
    state = replace(state, pairs=pairs, previous_hypothesis=hypothesis, emitted=state.emitted + tuple(confirmed))
    now = unaware_clock_stamp(state.last_time)
    events = [EmissionEvent(tok, now, state.last_time) for tok in confirmed]

    trim = trim_sentences if cfg.trimming == SENTENCES else trim_segments
    trimmed = trim(state, cfg)
    if trimmed is not state:
        # trimming removes a prefix of the buffered target, which is also a
        # prefix of the hypothesis; shift it so agreement keeps its coordinates
        cut = len(buffered) + len(confirmed) - len(trimmed.target_tokens())
        trimmed = replace(trimmed, previous_hypothesis=hypothesis[cut:])
    return trimmed, events


def run_translation(words: Sequence[TimedWord], decoder, template: PromptTemplate, cfg: MtConfig):
    state = TranslationState()
    events: list[EmissionEvent] = []
    for group, final in chunk_words(list(words), cfg.min_chunk_words):
        state, new = translate_update(state, group, decoder, template, cfg, final)
        events += new
    return state, events

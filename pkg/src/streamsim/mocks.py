"""Deterministic scripted decoders standing in for the neural models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import (
    DEFAULT_FRAME_RATE,
    AttentionSnapshot,
    AudioChunk,
    DecodedToken,
    DecoderError,
    ParseError,
    frame_offsets,
    frame_of_time,
)
from .mt import detokenize, tokenize

ALT_PENALTY = 5.0


class _DiagonalSession:
    def __init__(self, pending, total, n_alternatives):
        self.pending = pending  # list of (text, buffer frame)
        self.total = total
        self.n_alternatives = n_alternatives

    def step(self, hypothesis: Sequence[str]) -> list[DecodedToken]:
        n = len(hypothesis)
        if any(h.startswith("<alt") for h in hypothesis):
            return [DecodedToken.end()]
        if n >= len(self.pending):
            return [DecodedToken.end()]
        text, frame = self.pending[n]
        att = AttentionSnapshot.one_hot(frame, self.total)
        cands = [DecodedToken(text, 0.0, att)]
        for k in range(self.n_alternatives):
            cands.append(DecodedToken(f"<alt{k}>", -ALT_PENALTY * (k + 1), att))
        return cands


@dataclass
class DiagonalOracleDecoder:
    """Each scripted token attends, one-hot, to the frame at its scripted time.

    ``script`` is a sequence of ``(token, time_seconds)`` with non-decreasing
    times. On a buffer, the decoder skips tokens timed before the buffer and
    the ``len(prefix)`` tokens already forced, then reads the script in order.
    Tokens timed past the buffer end attend the last frame. Scripted tokens
    always score 0; ``alternatives`` lower-scored distractors per step feed
    beam search.
    """

    script: Sequence[tuple]
    frame_rate: float = DEFAULT_FRAME_RATE
    alternatives: int = 0

    def __post_init__(self):
        self.script = [(str(t), float(s)) for t, s in self.script]
        times = [s for _, s in self.script]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("diagonal script times must be non-decreasing")

    @classmethod
    def from_frames(cls, script, frame_rate=DEFAULT_FRAME_RATE, alternatives=0):
        """Script given as (token, frame index); frames count from time zero."""
        return cls([(t, f / frame_rate) for t, f in script], frame_rate, alternatives)

    def begin_buffer(self, chunks: Sequence[AudioChunk], prompt, context, prefix):
        total = frame_offsets(chunks)[-1]
        pending = []
        for text, t in self.script:
            f = frame_of_time(chunks, t)
            if f is not None:
                pending.append((text, f))
        return _DiagonalSession(pending[len(prefix):], total, self.alternatives)


def load_payload_script(path) -> dict[str, list[str]]:
    """``payload_id<TAB>tokens`` lines; tokens space-separated, may be empty."""
    table = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            key, _, rest = line.partition("\t")
            key = key.strip()
            if not key:
                raise ParseError(path, lineno, "empty payload id")
            if key in table:
                raise ParseError(path, lineno, f"duplicate payload id {key!r}")
            table[key] = rest.split()
    return table


def diagonal_from_payloads(granules, table: Mapping[str, list], frame_rate=DEFAULT_FRAME_RATE, alternatives=0):
    """Build a diagonal oracle placing each payload's tokens at its granule.

    Payload ``-`` carries no tokens; every other id must be in ``table``.
    """
    script = []
    for g in granules:
        if g.payload == "-":
            continue
        if g.payload not in table:
            raise DecoderError(f"decoder script has no entry for payload id {g.payload!r}")
        toks = table[g.payload]
        for k, tok in enumerate(toks):
            # spread tokens of one granule inside it
            script.append((tok, g.start + (g.end - g.start) * k / len(toks)))
    return DiagonalOracleDecoder(script, frame_rate, alternatives)


class _TableSession:
    def __init__(self, table, total, fallback_end):
        self.table = table
        self.total = total
        self.fallback_end = fallback_end

    def step(self, hypothesis):
        key = tuple(hypothesis)
        if key not in self.table:
            if self.fallback_end:
                return [DecodedToken.end()]
            raise DecoderError(f"no scripted continuation for {key!r}")
        out = []
        for text, score, frame in self.table[key]:
            if text is None:
                out.append(DecodedToken.end(score))
            else:
                f = min(max(frame, 0), self.total - 1)
                out.append(DecodedToken(text, score, AttentionSnapshot.one_hot(f, self.total)))
        return out


@dataclass
class TableDecoder:
    """Fully scripted search tree: hypothesis tuple -> candidate list.

    Candidates are ``(text, logprob, frame)``; ``text=None`` is the end
    token. Ignores the buffer except for its frame count.
    """

    table: Mapping[tuple, list]
    fallback_end: bool = True

    def begin_buffer(self, chunks, prompt, context, prefix):
        return _TableSession(self.table, frame_offsets(chunks)[-1], self.fallback_end)


# ---- text decoders -------------------------------------------------------


def _user_and_prefix(messages):
    user = [m for m in messages if m["role"] == "user"][-1]["content"]
    prefix = messages[-1]["content"] if messages[-1]["role"] == "assistant" else ""
    return user, prefix


def _continue(full: str, prefix: str) -> str:
    # forced decoding: the reply starts with the prefix whatever the model prefers
    n = len(tokenize(prefix))
    return detokenize(tokenize(full)[n:])


@dataclass
class ScriptedTextDecoder:
    """Exact-match map from the buffered source text to a full target."""

    table: Mapping[str, str]

    def generate(self, messages) -> str:
        source, prefix = _user_and_prefix(messages)
        return _continue(self.table.get(source, ""), prefix)

    @classmethod
    def load(cls, path) -> "ScriptedTextDecoder":
        table = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                if "\t" not in line:
                    raise ParseError(path, lineno, "expected source_prefix<TAB>hypothesis")
                src, hyp = line.split("\t", 1)
                table[" ".join(src.split())] = hyp
        return cls(table)


@dataclass
class FunctionTextDecoder:
    """Target is a word-wise function of the buffered source."""

    fn: object = None

    def generate(self, messages) -> str:
        source, prefix = _user_and_prefix(messages)
        words = source.split()
        full = " ".join(self.fn(w) for w in words) if self.fn else " ".join(words)
        return _continue(full, prefix)


def identity_text_decoder() -> FunctionTextDecoder:
    return FunctionTextDecoder(None)


@dataclass
class OscillatingTextDecoder:
    """Labels every target token with the source length, so hypotheses from
    updates over different source prefixes never share a token."""

    def generate(self, messages) -> str:
        source, prefix = _user_and_prefix(messages)
        n = len(source.split())
        return _continue(" ".join(f"v{n}.{i}" for i in range(n)), prefix)

"""
Shared domain types for the streaming simulation toolkit.

Times are seconds (float) everywhere inside the package. Milliseconds only
appear in the file formats read and written here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Protocol, Sequence

DEFAULT_FRAME_RATE = 50.0  # encoder frames per second
ATTENTION_SUM_TOL = 1e-6


class StreamSimError(Exception):
    """Base class for toolkit errors."""


class MonotonicityError(StreamSimError):
    pass


class DecoderError(StreamSimError):
    pass


class ParseError(StreamSimError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def check_time(seconds: float, what: str = "time") -> float:
    seconds = float(seconds)
    if not math.isfinite(seconds) or seconds < 0:
        raise ValueError(f"{what} must be finite and >= 0, got {seconds!r}")
    return seconds


@dataclass(frozen=True)
class TimedWord:
    """A word with a time: gold start timestamp or hypothesis emission time."""

    text: str
    time: float

    def __post_init__(self):
        if not self.text or any(ch.isspace() for ch in self.text):
            raise ValueError(f"word must be non-empty without whitespace: {self.text!r}")
        object.__setattr__(self, "time", check_time(self.time, "word time"))


def check_transcript(words: Sequence[TimedWord]) -> None:
    for prev, cur in zip(words, words[1:]):
        if cur.time < prev.time:
            raise MonotonicityError(
                f"transcript times decrease: {prev.text}@{prev.time} then {cur.text}@{cur.time}"
            )


@dataclass(frozen=True)
class Granule:
    """One VAD granule of the input stream (0.04 s by default)."""

    start: float
    end: float
    voice: bool
    payload: str = "-"


@dataclass(frozen=True)
class AudioChunk:
    """A contiguous span of voiced audio passed to the speech buffer.

    ``payload`` lists the granules overlapping the span; mock decoders read
    their scripts through it.
    """

    start: float
    end: float
    frames: int
    payload: tuple = ()
    serial: int = 0

    def __post_init__(self):
        check_time(self.start, "chunk start")
        check_time(self.end, "chunk end")
        if not self.end > self.start:
            raise ValueError(f"chunk end {self.end} must exceed start {self.start}")
        if self.frames < 1:
            raise ValueError("chunk must cover at least one frame")

    @property
    def duration(self) -> float:
        return self.end - self.start


def frames_for(duration: float, frame_rate: float = DEFAULT_FRAME_RATE) -> int:
    return max(1, int(round(duration * frame_rate)))


def make_chunk(start, end, frame_rate=DEFAULT_FRAME_RATE, payload=(), serial=0) -> AudioChunk:
    return AudioChunk(start, end, frames_for(end - start, frame_rate), tuple(payload), serial)


def frame_offsets(chunks: Sequence[AudioChunk]) -> list[int]:
    """Cumulative frame offset of each chunk, plus the total as last element."""
    offsets = [0]
    for c in chunks:
        offsets.append(offsets[-1] + c.frames)
    return offsets


def frame_of_time(chunks: Sequence[AudioChunk], t: float) -> Optional[int]:
    """Buffer frame index holding time ``t``.

    Returns None when ``t`` precedes the buffer. Times in a gap between
    chunks, or past the end, map to the last frame of the chunk before. The
    mapping always lands inside the frame range of the chunk whose span (gap
    included) holds ``t``, so frame->chunk attribution agrees with it.
    """
    if not chunks or t < chunks[0].start - 1e-9:
        return None
    offsets = frame_offsets(chunks)
    for k, c in enumerate(chunks):
        if k == len(chunks) - 1 or t < chunks[k + 1].start - 1e-9:
            rel = (t - c.start) / c.duration * c.frames
            local = min(c.frames - 1, max(0, int(math.floor(rel + 1e-9))))
            return offsets[k] + local
    return offsets[-1] - 1  # pragma: no cover


def chunk_index_of_frame(chunks: Sequence[AudioChunk], frame: int) -> int:
    offsets = frame_offsets(chunks)
    if not 0 <= frame < offsets[-1]:
        raise IndexError(f"frame {frame} outside buffer of {offsets[-1]} frames")
    for k in range(len(chunks)):
        if frame < offsets[k + 1]:
            return k
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class AttentionSnapshot:
    """Normalized attention of one decoded token over the buffered frames."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if any(x < 0 or not math.isfinite(x) for x in w):
            raise ValueError("attention weights must be finite and non-negative")
        if w and abs(sum(w) - 1.0) > ATTENTION_SUM_TOL:
            raise ValueError(f"attention weights sum to {sum(w)}, expected 1")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @classmethod
    def one_hot(cls, frame: int, total: int) -> "AttentionSnapshot":
        w = [0.0] * total
        w[frame] = 1.0
        return cls(tuple(w))


@dataclass(frozen=True)
class DecodedToken:
    text: str
    score: float
    attention: Optional[AttentionSnapshot] = None
    is_end: bool = False

    def __post_init__(self):
        if self.is_end and self.text:
            raise ValueError("end token must have empty text")
        if not self.is_end and self.attention is None:
            raise ValueError("non-end token needs an attention snapshot")

    @classmethod
    def end(cls, score: float = 0.0) -> "DecodedToken":
        return cls("", score, None, True)


class DecoderSession(Protocol):
    def step(self, hypothesis: Sequence[str]) -> list[DecodedToken]:
        """Candidates for the token after ``hypothesis`` (text of tokens
        generated so far in this session, after the forced prefix)."""
        ...


class IncrementalDecoder(Protocol):
    """Speech decoder contract used by the AlignAtt policy.

    Observable behavior must depend only on the arguments; implementations
    may cache internally.
    """

    def begin_buffer(
        self,
        chunks: Sequence[AudioChunk],
        prompt: Sequence[str],
        context: Sequence[str],
        prefix: Sequence[str],
    ) -> DecoderSession: ...


class TextDecoder(Protocol):
    def generate(self, messages: Sequence[dict]) -> str:
        """Continuation of the final (assistant) message."""
        ...


def unaware_clock_stamp(consumed_source_end: float) -> float:
    # Compute time is ignored: output becomes visible when its source was read.
    return check_time(consumed_source_end, "consumed source end")


@dataclass(frozen=True)
class EmissionEvent:
    unit: str
    emission_time: float
    source_consumed_until: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "unit": self.unit,
                "emission_time_ms": to_ms(self.emission_time),
                "source_consumed_until_ms": to_ms(self.source_consumed_until),
            },
            ensure_ascii=False,
        )


def to_ms(seconds: float) -> float:
    # round away float noise like 3500.0000000000005
    return round(seconds * 1000.0, 6)


@dataclass
class EventLog:
    events: list = field(default_factory=list)

    def append(self, unit: str, time: float, consumed_until: float) -> "EventLog":
        time = check_time(time, "emission time")
        consumed_until = check_time(consumed_until, "consumed-until time")
        if self.events and time < self.events[-1].emission_time:
            raise MonotonicityError(
                f"emission time {time} precedes previous {self.events[-1].emission_time}"
            )
        self.events.append(EmissionEvent(unit, time, consumed_until))
        return self

    def extend(self, events: Iterable[EmissionEvent]) -> "EventLog":
        for e in events:
            self.append(e.unit, e.emission_time, e.source_consumed_until)
        return self

    def __len__(self):
        return len(self.events)

    def __iter__(self) -> Iterator[EmissionEvent]:
        return iter(self.events)

    def words(self) -> list[TimedWord]:
        out = []
        for e in self.events:
            out.extend(TimedWord(w, e.emission_time) for w in e.unit.split())
        return out

    def dumps(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)

    def write(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def read(cls, path) -> "EventLog":
        log = cls()
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    log.append(
                        rec["unit"],
                        rec["emission_time_ms"] / 1000.0,
                        rec["source_consumed_until_ms"] / 1000.0,
                    )
                except (ValueError, KeyError, TypeError) as e:
                    raise ParseError(path, lineno, f"bad event record: {e}") from None
        return log


def read_gold_tsv(path) -> list[TimedWord]:
    """Gold transcript: ``word<TAB>start_time_ms`` per line."""
    words = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if lineno == 1 and cols[0] == "word":
                continue
            if len(cols) < 2:
                raise ParseError(path, lineno, "expected word<TAB>start_time_ms")
            try:
                words.append(TimedWord(cols[0], float(cols[1]) / 1000.0))
            except ValueError as e:
                raise ParseError(path, lineno, str(e)) from None
    try:
        check_transcript(words)
    except MonotonicityError as e:
        raise ParseError(path, 0, str(e)) from None
    return words


def write_gold_tsv(words: Sequence[TimedWord], path) -> None:
    lines = ["word\tstart_time_ms"]
    lines += [f"{w.text}\t{to_ms(w.time):g}" for w in words]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_granules(path) -> list[Granule]:
    """Granule TSV: ``start_ms end_ms voice_flag frame_payload_id``."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if cols[0] == "start_ms":
                continue
            if len(cols) < 3:
                raise ParseError(path, lineno, "expected start_ms, end_ms, voice_flag[, payload_id]")
            try:
                start, end = float(cols[0]) / 1000.0, float(cols[1]) / 1000.0
                flag = cols[2].strip().lower()
                if flag not in ("0", "1", "true", "false"):
                    raise ValueError(f"bad voice flag {cols[2]!r}")
                payload = cols[3].strip() if len(cols) > 3 and cols[3].strip() else "-"
                check_time(start), check_time(end)
                if end <= start:
                    raise ValueError("granule end must exceed start")
            except ValueError as e:
                raise ParseError(path, lineno, str(e)) from None
            out.append(Granule(start, end, flag in ("1", "true"), payload))
    return out

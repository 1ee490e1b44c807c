"""Speech-to-text streaming pipeline: VAD gating, chunking, the four buffers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

from .alignatt import AlignAttConfig, alignatt_decode, most_attended_frame
from .core import (
    DEFAULT_FRAME_RATE,
    AudioChunk,
    EmissionEvent,
    Granule,
    StreamSimError,
    chunk_index_of_frame,
    frames_for,
    unaware_clock_stamp,
)

log = logging.getLogger(__name__)

EPS = 1e-9


@dataclass(frozen=True)
class VadConfig:
    granule: float = 0.04
    min_silence: float = 0.5
    voice_pad: float = 0.1

    def __post_init__(self):
        if min(self.granule, self.min_silence, self.voice_pad) <= 0:
            raise ValueError("VAD durations must be positive")


@dataclass(frozen=True)
class VoicedAudio:
    start: float
    end: float
    payload: tuple = ()


@dataclass(frozen=True)
class EndOfVoice:
    time: float


def scripted_classifier(granule: Granule) -> bool:
    return granule.voice


def energy_classifier(threshold: float, energy_of: Callable[[Granule], float]):
    """Voice iff the payload's energy exceeds ``threshold``."""
    return lambda g: energy_of(g) > threshold


class VadGate:
    """Streaming voice gate over time-ordered granules.

    Non-voice granules outside a voice region are discarded. A region ends
    after ``min_silence`` of continuous non-voice; shorter pauses stay inside
    it. Regions are padded by ``voice_pad`` on both sides, clamped to the
    stream and to the previous region.
    """

    def __init__(self, cfg: VadConfig = VadConfig(), classify=scripted_classifier):
        self.cfg = cfg
        self.classify = classify
        self.in_voice = False
        self.last_end = 0.0
        self.last_voice_end = 0.0
        self.region_floor = 0.0
        self.recent: list[Granule] = []
        self.pending: list[Granule] = []

    def feed(self, g: Granule) -> list:
        if g.start < self.last_end - EPS:
            raise StreamSimError(f"granule at {g.start}s arrives before {self.last_end}s")
        self.last_end = g.end
        out = []
        if self.classify(g):
            if not self.in_voice:
                self.in_voice = True
                start = max(0.0, g.start - self.cfg.voice_pad, self.region_floor)
                if start < g.start - EPS:
                    out.append(VoicedAudio(start, g.start, _ids(self.recent, start, g.start)))
                self.recent = []
            elif self.pending:
                out.append(VoicedAudio(self.last_voice_end, g.start, _ids(self.pending)))
            self.pending = []
            out.append(VoicedAudio(g.start, g.end, (g.payload,)))
            self.last_voice_end = g.end
        elif self.in_voice:
            self.pending.append(g)
            if g.end - self.last_voice_end >= self.cfg.min_silence - EPS:
                out += self._close(g.end)
        else:
            self.recent = [r for r in self.recent if r.end > g.end - self.cfg.voice_pad - EPS]
            self.recent.append(g)
        return out

    def flush(self) -> list:
        if self.in_voice:
            return self._close(self.last_end)
        return []

    def _close(self, limit: float) -> list:
        end = min(self.last_voice_end + self.cfg.voice_pad, limit)
        out = []
        if end > self.last_voice_end + EPS:
            out.append(VoicedAudio(self.last_voice_end, end, _ids(self.pending, self.last_voice_end, end)))
        out.append(EndOfVoice(end))
        self.in_voice = False
        self.region_floor = end
        self.recent = [r for r in self.pending if r.end > end + EPS]
        self.pending = []
        return out


def _ids(granules, lo=None, hi=None) -> tuple:
    return tuple(
        g.payload
        for g in granules
        if (lo is None or g.end > lo + EPS) and (hi is None or g.start < hi - EPS)
    )


def vad_gate(granules: Iterable[Granule], cfg: VadConfig = VadConfig(), classify=scripted_classifier) -> list:
    gate = VadGate(cfg, classify)
    out = []
    for g in granules:
        out += gate.feed(g)
    return out + gate.flush()


def voiced_spans(events) -> list[tuple[float, float]]:
    """Merge VoicedAudio pieces into (start, end) voice regions."""
    spans = []
    cur = None
    for ev in events:
        if isinstance(ev, VoicedAudio):
            cur = (ev.start, ev.end) if cur is None else (cur[0], ev.end)
        elif cur is not None:
            spans.append(cur)
            cur = None
    if cur is not None:
        spans.append(cur)
    return spans


@dataclass
class _Piece:
    start: float
    end: float
    payload: tuple


class Accumulator:
    """Cuts voiced audio into chunks of ``min_chunk_size`` seconds.

    A shorter final chunk is emitted when the voice region ends.
    """

    def __init__(self, min_chunk_size: float, frame_rate: float = DEFAULT_FRAME_RATE):
        if min_chunk_size <= 0:
            raise ValueError("min_chunk_size must be positive")
        self.min_chunk_size = min_chunk_size
        self.frame_rate = frame_rate
        self.pieces: list[_Piece] = []
        self.serial = 0

    def _held(self) -> float:
        return sum(p.end - p.start for p in self.pieces)

    def push(self, audio: VoicedAudio) -> list[AudioChunk]:
        out = []
        start = audio.start
        while True:
            need = self.min_chunk_size - self._held()
            if audio.end - start >= need - EPS:
                cut = min(audio.end, start + need)
                if audio.end - cut < EPS:
                    cut = audio.end
                self.pieces.append(_Piece(start, cut, audio.payload))
                out.append(self._emit())
                start = cut
                if audio.end - start < EPS:
                    break
            else:
                self.pieces.append(_Piece(start, audio.end, audio.payload))
                break
        return out

    def end_of_voice(self) -> Optional[AudioChunk]:
        if not self.pieces or self._held() < EPS:
            self.pieces = []
            return None
        return self._emit()

    def _emit(self) -> AudioChunk:
        start, end = self.pieces[0].start, self.pieces[-1].end
        payload = []
        for p in self.pieces:
            payload += [x for x in p.payload if x not in payload[-1:]]
        self.pieces = []
        self.serial += 1
        return AudioChunk(
            round(start, 9), round(end, 9), frames_for(end - start, self.frame_rate), tuple(payload), self.serial
        )


def accumulate(events, min_chunk_size: float, frame_rate: float = DEFAULT_FRAME_RATE) -> list:
    """Turn VAD events into ``(chunk, is_final)`` pairs."""
    acc = Accumulator(min_chunk_size, frame_rate)
    out: list[tuple[AudioChunk, bool]] = []
    for ev in events:
        if isinstance(ev, VoicedAudio):
            out += [(c, False) for c in acc.push(ev)]
        else:
            last = acc.end_of_voice()
            if last is not None:
                out.append((last, True))
            elif out and not out[-1][1]:
                out[-1] = (out[-1][0], True)
    return out


def word_count(words: Sequence[str]) -> int:
    return len(words)


@dataclass(frozen=True)
class PipelineConfig:
    min_chunk_size: float = 1.0
    buffer_length: float = 30.0
    max_context_length: int = 0
    static_prompt: bool = True
    prompt_text: str = ""
    alignatt: AlignAttConfig = AlignAttConfig()
    frame_rate: float = DEFAULT_FRAME_RATE
    vad: VadConfig = VadConfig()

    def __post_init__(self):
        if self.min_chunk_size <= 0:
            raise ValueError("min_chunk_size must be positive")
        if self.buffer_length < self.min_chunk_size:
            raise ValueError("buffer_length must be >= min_chunk_size")
        if self.max_context_length < 0:
            raise ValueError("max_context_length must be >= 0")


@dataclass(frozen=True)
class BufferSet:
    """Audio, forced-decoding prefix, context and prompt buffers.

    ``forced_prefix`` holds ``(token, chunk_serial)`` pairs.
    """

    audio: tuple = ()
    forced_prefix: tuple = ()
    context: tuple = ()
    prompt: tuple = ()

    @classmethod
    def fresh(cls, cfg: PipelineConfig) -> "BufferSet":
        return cls(prompt=tuple(cfg.prompt_text.split()))

    @property
    def audio_duration(self) -> float:
        return sum(c.duration for c in self.audio)


def trim_buffers(state: BufferSet, cfg: PipelineConfig, count=word_count) -> BufferSet:
    audio = list(state.audio)
    prefix = list(state.forced_prefix)
    context = list(state.context)
    while audio and sum(c.duration for c in audio) >= cfg.buffer_length - EPS:
        dropped = audio.pop(0)
        moved = [tok for tok, serial in prefix if serial <= dropped.serial]
        prefix = [(tok, serial) for tok, serial in prefix if serial > dropped.serial]
        for tok in moved:
            context += tok.text.split()
    prompt = list(state.prompt)
    budget = cfg.max_context_length
    if cfg.static_prompt:
        while context and count(prompt) + count(context) > budget:
            context.pop(0)
    else:
        joined = prompt + context
        while joined and count(joined) > budget:
            joined.pop(0)
        # whatever survives of the prompt is still at the front
        n_prompt = max(0, len(joined) - len(context))
        prompt, context = joined[:n_prompt], joined[n_prompt:]
    return BufferSet(tuple(audio), tuple(prefix), tuple(context), tuple(prompt))


@dataclass
class S2TPipeline:
    """One speech stream: process chunks, emit words stamped on the unaware clock."""

    cfg: PipelineConfig
    decoder: object
    count: Callable = word_count
    state: BufferSet = None
    history: list = field(default_factory=list)  # every committed token text, in order

    def __post_init__(self):
        if self.state is None:
            self.state = self._fresh()

    def _fresh(self) -> BufferSet:
        # a dynamic prompt longer than the budget is cut before first use
        return trim_buffers(BufferSet.fresh(self.cfg), self.cfg, self.count)

    def _decode(self, state: BufferSet, is_final: bool):
        outcome = alignatt_decode(
            self.decoder,
            state.audio,
            state.prompt,
            state.context,
            [tok.text for tok, _ in state.forced_prefix],
            self.cfg.alignatt,
            is_final,
        )
        last = state.forced_prefix[-1][1] if state.forced_prefix else state.audio[0].serial
        prefix = list(state.forced_prefix)
        for tok in outcome.emitted:
            k = chunk_index_of_frame(state.audio, most_attended_frame(tok.attention))
            # attribution never moves backwards along the prefix
            last = max(last, state.audio[k].serial)
            prefix.append((tok, last))
        return replace(state, forced_prefix=tuple(prefix)), outcome.emitted

    def process_chunk(self, chunk: AudioChunk, is_final: bool = False) -> list[EmissionEvent]:
        state = self.state
        if state.audio and chunk.start < state.audio[-1].end - EPS:
            raise StreamSimError(f"chunk at {chunk.start}s overlaps buffered audio")
        state = replace(state, audio=state.audio + (chunk,))
        state, emitted = self._decode(state, is_final)
        now = unaware_clock_stamp(chunk.end)
        events = [EmissionEvent(t.text, now, chunk.end) for t in emitted]
        if is_final:
            state = self._fresh()
        else:
            state = trim_buffers(state, self.cfg, self.count)
        self.state = state
        self.history += [t.text for t in emitted]
        return events

    def finalize(self) -> list[EmissionEvent]:
        """Final decode of residual audio, then reset all buffers."""
        state = self.state
        events = []
        if state.audio:
            state, emitted = self._decode(state, True)
            end = state.audio[-1].end
            events = [EmissionEvent(t.text, unaware_clock_stamp(end), end) for t in emitted]
            self.history += [t.text for t in emitted]
        self.state = self._fresh()
        return events


def run_stream(granules: Iterable[Granule], cfg: PipelineConfig, decoder, classify=scripted_classifier):
    """VAD -> chunking -> pipeline for a whole granule stream.

    Returns the pipeline and the emission events in order.
    """
    pipe = S2TPipeline(cfg, decoder)
    events: list[EmissionEvent] = []
    for chunk, final in accumulate(vad_gate(granules, cfg.vad, classify), cfg.min_chunk_size, cfg.frame_rate):
        events += pipe.process_chunk(chunk, final)
    events += pipe.finalize()
    return pipe, events

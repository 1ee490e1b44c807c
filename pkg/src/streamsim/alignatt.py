"""AlignAtt read/write policy over an incremental decoder."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .core import AttentionSnapshot, AudioChunk, DecodedToken, DecoderError, frame_offsets

THRESHOLD_CROSSED = "threshold_crossed"
END_TOKEN = "end_token"
TOKEN_BUDGET = "token_budget"


@dataclass(frozen=True)
class AlignAttConfig:
    frames_threshold: int = 4
    beams: int = 1
    final_frames_threshold: int = 4
    max_tokens_per_update: int = 200

    def __post_init__(self):
        for name in ("frames_threshold", "beams", "final_frames_threshold", "max_tokens_per_update"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class PolicyOutcome:
    emitted: list = field(default_factory=list)
    stop_reason: str = END_TOKEN


def most_attended_frame(snapshot: AttentionSnapshot | Sequence[float]) -> int:
    weights = snapshot.weights if isinstance(snapshot, AttentionSnapshot) else snapshot
    if len(weights) == 0:
        raise ValueError("empty attention snapshot")
    best = 0
    for i, w in enumerate(weights):
        if w > weights[best]:  # strict: ties keep the lowest index
            best = i
    return best


def crosses_threshold(frame: int, total_frames: int, threshold: int) -> bool:
    """True when ``frame`` lies within the last ``threshold`` frames."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if not 0 <= frame < total_frames:
        raise IndexError(f"frame {frame} outside [0, {total_frames})")
    return frame >= total_frames - threshold


def _check_token(tok: DecodedToken, total: int) -> None:
    if tok.is_end:
        return
    if len(tok.attention) != total:
        raise DecoderError(
            f"attention over {len(tok.attention)} frames, buffer has {total}"
        )


def _best(candidates: list[DecodedToken]) -> DecodedToken:
    if not candidates:
        raise DecoderError("decoder returned no candidates")
    best = candidates[0]
    for c in candidates[1:]:
        if c.score > best.score:
            best = c
    return best


def alignatt_decode(
    decoder,
    chunks: Sequence[AudioChunk],
    prompt: Sequence[str],
    context: Sequence[str],
    prefix: Sequence[str],
    config: AlignAttConfig,
    is_final: bool = False,
) -> PolicyOutcome:
    """Decode on the buffered audio until the policy stops.

    A generated token whose most attended frame falls in the last
    ``frames_threshold`` frames (``final_frames_threshold`` on the final
    chunk) is dropped and decoding stops. With several beams only the top
    hypothesis is inspected.
    """
    total = frame_offsets(chunks)[-1]
    if not chunks or total == 0:
        raise ValueError("alignatt_decode needs a non-empty audio buffer")
    threshold = config.final_frames_threshold if is_final else config.frames_threshold
    session = decoder.begin_buffer(tuple(chunks), tuple(prompt), tuple(context), tuple(prefix))
    if config.beams == 1:
        return _greedy(session, total, threshold, config.max_tokens_per_update)
    return _beam(session, total, threshold, config)


def _greedy(session, total, threshold, budget) -> PolicyOutcome:
    emitted: list[DecodedToken] = []
    while len(emitted) < budget:
        tok = _best(session.step([t.text for t in emitted]))
        _check_token(tok, total)
        if tok.is_end:
            return PolicyOutcome(emitted, END_TOKEN)
        if crosses_threshold(most_attended_frame(tok.attention), total, threshold):
            return PolicyOutcome(emitted, THRESHOLD_CROSSED)
        emitted.append(tok)
    return PolicyOutcome(emitted, TOKEN_BUDGET)


def _before_first_crossing(tokens, total, threshold) -> list[DecodedToken]:
    # a lower beam may cross unnoticed and later rise to the top
    out = []
    for tok in tokens:
        if tok.is_end or crosses_threshold(most_attended_frame(tok.attention), total, threshold):
            break
        out.append(tok)
    return out


@dataclass
class _Hyp:
    tokens: tuple
    score: float
    ended: bool = False


def _beam(session, total, threshold, config: AlignAttConfig) -> PolicyOutcome:
    beams = [_Hyp((), 0.0)]
    while True:
        pool = []
        for hyp in beams:
            if hyp.ended:
                pool.append(hyp)
                continue
            for cand in session.step([t.text for t in hyp.tokens]):
                _check_token(cand, total)
                pool.append(_Hyp(hyp.tokens + (cand,), hyp.score + cand.score, cand.is_end))
        if not pool:
            raise DecoderError("decoder returned no candidates")
        # stable sort: equal scores keep beam order, then candidate (token id) order
        pool.sort(key=lambda h: -h.score)
        beams = pool[: config.beams]
        top = beams[0]
        newest = top.tokens[-1] if top.tokens else None
        if top.ended:
            reason = END_TOKEN
        elif crosses_threshold(most_attended_frame(newest.attention), total, threshold):
            reason = THRESHOLD_CROSSED
        elif len(top.tokens) >= config.max_tokens_per_update:
            reason = TOKEN_BUDGET
        else:
            continue
        return PolicyOutcome(_before_first_crossing(top.tokens, total, threshold), reason)

"""Simultaneous speech/text translation policies and streaming latency metrics."""

from .alignatt import AlignAttConfig, PolicyOutcome, alignatt_decode, crosses_threshold, most_attended_frame
from .core import (
    AttentionSnapshot,
    AudioChunk,
    DecodedToken,
    EmissionEvent,
    EventLog,
    MonotonicityError,
    StreamSimError,
    TimedWord,
    unaware_clock_stamp,
)
from .metrics import asr_latency, char_align, error_rate, max_context_duration, words_from_chars
from .mt import MtConfig, PromptTemplate, TranslationState, local_agreement, translate_update
from .s2t import BufferSet, PipelineConfig, S2TPipeline, VadConfig, trim_buffers

__version__ = "0.1.0"

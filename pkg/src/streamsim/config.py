"""Flat ``key = value`` run configuration."""

from __future__ import annotations

from .alignatt import AlignAttConfig
from .core import ParseError
from .mt import MtConfig, PromptTemplate
from .s2t import PipelineConfig, VadConfig


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_template = PromptTemplate()

# key -> (parser, default)
KEYS = {
    "min_chunk_size_s": (float, 1.0),
    "buffer_length_s": (float, 30.0),
    "max_context_length": (int, 0),
    "static_prompt": (_bool, True),
    "prompt": (str, ""),
    "frames": (int, 4),
    "beams": (int, 1),
    "final_frames": (int, 4),
    "max_tokens_per_update": (int, 200),
    "frame_rate": (float, 50.0),
    "vad_min_silence_s": (float, 0.5),
    "vad_pad_s": (float, 0.1),
    "mt_min_chunk_words": (int, 1),
    "mt_max_context": (int, 300),
    "mt_trimming": (str, "segments"),
    "system_prompt": (str, _template.system_text),
    "example_source": (str, _template.example_source),
    "example_target": (str, _template.example_target),
}


def defaults() -> dict:
    return {k: d for k, (_, d) in KEYS.items()}


def coerce(key: str, value):
    if key not in KEYS:
        raise KeyError(f"unknown config key {key!r}")
    return KEYS[key][0](value)


def parse_config(text: str, path="<config>") -> dict:
    cfg = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        sep = "=" if "=" in line else ":"
        key, found, value = line.partition(sep)
        if not found:
            raise ParseError(path, lineno, "expected key = value")
        key = key.strip()
        try:
            cfg[key] = coerce(key, value.strip())
        except (KeyError, ValueError) as e:
            raise ParseError(path, lineno, str(e)) from None
    return cfg


def load_config(path=None, overrides=None) -> dict:
    cfg = defaults()
    if path is not None:
        with open(path, encoding="utf-8") as f:
            cfg.update(parse_config(f.read(), path))
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = coerce(key, value)
    return cfg


def pipeline_config(cfg: dict) -> PipelineConfig:
    return PipelineConfig(
        min_chunk_size=cfg["min_chunk_size_s"],
        buffer_length=cfg["buffer_length_s"],
        max_context_length=cfg["max_context_length"],
        static_prompt=cfg["static_prompt"],
        prompt_text=cfg["prompt"],
        alignatt=AlignAttConfig(cfg["frames"], cfg["beams"], cfg["final_frames"], cfg["max_tokens_per_update"]),
        frame_rate=cfg["frame_rate"],
        vad=VadConfig(min_silence=cfg["vad_min_silence_s"], voice_pad=cfg["vad_pad_s"]),
    )


def mt_config(cfg: dict) -> MtConfig:
    return MtConfig(cfg["mt_min_chunk_words"], cfg["mt_max_context"], cfg["mt_trimming"].lower())


def prompt_template(cfg: dict) -> PromptTemplate:
    return PromptTemplate(cfg["system_prompt"], cfg["example_source"], cfg["example_target"])

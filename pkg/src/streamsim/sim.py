"""Computationally unaware simulation drivers for S2T, MT and the cascade."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import load_config, mt_config, pipeline_config, prompt_template
from .core import EventLog, TimedWord, read_gold_tsv, read_granules
from .metrics import asr_latency, cer, wer
from .mocks import (
    OscillatingTextDecoder,
    ScriptedTextDecoder,
    diagonal_from_payloads,
    identity_text_decoder,
    load_payload_script,
)
from .mt import run_translation
from .s2t import run_stream

S2T_METRICS = ("emitted_words", "mean_latency_ms", "aligned_words", "unaligned_words", "wer", "cer")


@dataclass
class RunResult:
    config: dict
    events: EventLog
    metrics: dict = field(default_factory=dict)
    asr_events: Optional[EventLog] = None


def quality_metrics(gold: Optional[list], events: EventLog) -> dict:
    """Metrics of an event log against a timed gold transcript; None if absent."""
    words = events.words()
    out = dict.fromkeys(S2T_METRICS)
    out["emitted_words"] = len(words)
    if gold is None:
        return out
    report = asr_latency(gold, words)
    out["mean_latency_ms"] = report.mean_latency_ms
    out["aligned_words"] = report.aligned_count
    out["unaligned_words"] = report.unaligned_count
    gold_text = " ".join(w.text for w in gold)
    hyp_text = " ".join(w.text for w in words)
    if gold:
        out["wer"] = wer(gold_text, hyp_text).rate
        out["cer"] = cer(gold_text, hyp_text).rate
    return out


def s2t_decoder(granules, script_path, cfg: dict):
    table = load_payload_script(script_path)
    # distractor candidates give beam search something to rank
    return diagonal_from_payloads(granules, table, cfg["frame_rate"], alternatives=cfg["beams"] - 1)


def text_decoder(spec: str):
    if spec == "identity":
        return identity_text_decoder()
    if spec == "oscillating":
        return OscillatingTextDecoder()
    return ScriptedTextDecoder.load(spec)


def read_words(path) -> list[TimedWord]:
    """MT input: an event log (``.jsonl``) or a ``word<TAB>time_ms`` file."""
    if str(path).endswith(".jsonl"):
        return EventLog.read(path).words()
    return read_gold_tsv(path)


def _gold(path):
    return None if path is None else read_gold_tsv(path)


def run_s2t(granule_path, cfg: Optional[dict] = None, script_path=None, gold_path=None, out_path=None) -> RunResult:
    cfg = cfg or load_config()
    granules = read_granules(granule_path)
    decoder = s2t_decoder(granules, script_path, cfg)
    _, events = run_stream(granules, pipeline_config(cfg), decoder)
    evlog = EventLog().extend(events)
    if out_path is not None:
        evlog.write(out_path)
    return RunResult(dict(cfg), evlog, quality_metrics(_gold(gold_path), evlog))


def run_mt(words_path, cfg: Optional[dict] = None, decoder_spec="identity", gold_path=None, out_path=None) -> RunResult:
    cfg = cfg or load_config()
    words = read_words(words_path)
    _, events = run_translation(words, text_decoder(decoder_spec), prompt_template(cfg), mt_config(cfg))
    evlog = EventLog().extend(events)
    if out_path is not None:
        evlog.write(out_path)
    return RunResult(dict(cfg), evlog, quality_metrics(_gold(gold_path), evlog))


def run_cascade(
    granule_path, cfg: Optional[dict] = None, script_path=None, decoder_spec="identity", gold_path=None, out_dir=None
) -> RunResult:
    """ASR emissions become MT source words, timed at their emission."""
    cfg = cfg or load_config()
    asr = run_s2t(granule_path, cfg, script_path)
    words = asr.events.words()
    _, events = run_translation(words, text_decoder(decoder_spec), prompt_template(cfg), mt_config(cfg))
    evlog = EventLog().extend(events)
    gold = _gold(gold_path)
    metrics = quality_metrics(gold, evlog)
    asr_metrics = quality_metrics(gold, asr.events)
    metrics.update({f"asr_{k}": v for k, v in asr_metrics.items()})
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        asr.events.write(out_dir / "asr_events.jsonl")
        evlog.write(out_dir / "mt_events.jsonl")
    return RunResult(dict(cfg), evlog, metrics, asr_events=asr.events)


def format_summary(result: RunResult, title: str) -> str:
    lines = [f"{title}: {len(result.events)} events"]
    for key, value in result.metrics.items():
        if value is None:
            shown = "n/a"
        elif isinstance(value, float):
            shown = f"{value:.4f}" if key in ("wer", "cer", "asr_wer", "asr_cer") else f"{value:.1f}"
        else:
            shown = str(value)
        lines.append(f"  {key}: {shown}")
    return "\n".join(lines)


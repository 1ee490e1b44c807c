"""Command-line entry point: ``streamsim <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as config_mod
from .core import EventLog, StreamSimError, read_gold_tsv
from .metrics import asr_latency, error_rate, max_context_duration, normalize
from .sim import format_summary, run_cascade, run_mt, run_s2t
from .sweep import SweepSpec, grid_search, parse_sweep_arg, rows_to_csv


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    group = p.add_argument_group("config overrides")
    for key in config_mod.KEYS:
        group.add_argument(f"--{key}", dest=f"cfg_{key}", default=None, metavar="VALUE")


def _config(args) -> dict:
    overrides = {k: getattr(args, f"cfg_{k}") for k in config_mod.KEYS}
    return config_mod.load_config(args.config, overrides)


def cmd_simulate_s2t(args) -> int:
    result = run_s2t(args.input, _config(args), args.script, args.gold, args.out)
    print(format_summary(result, "simulate-s2t"))
    return 0


def cmd_simulate_mt(args) -> int:
    result = run_mt(args.input, _config(args), args.decoder, args.gold, args.out)
    print(format_summary(result, "simulate-mt"))
    return 0


def cmd_simulate_cascade(args) -> int:
    result = run_cascade(args.input, _config(args), args.script, args.decoder, args.gold, args.out_dir)
    print(format_summary(result, "simulate-cascade"))
    return 0


def cmd_asr_latency(args) -> int:
    gold = read_gold_tsv(args.gold)
    hyp = EventLog.read(args.hyp).words()
    report = asr_latency(gold, hyp, lowercase=args.lowercase)
    mean = "n/a" if report.mean_latency_ms is None else f"{report.mean_latency_ms:.1f}"
    print(f"mean latency ms: {mean}")
    print(f"aligned words: {report.aligned_count}")
    print(f"unaligned words: {report.unaligned_count}")
    if args.per_word:
        print("hyp_index\thyp_word\tgold_index\tgold_word\tlatency_ms")
        for h, g, lat in report.per_word:
            print(f"{h}\t{hyp[h].text}\t{g}\t{gold[g].text}\t{lat * 1000:.1f}")
    return 0


def cmd_wer(args) -> int:
    gold = normalize(Path(args.gold).read_text(encoding="utf-8"), args.lowercase)
    hyp = normalize(Path(args.hyp).read_text(encoding="utf-8"), args.lowercase)
    units = (list(gold), list(hyp)) if args.chars else (gold.split(), hyp.split())
    r = error_rate(*units)
    name = "CER" if args.chars else "WER"
    print(f"{name}: {100 * r.rate:.2f}%")
    print(f"substitutions: {r.substitutions}  deletions: {r.deletions}  insertions: {r.insertions}  reference: {r.reference_length}")
    return 0


def cmd_context_estimate(args) -> int:
    proportion, minutes = max_context_duration(args.src_tokens, args.tgt_tokens, args.max_tokens, args.duration_min)
    print(f"proportion of recording in context: {proportion:.3f}")
    print(f"max duration in context: {minutes:.2f} min")
    return 0


def cmd_grid_search(args) -> int:
    params = dict(parse_sweep_arg(s) for s in args.sweep)
    metrics = args.metrics.split(",") if args.metrics else SweepSpec.metrics
    spec = SweepSpec(params, tuple(metrics), args.sort_by or None, args.descending)
    if args.mode == "s2t":
        runner = lambda cfg: run_s2t(args.input, cfg, args.script, args.gold)  # noqa: E731
    elif args.mode == "mt":
        runner = lambda cfg: run_mt(args.input, cfg, args.decoder, args.gold)  # noqa: E731
    else:
        runner = lambda cfg: run_cascade(args.input, cfg, args.script, args.decoder, args.gold)  # noqa: E731
    rows = grid_search(spec, _config(args), runner, jobs=args.jobs)
    text = rows_to_csv(rows, spec)
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    failed = sum(1 for r in rows if r.error)
    print(f"# {len(rows)} runs, {failed} failed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-s2t", help="speech-to-text simulation over a granule file")
    p.add_argument("--input", required=True, help="granule TSV")
    p.add_argument("--script", required=True, help="payload_id<TAB>tokens decoder script")
    p.add_argument("--gold", help="gold transcript TSV (word, start_time_ms)")
    p.add_argument("--out", help="event log JSONL to write")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate_s2t)

    p = sub.add_parser("simulate-mt", help="text-to-text simulation over timed source words")
    p.add_argument("--input", required=True, help="event log JSONL or word TSV")
    p.add_argument("--decoder", default="identity", help="script TSV, 'identity' or 'oscillating'")
    p.add_argument("--gold", help="timed reference for the output (TSV)")
    p.add_argument("--out", help="event log JSONL to write")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate_mt)

    p = sub.add_parser("simulate-cascade", help="speech-to-text followed by text-to-text")
    p.add_argument("--input", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--decoder", default="identity")
    p.add_argument("--gold")
    p.add_argument("--out-dir", help="directory for asr_events.jsonl and mt_events.jsonl")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate_cascade)

    p = sub.add_parser("asr-latency", help="ASR latency with continuous Levenshtein alignment")
    p.add_argument("--gold", required=True)
    p.add_argument("--hyp", required=True, help="event log JSONL")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--per-word", action="store_true")
    p.set_defaults(func=cmd_asr_latency)

    p = sub.add_parser("wer", help="word (or character) error rate")
    p.add_argument("--gold", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--chars", action="store_true", help="character error rate")
    p.add_argument("--lowercase", action="store_true")
    p.set_defaults(func=cmd_wer)

    p = sub.add_parser("grid-search", help="cartesian sweep, CSV to stdout")
    p.add_argument("--mode", choices=("s2t", "mt", "cascade"), default="s2t")
    p.add_argument("--input", required=True)
    p.add_argument("--script")
    p.add_argument("--decoder", default="identity")
    p.add_argument("--gold")
    p.add_argument("--sweep", action="append", required=True, help="name=v1,v2,... (repeatable)")
    p.add_argument("--metrics", help="comma-separated metric names")
    p.add_argument("--sort-by", default="mean_latency_ms")
    p.add_argument("--descending", action="store_true")
    p.add_argument("--csv", help="also write the table here")
    p.add_argument("--jobs", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("context-estimate", help="recording share fitting a token-limited context")
    p.add_argument("--src-tokens", type=float, required=True)
    p.add_argument("--tgt-tokens", type=float, required=True)
    p.add_argument("--max-tokens", type=int, default=4096)
    p.add_argument("--duration-min", type=float, required=True)
    p.set_defaults(func=cmd_context_estimate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (StreamSimError, ValueError, KeyError, OSError) as e:
        print(f"streamsim: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

import json

import pytest

from streamsim.cli import main
from streamsim.config import defaults, load_config, parse_config
from streamsim.core import DecoderError, EventLog, ParseError, TimedWord, write_gold_tsv
from streamsim.sim import run_cascade, run_mt, run_s2t
from streamsim.sweep import SweepRow, SweepSpec, grid_search, parse_sweep_arg, rows_to_csv, sort_rows

WORDS = [("we", 0.2), ("will", 0.6), ("see", 1.0), ("the", 1.4), ("table", 1.8)]


@pytest.fixture
def five(tmp_path):
    """2 s of voice with one scripted word every 0.4 s."""
    at = {round(t * 1000): w for w, t in WORDS}
    lines = ["start_ms\tend_ms\tvoice_flag\tframe_payload_id"]
    for k in range(50):
        start = 40 * k
        lines.append(f"{start}\t{start + 40}\t1\t{'p' + str(start) if start in at else '-'}")
    (tmp_path / "granules.tsv").write_text("\n".join(lines) + "\n")
    (tmp_path / "script.tsv").write_text("".join(f"p{ms}\t{w}\n" for ms, w in at.items()))
    write_gold_tsv([TimedWord(w, t) for w, t in WORDS], tmp_path / "gold.tsv")
    return tmp_path


def cfg(**kw):
    c = defaults()
    c.update(min_chunk_size_s=0.5, **kw)
    return c


def run(five, **kw):
    return run_s2t(five / "granules.tsv", cfg(**kw), five / "script.tsv", five / "gold.tsv")


def test_run_s2t_hand_trace(five):
    # chunks end at 0.5, 1.0, 1.5, 2.0; a word is emitted once the buffer
    # reaches past it by more than 4 frames
    result = run(five)
    assert [(e.unit, e.emission_time) for e in result.events] == [
        ("we", 0.5),
        ("will", 1.0),
        ("see", 1.5),
        ("the", 1.5),
        ("table", 2.0),
    ]
    assert result.metrics["mean_latency_ms"] == pytest.approx(300.0, abs=1e-9)
    assert result.metrics["wer"] == 0.0
    assert result.metrics["aligned_words"] == 5


def test_run_s2t_writes_log_and_is_deterministic(five):
    run_s2t(five / "granules.tsv", cfg(), five / "script.tsv", out_path=five / "a.jsonl")
    run_s2t(five / "granules.tsv", cfg(), five / "script.tsv", out_path=five / "b.jsonl")
    assert (five / "a.jsonl").read_bytes() == (five / "b.jsonl").read_bytes()
    first = json.loads((five / "a.jsonl").read_text().splitlines()[0])
    assert first == {"unit": "we", "emission_time_ms": 500.0, "source_consumed_until_ms": 500.0}


def test_run_s2t_empty_input(tmp_path, five):
    (tmp_path / "empty.tsv").write_text("start_ms\tend_ms\tvoice_flag\tframe_payload_id\n")
    result = run_s2t(tmp_path / "empty.tsv", cfg(), five / "script.tsv", five / "gold.tsv")
    assert len(result.events) == 0
    assert result.metrics["mean_latency_ms"] is None
    assert result.metrics["emitted_words"] == 0


def test_missing_payload_is_named(five):
    (five / "script.tsv").write_text("p200\twe\n")
    with pytest.raises(DecoderError, match="p600"):
        run(five)


def test_granule_parse_error_reports_line(five):
    text = (five / "granules.tsv").read_text().splitlines()
    text[3] = "80\tabc\t1\t-"
    (five / "granules.tsv").write_text("\n".join(text) + "\n")
    with pytest.raises(ParseError, match=r"granules.tsv:4:"):
        run(five)


def test_beams_and_frames_flow_through(five):
    assert [e.unit for e in run(five, beams=3).events] == [w for w, _ in WORDS]
    late = run(five, frames=25)
    assert late.metrics["mean_latency_ms"] > run(five).metrics["mean_latency_ms"]


def test_run_mt_identity_lags_one_word(five):
    (five / "src.tsv").write_text("".join(f"{w}\t{t * 1000:g}\n" for w, t in WORDS))
    result = run_mt(five / "src.tsv", cfg(), "identity")
    assert [(e.unit, e.emission_time) for e in result.events] == [
        ("we", 0.6),
        ("will", 1.0),
        ("see", 1.4),
        ("the", 1.8),
        ("table", 1.8),
    ]


def test_run_mt_oscillating_and_scripted(five, tmp_path):
    (five / "src.tsv").write_text("".join(f"{w}\t{t * 1000:g}\n" for w, t in WORDS))
    osc = run_mt(five / "src.tsv", cfg(), "oscillating")
    assert {e.emission_time for e in osc.events} == {1.8}
    (tmp_path / "mt.tsv").write_text("we\twir\nwe will\twir werden\n")
    scripted = run_mt(five / "src.tsv", cfg(), str(tmp_path / "mt.tsv"))
    # longer prefixes are unscripted, so the hypothesis stops growing after "wir"
    assert [e.unit for e in scripted.events] == ["wir"]


def test_run_mt_reads_event_logs(five):
    run_s2t(five / "granules.tsv", cfg(), five / "script.tsv", out_path=five / "asr.jsonl")
    result = run_mt(five / "asr.jsonl", cfg(mt_min_chunk_words=10))
    assert [e.unit for e in result.events] == [w for w, _ in WORDS]
    assert {e.emission_time for e in result.events} == {2.0}


def test_cascade_hand_trace(five):
    result = run_cascade(five / "granules.tsv", cfg(), five / "script.tsv", "identity", five / "gold.tsv", five / "out")
    # ASR times 0.5 1.0 1.5 1.5 2.0; each MT word waits for the next ASR word
    assert [e.emission_time for e in result.events] == [1.0, 1.5, 1.5, 2.0, 2.0]
    assert result.metrics["mean_latency_ms"] == pytest.approx(600.0, abs=1e-9)
    assert result.metrics["asr_mean_latency_ms"] == pytest.approx(300.0, abs=1e-9)
    assert result.metrics["mean_latency_ms"] >= result.metrics["asr_mean_latency_ms"]
    assert EventLog.read(five / "out" / "mt_events.jsonl").dumps() == result.events.dumps()
    assert EventLog.read(five / "out" / "asr_events.jsonl").dumps() == result.asr_events.dumps()


def test_cascade_empty_asr_gives_empty_mt(five):
    (five / "script.tsv").write_text("".join(f"p{round(t * 1000)}\t\n" for _, t in WORDS))
    result = run_cascade(five / "granules.tsv", cfg(), five / "script.tsv")
    assert len(result.asr_events) == 0 and len(result.events) == 0


def test_config_parsing(tmp_path):
    c = parse_config("# c\nframes = 7\nstatic_prompt: false\nprompt = Hello there\n")
    assert c == {"frames": 7, "static_prompt": False, "prompt": "Hello there"}
    with pytest.raises(ParseError, match=":2:"):
        parse_config("frames = 2\nbogus = 1\n")
    with pytest.raises(ParseError, match=":1:"):
        parse_config("frames = many\n")
    (tmp_path / "run.cfg").write_text("frames = 7\nbeams = 2\n")
    loaded = load_config(tmp_path / "run.cfg", {"beams": "5", "frames": None})
    assert loaded["frames"] == 7 and loaded["beams"] == 5


def test_sweep_spec_and_args():
    assert parse_sweep_arg("frames=4,25") == ("frames", [4, 25])
    assert parse_sweep_arg("mt_trimming=segments, sentences") == ("mt_trimming", ["segments", "sentences"])
    with pytest.raises(ValueError):
        parse_sweep_arg("frames")
    with pytest.raises(KeyError):
        parse_sweep_arg("nope=1")
    with pytest.raises(ValueError):
        SweepSpec({"frames": []})
    assert len(SweepSpec({"frames": [4, 25], "beams": [1, 3]}).points()) == 4


def test_grid_search_rows_and_monotone_frames(five):
    runner = lambda c: run_s2t(five / "granules.tsv", c, five / "script.tsv", five / "gold.tsv")  # noqa: E731
    spec = SweepSpec({"frames": [4, 25], "beams": [1, 3]}, sort_by=None)
    rows = grid_search(spec, cfg(), runner)
    assert len(rows) == 4
    assert [r.point for r in rows] == spec.points()
    lat = {(r.point["frames"], r.point["beams"]): r.metrics["mean_latency_ms"] for r in rows}
    assert lat[(4, 1)] <= lat[(25, 1)] and lat[(4, 3)] <= lat[(25, 3)]
    sweep = SweepSpec({"frames": list(range(1, 30, 4))}, sort_by=None)
    lats = [r.metrics["mean_latency_ms"] for r in grid_search(sweep, cfg(), runner)]
    assert lats == sorted(lats)


def test_grid_search_parallel_matches_serial_and_csv_is_stable(five):
    runner = lambda c: run_s2t(five / "granules.tsv", c, five / "script.tsv", five / "gold.tsv")  # noqa: E731
    spec = SweepSpec({"frames": [25, 4, 10], "min_chunk_size_s": [0.5, 1.0]})
    serial = rows_to_csv(grid_search(spec, cfg(), runner), spec)
    parallel = rows_to_csv(grid_search(spec, cfg(), runner, jobs=4), spec)
    assert serial == parallel == rows_to_csv(grid_search(spec, cfg(), runner), spec)
    header, *body = serial.splitlines()
    assert header == "frames,min_chunk_size_s,mean_latency_ms,wer,emitted_words,error"
    latencies = [float(line.split(",")[2]) for line in body]
    assert latencies == sorted(latencies)


def test_grid_search_keeps_failed_points(five):
    def runner(c):
        if c["beams"] == 2:
            raise DecoderError("boom")
        return run_s2t(five / "granules.tsv", c, five / "script.tsv", five / "gold.tsv")

    spec = SweepSpec({"beams": [1, 2]})
    rows = grid_search(spec, cfg(), runner)
    assert [r.error is None for r in rows] == [True, False]
    assert "DecoderError: boom" in rows_to_csv(rows, spec)


def test_sort_rows_puts_missing_last():
    spec = SweepSpec({"frames": [1]}, metrics=("m",), sort_by="m", descending=True)
    rows = [SweepRow({"frames": 1}, {"m": None}), SweepRow({"frames": 2}, {"m": 1.0}), SweepRow({"frames": 3}, {"m": 2.0})]
    assert [r.point["frames"] for r in sort_rows(rows, spec)] == [3, 2, 1]


def cli(*argv):
    return main([str(a) for a in argv])


def test_cli_simulate_s2t_and_metrics(five, capsys):
    out = five / "ev.jsonl"
    assert cli("simulate-s2t", "--input", five / "granules.tsv", "--script", five / "script.tsv",
               "--gold", five / "gold.tsv", "--out", out, "--min_chunk_size_s", "0.5") == 0
    text = capsys.readouterr().out
    assert "simulate-s2t: 5 events" in text and "mean_latency_ms: 300.0" in text
    assert cli("asr-latency", "--gold", five / "gold.tsv", "--hyp", out, "--per-word") == 0
    text = capsys.readouterr().out
    assert "mean latency ms: 300.0" in text and "4\ttable\t4\ttable\t200.0" in text
    (five / "g.txt").write_text("a b c\n")
    (five / "h.txt").write_text("a c\n")
    assert cli("wer", "--gold", five / "g.txt", "--hyp", five / "h.txt") == 0
    assert "WER: 33.33%" in capsys.readouterr().out


def test_cli_context_estimate(capsys):
    assert cli("context-estimate", "--src-tokens", 1963, "--tgt-tokens", 2550, "--duration-min", 11.5) == 0
    text = capsys.readouterr().out
    assert "0.908" in text and "10.44 min" in text


def test_cli_errors_exit_2(five, capsys):
    assert cli("simulate-s2t", "--input", five / "missing.tsv", "--script", five / "script.tsv") == 2
    assert "streamsim: error:" in capsys.readouterr().err
    assert cli("simulate-s2t", "--input", five / "granules.tsv", "--script", five / "script.tsv",
               "--frames", "x") == 2
    (five / "bad.cfg").write_text("frames = 4\nbeams = two\n")
    assert cli("simulate-s2t", "--input", five / "granules.tsv", "--script", five / "script.tsv",
               "--config", five / "bad.cfg") == 2
    assert "bad.cfg:2:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli("no-such-command")


def test_cli_config_file_and_override(five, capsys):
    (five / "run.cfg").write_text("min_chunk_size_s = 0.5\nframes = 25\n")
    base = ["simulate-s2t", "--input", five / "granules.tsv", "--script", five / "script.tsv",
            "--gold", five / "gold.tsv", "--config", five / "run.cfg"]
    cli(*base)
    slow = capsys.readouterr().out
    cli(*base, "--frames", "4")
    fast = capsys.readouterr().out
    assert "mean_latency_ms: 300.0" in fast and "mean_latency_ms: 300.0" not in slow


def test_cli_grid_search(five, capsys):
    csv_path = five / "grid.csv"
    code = cli("grid-search", "--input", five / "granules.tsv", "--script", five / "script.tsv",
               "--gold", five / "gold.tsv", "--sweep", "frames=4,25", "--sweep", "beams=1,2",
               "--min_chunk_size_s", "0.5", "--csv", csv_path)
    assert code == 0
    text = capsys.readouterr().out
    assert text.startswith(csv_path.read_text())
    assert len(csv_path.read_text().splitlines()) == 5
    assert "# 4 runs, 0 failed" in text

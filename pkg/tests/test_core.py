import json

import pytest

from streamsim.core import (
    AttentionSnapshot,
    AudioChunk,
    DecodedToken,
    EventLog,
    MonotonicityError,
    ParseError,
    TimedWord,
    chunk_index_of_frame,
    frame_of_time,
    make_chunk,
    read_gold_tsv,
    read_granules,
    unaware_clock_stamp,
    write_gold_tsv,
)


def test_unaware_clock_is_identity():
    assert unaware_clock_stamp(3.0) == 3.0
    assert unaware_clock_stamp(0.0) == 0.0
    with pytest.raises(ValueError):
        unaware_clock_stamp(-1.0)


def test_timed_word_validation():
    TimedWord("hello", 1.0)
    for bad in ["", "two words", "tab\there"]:
        with pytest.raises(ValueError):
            TimedWord(bad, 0.0)
    with pytest.raises(ValueError):
        TimedWord("x", float("inf"))


def test_event_log_append_and_monotonicity():
    log = EventLog()
    log.append("Hello", 2.0, 2.0)
    assert len(log) == 1
    log.append("world", 2.0, 2.0)  # ties are fine
    assert len(log) == 2
    with pytest.raises(MonotonicityError):
        log.append("x", 1.9, 1.9)
    assert len(log) == 2


def test_event_log_round_trip(tmp_path):
    log = EventLog().append("Grüße", 1.75, 1.75).append("a b", 3.5, 3.5)
    path = tmp_path / "ev.jsonl"
    log.write(path)
    first = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
    assert first == {"unit": "Grüße", "emission_time_ms": 1750.0, "source_consumed_until_ms": 1750.0}
    again = EventLog.read(path)
    assert [e.unit for e in again] == ["Grüße", "a b"]
    assert [w.text for w in again.words()] == ["Grüße", "a", "b"]


def test_event_log_parse_error_has_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"unit": "a", "emission_time_ms": 1, "source_consumed_until_ms": 1}\n{"unit": 3}\n')
    with pytest.raises(ParseError, match=":2:"):
        EventLog.read(path)


def test_gold_tsv_round_trip(tmp_path):
    words = [TimedWord("the", 0.0), TimedWord("table", 0.5)]
    path = tmp_path / "gold.tsv"
    write_gold_tsv(words, path)
    assert read_gold_tsv(path) == words


def test_gold_tsv_rejects_decreasing_times(tmp_path):
    path = tmp_path / "gold.tsv"
    path.write_text("a\t100\nb\t50\n")
    with pytest.raises(ParseError):
        read_gold_tsv(path)


def test_granule_parsing(tmp_path):
    path = tmp_path / "g.tsv"
    path.write_text("start_ms\tend_ms\tvoice_flag\tframe_payload_id\n0\t40\t1\tw0\n40\t80\t0\t-\n80\t120\t1\n")
    gs = read_granules(path)
    assert [(g.start, g.end, g.voice, g.payload) for g in gs] == [
        (0.0, 0.04, True, "w0"),
        (0.04, 0.08, False, "-"),
        (0.08, 0.12, True, "-"),
    ]
    path.write_text("0\t40\tmaybe\n")
    with pytest.raises(ParseError, match=":1:"):
        read_granules(path)


def test_attention_snapshot_invariants():
    AttentionSnapshot((0.25, 0.75))
    with pytest.raises(ValueError):
        AttentionSnapshot((0.5, 0.6))
    with pytest.raises(ValueError):
        AttentionSnapshot((-0.1, 1.1))
    assert AttentionSnapshot.one_hot(2, 4).weights == (0.0, 0.0, 1.0, 0.0)


def test_decoded_token_invariants():
    assert DecodedToken.end().is_end
    with pytest.raises(ValueError):
        DecodedToken("x", 0.0, None, True)
    with pytest.raises(ValueError):
        DecodedToken("x", 0.0, None)


def test_chunk_frames_and_validation():
    c = make_chunk(1.75, 3.5)
    assert c.frames == round(1.75 * 50)
    with pytest.raises(ValueError):
        AudioChunk(1.0, 1.0, 1)


def test_frame_mapping_agrees_with_chunk_attribution():
    chunks = [make_chunk(0.0, 0.5, serial=1), make_chunk(0.5, 1.0, serial=2), make_chunk(1.0, 1.3, serial=3)]
    assert frame_of_time(chunks, -0.1) is None
    assert frame_of_time(chunks, 0.0) == 0
    assert frame_of_time(chunks, 5.0) == 25 + 25 + 15 - 1
    for k in range(1300):
        t = k / 1000
        f = frame_of_time(chunks, t)
        owner = next(i for i, c in enumerate(chunks) if c.start <= t < c.end)
        assert chunk_index_of_frame(chunks, f) == owner
    with pytest.raises(IndexError):
        chunk_index_of_frame(chunks, 65)


def test_gap_times_map_to_the_chunk_before():
    chunks = [make_chunk(0.0, 0.5, serial=1), make_chunk(1.0, 1.5, serial=2)]
    assert frame_of_time(chunks, 0.7) == 24
    assert chunk_index_of_frame(chunks, frame_of_time(chunks, 0.99)) == 0
    assert frame_of_time(chunks, 1.0) == 25

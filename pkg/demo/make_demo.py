"""Regenerate the bundled demo inputs (deterministic)."""

from pathlib import Path

HERE = Path(__file__).parent
GRANULE_MS = 40

# (word, onset ms); a 0.3 s pause after "everyone." and a 1.2 s one after "translation."
WORDS = [
    ("Good", 400), ("morning", 640), ("everyone.", 1000),
    ("Today", 1800), ("I", 2120), ("will", 2240), ("talk", 2440), ("about", 2720),
    ("simultaneous", 3000), ("translation.", 3600),
    ("It", 5400), ("is", 5560), ("a", 5680), ("hard", 5800), ("problem.", 6120),
    ("Thank", 6800), ("you.", 7080),
]
VOICE = [(360, 1400), (1720, 4200), (5360, 7400)]  # ms spans labelled voice
TOTAL_MS = 8200

GERMAN = {
    "Good": "Guten", "morning": "Morgen", "everyone.": "allerseits.",
    "Today": "Heute", "I": "werde", "will": "ich", "talk": "über", "about": "simultane",
    "simultaneous": "Übersetzung", "translation.": "sprechen.",
    "It": "Es", "is": "ist", "a": "ein", "hard": "schwieriges", "problem.": "Problem.",
    "Thank": "Vielen", "you.": "Dank.",
}


def main():
    onset = {ms: f"w{k:02d}" for k, (_, ms) in enumerate(WORDS)}
    rows = ["start_ms\tend_ms\tvoice_flag\tframe_payload_id"]
    for start in range(0, TOTAL_MS, GRANULE_MS):
        voice = any(a <= start < b for a, b in VOICE)
        rows.append(f"{start}\t{start + GRANULE_MS}\t{int(voice)}\t{onset.get(start, '-')}")
    (HERE / "granules.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    script = [f"w{k:02d}\t{w}" for k, (w, _) in enumerate(WORDS)]
    (HERE / "asr_script.tsv").write_text("\n".join(script) + "\n", encoding="utf-8")

    gold = ["word\tstart_time_ms"] + [f"{w}\t{ms}" for w, ms in WORDS]
    (HERE / "gold.tsv").write_text("\n".join(gold) + "\n", encoding="utf-8")

    # source prefix -> German hypothesis; the 3-word prefix of sentence two
    # is first translated literally and later revised
    lines = []
    src = [w for w, _ in WORDS]
    for n in range(1, len(src) + 1):
        hyp = [GERMAN[w] for w in src[:n]]
        if n == 5:
            hyp[-1] = "ich"
        lines.append(" ".join(src[:n]) + "\t" + " ".join(hyp))
    (HERE / "mt_script.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    (HERE / "demo.cfg").write_text(
        "# demo run configuration\n"
        "min_chunk_size_s = 0.5\n"
        "buffer_length_s = 4.0\n"
        "max_context_length = 8\n"
        "static_prompt = true\n"
        "prompt = Welcome to the talk.\n"
        "frames = 4\n"
        "beams = 1\n"
        "mt_min_chunk_words = 1\n"
        "mt_max_context = 300\n"
        "mt_trimming = segments\n",
        encoding="utf-8",
    )


if __name__ == "__main__":
    main()

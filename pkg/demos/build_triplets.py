"""Walkthrough: turning a corpus into ranking triplets for finetuning.

A triplet is (source, positive, negative): the best human translation of
a segment as the positive, one machine output as the negative.  An
encoder finetuned on such triplets learns to embed human translations
closer to their sources than machine ones.  Segments without a human
translation are skipped, as are segments whose source is shorter than
a token threshold (whitespace tokens, default 10), since very short
sources carry too little signal.

Run:
    python3 demos/build_triplets.py
"""
from __future__ import annotations

import json
import tempfile
from pathlib import Path

from transproqa import build_triplets, ingest_jsonl, write_triplets

SEGMENTS = [
    # (segment_id, source, {system: (origin, target)})
    (
        "goethe-1",
        "Die Sonne tönt nach alter Weise in Brudersphären Wettgesang, "
        "und ihre vorgeschriebne Reise vollendet sie mit Donnergang.",
        {
            "arndt-translation": ("human", "The sun intones, in ancient tourney "
                                  "with brother-spheres, a rival air."),
            "gpt-4o": ("machine", "The sun resounds in the old way in "
                       "brother-spheres' contest of song."),
            "mt-basic": ("machine", "The sun sounds after old way in brother "
                         "spheres bet singing."),
        },
    ),
    (
        "kurz-1",
        "Der Abend war schön.",  # 4 tokens: filtered out
        {
            "arndt-translation": ("human", "The evening was beautiful."),
            "gpt-4o": ("machine", "The evening was nice."),
        },
    ),
    (
        "maschine-1",
        "Dieses Segment hat gar keine menschliche Übersetzung und wird "
        "deshalb übersprungen und gezählt.",
        {
            "gpt-4o": ("machine", "This segment has no human translation at all."),
        },
    ),
]


def write_demo_corpus(path: Path) -> None:
    lines = [json.dumps({"format": "transproqa-corpus", "version": 1})]
    for segment_id, source, systems in SEGMENTS:
        for system_id, (origin, target) in systems.items():
            lines.append(
                json.dumps(
                    {
                        "dataset": "demo",
                        "lang_pair": "de-en",
                        "segment_id": segment_id,
                        "source": source,
                        "system_id": system_id,
                        "origin": origin,
                        "target": target,
                    },
                    ensure_ascii=False,
                )
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        corpus_path = Path(tmp) / "demo_corpus.jsonl"
        write_demo_corpus(corpus_path)
        corpus = ingest_jsonl(corpus_path)

        triplets, stats = build_triplets(corpus, min_tokens=10)

        print("=== Construction report ===")
        print(f"  segments used          {stats.segments_used}")
        print(f"  triplets emitted       {stats.emitted}")
        print(f"  skipped: no human      {stats.skipped_no_human}")
        print(f"  skipped: short source  {stats.skipped_short_source}")
        print()

        print("=== Emitted triplets ===")
        for t in triplets:
            print(f"  [{t.lang_pair}] negative from {t.negative_system}")
            print(f"    src: {t.source[:60]}...")
            print(f"    pos: {t.positive[:60]}...")
            print(f"    neg: {t.negative[:60]}...")
        print()

        out_path = Path(tmp) / "triplets.jsonl"
        n = write_triplets(triplets, out_path)
        print(f"wrote {n} JSONL rows; first row:")
        print("  " + out_path.read_text("utf-8").splitlines()[0][:100] + "...")
        print()
        print("Lowering min_tokens admits the short segment:")
        relaxed, relaxed_stats = build_triplets(corpus, min_tokens=3)
        print(f"  min_tokens=3 -> {relaxed_stats.emitted} triplets")


if __name__ == "__main__":
    main()

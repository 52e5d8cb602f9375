#!/usr/bin/env python3
"""Generate seeded synthetic lexicons and build banks from them.

Words are embedded with the deterministic mock text encoder (nouns through
the "a photo of a <word>" template, adjectives as bare tokens), so the
resulting banks are reproducible bit-for-bit and need no model weights.

Usage:
    python scripts/make_synthetic_banks.py --out-dir data --dim 64 \
        --nouns 500 --adjectives 200 --seed 7
"""
import argparse
import json
from pathlib import Path

from imgany import build_bank, import_jsonl, mock_encode, save_bank

BASE_NOUNS = [
    "cat", "dog", "room", "floor", "bed", "car", "tree", "river", "house",
    "street", "bird", "fire", "engine", "cattle", "sky", "night", "table",
    "train", "boat", "mountain", "window", "garden", "horse", "cloud", "road",
]
BASE_ADJECTIVES = [
    "black", "white", "yellow", "villous", "square", "round", "wet", "dry",
    "furry", "wooden", "metallic", "bright", "dark", "striped", "smooth",
    "rough", "tall", "small", "red", "green",
]
# evaluative/abstract adjectives get keep=false, mirroring what an
# abstractness classifier would mark
ABSTRACT_ADJECTIVES = ["great", "good", "nice", "important", "interesting",
                       "wonderful", "bad", "significant"]


def synth_words(base: list[str], count: int, prefix: str) -> list[str]:
    words = list(base)
    i = 0
    while len(words) < count:
        words.append(f"{prefix}{i:05d}")
        i += 1
    return words[:count]


def write_lexicon(path: Path, words: list[str], kind: str, dim: int,
                  drop: set[str] = frozenset()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for word in words:
            text = f"a photo of a {word}" if kind == "noun" else word
            feature = mock_encode("text", text, dim)
            fh.write(json.dumps({
                "word": word,
                "keep": word not in drop,
                "embedding": [float(x) for x in feature.embedding],
            }) + "\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="data")
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--nouns", type=int, default=500)
    parser.add_argument("--adjectives", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7,
                        help="suffix salt for generated filler words")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    nouns = synth_words(BASE_NOUNS, args.nouns, f"noun{args.seed}_")
    adjectives = synth_words(BASE_ADJECTIVES + ABSTRACT_ADJECTIVES,
                             args.adjectives, f"adj{args.seed}_")

    noun_jsonl = out / "nouns.jsonl"
    adjective_jsonl = out / "adjectives.jsonl"
    write_lexicon(noun_jsonl, nouns, "noun", args.dim)
    write_lexicon(adjective_jsonl, adjectives, "adjective", args.dim,
                  drop=set(ABSTRACT_ADJECTIVES))

    for jsonl, kind, name in ((noun_jsonl, "noun", "nouns.imgb"),
                              (adjective_jsonl, "adjective", "adjectives.imgb")):
        bank = build_bank(import_jsonl(jsonl, kind), kind)
        save_bank(bank, out / name)
        print(f"wrote {out / name}: kind={kind} dim={bank.dim} "
              f"count={bank.count} kept={bank.kept_count}")


if __name__ == "__main__":
    main()

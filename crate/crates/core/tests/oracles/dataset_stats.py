#!/usr/bin/env python3
"""Reference per-split statistics for a JSON Lines game corpus.

Written independently of the Rust implementation; its output is checked in
as the golden file for the bundled synthetic corpus:

    python3 dataset_stats.py ../../data/synthetic50.jsonl > ../../data/synthetic50.golden.json
"""
import json
import sys
import unicodedata
from collections import Counter

SPLITS = ["train", "ind_valid", "ind_test", "ood_valid", "ood_test"]
ORDER = {"edit": 0, "add": 1, "redraw": 2}


def norm(w):
    return unicodedata.normalize("NFC", w.strip()).lower()


def missed_words(game):
    phrase = game["phrase"]
    hit = [w.get("stopword", False) or w.get("guessed", False) for w in phrase]
    for rnd in game["rounds"]:
        for g in rnd.get("guesses", []):
            if len(g["words"]) != len(phrase):
                continue
            for i, (a, w) in enumerate(zip(g["words"], phrase)):
                if norm(a) == norm(w["text"]):
                    hit[i] = True
    return sum(1 for h in hit if not h)


def revision(prev, nxt):
    a = Counter(p["icon"] for p in prev["icons"])
    b = Counter(p["icon"] for p in nxt["icons"])
    if a == b:
        return "edit"
    if not (a - b):  # everything in a is still in b
        return "add"
    if not (b - a):
        return "edit"
    return "redraw"


def pct(n, d):
    return None if d == 0 else 100.0 * n / d


def stats(games):
    n = len(games)
    phrases = {tuple(norm(w["text"]) for w in g["phrase"]) for g in games}
    missed = [missed_words(g) for g in games]
    labels = []
    for g in games:
        rs = [revision(g["rounds"][i]["drawing"], g["rounds"][i + 1]["drawing"]) for i in range(len(g["rounds"]) - 1)]
        if rs:
            labels.append(max(rs, key=ORDER.get))
    rev = None
    if labels:
        c = Counter(labels)
        rev = {"games": len(labels), **{k: 100.0 * c[k] / len(labels) for k in ORDER}}
    return {
        "games": n,
        "phrases": len(phrases),
        "win_pct": pct(sum(m == 0 for m in missed), n),
        "recorded_win_pct": pct(sum(g["outcome"] == "won" for g in games), n),
        "off_by_one_pct": pct(sum(m <= 1 for m in missed), n),
        "rounds_ge2_pct": pct(sum(len(g["rounds"]) >= 2 for g in games), n),
        "rounds_ge3_pct": pct(sum(len(g["rounds"]) >= 3 for g in games), n),
        "rounds_ge4_pct": pct(sum(len(g["rounds"]) >= 4 for g in games), n),
        "revisions": rev,
    }


def main(path):
    with open(path, encoding="utf-8") as f:
        games = [json.loads(line) for line in f if line.strip()]
    out = {"total_games": len(games), "splits": {s: stats([g for g in games if g["split"] == s]) for s in SPLITS}}
    json.dump(out, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])

"""Writes ``tests/fixtures/dedup_100.json``: 93 distinct papers plus 7 planted duplicates.

Planted copies: 3 with a newer review, 2 byte-identical, 2 with an older
review. The expected survivor for each key is listed under ``expected``.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "dedup_100.json"


def paper(rng, i, day):
    return {
        "id": f"d{i:03d}",
        "title": f"Paper {i}",
        "status": rng.choice(["Reject", "Accept (poster)", "Accept (spotlight)", "Accept (oral)"]),
        "reviews": [
            {"reviewer_id": f"d{i:03d}-R{r}", "scores": {"rating": rng.randint(1, 10), "confidence": rng.randint(1, 5)},
             "timestamp": f"2023-11-{day:02d}T{r:02d}:00:00Z"}
            for r in range(1, rng.randint(2, 4) + 1)
        ],
    }


def main():
    rng = random.Random(20240517)
    base = [paper(rng, i, 10 + i % 5) for i in range(93)]
    picks = rng.sample(range(93), 7)
    dupes = []
    for n, i in enumerate(picks):
        orig = base[i]
        if n < 3:
            d = paper(rng, i, 25)  # newer reviews win
        elif n < 5:
            d = json.loads(json.dumps(orig))
        else:
            d = paper(rng, i, 2)  # older reviews lose
        dupes.append(d)
    records = base + dupes
    rng.shuffle(records)
    expected = {}
    for i, orig in enumerate(base):
        expected[orig["id"]] = max(r["timestamp"] for r in orig["reviews"])
    for n, i in enumerate(picks):
        if n < 3:
            expected[base[i]["id"]] = max(r["timestamp"] for r in dupes[n]["reviews"])
    OUT.write_text(json.dumps({"papers": records, "planted": sorted(base[i]["id"] for i in picks),
                               "expected_last_review": dict(sorted(expected.items()))}, indent=1) + "\n")


if __name__ == "__main__":
    main()

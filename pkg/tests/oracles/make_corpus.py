"""Writes the 40-document replay corpus under ``tests/fixtures/corpus``.

Ground truth (flags, multi-affiliation, tokens) is recorded from the
construction itself into ``expected.json``, not by parsing the outputs.
"""

import json
import random
import shutil
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "corpus"
INSTS = ["MIT", "Stanford University", "Tsinghua University", "ETH Zurich", "University of Toronto",
         "University of Oxford", "KAIST", "Mila", "Unknown Lab"]


def main():
    rng = random.Random(4040)
    if OUT.exists():
        shutil.rmtree(OUT)
    OUT.mkdir(parents=True)
    expected = {}
    for i in range(40):
        doc = f"doc{i:02d}"
        d = OUT / doc
        d.mkdir()
        n = rng.randint(1, 5)
        lines, multi = [], False
        drop_aff = drop_email = malformed = False
        kind = rng.random()
        for a in range(n):
            affs = rng.sample(INSTS, rng.choice([1, 1, 1, 2]))
            multi |= len(affs) > 1
            email = f"author{a}@{affs[0].split()[0].lower()}.edu"
            lines.append([f"Author {i}-{a}", "; ".join(affs), email])
        if kind < 0.15:
            lines[-1][1] = ""  # an author without affiliation
            drop_aff = True
            multi = any(len(l[1].split("; ")) > 1 for l in lines if l[1])
        elif kind < 0.3:
            lines[0][2] = ""  # an author without email
            drop_email = True
        text = "\n".join(" | ".join(l) for l in lines)
        if 0.3 <= kind < 0.4:
            text += "\nbroken line without delimiters"
            malformed = True
        (d / "input.txt").write_text(f"Title of document {i}\n\nAuthors listed on the first page.\n")
        (d / "output.txt").write_text(text + "\n")
        usage = {"prompt_tokens": rng.randint(900, 2500), "completion_tokens": rng.randint(40, 400)}
        (d / "usage.json").write_text(json.dumps(usage))
        expected[doc] = {"flags": [int(drop_aff), int(drop_email), int(malformed)], "multi": multi,
                         "authors": n, **usage}
    (OUT.parent / "corpus_expected.json").write_text(json.dumps(expected, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()

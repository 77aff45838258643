"""Score author-metadata extraction for structural consistency.

Each stored extractor output lists authors as "name | affiliations |
email". A record is consistent when author, affiliation and email lists
line up; the success rate is the share of fully consistent records.
"""

from _common import FIXTURES, heading
from reviewarchive.validation import (
    multi_affiliation_share,
    success_rate,
    token_totals,
    union_bound_check,
    validate_corpus,
)

results = validate_corpus(FIXTURES / "corpus")
rep = success_rate([f for _, f in results])
heading(f"{rep.n} documents")
print(f"success {rep.success:.3f}; mismatch rates aff={rep.aff_rate:.3f} email={rep.email_rate:.3f} parse={rep.parse_rate:.3f}")
print(f"multi-affiliation share {multi_affiliation_share(r for r, _ in results):.3f}")
t = token_totals(r for r, _ in results)
print(f"tokens: prompt {t.prompt}, completion {t.completion}, total {t.total}")

heading("published comparison rows versus the union bound")
rows = {
    "glm-4-plus": ((5.01, 4.94, 0.81), 86.82),
    "glm-4-air": ((49.98, 17.11, 0.51), 44.73),
}
for model, (marginals, success) in rows.items():
    ok = union_bound_check(marginals, success, percent=True)
    print(f"  {model}: success {success}% vs bound {100 - sum(marginals):.2f}% -> {'consistent' if ok else 'inconsistent'}")

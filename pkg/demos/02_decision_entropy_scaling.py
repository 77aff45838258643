"""Decision entropy per score bin, and how it grows with venue size.

A synthetic sweep draws one venue-year per volume from the ordered-logit
law with a sensitivity that softens as the venue grows. Fitting
H = a ln X + b recovers the growth trend; a final year that keeps the
sharpness of a small venue lands well below the fitted line.
"""

from _common import heading
from reviewarchive import analytics as an
from reviewarchive.synth import GeneratorSpec, generate, softening_kappa, venue_growth_sweep

heading("one synthetic venue-year")
venue = generate(GeneratorSpec(seed=1, n_papers=2000), with_history=False)
rep = an.decision_entropy(venue.papers)
print(f"H_bar = {rep.h_bar:.4f} over {len(rep.bins)} bins (model value {venue.truth.h_bar:.4f})")
for b in rep.bins[::8]:
    print(f"  [{b.lo:.1f}, {b.hi:.1f}) n={b.count:4d} H={b.entropy:.3f}")

heading("venue-growth sweep")
rows = venue_growth_sweep(range(500, 12001, 1500), softening_kappa, seed=0)
for year, x, h, kappa in rows:
    print(f"  {year} X={x:6d} kappa={kappa:.3f} H_bar={h:.4f}")
(final,) = venue_growth_sweep([13000], lambda v: softening_kappa(500), seed=1, first_year=2009)
fit = an.fit_log_scaling([(y, x, h) for y, x, h, _ in rows + [final]], target_year=2009)
print(f"fit without 2009: a={fit.a:.4f} b={fit.b:.4f} R2={fit.r_squared:.3f}")
print(f"2009 residual with hardened kappa: {fit.residuals[2009]:+.4f}")

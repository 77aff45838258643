"""Least-squares fit of weighted decision entropy against log submission volume."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from ..errors import DegenerateFit

ALL_YEARS = "all-years"
LEAVE_TARGET_OUT = "leave-target-out"


@dataclass(frozen=True)
class ScalingFit:
    points: tuple[tuple[int, float, float], ...]
    a: float
    b: float
    residuals: Mapping[int, float]
    scope: str
    target_year: int | None
    r_squared: float

    def predict(self, volume: float) -> float:
        return self.a * math.log(volume) + self.b


def fit_log_scaling(
    points: Iterable[tuple[int, float, float]],
    target_year: int | None = None,
    scope: str | None = None,
) -> ScalingFit:
    """Fit ``H = a*ln(X) + b`` over ``(year, X, H)`` points.

    With ``target_year`` the default scope is leave-target-out: that year is
    excluded from the fit and appears only through its residual. Residuals
    are reported for every point either way. ``r_squared`` is computed on
    the fitting set.
    """
    pts = tuple(sorted((int(y), float(x), float(h)) for y, x, h in points))
    if scope is None:
        scope = LEAVE_TARGET_OUT if target_year is not None else ALL_YEARS
    if scope not in (ALL_YEARS, LEAVE_TARGET_OUT):
        raise ValueError(f"unknown fit scope {scope!r}")
    if scope == LEAVE_TARGET_OUT and target_year is None:
        raise ValueError("leave-target-out scope needs a target year")
    if target_year is not None and target_year not in {p[0] for p in pts}:
        raise ValueError(f"target year {target_year} not among the points")

    fit_set = [p for p in pts if not (scope == LEAVE_TARGET_OUT and p[0] == target_year)]
    xs = np.array([math.log(p[1]) for p in fit_set])
    hs = np.array([p[2] for p in fit_set])
    if len(set(p[1] for p in fit_set)) < 2:
        raise DegenerateFit("need at least two distinct volumes in the fitting set")

    design = np.column_stack([xs, np.ones_like(xs)])
    (a, b), *_ = np.linalg.lstsq(design, hs, rcond=None)
    a, b = float(a), float(b)
    residuals = {y: h - (a * math.log(x) + b) for y, x, h in pts}
    ss_res = float(sum(residuals[p[0]] ** 2 for p in fit_set))
    ss_tot = float(np.sum((hs - hs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(points=pts, a=a, b=b, residuals=residuals, scope=scope, target_year=target_year, r_squared=r2)

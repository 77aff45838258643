"""Ordered-logit (cumulative logistic) model of score-to-tier mapping.

``P(tier = s | x) = sigma(tau_s - kappa*x) - sigma(tau_{s-1} - kappa*x)`` with
``tau_0 = -inf`` and ``tau_4 = +inf``. Fitting is maximum likelihood with
thresholds parametrized as ``tau_1`` plus log-gaps, so they stay strictly
increasing, and a damped Newton iteration on the analytic gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import expit, log_expit

from ..core import RATING, TIERS, DecisionStatus, PaperRecord

DEFAULT_KAPPA_CAP = 50.0
LL_TOL = 1e-8
MAX_ITER = 500


def tier_probabilities(x, kappa: float, thresholds: Sequence[float]) -> np.ndarray:
    """Probabilities over the ``len(thresholds) + 1`` ordered tiers, shape ``(n, k)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cuts = np.concatenate([[-np.inf], np.asarray(thresholds, dtype=float), [np.inf]])
    cdf = expit(cuts[None, :] - kappa * x[:, None])
    return np.diff(cdf, axis=1)


@dataclass(frozen=True)
class OrderedLogitModel:
    year: int | None
    kappa: float
    thresholds: tuple[float, float, float]
    log_likelihood: float
    n: int
    iterations: int
    converged: bool
    separated: bool = False

    def probabilities(self, x) -> np.ndarray:
        return tier_probabilities(x, self.kappa, self.thresholds)


def _log_prob_and_grads(a: np.ndarray, b: np.ndarray):
    """log(sigma(a) - sigma(b)) and its partials in a and b, for a > b (either may be infinite)."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):  # a == b gives log 0, rejected by the line search
        gap = np.where(np.isinf(a) | np.isinf(b), -1.0, np.expm1(b - a))  # = -(1 - e^{b-a})
        one_minus = -gap
        logp = log_expit(a) + log_expit(-b) + np.log(one_minus)
        da = np.where(np.isposinf(a), 0.0, expit(-a) / (expit(-b) * one_minus))
        db = np.where(np.isneginf(b), 0.0, -expit(b) / (expit(a) * one_minus))
    return logp, da, db


class _Problem:
    """Negative log-likelihood over ``theta = [kappa_1..kappa_G, tau_1, log gap_2, ...]``."""

    def __init__(self, x, y, groups, n_groups, n_cuts):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=int)
        self.g = np.asarray(groups, dtype=int)
        self.G = n_groups
        self.m = n_cuts

    def unpack(self, theta):
        kappas = theta[: self.G]
        raw = theta[self.G :]
        taus = np.cumsum(np.concatenate([[raw[0]], np.exp(raw[1:])]))
        return kappas, taus

    def nll_grad(self, theta):
        kappas, taus = self.unpack(theta)
        cuts = np.concatenate([[-np.inf], taus, [np.inf]])
        kx = kappas[self.g] * self.x
        a = cuts[self.y + 1] - kx
        b = cuts[self.y] - kx
        logp, da, db = _log_prob_and_grads(a, b)
        nll = -float(np.sum(logp))

        grad = np.zeros_like(theta)
        dk = -(da + db) * self.x
        np.add.at(grad, self.g, -dk)
        # d tau_k / d raw_j: 1 for j=0; exp(raw_j) for k >= j otherwise
        raw = theta[self.G :]
        scale = np.concatenate([[1.0], np.exp(raw[1:])])
        for j in range(self.m):
            # upper cut index y (tau_{y+1} in 1-based) depends on raw_j iff y >= j
            up = np.where((self.y >= j) & (self.y < self.m), da, 0.0)
            lo = np.where((self.y - 1 >= j), db, 0.0)
            grad[self.G + j] = -scale[j] * float(np.sum(up + lo))
        return nll, grad

    def nll(self, theta):
        return self.nll_grad(theta)[0]


def _fd_hessian(problem: _Problem, theta, free):
    n = len(theta)
    H = np.zeros((n, n))
    for i in np.flatnonzero(free):
        h = 1e-5 * max(1.0, abs(theta[i]))
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        H[:, i] = (problem.nll_grad(tp)[1] - problem.nll_grad(tm)[1]) / (2 * h)
    H = 0.5 * (H + H.T)
    return H


def _newton(problem: _Problem, theta0, kappa_cap, tol=LL_TOL, max_iter=MAX_ITER, fixed_kappa=None):
    theta = theta0.copy()
    free = np.ones(len(theta), dtype=bool)
    separated = False
    if fixed_kappa is not None and fixed_kappa.any():
        theta[: problem.G][fixed_kappa] = kappa_cap
        free[: problem.G] &= ~fixed_kappa
        separated = True
    f, g = problem.nll_grad(theta)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        H = _fd_hessian(problem, theta, free)
        idx = np.flatnonzero(free)
        Hs, gs = H[np.ix_(idx, idx)], g[idx]
        accepted = False
        for _ in range(40):
            try:
                step = np.linalg.solve(Hs + lam * np.eye(len(idx)), -gs)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            cand = theta.copy()
            cand[idx] += step
            capped = np.abs(cand[: problem.G]) > kappa_cap
            if capped.any():
                cand[: problem.G] = np.clip(cand[: problem.G], -kappa_cap, kappa_cap)
            fc, gc = problem.nll_grad(cand)
            if np.isfinite(fc) and fc <= f:
                accepted = True
                break
            lam *= 10
        if not accepted:
            converged = bool(np.max(np.abs(gs)) < 1e-6)
            break
        improvement = f - fc
        theta, f, g = cand, fc, gc
        lam = max(lam / 10, 1e-12)
        if capped.any():
            separated = True
            free[: problem.G] &= ~capped
        if improvement < tol:
            converged = True
            break
    if separated:
        converged = False
    return theta, f, it, converged, separated


def _initial(x, y, m, groups, G):
    x = np.asarray(x, float)
    kappa0 = 1.0 / max(np.std(x), 1e-3)
    counts = np.bincount(y, minlength=m + 1).astype(float)
    cum = np.cumsum(counts)[:-1] / counts.sum()
    cum = np.clip(cum, 1e-3, 1 - 1e-3)
    taus = np.log(cum / (1 - cum)) + kappa0 * x.mean()
    taus = np.maximum.accumulate(taus)
    gaps = np.maximum(np.diff(taus), 1e-2)
    return np.concatenate([np.full(G, kappa0), [taus[0]], np.log(gaps)])


def _prepare(papers: Iterable[PaperRecord], dimension: str):
    x, y, years = [], [], []
    for p in papers:
        if not p.final_status.is_tier:
            continue
        m = p.dimension_avg(dimension)
        if m is None:
            continue
        x.append(m)
        y.append(p.final_status.rank)
        years.append(p.year)
    return np.array(x, float), np.array(y, int), years


def _separated(x, y, m) -> bool:
    """Complete (or quasi-complete) separation: every cut between tiers splits the scores cleanly.

    The likelihood then keeps rising as kappa grows, so no finite maximum exists.
    """
    for s in range(m):
        below, above = x[y <= s], x[y > s]
        if below.size and above.size and below.max() > above.min():
            return False
    return True


def _separated_start(x, y, m, kappa):
    """Start for a capped fit: thresholds at kappa times the midpoints between tiers."""
    cuts = []
    for s in range(m):
        below, above = x[y <= s], x[y > s]
        cuts.append(0.5 * (below.max() + above.min()))
    taus = kappa * np.maximum.accumulate(np.array(cuts))
    gaps = np.maximum(np.diff(taus), 1e-2)
    return np.concatenate([[kappa], [taus[0]], np.log(gaps)])


def _tier_window(y):
    present = sorted(set(int(v) for v in y))
    if len(present) < 2:
        raise ValueError("ordered-logit fit needs papers in at least two tiers")
    lo, hi = present[0], present[-1]
    if not any(b - a == 1 for a, b in zip(present, present[1:])):
        raise ValueError("ordered-logit fit needs papers in two adjacent tiers")
    return lo, hi


def _full_thresholds(taus, lo, hi):
    full = [-math.inf] * lo + [float(t) for t in taus] + [math.inf] * (len(TIERS) - 1 - hi)
    return tuple(full)


def fit_ordered_logit_arrays(
    x: Sequence[float],
    tiers: Sequence[int],
    year: int | None = None,
    kappa_cap: float = DEFAULT_KAPPA_CAP,
    max_iter: int = MAX_ITER,
) -> OrderedLogitModel:
    """Maximum-likelihood fit from mean scores and tier ranks (0=Reject .. 3=Oral).

    Thresholds below the lowest or above the highest observed tier are not
    identifiable and are reported as -inf / +inf. Under perfect separation
    (detected from the data, or when kappa runs into ``kappa_cap``) kappa is
    held at the cap, the thresholds are fitted, and the result is flagged
    ``separated`` and not converged.
    """
    x = np.asarray(x, float)
    y = np.asarray(tiers, int)
    lo, hi = _tier_window(y)
    yy = y - lo
    m = hi - lo
    groups = np.zeros(len(x), int)
    problem = _Problem(x, yy, groups, 1, m)
    if _separated(x, yy, m):
        theta0 = _separated_start(x, yy, m, kappa_cap)
        fixed = np.array([True])
    else:
        theta0 = _initial(x, yy, m, groups, 1)
        fixed = None
    theta, f, it, conv, sep = _newton(problem, theta0, kappa_cap, max_iter=max_iter, fixed_kappa=fixed)
    kappas, taus = problem.unpack(theta)
    return OrderedLogitModel(
        year=year,
        kappa=float(kappas[0]),
        thresholds=_full_thresholds(taus, lo, hi),
        log_likelihood=-f,
        n=len(x),
        iterations=it,
        converged=conv,
        separated=sep,
    )


def fit_ordered_logit(
    papers: Iterable[PaperRecord],
    dimension: str = RATING,
    kappa_cap: float = DEFAULT_KAPPA_CAP,
    max_iter: int = MAX_ITER,
) -> OrderedLogitModel:
    """Fit one venue-year; x is each tiered paper's mean score on ``dimension``."""
    x, y, years = _prepare(papers, dimension)
    if len(set(years)) > 1:
        raise ValueError(f"fit_ordered_logit expects one year, got {sorted(set(years))}; see fit_ordered_logit_joint")
    return fit_ordered_logit_arrays(x, y, years[0] if years else None, kappa_cap, max_iter)


def fit_ordered_logit_joint(
    papers: Iterable[PaperRecord],
    dimension: str = RATING,
    kappa_cap: float = DEFAULT_KAPPA_CAP,
    max_iter: int = MAX_ITER,
) -> dict[int, OrderedLogitModel]:
    """Per-year sensitivities with one threshold vector shared across years.

    All four tiers must be observed in the pooled data.
    """
    x, y, years = _prepare(papers, dimension)
    lo, hi = _tier_window(y)
    if (lo, hi) != (0, len(TIERS) - 1):
        raise ValueError("joint fit needs all four tiers present in the pooled data")
    year_list = sorted(set(years))
    groups = np.array([year_list.index(t) for t in years], int)
    G = len(year_list)
    problem = _Problem(x, y, groups, G, hi - lo)
    theta0 = _initial(x, y, hi - lo, groups, G)
    fixed = np.array([_separated(x[groups == g], y[groups == g], hi - lo) for g in range(G)])
    theta, f, it, conv, sep = _newton(problem, theta0, kappa_cap, max_iter=max_iter, fixed_kappa=fixed)
    kappas, taus = problem.unpack(theta)
    out = {}
    for gi, yr in enumerate(year_list):
        mask = groups == gi
        sub = _Problem(x[mask], y[mask], np.zeros(mask.sum(), int), 1, hi - lo)
        ll = -sub.nll(np.concatenate([[kappas[gi]], theta[G:]]))
        out[yr] = OrderedLogitModel(
            year=yr,
            kappa=float(kappas[gi]),
            thresholds=_full_thresholds(taus, lo, hi),
            log_likelihood=ll,
            n=int(mask.sum()),
            iterations=it,
            converged=conv,
            separated=sep,
        )
    return out


def status_probabilities(x: float, model: OrderedLogitModel) -> Mapping[DecisionStatus, float]:
    p = model.probabilities([x])[0]
    return dict(zip(TIERS, (float(v) for v in p)))

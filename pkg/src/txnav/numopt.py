"""Shared numeric kernels: bounded Nelder-Mead, adaptive quadrature, bisection.

These are small, deterministic implementations tuned for the needs of the
controllers in this package (low-dimensional derivative-free fits, line
integrals of smooth rate laws, scalar root finding). No randomness anywhere,
so repeated calls with identical inputs give identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class BracketError(ValueError):
    """Raised when a root finder is called without a sign change."""


@dataclass
class OptimizerSettings:
    """Termination and bound settings for :func:`nelder_mead`.

    The defaults mirror the derivative-free fit used for SNR regression
    (function tolerance 0.1, 5000 iterations, 10000 evaluations); callers
    with other needs override them.
    """

    tol_f: float = 0.1
    max_iter: int = 5000
    max_fev: int = 10000
    lower: Sequence[float] | None = None
    upper: Sequence[float] | None = None

    def clip(self, x: np.ndarray) -> np.ndarray:
        lo = -np.inf if self.lower is None else np.asarray(self.lower, dtype=float)
        hi = np.inf if self.upper is None else np.asarray(self.upper, dtype=float)
        return np.clip(x, lo, hi)


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    start: Sequence[float],
    settings: OptimizerSettings | None = None,
) -> tuple[np.ndarray, float]:
    """Minimize ``objective`` with a bound-constrained Nelder-Mead simplex.

    Standard reflect/expand/contract/shrink moves; every candidate vertex is
    clamped onto the bound box before evaluation, so iterates never leave it.
    Terminates when the spread of vertex function values drops to ``tol_f``
    or when the iteration/evaluation budget runs out.  The best vertex never
    worsens, so the returned value is <= objective(start).
    """
    settings = settings or OptimizerSettings()
    x0 = settings.clip(np.asarray(start, dtype=float).copy())
    n = x0.size
    f0 = float(objective(x0))
    if not math.isfinite(f0):
        raise ValueError(f"objective is not finite at the start point: {f0}")

    # Initial simplex: 5% perturbation per coordinate (small absolute step at 0).
    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        v = x0.copy()
        v[i] = v[i] + (0.05 * v[i] if v[i] != 0.0 else 0.00025)
        sim[i + 1] = settings.clip(v)
    fsim = np.array([f0] + [float(objective(sim[i + 1])) for i in range(n)])
    nfev = n + 1

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    for _ in range(settings.max_iter):
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        if fsim[-1] - fsim[0] <= settings.tol_f or nfev >= settings.max_fev:
            break

        centroid = sim[:-1].mean(axis=0)
        xr = settings.clip(centroid + alpha * (centroid - sim[-1]))
        fr = float(objective(xr))
        nfev += 1
        if fr < fsim[0]:
            xe = settings.clip(centroid + gamma * (centroid - sim[-1]))
            fe = float(objective(xe))
            nfev += 1
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        else:
            if fr < fsim[-1]:
                xc = settings.clip(centroid + rho * (xr - centroid))
            else:
                xc = settings.clip(centroid + rho * (sim[-1] - centroid))
            fc = float(objective(xc))
            nfev += 1
            if fc < min(fr, fsim[-1]):
                sim[-1], fsim[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    sim[i] = settings.clip(sim[0] + sigma * (sim[i] - sim[0]))
                    fsim[i] = float(objective(sim[i]))
                nfev += n

    best = int(np.argmin(fsim))
    return sim[best].copy(), float(fsim[best])


def integrate_01(f: Callable[[float], float], rel_tol: float = 1e-8) -> float:
    """Integrate ``f`` over [0, 1] by adaptive Simpson quadrature.

    The interval is split recursively until the usual |S2 - S1|/15 error
    estimate meets the (locally apportioned) tolerance.  Raises on
    non-finite integrand values.
    """

    def seval(x: float) -> float:
        y = float(f(x))
        if not math.isfinite(y):
            raise ValueError(f"integrand returned a non-finite value at s={x}")
        return y

    def simpson(a: float, fa: float, m: float, fm: float, b: float, fb: float) -> float:
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, m, fm, b, fb, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = seval(lm), seval(rm)
        left = simpson(a, fa, lm, flm, m, fm)
        right = simpson(m, fm, rm, frm, b, fb)
        err = left + right - whole
        if depth >= 48 or abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        return recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1) + recurse(
            m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1
        )

    f0, f1 = seval(0.0), seval(1.0)
    fm = seval(0.5)
    whole = simpson(0.0, f0, 0.5, fm, 1.0, f1)
    # Absolute tolerance anchored on the coarse estimate; floor guards f ~ 0.
    tol = rel_tol * max(abs(whole), 1e-12)
    return recurse(0.0, f0, 0.5, fm, 1.0, f1, whole, tol, 0)


def bisect(g: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> float:
    """Find a root of ``g`` on [lo, hi] by bisection.

    Requires g(lo) and g(hi) to have opposite signs (or be zero); returns a
    point within ``tol`` of a sign change.
    """
    glo = float(g(lo))
    ghi = float(g(hi))
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0.0:
        raise BracketError(f"g({lo})={glo} and g({hi})={ghi} have the same sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = float(g(mid))
        if gm == 0.0:
            return mid
        if glo * gm < 0.0:
            hi = mid
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)

"""Small fitting helpers shared by the verification harnesses."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float
    n_points: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2, "n_points": self.n_points}


def linear_fit(x, y) -> LinearFit:
    """Ordinary least squares y ~ a + b x with the coefficient of determination."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] < 2:
        return LinearFit(math.nan, math.nan, math.nan, int(x.shape[0]))
    b, a = np.polyfit(x, y, 1)
    resid = y - (a + b * x)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(b), float(a), r2, int(x.shape[0]))


def survival(samples, grid) -> np.ndarray:
    """Empirical Pr[X > t] at each grid point."""
    s = np.sort(np.asarray(samples, dtype=np.float64))
    n = s.shape[0]
    return (n - np.searchsorted(s, np.asarray(grid, dtype=np.float64), side="right")) / n


@dataclass(frozen=True)
class TailFit:
    fit: LinearFit
    grid: tuple
    log_survival: tuple
    degenerate: bool = False

    @property
    def slope(self) -> float:
        return self.fit.slope

    def to_dict(self) -> dict:
        out = self.fit.to_dict()
        out["grid"] = list(self.grid)
        out["log_survival"] = list(self.log_survival)
        out["degenerate"] = self.degenerate
        return out


def tail_fit(samples, scale: float = 1.0, min_count: int = 50, n_grid: int = 40,
             discard: float = 0.2, integer: bool = True) -> TailFit:
    """Least-squares line through log Pr[X > t] against t / scale.

    The grid runs from 0 up to the largest t still exceeded by ``min_count``
    samples; its first ``discard`` fraction is dropped (the asymptotic regime
    is what the bounds describe).  A sample with bounded support too narrow for
    a tail (fewer than 3 grid points) is reported as degenerate.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        return TailFit(LinearFit(math.nan, math.nan, math.nan, 0), (), (), True)
    srt = np.sort(x)
    k = max(0, n - min_count - 1)
    tmax = srt[k]
    lo = srt[0]
    if integer:
        grid = np.unique(np.round(np.linspace(lo, tmax, n_grid)).astype(np.int64)).astype(np.float64)
    else:
        grid = np.linspace(lo, tmax, n_grid)
    grid = grid[int(math.floor(discard * grid.shape[0])):]
    s = survival(x, grid)
    keep = s > 0
    grid, s = grid[keep], s[keep]
    if grid.shape[0] < 3:
        return TailFit(LinearFit(math.nan, math.nan, math.nan, int(grid.shape[0])),
                       tuple(grid.tolist()), tuple(np.log(s).tolist()), True)
    ls = np.log(s)
    fit = linear_fit(grid / scale, ls)
    return TailFit(fit, tuple((grid / scale).tolist()), tuple(ls.tolist()))


def loglog_slope(x, y) -> LinearFit:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return linear_fit(np.log(x), np.log(y))


def mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    if v.shape[0] == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(v.shape[0])) if v.shape[0] > 1 else 0.0
    return float(v.mean()), se


def proportion_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n > 0 else math.nan

"""The positive harmonic function f_r(x) = r Pr_x[|c(X_sigma_r)| < 3] 1{r > 2|rho(x)|}.

Values are Monte Carlo estimates.  Every evaluation point gets its own seed,
derived from the base seed, the group and the point, so estimates at distinct
points share no trajectories while the same point reuses the same
trajectories across radii and thresholds (which makes the monotone coupling
checks exact).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .fields import LogAbs
from .groups import AffineElement, MeasuredGroup, ball_for
from .line import DEFAULT_SEED, LOGLOG_BAND, MIN_CONDITIONED, MIN_R2, _jsonable
from .rng import derive_seed
from .stats import linear_fit, loglog_slope, proportion_se
from .walk import (
    INF,
    CensoringError,
    WalkConfig,
    abs_fraction,
    mean_report,
    sample_batch,
    sample_stopped_walk,
)

THRESHOLD = 3
MAX_CENSORED = 1e-3
RESIDUAL_SIGMAS = 3.0
STABLE_SIGMAS = 3.0
SEPARATION = 5  # |c| bound in the orbit upper bound
RADII = (16, 32, 64, 128)


class HarmonicError(RuntimeError):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable)


def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def point_seed(g: MeasuredGroup, x: AffineElement, seed: int) -> int:
    """Seed of the trajectories started at ``x`` (independent of r and threshold)."""
    return derive_seed(seed, g.name, "f", str(x))


def abs_rho(x: AffineElement) -> float:
    return abs(float(x.rho()))


# ---------------------------------------------------------------------------
# point estimates


@dataclass(frozen=True)
class HarmonicEstimate:
    point: AffineElement
    r: float
    threshold: float
    value: float
    std_error: float
    n_samples: int
    n_censored: int
    hits: int
    seed: int
    point_seed: int
    cutoff: bool = False

    def __post_init__(self):
        if self.value < 0:
            raise HarmonicError("f estimates are non-negative")

    def to_dict(self) -> dict:
        return {
            "point": str(self.point),
            "r": self.r,
            "threshold": self.threshold,
            "value": self.value,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "n_censored": self.n_censored,
            "hits": self.hits,
            "seed": self.seed,
            "point_seed": self.point_seed,
            "cutoff": self.cutoff,
        }

    def to_json(self) -> str:
        return _dump(self.to_dict())

    def to_csv(self) -> str:
        return _csv([self.to_dict()])


def estimate_f(g: MeasuredGroup, x: AffineElement, r: float, threshold: float = THRESHOLD,
               n: int = 100_000, seed: int = DEFAULT_SEED, workers: int = 1,
               sampler: str = "auto") -> HarmonicEstimate:
    """r times the fraction of non-censored sigma_r walks from x ending with |c| < threshold."""
    if not threshold > 0:
        raise HarmonicError("threshold must be positive")
    ps = point_seed(g, x, seed)
    if r <= 2 * abs_rho(x):
        return HarmonicEstimate(x, r, threshold, 0.0, 0.0, 0, 0, 0, seed, ps, cutoff=True)
    cfg = WalkConfig(g, x, ps, r=r, coordinate="rho")
    batch = sample_batch(cfg, n, threshold=threshold, workers=workers, sampler=sampler)
    n_cens = batch.n_censored
    if n_cens > MAX_CENSORED * n:
        raise CensoringError(f"f estimate at {x}: {n_cens} of {n} walks censored")
    keep = ~batch.censored
    m = int(keep.sum())
    hits = int(batch.small[keep].sum())
    p = hits / m
    return HarmonicEstimate(x, r, threshold, r * p, r * proportion_se(p, m), n, n_cens, hits, seed, ps)


# ---------------------------------------------------------------------------
# oracles: element -> Evaluation


@dataclass(frozen=True)
class Evaluation:
    """A function value; exact values are Fraction or LogAbs with zero error."""

    value: object
    std_error: float = 0.0
    exact: bool = False

    def __float__(self) -> float:
        return float(self.value)


class ConstantOracle:
    def __init__(self, value=1):
        self.value = Fraction(value)

    def __call__(self, x: AffineElement) -> Evaluation:
        return Evaluation(self.value, 0.0, True)


class RhoOracle:
    """rho(x) = -log|lam(x)| in exact LogAbs arithmetic."""

    def __call__(self, x: AffineElement) -> Evaluation:
        return Evaluation(x.rho(), 0.0, True)


class FHatOracle:
    """Cached Monte Carlo evaluations of f_r."""

    def __init__(self, g: MeasuredGroup, r: float, n: int, seed: int = DEFAULT_SEED,
                 threshold: float = THRESHOLD, workers: int = 1):
        self.g, self.r, self.n, self.seed = g, r, n, seed
        self.threshold, self.workers = threshold, workers
        self.cache: dict = {}

    def estimate(self, x: AffineElement) -> HarmonicEstimate:
        key = (self.g.name, x, self.r, self.threshold, self.seed, self.n)
        est = self.cache.get(key)
        if est is None:
            est = estimate_f(self.g, x, self.r, self.threshold, self.n, self.seed, self.workers)
            self.cache[key] = est
        return est

    def __call__(self, x: AffineElement) -> Evaluation:
        est = self.estimate(x)
        return Evaluation(est.value, est.std_error, False)


def reflection_invariant(g: MeasuredGroup) -> bool:
    """True when conjugation by (0, -1), i.e. c -> -c, preserves mu.

    Then f_r(c, lam) = f_r(-c, lam) exactly, since |c| and rho are unchanged.
    """
    law = {}
    for s, w in g.steps():
        law[s] = law.get(s, 0) + w
    for s, w in law.items():
        if law.get(AffineElement(-s.c, s.lam)) != w:
            return False
    return True


# ---------------------------------------------------------------------------
# harmonicity


@dataclass
class ResidualReport:
    point: AffineElement
    value: float
    neighbor_mean: float
    residual: float
    std_error: float
    exact: bool
    exact_zero: bool | None
    passed: bool
    sigmas: float = RESIDUAL_SIGMAS
    neighbors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "point": str(self.point),
            "value": self.value,
            "neighbor_mean": self.neighbor_mean,
            "residual": self.residual,
            "std_error": self.std_error,
            "exact": self.exact,
            "exact_zero": self.exact_zero,
            "sigmas": self.sigmas,
            "passed": bool(self.passed),
            "neighbors": self.neighbors,
        }

    def to_json(self) -> str:
        return _dump(self.to_dict())


def _exact_residual(v0, vals, weights):
    """v0 - sum w v in exact arithmetic (all Fraction or all LogAbs)."""
    if all(isinstance(v, LogAbs) for v in [v0, *vals]):
        total = LogAbs()
        for v, w in zip(vals, weights):
            total = total + v.scale(w)
        res = v0 - total
        return float(res), res.is_exact and res.is_zero()
    total = sum((Fraction(v) * w for v, w in zip(vals, weights)), Fraction(0))
    res = Fraction(v0) - total
    return float(res), res == 0


def harmonicity_residual(g: MeasuredGroup, oracle: Callable[[AffineElement], Evaluation],
                         x: AffineElement, sigmas: float = RESIDUAL_SIGMAS) -> ResidualReport:
    """f(x) - sum_s mu(s) f(xs); mu is symmetric so xs and xs^-1 range over the same set."""
    e0 = oracle(x)
    nbrs = g.neighbors(x)
    evals = []
    for y, w in nbrs:
        try:
            e = oracle(y)
        except KeyError as exc:
            raise HarmonicError(f"missing neighbor estimate at {y}") from exc
        if e is None:
            raise HarmonicError(f"missing neighbor estimate at {y}")
        evals.append(e)
    weights = [w for _, w in nbrs]
    exact = e0.exact and all(e.exact for e in evals)
    if exact:
        res, zero = _exact_residual(e0.value, [e.value for e in evals], weights)
    else:
        res = float(e0) - sum(float(w) * float(e) for e, w in zip(evals, weights))
        zero = None
    var = e0.std_error**2 + sum(float(w) ** 2 * e.std_error**2 for e, w in zip(evals, weights))
    se = math.sqrt(var)
    mean = sum(float(w) * float(e) for e, w in zip(evals, weights))
    passed = zero if exact else abs(res) <= sigmas * se
    rows = [{"point": str(y), "weight": w, "value": float(e), "std_error": e.std_error}
            for (y, w), e in zip(nbrs, evals)]
    return ResidualReport(x, float(e0), mean, res, se, exact, zero, bool(passed), sigmas, rows)


# ---------------------------------------------------------------------------
# polynomial growth


@dataclass
class SeminormEstimate:
    k: int
    radius: int
    value: float
    argmax: str
    n_points: int
    n_evaluated: int
    n_skipped: int
    trend: float | None = None  # ratio to the previous radius

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def seminorm_profile(g: MeasuredGroup, oracle: Callable[[AffineElement], Evaluation], k: int,
                     radii: Sequence[int], budget: int = 200_000,
                     use_reflection: bool = False) -> list[SeminormEstimate]:
    """max over the word ball of radius R of |f| / R^k, for each R.

    Censored evaluations are skipped and counted.  With ``use_reflection``
    (valid for oracles that only see |c| and rho, and groups where
    :func:`reflection_invariant` holds) each pair (c, lam), (-c, lam) is
    evaluated once.
    """
    if use_reflection and not reflection_invariant(g):
        raise HarmonicError("mu is not invariant under c -> -c")
    ball = ball_for(g, budget)
    ball.grow_to(max(radii))
    out = []
    prev = None
    values: dict = {}
    for R in sorted(radii):
        pts = ball.ball(R)
        best, arg, skipped, evaluated = -math.inf, None, 0, 0
        for x in pts:
            key = x
            if use_reflection:
                mirror = AffineElement(-x.c, x.lam)
                key = min(x, mirror, key=str)
            if key not in values:
                try:
                    values[key] = abs(float(oracle(key)))
                except CensoringError:
                    values[key] = None
                evaluated += 1
            v = values[key]
            if v is None:
                skipped += 1
                continue
            if v > best or (v == best and str(x) < arg):
                best, arg = v, str(x)
        val = best / (R**k)
        out.append(SeminormEstimate(k, R, val, arg, len(pts), evaluated, skipped,
                                    None if prev is None else val / prev))
        prev = val
    return out


# ---------------------------------------------------------------------------
# 1/r decay checks


@dataclass
class DecayReport:
    """Per-radius probabilities with a log-log fit against r."""

    name: str
    point: AffineElement
    radii: list
    estimates: list  # EstimateReport dicts
    events: list
    fit: dict
    decreasing: bool
    passed: bool
    band: tuple = LOGLOG_BAND
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "point": str(self.point),
            "radii": list(self.radii),
            "estimates": self.estimates,
            "events": self.events,
            "fit": self.fit,
            "band": list(self.band),
            "decreasing": bool(self.decreasing),
            "passed": bool(self.passed),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return _dump(self.to_dict())


def _ci_decreasing(reports) -> bool:
    """Each estimate below the previous one, with the 95% intervals ordered the same way."""
    return all(b.estimate < a.estimate and b.interval[0] < a.interval[1]
               for a, b in zip(reports, reports[1:]))


def _decay(name, g, x, radii, n, seed, workers, event, lower=None, min_events=10):
    reports, events = [], []
    ps = point_seed(g, x, seed)
    for r in radii:
        cfg = WalkConfig(g, x, ps, r=r, coordinate="rho", lower=lower)
        batch = event["run"](cfg, n, workers)
        if batch.n_censored > MAX_CENSORED * n:
            raise CensoringError(f"{name} at r={r}: {batch.n_censored} of {n} censored")
        keep = ~batch.censored
        hit = event["mask"](batch)[keep]
        k = int(hit.sum())
        if k < min_events:
            raise HarmonicError(f"{name} at r={r}: only {k} events in {n} walks")
        events.append(k)
        reports.append(mean_report(hit.astype(np.float64), n, batch.n_censored, ps, workers=workers,
                                   statistic=name))
    fit = loglog_slope(radii, [rep.estimate for rep in reports])
    dec = _ci_decreasing(reports)
    ok = LOGLOG_BAND[0] <= fit.slope <= LOGLOG_BAND[1]
    return DecayReport(name, x, list(radii), [rep.to_dict() for rep in reports], events, fit.to_dict(),
                       dec, ok)


def c_drift_check(g: MeasuredGroup, x: AffineElement, radii: Sequence[float] = (16, 32, 64),
                  n: int = 200_000, seed: int = DEFAULT_SEED, drift: float = 2,
                  workers: int = 1) -> DecayReport:
    """Pr_x[|c(X_sigma) - c(x)| > drift and rho exits [0, r] through r before dropping below 0]."""
    rx = float(x.rho())
    if not all(0 < rx < r for r in radii):
        raise HarmonicError("need 0 < rho(x) < r for every radius")
    if drift == INF:
        # empty event: report zeros without a fit
        reps = [mean_report(np.zeros(1), 0, 0, seed, statistic="c_drift").to_dict() for _ in radii]
        return DecayReport("c_drift", x, list(radii), reps, [0] * len(radii), {}, True, True,
                           notes=["infinite drift threshold: empty event"])
    event = {
        "run": lambda cfg, m, w: sample_batch(cfg, m, drift_threshold=drift, workers=w),
        "mask": lambda b: b.drift & (b.exit_side > 0),
    }
    return _decay("c_drift", g, x, radii, n, seed, workers, event, lower=0)


def small_c_decay(g: MeasuredGroup, x: AffineElement, radii: Sequence[float] = (16, 32, 64),
                  n: int = 200_000, seed: int = DEFAULT_SEED, threshold: float = THRESHOLD,
                  workers: int = 1) -> DecayReport:
    """Pr_x[|c(X_sigma_r)| < threshold] at a point with |c(x)| > 5 and r > 4|rho(x)|."""
    if not abs_fraction(x.c) > SEPARATION:
        raise HarmonicError(f"need |c(x)| > {SEPARATION}")
    if not all(r > 4 * abs_rho(x) for r in radii):
        raise HarmonicError("need r > 4|rho(x)| for every radius")
    event = {
        "run": lambda cfg, m, w: sample_batch(cfg, m, threshold=threshold, workers=w),
        "mask": lambda b: b.small,
    }
    return _decay("small_c", g, x, radii, n, seed, workers, event)


def q_min(g: MeasuredGroup) -> float:
    """log(3 / (|c(z)| (1 - sum_{k>=1} e^-k))) for the designated z."""
    cz = float(abs_fraction(g.special["z"].c))
    return math.log(3 / (cz * (1 - 1 / (math.e - 1))))


@dataclass
class ConditionalReport:
    point: AffineElement
    r: float
    q: float
    table: list
    dropped: list
    fit: dict
    passed: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "point": str(self.point),
            "r": self.r,
            "q": self.q,
            "table": self.table,
            "dropped": self.dropped,
            "fit": self.fit,
            "passed": bool(self.passed),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return _dump(self.to_dict())


def conditional_small_c_check(g: MeasuredGroup, x: AffineElement, r: float = 64, q: float | None = None,
                              n: int = 1_000_000, seed: int = DEFAULT_SEED, threshold: float = THRESHOLD,
                              workers: int = 1) -> ConditionalReport:
    """Pr_x[|c(X_sigma_r)| < 3 | MS_r((-inf, -q)) = k], binned by k.

    Bins with fewer than 200 walks are dropped; bins without a single success
    are listed but cannot enter the log-probability fit.
    """
    if q is None:
        q = q_min(g) + 1e-6
    ps = point_seed(g, x, seed)
    cfg = WalkConfig(g, x, ps, r=r, coordinate="rho")
    batch = sample_batch(cfg, n, threshold=threshold, ms_q=q, workers=workers)
    if batch.n_censored > MAX_CENSORED * n:
        raise CensoringError(f"conditional check: {batch.n_censored} of {n} censored")
    keep = ~batch.censored
    ms = batch.ms[keep]
    small = batch.small[keep]
    table, dropped, xs, ys = [], [], [], []
    empty, notes = [], []
    for k in np.unique(ms):
        sel = ms == k
        cnt = int(sel.sum())
        succ = int(small[sel].sum())
        if cnt < MIN_CONDITIONED:
            dropped.append({"ms": int(k), "count": cnt})
            continue
        p = succ / cnt
        table.append({"ms": int(k), "count": cnt, "successes": succ, "p": p,
                      "std_error": proportion_se(p, cnt)})
        if succ > 0:
            xs.append(int(k))
            ys.append(math.log(p))
        else:
            empty.append(int(k))
    if empty:
        notes.append(f"bins without successes (kept in the table, not fitted): {empty}")
    if len(xs) >= 2:
        fit = linear_fit(xs, ys)
        fd, ok = fit.to_dict(), fit.slope < 0
    else:
        fd, ok = {}, False
        notes.append("fewer than two usable bins")
    return ConditionalReport(x, r, q, table, dropped, fd, bool(ok), notes)


# ---------------------------------------------------------------------------
# growth along x^-n and the stabilization diagnostic


@dataclass
class GrowthReport:
    exponents: list
    estimates: list
    fit: dict
    increasing: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "exponents": self.exponents,
            "estimates": [e.to_dict() for e in self.estimates],
            "fit": self.fit,
            "increasing": bool(self.increasing),
            "passed": bool(self.passed),
        }

    def to_json(self) -> str:
        return _dump(self.to_dict())


def growth_check(g: MeasuredGroup, exponents: Sequence[int] = tuple(range(1, 9)), r: float = 128,
                 n: int = 100_000, seed: int = DEFAULT_SEED, workers: int = 1) -> GrowthReport:
    """f_r(x^-j) for the designated x: increasing in j with a linear fit R^2 > 0.9."""
    x = g.special["x"]
    ests = [estimate_f(g, x ** (-j), r, THRESHOLD, n, seed, workers) for j in exponents]
    vals = [e.value for e in ests]
    fit = linear_fit(list(exponents), vals)
    inc = all(b > a for a, b in zip(vals, vals[1:]))
    return GrowthReport(list(exponents), ests, fit.to_dict(), inc, bool(inc and fit.r2 > MIN_R2))


def stabilization_report(g: MeasuredGroup, x: AffineElement, radii: Sequence[float] = RADII,
                         n: int = 100_000, seed: int = DEFAULT_SEED, workers: int = 1) -> dict:
    """f_r(x) along increasing r; successive values compared at 3 combined sigma (diagnostic only)."""
    ests = [estimate_f(g, x, r, THRESHOLD, n, seed, workers) for r in radii]
    steps = []
    for a, b in zip(ests, ests[1:]):
        se = math.hypot(a.std_error, b.std_error)
        steps.append({"r": [a.r, b.r], "difference": b.value - a.value, "std_error": se,
                      "within": bool(abs(b.value - a.value) <= STABLE_SIGMAS * se)})
    return {
        "point": str(x),
        "estimates": [e.to_dict() for e in ests],
        "steps": steps,
        "stable": all(s["within"] for s in steps),
    }


# ---------------------------------------------------------------------------
# orbit independence


def conjugation_exponent(g: MeasuredGroup, limit: int = 64) -> int:
    """Smallest N >= 1 with |lam(x)^N| (|lam(x)^N| - 1) |c(z)| > 5."""
    lam = abs_fraction(g.special["x"].lam)
    cz = abs_fraction(g.special["z"].c)
    for N in range(1, limit + 1):
        L = lam**N
        if L * (L - 1) * cz > SEPARATION:
            return N
    raise HarmonicError("no conjugation exponent found")


def orbit_points(g: MeasuredGroup, n_max: int, N: int) -> list[AffineElement]:
    """y_n = x^{Nn} z x^{-Nn} for n = 1..n_max."""
    x, z = g.special["x"], g.special["z"]
    return [x ** (N * n) * z * x ** (-N * n) for n in range(1, n_max + 1)]


@dataclass
class OrbitReport:
    N: int
    n_max: int
    j_max: int
    r: float
    points: list
    matrix: np.ndarray  # M[n, m, j-1] = f(y_n^-1 y_m x^-j)
    errors: np.ndarray
    min_offdiag_c: Fraction
    exact_ok: bool
    diagonal_fit: dict
    offdiag_max: float
    gram_singular_values: list
    rank: int
    tolerance: float
    passed: bool
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "n_max": self.n_max,
            "j_max": self.j_max,
            "r": self.r,
            "points": [str(y) for y in self.points],
            "matrix": self.matrix.tolist(),
            "std_errors": self.errors.tolist(),
            "min_offdiag_abs_c": self.min_offdiag_c,
            "exact_ok": bool(self.exact_ok),
            "diagonal_fit": self.diagonal_fit,
            "offdiag_max": self.offdiag_max,
            "gram_singular_values": self.gram_singular_values,
            "rank": self.rank,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
            "config": self.config,
        }

    def to_json(self) -> str:
        return _dump(self.to_dict())

    def to_csv(self) -> str:
        rows = []
        for a in range(self.n_max):
            for b in range(self.n_max):
                for j in range(self.j_max):
                    rows.append({"n": a + 1, "m": b + 1, "j": j + 1,
                                 "value": float(self.matrix[a, b, j]),
                                 "std_error": float(self.errors[a, b, j])})
        return _csv(rows)


def orbit_independence(g: MeasuredGroup, n_max: int = 3, j_max: int = 12, r: float = 64,
                       n: int = 100_000, seed: int = DEFAULT_SEED, workers: int = 1,
                       rel_tol: float = 1e-6) -> OrbitReport:
    """Evaluate f_r on y_n^-1 y_m x^-j and test the rank of the Gram matrix of the rows.

    Row n is M[n] flattened over (m, j); the Gram matrix is R R^T and its
    rank counts singular values above ``rel_tol`` times the largest.
    """
    N = conjugation_exponent(g)
    ys = orbit_points(g, n_max, N)
    x = g.special["x"]
    xinv = [x ** (-j) for j in range(1, j_max + 1)]
    args = [[[ys[a].inverse() * ys[b] * xinv[j] for j in range(j_max)] for b in range(n_max)]
            for a in range(n_max)]
    offd = [abs_fraction(args[a][b][j].c) for a in range(n_max) for b in range(n_max)
            for j in range(j_max) if a != b]
    min_c = min(offd) if offd else Fraction(0)
    exact_ok = all(c > SEPARATION for c in offd)
    oracle = FHatOracle(g, r, n, seed, THRESHOLD, workers)
    M = np.zeros((n_max, n_max, j_max))
    E = np.zeros_like(M)
    for a in range(n_max):
        for b in range(n_max):
            for j in range(j_max):
                est = oracle.estimate(args[a][b][j])
                M[a, b, j] = est.value
                E[a, b, j] = est.std_error
    diag = np.mean([M[a, a] for a in range(n_max)], axis=0)
    dfit = linear_fit(np.arange(1, j_max + 1), diag).to_dict()
    off = [M[a, b].max() for a in range(n_max) for b in range(n_max) if a != b]
    R = M.reshape(n_max, -1)
    G = R @ R.T
    sv = np.linalg.svd(G, compute_uv=False)
    tol = rel_tol * float(sv[0]) if sv.shape[0] else 0.0
    rank = int((sv > tol).sum())
    cfg = {"group": g.name, "samples": n, "seed": seed, "threshold": THRESHOLD,
           "distinct_points": len(oracle.cache)}
    return OrbitReport(N, n_max, j_max, r, ys, M, E, min_c, exact_ok, dfit,
                       float(max(off)) if off else 0.0, sv.tolist(), rank, tol,
                       bool(rank == n_max and exact_ok), cfg)


# ---------------------------------------------------------------------------
# harmonic extension from a finite-index subgroup


@dataclass(frozen=True)
class ExtensionEstimate:
    point: AffineElement
    value: float
    std_error: float
    n_samples: int
    n_censored: int
    seed: int
    labeling: str

    def to_dict(self) -> dict:
        return {
            "point": str(self.point),
            "value": self.value,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "n_censored": self.n_censored,
            "seed": self.seed,
            "labeling": self.labeling,
        }

    def to_json(self) -> str:
        return _dump(self.to_dict())


def extend_harmonic(g: MeasuredGroup, labeling, oracle: Callable[[AffineElement], Evaluation],
                    x: AffineElement, n: int = 100_000, seed: int = DEFAULT_SEED,
                    max_steps: int = 100_000) -> ExtensionEstimate:
    """E_x[f(X_tau_H)] with tau_H the first t >= 1 in the label-0 coset."""
    ps = derive_seed(seed, g.name, "extend", labeling.name, str(x))
    cfg = WalkConfig(g, x, ps, labeling=labeling, max_steps=max_steps)
    vals = np.zeros(n)
    memo: dict = {}
    cens = 0
    m = 0
    for i in range(n):
        s = sample_stopped_walk(cfg, i)
        if s.censored:
            cens += 1
            continue
        y = s.final
        v = memo.get(y)
        if v is None:
            try:
                v = memo[y] = float(oracle(y))
            except Exception as exc:  # noqa: BLE001
                raise HarmonicError(f"cannot evaluate the subgroup function at {y}: {exc}") from exc
        vals[m] = v
        m += 1
    if cens > MAX_CENSORED * n:
        raise CensoringError(f"extension at {x}: {cens} of {n} walks censored")
    rep = mean_report(vals[:m], n, cens, ps)
    return ExtensionEstimate(x, rep.estimate, rep.std_error, n, cens, ps, labeling.name)

"""Seeded random walks on measured groups and their stopping times.

Trajectory ``i`` of a run with seed ``s`` draws its steps from the counter
stream ``(s, i)``, so results never depend on how trajectories are split over
workers.  The exact engine (:func:`sample_stopped_walk`) multiplies exact
affine elements; :func:`sample_batch` dispatches to the compiled samplers when
the group and stopping rule allow it and falls back to the exact engine
otherwise.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np

from . import kernels as K
from .fields import LogAbs, ValuedScalar
from .groups import (
    AffineElement,
    MeasuredGroup,
    ball_for,
    lam_exponent,
    monomial_structure,
    scalar_digits,
)
from .rng import CounterStream, bits_for

INF = math.inf


class WalkError(RuntimeError):
    pass


class CensoringError(WalkError):
    pass


# ---------------------------------------------------------------------------
# configuration and samples


@dataclass(frozen=True)
class WalkConfig:
    """A walk from ``start`` with one stopping rule.

    Exactly one of ``r`` (sigma_r: first exit of rho from [-r, r], or from
    [lower, r] when ``lower`` is set),
    ``intervals`` (tau_A with A a union of open rho-intervals, t >= 0) or
    ``labeling`` (tau_H: first t >= 1 with label 0) must be set.  With none set
    the walk runs for exactly ``max_steps`` steps.

    The exit rules act on ``coordinate``: ``rho`` or, for groups with
    lam = 1 throughout (where rho vanishes), the real coordinate ``c``.
    ``auto`` picks ``c`` exactly for groups flagged virtually abelian.
    """

    group: MeasuredGroup
    start: AffineElement
    seed: int
    r: float | None = None
    intervals: tuple[tuple[float, float], ...] | None = None
    labeling: object | None = None
    max_steps: int | None = None
    coordinate: str = "auto"
    lower: float | None = None

    def __post_init__(self):
        rules = sum(x is not None for x in (self.r, self.intervals, self.labeling))
        if rules > 1:
            raise WalkError("set at most one stopping rule")
        if self.r is not None and not self.r > 0:
            raise WalkError("r must be positive")
        if self.lower is not None and (self.r is None or not self.lower < self.r):
            raise WalkError("lower needs r and must lie below it")
        if rules == 0 and self.max_steps is None:
            raise WalkError("a walk without a stopping rule needs max_steps")
        if self.max_steps is not None and self.max_steps < 1:
            raise WalkError("max_steps must be >= 1")
        if self.coordinate not in ("auto", "rho", "c"):
            raise WalkError(f"unknown coordinate {self.coordinate!r}")
        if self.coord == "c" and self.group.place.kind != "arch":
            raise WalkError("the c coordinate needs an archimedean group")

    @property
    def coord(self) -> str:
        if self.coordinate == "auto":
            return "c" if self.group.virtually_abelian else "rho"
        return self.coordinate

    def position(self, x: AffineElement) -> LogAbs:
        """The coordinate the exit rules look at (a LogAbs so comparisons share one code path)."""
        if self.coord == "c":
            return LogAbs.from_float(float(x.c.value))
        return x.rho()

    @property
    def lo(self) -> float:
        """Lower edge of the sigma window (-r unless ``lower`` is set)."""
        return -self.r if self.lower is None else self.lower

    @property
    def kind(self) -> str:
        if self.r is not None:
            return "sigma_r"
        if self.intervals is not None:
            return "tau_set"
        if self.labeling is not None:
            return "tau_subgroup"
        return "fixed"

    @property
    def step_cap(self) -> int:
        if self.max_steps is not None:
            return self.max_steps
        if self.r is not None:
            return default_max_steps(self.r)
        return 1_000_000

    def inside(self, rho: LogAbs) -> bool:
        """True while the sigma/tau_A rule has not fired at this rho value."""
        if self.r is not None:
            return rho.compare(self.r) <= 0 and rho.compare(self.lo) >= 0
        return not any(_in_open(rho, a, b) for a, b in self.intervals)

    def describe(self) -> dict:
        out = {
            "group": self.group.name,
            "start": str(self.start),
            "seed": self.seed,
            "stop": self.kind,
            "coordinate": self.coord,
            "max_steps": self.step_cap,
        }
        if self.r is not None:
            out["r"] = self.r
        if self.lower is not None:
            out["lower"] = self.lower
        if self.intervals is not None:
            out["intervals"] = [[_num(a), _num(b)] for a, b in self.intervals]
        if self.labeling is not None:
            out["labeling"] = getattr(self.labeling, "name", str(self.labeling))
        return out


def default_max_steps(r: float) -> int:
    return int(math.ceil(200 * r * r))


def _num(v: float):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return v


def _in_open(rho: LogAbs, a: float, b: float) -> bool:
    above = a == -INF or rho.compare(a) > 0
    below = b == INF or rho.compare(b) < 0
    return above and below


@dataclass(frozen=True)
class StoppedSample:
    stop_kind: str
    stop_time: int
    final: AffineElement
    final_rho: LogAbs
    final_c_abs: LogAbs
    exit_side: int = 0
    rho_path: tuple[float, ...] | None = None

    @property
    def censored(self) -> bool:
        return self.stop_kind == "censored"


@lru_cache(maxsize=64)
def _table(weights: tuple) -> tuple:
    den = math.lcm(*(w.denominator for w in weights))
    table = []
    for i, w in enumerate(weights):
        table.extend([i] * int(w * den))
    return tuple(table)


def step_table(g: MeasuredGroup) -> np.ndarray:
    """Generator index for each value of a uniform draw on [0, D)."""
    return np.asarray(_table(g.weights), dtype=np.int64)


def sample_stopped_walk(cfg: WalkConfig, index: int = 0, record: bool = False) -> StoppedSample:
    """Run trajectory ``index`` in exact arithmetic."""
    g = cfg.group
    table = _table(g.weights)
    d = len(table)
    elems = g.elements
    stream = CounterStream(cfg.seed, index)
    x = cfg.start
    kind = cfg.kind
    if kind == "sigma_r" and cfg.coord == "c" and not record:
        return _sigma_c_walk(cfg, stream, table, d, elems)
    track = kind in ("sigma_r", "tau_set") or record
    rho = cfg.position(x) if track else None
    path = [] if record else None
    cap = cfg.step_cap
    t = 0
    fired = False
    while True:
        if kind in ("sigma_r", "tau_set"):
            if not cfg.inside(rho):
                fired = True
                break
        elif kind == "tau_subgroup":
            if t >= 1 and cfg.labeling.label(x) == 0:
                fired = True
                break
        if t >= cap:
            break
        if record:
            path.append(float(rho))
        x = x * elems[table[stream.draw(d)]]
        if track:
            rho = cfg.position(x)
        t += 1
    side = 0
    if rho is None:
        rho = cfg.position(x)
    if fired and kind == "sigma_r":
        side = 1 if rho.compare(cfg.r) > 0 else -1
    stop_kind = kind if (fired or kind == "fixed") else "censored"
    return StoppedSample(
        stop_kind=stop_kind,
        stop_time=t,
        final=x,
        final_rho=x.rho(),
        final_c_abs=x.c.abs(),
        exit_side=side,
        rho_path=tuple(path) if record else None,
    )


def _sigma_c_walk(cfg: WalkConfig, stream, table, d, elems) -> StoppedSample:
    """sigma_r on the real coordinate c, compared as exact rationals."""
    x = cfg.start
    lo, hi = cfg.lo, cfg.r
    cap = cfg.step_cap
    t = 0
    fired = False
    while True:
        c = x.c.value
        if c > hi or c < lo:
            fired = True
            break
        if t >= cap:
            break
        x = x * elems[table[stream.draw(d)]]
        t += 1
    side = (1 if x.c.value > hi else -1) if fired else 0
    return StoppedSample(
        stop_kind="sigma_r" if fired else "censored",
        stop_time=t,
        final=x,
        final_rho=x.rho(),
        final_c_abs=x.c.abs(),
        exit_side=side,
    )


# ---------------------------------------------------------------------------
# exact absolute-value comparisons


def abs_fraction(s: ValuedScalar) -> Fraction:
    """|s| as an exact rational."""
    if s.is_zero():
        return Fraction(0)
    kind = s.place.kind
    if kind == "arch":
        return abs(s.value)
    if kind == "padic":
        from .fields import padic_valuation

        return Fraction(s.place.p) ** (-padic_valuation(s.value, s.place.p))
    return Fraction(s.place.p) ** s.value.degree()


def abs_less(s: ValuedScalar, t: float) -> bool:
    if t == INF:
        return True
    return abs_fraction(s) < Fraction(t)


def abs_greater(s: ValuedScalar, t: float) -> bool:
    if t == INF:
        return False
    return abs_fraction(s) > Fraction(t)


def max_separated(points: Sequence[float]) -> int:
    """Largest subset with pairwise gaps >= 1 (greedy sweep, optimal on the line)."""
    count = 0
    last = -INF
    for v in sorted(points):
        if v >= last + 1.0:
            count += 1
            last = v
    return count


# ---------------------------------------------------------------------------
# batches


@dataclass
class SampleBatch:
    """Per-trajectory outputs of a sigma_r run, in trajectory-index order.

    ``small`` is |c(X_stop)| < threshold, ``drift`` is
    |c(X_stop) - c(X_0)| > drift_threshold, ``ms`` the number of 1-separated
    visited rho values below -ms_q before the stop (0 unless requested).
    """

    stop_time: np.ndarray
    censored: np.ndarray
    exit_side: np.ndarray
    small: np.ndarray
    drift: np.ndarray
    ms: np.ndarray
    sampler: str

    @property
    def n(self) -> int:
        return int(self.stop_time.shape[0])

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())


@dataclass
class _Plan:
    split: bool
    mode: int
    base: int
    rho_sign: int
    logb: float
    lo_e: int
    hi_e: int
    e0: int
    c0_pos: np.ndarray
    c0_coef: np.ndarray
    dmin: int
    ndig: int
    gen_of_u: np.ndarray
    nbits: int
    de: np.ndarray
    term_ptr: np.ndarray
    term_pos: np.ndarray
    term_coef: np.ndarray
    up_pos: np.ndarray
    up_coef: np.ndarray
    thresholds: tuple = ()


def _digits_array(d: dict[int, int]):
    keys = sorted(d)
    return np.asarray(keys, dtype=np.int64), np.asarray([d[k] for k in keys], dtype=np.int64)


def _split_shape(struct):
    """(c0 digits) if the support is {up, down, +c0, -c0}, else None."""
    base, gens = struct
    if len(gens) != 4:
        return None
    lam_moves = sorted(k for k, d in gens if not d)
    c_moves = [d for k, d in gens if k == 0 and d]
    if lam_moves != [-1, 1] or len(c_moves) != 2:
        return None
    a, b = c_moves
    if set(a) != set(b) or any(a[k] != -b[k] for k in a):
        return None
    return a if next(iter(sorted(a.items())))[1] > 0 else b


def _cut(place, t: Fraction, big: bool) -> int:
    """Integer cut equivalent to |v| < t (big=False) or |v| > t (big=True)."""
    p = Fraction(place.p)
    if place.kind == "padic":
        # |v| = p^-val; small iff val >= cut, big iff val < cut
        v = 0
        ok = (lambda v: p ** (-v) <= t) if big else (lambda v: p ** (-v) < t)
        while ok(v - 1):
            v -= 1
        while not ok(v):
            v += 1
        return v
    # laurent: |v| = p^deg; small iff deg <= cut, big iff deg > cut
    ok = (lambda d: p ** d <= t) if big else (lambda d: p ** d < t)
    d = 0
    while not ok(d):
        d -= 1
    while ok(d + 1):
        d += 1
    return d


def _threshold_spec(place, base: int, t: float, big: bool):
    """(kind, float, int cut, digit dict or None)."""
    if t == INF:
        return K.THR_INF, 0.0, 0, None
    ft = Fraction(t)
    if ft <= 0:
        raise WalkError("thresholds must be positive")
    if place.kind == "arch":
        digits = scalar_digits(ValuedScalar.of(ft, place), base)
        if digits is not None:
            return K.THR_DIGITS, float(ft), 0, digits
        return K.THR_FLOAT, float(ft), 0, None
    return K.THR_CUT, float(ft), _cut(place, ft, big), None


def _plan(cfg: WalkConfig, threshold: float, drift_threshold: float, sampler: str) -> _Plan | None:
    if cfg.kind != "sigma_r" or sampler == "exact" or cfg.coord != "rho":
        return None
    g = cfg.group
    struct = monomial_structure(g)
    if struct is None:
        return None
    base, gens = struct
    if all(k == 0 for k, _ in gens):
        return None
    place = g.place
    e0 = lam_exponent(cfg.start, base)
    c0 = scalar_digits(cfg.start.c, base)
    if e0 is None or c0 is None:
        return None
    mode = {"arch": K.MODE_ARCH, "padic": K.MODE_PADIC, "laurent": K.MODE_LAURENT}[place.kind]
    rho_sign = 1 if place.kind == "padic" else -1

    def inside(e):
        rho = LogAbs.exact(rho_sign * e, base)
        return rho.compare(cfg.r) <= 0 and rho.compare(cfg.lo) >= 0

    span = int(cfg.r / math.log(base)) + 2
    ins = [e for e in range(-span, span + 1) if inside(e)]
    lo_e, hi_e = min(ins), max(ins)

    specs = [_threshold_spec(place, base, threshold, False), _threshold_spec(place, base, drift_threshold, True)]
    if sampler == "split":
        split_c = _split_shape(struct)
        if split_c is None:
            raise WalkError(f"split sampler does not apply to {g.name}")
    elif sampler == "auto":
        split_c = _split_shape(struct)
    else:
        split_c = None
    if split_c is not None and any(s[0] == K.THR_FLOAT for s in specs):
        split_c = None

    positions = list(c0)
    for k, d in gens:
        positions += [lo_e + p for p in d] + [hi_e + p for p in d]
    for s in specs:
        if s[3]:
            positions += list(s[3])
    positions = positions or [0]
    cap = cfg.step_cap
    maxcoef = max([1] + [abs(v) for _, d in gens for v in d.values()] + [abs(v) for v in c0.values()])
    head = int(math.ceil(math.log(cap * maxcoef * 4 + 16) / math.log(base))) + 4
    dmin = min(positions) - 1
    dmax = max(positions) + head
    ndig = dmax - dmin + 1

    de = np.asarray([k for k, _ in gens], dtype=np.int64)
    ptr = [0]
    tpos, tcoef = [], []
    for _, d in gens:
        for p in sorted(d):
            tpos.append(p)
            tcoef.append(d[p])
        ptr.append(len(tpos))
    table = step_table(g)
    c0_pos, c0_coef = _digits_array(c0)
    up_pos, up_coef = _digits_array(split_c or {})

    thr = []
    for kind, tf, ti, digs in specs:
        arr = np.zeros(ndig, dtype=np.int64)
        if digs:
            for p, v in digs.items():
                arr[p - dmin] = v
        thr.append((kind, tf, ti, arr))
    return _Plan(
        split=split_c is not None,
        mode=mode,
        base=base,
        rho_sign=rho_sign,
        logb=math.log(base),
        lo_e=lo_e,
        hi_e=hi_e,
        e0=e0,
        c0_pos=c0_pos,
        c0_coef=c0_coef,
        dmin=dmin,
        ndig=ndig,
        gen_of_u=table,
        nbits=bits_for(len(table)),
        de=de,
        term_ptr=np.asarray(ptr, dtype=np.int64),
        term_pos=np.asarray(tpos, dtype=np.int64),
        term_coef=np.asarray(tcoef, dtype=np.int64),
        up_pos=up_pos,
        up_coef=up_coef,
        thresholds=tuple(thr),
    )


def _run_plan(plan: _Plan, cfg: WalkConfig, start: int, n: int, ms_q: float | None):
    out_time = np.zeros(n, dtype=np.int64)
    out_cens = np.zeros(n, dtype=np.bool_)
    out_e = np.zeros(n, dtype=np.int64)
    out_small = np.zeros(n, dtype=np.int8)
    out_drift = np.zeros(n, dtype=np.int8)
    out_ms = np.zeros(n, dtype=np.int64)
    thr_kind = np.asarray([t[0] for t in plan.thresholds], dtype=np.int64)
    thr_float = np.asarray([t[1] for t in plan.thresholds], dtype=np.float64)
    thr_int = np.asarray([t[2] for t in plan.thresholds], dtype=np.int64)
    thr_dig = np.stack([t[3] for t in plan.thresholds])
    track = ms_q is not None
    q = float(ms_q) if track else 0.0
    common_tail = (
        plan.e0, plan.c0_pos, plan.c0_coef,
        plan.lo_e, plan.hi_e, cfg.step_cap,
        plan.dmin, plan.ndig,
        plan.mode, plan.base, thr_kind, thr_float, thr_int, thr_dig,
        plan.rho_sign, plan.logb, q, track,
        out_time, out_cens, out_e, out_small, out_drift, out_ms,
    )
    seed = np.uint64(cfg.seed & ((1 << 64) - 1))
    if plan.split:
        K.group_walk_split(seed, start, n, plan.up_pos, plan.up_coef, *common_tail)
    else:
        K.group_walk_steps(
            seed, start, n, plan.nbits, plan.gen_of_u,
            plan.de, plan.term_ptr, plan.term_pos, plan.term_coef,
            *common_tail,
        )
    return out_time, out_cens, out_e, out_small, out_drift, out_ms


def _chunks(n: int, workers: int):
    workers = max(1, min(workers, n))
    size = -(-n // workers)
    return [(s, min(size, n - s)) for s in range(0, n, size)]


def _from_exact(cfg: WalkConfig, index: int, threshold: float, drift_threshold: float, ms_q):
    s = sample_stopped_walk(cfg, index, record=ms_q is not None)
    small = drift = False
    if not s.censored:
        small = abs_less(s.final.c, threshold)
        drift = abs_greater(s.final.c - cfg.start.c, drift_threshold)
    ms = 0
    if ms_q is not None and not s.censored:
        ms = max_separated([v for v in s.rho_path if v < -ms_q])
    return s.stop_time, s.censored, s.exit_side, small, drift, ms


def sample_batch(
    cfg: WalkConfig,
    n: int,
    threshold: float = 3,
    drift_threshold: float = INF,
    ms_q: float | None = None,
    workers: int = 1,
    sampler: str = "auto",
    start_index: int = 0,
) -> SampleBatch:
    """Run trajectories ``start_index .. start_index + n - 1`` of a sigma_r config.

    ``sampler`` is one of ``auto`` (split sampler when it applies, else the
    compiled step sampler, else exact), ``steps``, ``split`` or ``exact``.
    """
    if n < 1:
        raise WalkError("n must be >= 1")
    if cfg.kind != "sigma_r":
        raise WalkError("sample_batch handles sigma_r configurations")
    plan = _plan(cfg, threshold, drift_threshold, sampler)
    if plan is None:
        rows = [_from_exact(cfg, start_index + i, threshold, drift_threshold, ms_q) for i in range(n)]
        cols = list(zip(*rows))
        return SampleBatch(
            stop_time=np.asarray(cols[0], dtype=np.int64),
            censored=np.asarray(cols[1], dtype=bool),
            exit_side=np.asarray(cols[2], dtype=np.int8),
            small=np.asarray(cols[3], dtype=bool),
            drift=np.asarray(cols[4], dtype=bool),
            ms=np.asarray(cols[5], dtype=np.int64),
            sampler="exact",
        )
    parts = _chunks(n, workers)
    if len(parts) == 1:
        results = [_run_plan(plan, cfg, start_index, n, ms_q)]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            futs = [pool.submit(_run_plan, plan, cfg, start_index + s, m, ms_q) for s, m in parts]
            results = [f.result() for f in futs]
    time_, cens, e, small, drift, ms = (np.concatenate(c) for c in zip(*results))
    # exit side in rho terms
    above = e > plan.hi_e
    below = e < plan.lo_e
    side = np.where(above, plan.rho_sign, np.where(below, -plan.rho_sign, 0)).astype(np.int8)
    side[cens] = 0
    amb = np.flatnonzero((small == K.AMBIGUOUS) | (drift == K.AMBIGUOUS))
    small = small.astype(bool)
    drift = drift.astype(bool)
    for i in amb:
        _, _, _, sm, dr, _ = _from_exact(cfg, start_index + int(i), threshold, drift_threshold, None)
        small[i] = sm
        drift[i] = dr
    return SampleBatch(
        stop_time=time_,
        censored=cens,
        exit_side=side,
        small=small,
        drift=drift,
        ms=ms,
        sampler="split" if plan.split else "steps",
    )


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EstimateReport:
    """Monte Carlo mean with its standard error.

    ``worker_count`` records how the run was executed but is left out of
    ``to_dict`` (and of equality) so reports are identical across workers.
    """

    estimate: float
    std_error: float
    n_samples: int
    n_censored: int
    confidence: float
    seed: int
    worker_count: int = field(default=1, compare=False)
    statistic: str = ""

    @property
    def interval(self) -> tuple[float, float]:
        z = NormalDist().inv_cdf(0.5 + self.confidence / 2)
        return self.estimate - z * self.std_error, self.estimate + z * self.std_error

    def to_dict(self) -> dict:
        lo, hi = self.interval
        return {
            "statistic": self.statistic,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "n_censored": self.n_censored,
            "confidence": self.confidence,
            "ci_low": lo,
            "ci_high": hi,
            "seed": self.seed,
        }


def mean_report(values: np.ndarray, n_samples: int, n_censored: int, seed: int,
                confidence: float = 0.95, workers: int = 1, statistic: str = "") -> EstimateReport:
    values = np.asarray(values, dtype=np.float64)
    m = values.shape[0]
    if m == 0:
        est, se = math.nan, math.nan
    else:
        est = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return EstimateReport(est, se, n_samples, n_censored, confidence, seed, workers, statistic)


def _stat_stopped(s: StoppedSample):
    return 0.0 if s.censored else 1.0


STATISTICS: dict[str, tuple[Callable[[StoppedSample], float | None], bool]] = {
    # name -> (functional, counts censored samples)
    "stopped": (_stat_stopped, True),
    "stop_time": (lambda s: float(s.stop_time), False),
    "final_rho": (lambda s: float(s.final_rho), False),
    "exit_right": (lambda s: 1.0 if s.exit_side > 0 else 0.0, False),
}


def _batch_values(batch: SampleBatch, name: str):
    keep = ~batch.censored
    if name == "stopped":
        return keep.astype(np.float64)
    if name == "stop_time":
        return batch.stop_time[keep].astype(np.float64)
    if name == "exit_right":
        return (batch.exit_side[keep] > 0).astype(np.float64)
    if name == "small_c":
        return batch.small[keep].astype(np.float64)
    return None


def run_ensemble(
    cfg: WalkConfig,
    n: int,
    statistic: str | Callable[[StoppedSample], float | None] = "stop_time",
    workers: int = 1,
    confidence: float = 0.95,
    threshold: float = 3,
    sampler: str = "auto",
) -> EstimateReport:
    """Mean of a statistic over trajectories 0..n-1.

    Named statistics: ``stopped``, ``stop_time``, ``final_rho``,
    ``exit_right`` and (sigma_r only) ``small_c`` = 1{|c(X_stop)| < threshold}.
    A callable receives each :class:`StoppedSample` and may return None to
    drop it.  Censored samples are dropped except for ``stopped``.
    """
    if n < 1:
        raise WalkError("n must be >= 1")
    name = statistic if isinstance(statistic, str) else getattr(statistic, "__name__", "custom")
    if isinstance(statistic, str) and cfg.kind == "sigma_r" and statistic != "final_rho":
        batch = sample_batch(cfg, n, threshold=threshold, workers=workers, sampler=sampler)
        vals = _batch_values(batch, statistic)
        if vals is None:
            raise WalkError(f"unknown statistic {statistic!r}")
        return mean_report(vals, n, batch.n_censored, cfg.seed, confidence, workers, name)
    if isinstance(statistic, str):
        if statistic not in STATISTICS:
            raise WalkError(f"unknown statistic {statistic!r}")
        fn, with_censored = STATISTICS[statistic]
    else:
        fn, with_censored = statistic, False

    def one(i):
        return sample_stopped_walk(cfg, i)

    vals = []
    n_cens = 0
    for i in range(n):
        s = one(i)
        n_cens += s.censored
        if s.censored and not with_censored:
            continue
        v = fn(s)
        if v is not None:
            vals.append(v)
    return mean_report(np.asarray(vals), n, n_cens, cfg.seed, confidence, workers, name)


# ---------------------------------------------------------------------------
# checks


def walk_positions(g: MeasuredGroup, seed: int, index: int, times: Sequence[int],
                   start: AffineElement | None = None) -> list[AffineElement]:
    """X_t at each requested t for trajectory ``index`` (same draws as the stopped engine)."""
    table = step_table(g)
    elems = g.elements
    stream = CounterStream(seed, index)
    x = start if start is not None else g.identity()
    want = sorted(set(times))
    out = {}
    t = 0
    for target in want:
        while t < target:
            x = x * elems[table[stream.draw(len(table))]]
            t += 1
        out[target] = x
    return [out[t] for t in times]


def moment_bound_check(g: MeasuredGroup, t_list: Sequence[int], k: int, n: int, seed: int,
                       budget: int = 5_000_000) -> list[dict]:
    """Rows (t, E|X_t|^k / t^k) with standard errors.

    Word lengths are exact (BFS ball of radius max(t)); t = 0 is skipped.
    """
    ts = [int(t) for t in t_list]
    ball = ball_for(g, budget)
    tmax = max(ts) if ts else 0
    ball.grow_to(tmax)
    lengths = np.zeros((n, len(ts)))
    for i in range(n):
        xs = walk_positions(g, seed, i, ts)
        for j, x in enumerate(xs):
            lengths[i, j] = ball.length(x, tmax)
    rows = []
    for j, t in enumerate(ts):
        if t == 0:
            rows.append({"t": 0, "ratio": None, "std_error": None, "skipped": True})
            continue
        v = lengths[:, j] ** k / float(t) ** k
        se = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rows.append({"t": t, "ratio": float(v.mean()), "std_error": se, "skipped": False})
    return rows


def martingale_check(g: MeasuredGroup, start: AffineElement, t: int, n: int, seed: int) -> dict:
    """E[rho(X_t)] against rho(X_0); passes within 4 standard errors."""
    vals = np.asarray([float(walk_positions(g, seed, i, [t], start)[0].rho()) for i in range(n)])
    r0 = float(start.rho())
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    mean = float(vals.mean())
    return {
        "t": t,
        "mean_rho": mean,
        "rho_start": r0,
        "std_error": se,
        "pass": abs(mean - r0) <= 4 * se + 1e-12,
    }

"""Finite-index subgroups given by coset labelings, hitting times and hitting measures.

H is the set of elements with label 0.  The walk from the identity is stopped at
tau_H = inf{t >= 1 : X_t in H}; its position there has law mu_H.
"""
from __future__ import annotations

import json
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .groups import AffineElement, BallBudgetExceeded, MeasuredGroup, ball_for, lam_exponent, monomial_structure
from .stats import proportion_se, tail_fit
from .walk import WalkConfig, mean_report, sample_stopped_walk

AGREE_SIGMAS = 3.0
LEAK_TOLERANCE = Fraction(1, 10**12)


class HittingError(RuntimeError):
    pass


@dataclass(frozen=True)
class CosetLabeling:
    """Right cosets H\\G labelled 0..index-1, with the generators' action on labels."""

    name: str
    index: int
    label_fn: Callable[[AffineElement], int] = field(compare=False)
    action: dict = field(compare=False)  # (label, generator label) -> label

    def label(self, x: AffineElement) -> int:
        return self.label_fn(x)

    def validate(self, g: MeasuredGroup, radius: int = 3) -> None:
        """Check label(identity) = 0, the action table, its consistency and irreducibility."""
        if self.label(g.identity()) != 0:
            raise HittingError("the identity must carry label 0")
        for s in g.labels:
            image = sorted(self.action[(i, s)] for i in range(self.index))
            if image != list(range(self.index)):
                raise HittingError(f"generator {s} does not permute the cosets")
        ball = ball_for(g)
        ball.grow_to(radius)
        for x in ball.ball(radius):
            lx = self.label(x)
            for s, el in g.generators:
                if self.label(x * el) != self.action[(lx, s)]:
                    raise HittingError("labeling is not constant on cosets")
        seen = {0}
        todo = deque([0])
        while todo:
            i = todo.popleft()
            for s in g.labels:
                j = self.action[(i, s)]
                if j not in seen:
                    seen.add(j)
                    todo.append(j)
        if len(seen) != self.index:
            raise HittingError("the coset chain is not irreducible")


def parity_labeling(g: MeasuredGroup) -> CosetLabeling:
    """H = 2Z inside the integer line (label = c mod 2)."""
    if g.place.kind != "arch":
        raise HittingError("parity labeling needs an archimedean group")
    steps = {}
    for s, el in g.generators:
        if el.lam.value != 1 or el.c.value.denominator != 1:
            raise HittingError("parity labeling needs integer translations")
        steps[s] = int(el.c.value) % 2

    def label(x):
        c = x.c.value
        if c.denominator != 1 or x.lam.value != 1:
            raise HittingError(f"{x} is not an integer translation")
        return int(c) % 2

    action = {(i, s): (i + d) % 2 for i in range(2) for s, d in steps.items()}
    return CosetLabeling("parity", 2, label, action)


def lambda_mod_labeling(g: MeasuredGroup, m: int) -> CosetLabeling:
    """H = {x : lam(x) = b^e with e = 0 mod m}."""
    if m < 1:
        raise HittingError("modulus must be >= 1")
    struct = monomial_structure(g)
    if struct is None:
        raise HittingError(f"{g.name}: lam is not a power of one base")
    base, gens = struct
    shifts = {s: k for (s, _), (k, _) in zip(g.generators, gens)}

    def label(x):
        e = lam_exponent(x, base)
        if e is None:
            raise HittingError(f"{x} is outside the group")
        return e % m

    action = {(i, s): (i + k) % m for i in range(m) for s, k in shifts.items()}
    return CosetLabeling(f"lam-mod:{m}", m, label, action)


def trivial_labeling(g: MeasuredGroup) -> CosetLabeling:
    return CosetLabeling("trivial", 1, lambda x: 0, {(0, s): 0 for s in g.labels})


def parse_labeling(text: str, g: MeasuredGroup) -> CosetLabeling:
    t = text.strip().lower()
    if t == "parity":
        lab = parity_labeling(g)
    elif t in ("trivial", "index-1"):
        lab = trivial_labeling(g)
    else:
        for prefix in ("lam-mod:", "lambda-mod:", "lam-mod-", "lambda-exp-mod-"):
            if t.startswith(prefix):
                try:
                    m = int(t[len(prefix):])
                except ValueError as exc:
                    raise HittingError(f"bad modulus in {text!r}") from exc
                lab = lambda_mod_labeling(g, m)
                break
        else:
            raise HittingError(f"unknown labeling {text!r} (parity, trivial, lam-mod:m)")
    lab.validate(g)
    return lab


# ---------------------------------------------------------------------------
# hitting measures


@dataclass
class HittingMeasure:
    """Support points with probabilities (exact rationals or frequencies)."""

    support: list  # [(AffineElement, Fraction | float, std_error | None)]
    mode: str
    residual: float | Fraction = 0
    expected_tau: Fraction | float | None = None
    extra: dict = field(default_factory=dict)
    frequencies: dict = field(default_factory=dict, repr=False)

    def probability(self, x: AffineElement):
        for el, p, _ in self.support:
            if el == x:
                return p
        return 0

    def to_dict(self) -> dict:
        def num(v):
            if isinstance(v, Fraction):
                return f"{v.numerator}/{v.denominator}"
            return v

        rows = []
        for el, p, se in self.support:
            row = {"element": str(el), "p": num(p)}
            if se is not None:
                row["std_error"] = se
            rows.append(row)
        out = {"mode": self.mode, "support": rows, "residual": num(self.residual)}
        if self.expected_tau is not None:
            out["expected_tau"] = num(self.expected_tau)
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _sort_support(items):
    return sorted(items, key=lambda t: (-float(t[1]), str(t[0])))


def _sparse_solve(rows: list[dict], b: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination on sparse rational rows (in the given order, no pivoting)."""
    n = len(rows)
    rows = [dict(r) for r in rows]
    b = list(b)
    col_rows: dict[int, set] = {}
    for i, r in enumerate(rows):
        for c in r:
            col_rows.setdefault(c, set()).add(i)
    for i in range(n):
        piv = rows[i][i]
        for r in sorted(col_rows.get(i, ())):
            if r <= i:
                continue
            f = rows[r][i] / piv
            for c, v in rows[i].items():
                if c < i:
                    continue
                nv = rows[r].get(c, Fraction(0)) - f * v
                if nv:
                    rows[r][c] = nv
                    col_rows.setdefault(c, set()).add(r)
                else:
                    rows[r].pop(c, None)
            rows[r].pop(i, None)
            b[r] -= f * b[i]
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = b[i] - sum(v * x[c] for c, v in rows[i].items() if c > i)
        x[i] = s / rows[i][i]
    return x


def hitting_measure_exact(g: MeasuredGroup, labeling: CosetLabeling, state_budget: int = 20_000) -> HittingMeasure:
    """mu_H and E[tau_H] in exact rationals.

    The transient states (elements outside H reachable from the identity
    without passing through H) are explored breadth first; states beyond the
    current budget are treated as absorbing "leak" states whose total
    probability must stay below 1e-12.  The budget doubles from 64 up to
    ``state_budget`` until the leak is small enough.
    """
    labeling.validate(g)
    budget = min(64, state_budget)
    while True:
        out = _exact_with_budget(g, labeling, budget)
        if out is not None:
            return out
        if budget >= state_budget:
            raise HittingError(f"state budget {state_budget} leaks more than 1e-12 of the mass")
        budget = min(2 * budget, state_budget)


def _exact_with_budget(g: MeasuredGroup, labeling: CosetLabeling, state_budget: int):
    steps = g.steps()
    index = {}
    order = []
    start_mass = Counter()
    absorbed_direct = Counter()
    for s, w in steps:
        if labeling.label(s) == 0:
            absorbed_direct[s] += w
        else:
            if s not in index:
                index[s] = len(order)
                order.append(s)
            start_mass[index[s]] += w
    edges = []  # per transient state: list of (target index | element in H | None, w)
    frontier_leak = set()
    i = 0
    while i < len(order):
        y = order[i]
        out = []
        if i >= state_budget:
            frontier_leak.add(i)
            edges.append(out)
            i += 1
            continue
        for s, w in steps:
            z = y * s
            if labeling.label(z) == 0:
                out.append((("H", z), w))
            else:
                if z not in index:
                    index[z] = len(order)
                    order.append(z)
                out.append((("T", index[z]), w))
        edges.append(out)
        i += 1
    n = len(order)
    # visits u solve u = a + u Q, i.e. (I - Q^T) u = a
    rows = [dict() for _ in range(n)]
    for k in range(n):
        rows[k][k] = Fraction(1)
    for k, out in enumerate(edges):
        for (kind, tgt), w in out:
            if kind == "T":
                rows[tgt][k] = rows[tgt].get(k, Fraction(0)) - w
    b = [Fraction(start_mass.get(k, 0)) for k in range(n)]
    u = _sparse_solve(rows, b)
    mu = Counter(absorbed_direct)
    for k, out in enumerate(edges):
        if u[k] == 0:
            continue
        for (kind, tgt), w in out:
            if kind == "H":
                mu[tgt] += u[k] * w
    leak = sum((u[k] for k in frontier_leak), Fraction(0))
    if leak > LEAK_TOLERANCE:
        return None
    expected_tau = 1 + sum(u, Fraction(0)) - leak
    support = [(x, p, None) for x, p in mu.items() if p > 0]
    return HittingMeasure(
        _sort_support(support),
        "exact",
        residual=leak,
        expected_tau=expected_tau,
        extra={"transient_states": n, "leak_states": len(frontier_leak)},
    )


@dataclass
class HittingRun:
    tau: np.ndarray
    finals: list
    censored: int


def _run_hits(g, labeling, n, seed, max_steps):
    cfg = WalkConfig(g, g.identity(), seed, labeling=labeling, max_steps=max_steps)
    taus = np.zeros(n, dtype=np.int64)
    finals = []
    cens = 0
    for i in range(n):
        s = sample_stopped_walk(cfg, i)
        taus[i] = s.stop_time
        if s.censored:
            cens += 1
            finals.append(None)
        else:
            finals.append(s.final)
    return HittingRun(taus, finals, cens)


def hitting_time_stats(g: MeasuredGroup, labeling: CosetLabeling, n: int, seed: int,
                       max_steps: int = 100_000, workers: int = 1) -> dict:
    """Mean of tau_H against the index and the tail of tau_H."""
    labeling.validate(g)
    run = _run_hits(g, labeling, n, seed, max_steps)
    keep = np.asarray([f is not None for f in run.finals])
    rep = mean_report(run.tau[keep], n, run.censored, seed, workers=workers, statistic="tau_H")
    tf = tail_fit(run.tau[keep])
    mean_ok = abs(rep.estimate - labeling.index) <= AGREE_SIGMAS * rep.std_error or (
        rep.std_error == 0 and rep.estimate == labeling.index
    )
    tail_ok = tf.degenerate or tf.slope < 0
    return {
        "group": g.name,
        "labeling": labeling.name,
        "index": labeling.index,
        "report": rep.to_dict(),
        "tail": tf.to_dict(),
        "mean_ok": bool(mean_ok),
        "tail_ok": bool(tail_ok),
        "passed": bool(mean_ok and tail_ok),
        "notes": ["tau_H has bounded support; the tail is trivially exponential"] if tf.degenerate else [],
    }


def hitting_measure_mc(g: MeasuredGroup, labeling: CosetLabeling, n: int, seed: int,
                       max_steps: int = 100_000, top: int = 50, length_radius: int = 12,
                       workers: int = 1) -> HittingMeasure:
    """Empirical mu_H with a tail fit of the word length |X_tau_H|.

    ``top`` support points are listed (by frequency); the rest is the
    residual.  Word lengths above ``length_radius`` are recorded as
    ``length_radius + 1`` (a lower bound), which leaves the fitted part of the
    survival curve exact as long as it stays below the cap.
    """
    labeling.validate(g)
    run = _run_hits(g, labeling, n, seed, max_steps)
    counts = Counter(f for f in run.finals if f is not None)
    ball = ball_for(g)
    try:
        ball.grow_to(length_radius)
    except BallBudgetExceeded:
        pass
    lengths = []
    over = 0
    for x, c in counts.items():
        ln = ball.length(x, length_radius)
        if ln is None:
            ln = length_radius + 1
            over += c
        lengths.extend([ln] * c)
    lengths = np.sort(np.asarray(lengths, dtype=np.float64))
    tf = tail_fit(lengths)
    smooth = tf.degenerate or (tf.slope < 0)
    items = []
    for x, c in counts.most_common():
        p = c / n
        items.append((x, p, proportion_se(p, n)))
    items = _sort_support(items)
    listed = items[:top]
    residual = 1.0 - sum(p for _, p, _ in listed)
    return HittingMeasure(
        listed,
        "monte-carlo",
        frequencies={x: c / n for x, c in counts.items()},
        residual=max(residual, 0.0),
        expected_tau=float(run.tau.mean()),
        extra={
            "n_samples": n,
            "n_censored": run.censored,
            "seed": seed,
            "support_size": len(counts),
            "length_tail": tf.to_dict(),
            "length_over_cap": over,
            "smooth": bool(smooth),
        },
    )


def compare_exact_mc(exact: HittingMeasure, mc: HittingMeasure, sigmas: float = 4.0) -> dict:
    """Every exact support probability within ``sigmas`` standard errors of its frequency."""
    n = mc.extra["n_samples"]
    rows = []
    ok = True
    mc_map = mc.frequencies or {x: p for x, p, _ in mc.support}
    for x, p, _ in exact.support:
        q = mc_map.get(x, 0.0)
        se = math.sqrt(float(p) * (1 - float(p)) / n)
        good = abs(q - float(p)) <= sigmas * max(se, 1.0 / n)
        ok = ok and good
        rows.append({"element": str(x), "exact": float(p), "mc": q, "std_error": se, "agrees": good})
    return {"rows": rows, "passed": ok}

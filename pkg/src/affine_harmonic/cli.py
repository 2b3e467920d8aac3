"""Command-line runner: parse a subcommand, run it, write a JSON (or CSV) report.

Exit codes: 0 pass, 2 statistical failure, 1 runtime error, 64 usage error
(unknown flag, bad value), 65 malformed word, 66 invalid group spec,
67 non-prime lamplighter modulus.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

from . import harmonic as H
from . import hitting as HT
from . import line as L
from .groups import GroupSpecError, NonPrimeError, WordError, builtin_group
from .line import DEFAULT_SEED, _jsonable
from .walk import WalkConfig, run_ensemble

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2
EXIT_USAGE = 64
EXIT_WORD = 65
EXIT_GROUP = 66
EXIT_PRIME = 67


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class ExperimentConfig:
    command: str
    sub: str | None
    group: str | None
    point: str | None
    params: dict
    out: str | None = None
    format: str = "json"
    workers: int = field(default=1, compare=False)

    def to_dict(self) -> dict:
        # workers is left out: reports must not depend on it
        return {
            "command": self.command,
            "sub": self.sub,
            "group": self.group,
            "point": self.point,
            "params": self.params,
            "format": self.format,
        }


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _common(p, group=True, point=False, samples=100_000):
    if group:
        p.add_argument("--group", required=True, help="bs12, zline or lamplighter:p")
    if point:
        p.add_argument("--point", default="", help="word such as 'a^-5 b' or literal '(c; lam)' (default identity)")
    p.add_argument("--samples", type=int, default=samples, help=f"walks per estimate (default {samples})")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"base seed (default {DEFAULT_SEED})")
    p.add_argument("--workers", type=int, default=1, help="data-parallel width; does not change results")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="report path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="affine-harmonic", description=__doc__.splitlines()[0])
    sp = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sp.add_parser("walk", help="ensemble statistic of sigma_r-stopped walks")
    _common(p, point=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--statistic", default="stop_time",
                   choices=("stop_time", "exit_right", "small_c", "stopped"))
    p.add_argument("--threshold", type=float, default=H.THRESHOLD)

    p = sp.add_parser("f-estimate", help="Monte Carlo value of f_r at a point")
    _common(p, point=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--threshold", type=float, default=H.THRESHOLD)

    p = sp.add_parser("residual", help="harmonicity residual f(x) - sum mu(s) f(xs)")
    _common(p, point=True)
    p.add_argument("--r", type=float, default=64)
    p.add_argument("--oracle", choices=("fhat", "rho", "constant"), default="fhat")
    p.add_argument("--threshold", type=float, default=H.THRESHOLD)

    p = sp.add_parser("seminorm", help="max over word balls of |f| / R^k")
    _common(p, samples=2000)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--radii", type=_ints, default=(4, 6, 8))
    p.add_argument("--r", type=float, default=64)
    p.add_argument("--oracle", choices=("fhat", "rho", "constant"), default="fhat")

    p = sp.add_parser("lemma", help="random walk on the line checks")
    p.add_argument("sub", choices=tuple(L.LEMMAS))
    _common(p, group=False)
    p.add_argument("--dist", default="unit", help="unit, uniform:k or symgeom:q")
    p.add_argument("--r", type=_floats, default=())
    p.add_argument("--y", type=int, default=0)
    p.add_argument("--m", type=_ints, default=())
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--n", type=_ints, default=())
    p.add_argument("--z", type=_floats, default=())

    p = sp.add_parser("hitting", help="hitting measure of a finite-index subgroup")
    p.add_argument("sub", choices=("exact", "mc", "stats"))
    _common(p)
    p.add_argument("--labeling", required=True, help="parity, trivial or lam-mod:m")
    p.add_argument("--budget", type=int, default=20_000, help="state budget of the exact solver")
    p.add_argument("--max-steps", type=int, default=100_000)

    p = sp.add_parser("orbit", help="rank of the evaluation matrix along y_n = x^{Nn} z x^{-Nn}")
    _common(p)
    p.add_argument("--nmax", type=int, default=3)
    p.add_argument("--jmax", type=int, default=12)
    p.add_argument("--r", type=float, default=64)

    p = sp.add_parser("extend", help="harmonic extension E_x[f(X_tau_H)] from a subgroup")
    _common(p, point=True)
    p.add_argument("--labeling", required=True)
    p.add_argument("--function", default="constant:1", help="constant:v, rho or c (the real coordinate)")
    p.add_argument("--max-steps", type=int, default=100_000)

    p = sp.add_parser("check", help="decay, growth and stabilization diagnostics for f_r")
    p.add_argument("sub", choices=("drift", "small-c", "conditional", "growth", "stabilize"))
    _common(p, point=True)
    p.add_argument("--r", type=_floats, default=None, help="radius or comma-separated sweep")
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--jmax", type=int, default=8)
    return top


def parse_cli(argv) -> ExperimentConfig:
    """Validated configuration; raises UsageError, WordError or GroupSpecError."""
    ns = build_parser().parse_args(argv)
    d = vars(ns).copy()
    command = d.pop("command")
    sub = d.pop("sub", None)
    group = d.pop("group", None)
    point = d.pop("point", None)
    out = d.pop("out")
    fmt = d.pop("format")
    workers = d.pop("workers")
    if d.get("samples", 1) < 1:
        raise UsageError("--samples must be >= 1")
    if workers < 1:
        raise UsageError("--workers must be >= 1")
    if group is not None:
        g = builtin_group(group)
        if point:
            g.parse_point(point)
    if command == "lemma":
        L.StepDistribution.parse(d["dist"])
    params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(d.items())}
    return ExperimentConfig(command, sub, group, point, params, out, fmt, workers)


# ---------------------------------------------------------------------------
# dispatch


def _point(g, text):
    return g.parse_point(text) if text else g.identity()


def _oracle(name, g, p, workers):
    if name == "rho":
        return H.RhoOracle()
    if name == "constant":
        return H.ConstantOracle(1)
    return H.FHatOracle(g, p["r"], p["samples"], p["seed"], p.get("threshold", H.THRESHOLD), workers)


def _subgroup_function(text, place):
    t = text.strip().lower()
    if t.startswith("constant:"):
        return H.ConstantOracle(t.split(":", 1)[1])
    if t == "rho":
        return H.RhoOracle()
    if t == "c":
        return lambda x: H.Evaluation(x.c.value, 0.0, True)
    raise UsageError(f"unknown subgroup function {text!r}")


def _run(cfg: ExperimentConfig):
    """(report dict, passed or None, csv rows or None)."""
    p = cfg.params
    w = cfg.workers
    c = cfg.command
    g = builtin_group(cfg.group) if cfg.group else None
    if c == "walk":
        x = _point(g, cfg.point)
        wc = WalkConfig(g, x, p["seed"], r=p["r"])
        rep = run_ensemble(wc, p["samples"], p["statistic"], workers=w, threshold=p["threshold"])
        out = rep.to_dict()
        out["walk"] = wc.describe()
        return out, None, None
    if c == "f-estimate":
        est = H.estimate_f(g, _point(g, cfg.point), p["r"], p["threshold"], p["samples"], p["seed"], w)
        return est.to_dict(), None, None
    if c == "residual":
        rr = H.harmonicity_residual(g, _oracle(p["oracle"], g, p, w), _point(g, cfg.point))
        return rr.to_dict(), rr.passed, None
    if c == "seminorm":
        oracle = _oracle(p["oracle"], g, p, w)
        prof = H.seminorm_profile(g, oracle, p["k"], p["radii"],
                                  use_reflection=p["oracle"] == "fhat" and H.reflection_invariant(g))
        rows = [s.to_dict() for s in prof]
        return {"k": p["k"], "profile": rows}, None, rows
    if c == "lemma":
        lc = L.LineLemmaConfig(L.StepDistribution.parse(p["dist"]), tuple(p["r"]), p["y"], tuple(p["m"]),
                               p["q"], tuple(p["n"]), tuple(p["z"]), p["samples"], p["seed"], w)
        v = L.LEMMAS[cfg.sub](lc)
        return v.to_dict(), v.passed, None
    if c == "hitting":
        lab = HT.parse_labeling(p["labeling"], g)
        if cfg.sub == "exact":
            hm = HT.hitting_measure_exact(g, lab, p["budget"])
            rows = [{"element": r["element"], "p": r["p"]} for r in hm.to_dict()["support"]]
            return hm.to_dict(), None, rows
        if cfg.sub == "mc":
            hm = HT.hitting_measure_mc(g, lab, p["samples"], p["seed"], p["max_steps"], workers=w)
            d = hm.to_dict()
            return d, bool(d["smooth"]), d["support"]
        st = HT.hitting_time_stats(g, lab, p["samples"], p["seed"], p["max_steps"], w)
        return st, st["passed"], None
    if c == "orbit":
        rep = H.orbit_independence(g, p["nmax"], p["jmax"], p["r"], p["samples"], p["seed"], w)
        return rep.to_dict(), rep.passed, None
    if c == "extend":
        lab = HT.parse_labeling(p["labeling"], g)
        est = H.extend_harmonic(g, lab, _subgroup_function(p["function"], g.place), _point(g, cfg.point),
                                p["samples"], p["seed"], p["max_steps"])
        return est.to_dict(), None, None
    if c == "check":
        x = _point(g, cfg.point)
        radii = p["r"]
        if cfg.sub == "drift":
            rep = H.c_drift_check(g, x, radii or (16, 32, 64), p["samples"], p["seed"], workers=w)
        elif cfg.sub == "small-c":
            rep = H.small_c_decay(g, x, radii or (16, 32, 64), p["samples"], p["seed"], workers=w)
        elif cfg.sub == "conditional":
            r = radii[0] if radii else 64
            rep = H.conditional_small_c_check(g, x, r, p["q"], p["samples"], p["seed"], workers=w)
        elif cfg.sub == "growth":
            r = radii[0] if radii else 128
            rep = H.growth_check(g, tuple(range(1, p["jmax"] + 1)), r, p["samples"], p["seed"], w)
        else:
            d = H.stabilization_report(g, x, radii or H.RADII, p["samples"], p["seed"], w)
            return d, None, None
        return rep.to_dict(), rep.passed, None
    raise UsageError(f"unknown command {c!r}")


def _flat_rows(d: dict) -> list[dict]:
    rows = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k in sorted(v):
                walk(f"{prefix}.{k}" if prefix else k, v[k])
        elif isinstance(v, list) and v and isinstance(v[0], (dict, list)):
            for i, item in enumerate(v):
                walk(f"{prefix}[{i}]", item)
        else:
            rows.append({"key": prefix, "value": json.dumps(v, default=_jsonable)})

    walk("", d)
    return rows


def render(cfg: ExperimentConfig, report: dict, passed, rows) -> str:
    body = {"config": cfg.to_dict(), "report": report, "passed": passed}
    if cfg.format == "json":
        return json.dumps(body, sort_keys=True, indent=2, default=_jsonable) + "\n"
    rows = rows if rows else _flat_rows(body)
    buf = io.StringIO()
    keys = list(rows[0]) if rows else ["key", "value"]
    wr = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
    wr.writeheader()
    for r in rows:
        wr.writerow({k: (json.dumps(v, default=_jsonable) if isinstance(v, (list, dict)) else v)
                     for k, v in r.items()})
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig) -> tuple[int, str]:
    """Exit code and report text; the report is also written to ``cfg.out`` when set."""
    report, passed, rows = _run(cfg)
    text = render(cfg, report, passed, rows)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    return (EXIT_FAIL if passed is False else EXIT_PASS), text


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_cli(argv)
    except NonPrimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRIME
    except GroupSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GROUP
    except WordError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WORD
    except (UsageError, L.LineError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        code, text = run_experiment(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"error in {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not cfg.out:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

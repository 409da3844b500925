"""Command-line front end.

Every command writes its table to ``--out`` (or stdout) as CSV or JSON; with
``--out`` a ``<out>.provenance.json`` sidecar records the full configuration,
which ``--from-provenance`` replays.

Exit codes: 0 success, 1 ``mc-verify`` policy breach, 2 invalid arguments or
violated preconditions, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
from importlib import metadata

import numpy as np
import scipy

from . import coverage as cov
from . import honest
from . import simulate as sim
from .estimators import PROTECTED, RegressionDesign, ThresholdSchedule, prob_nonzero

SEED_ENV = "SPARSECI_SEED"
DEFAULT_SEED = 20090101


class PreconditionError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(t)) for t in text.split(",") if t.strip()]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_table(rows: list[dict], fmt: str, fh) -> None:
    if fmt == "json":
        json.dump([{k: _jsonable(v) for k, v in r.items()} for r in rows], fh, indent=2)
        fh.write("\n")
        return
    if not rows:
        return
    w = csv.writer(fh, lineterminator="\n")
    header = list(rows[0])
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

def _add_eta(p):
    p.add_argument("--n", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--eta", type=float)
    g.add_argument("--schedule", help="threshold rule 'c*n^-p'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparseci", description=__doc__.splitlines()[0])
    parser.add_argument("--from-provenance", metavar="FILE",
                        help="replay the run recorded in a provenance sidecar")
    sub = parser.add_subparsers(dest="command")

    def command(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        return p

    p = command("coverage-curve", "exact coverage p_n(theta) over a theta grid")
    _add_eta(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--grid-size", type=int, default=2001)

    p = command("infimal", "closed-form infimal coverage of [theta_hat - a, theta_hat + b]")
    _add_eta(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)

    p = command("honest-solve", "symmetric honest half-length")
    _add_eta(p)
    p.add_argument("--delta", type=float, required=True)

    p = command("naive-vs-honest", "coverage curves of the naive and the honest interval")
    _add_eta(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--grid-size", type=int, default=2001)

    p = command("oracle-width", "infeasible oracle half-length c_n(theta)")
    _add_eta(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--theta", type=_floats, default=None, help="comma-separated theta values")
    p.add_argument("--max", action="store_true", help="report sup over theta instead")

    p = command("theorem1", "honest intervals along theta_n = gamma / v_n")
    p.add_argument("--schedule", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--t", type=float, default=5.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--n-list", type=_ints, default=list(sim.DESK_N_LIST))
    p.add_argument("--rate", choices=(sim.SQRT_N, sim.CUSTOM), default=sim.SQRT_N)
    p.add_argument("--rate-c", type=float, default=1.0)
    p.add_argument("--rate-q", type=float, default=0.375)

    p = command("uniform-rate", "sup_theta P(sqrt(n)|theta_hat - theta| > M)")
    p.add_argument("--schedule", required=True)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--n-list", type=_ints, default=list(sim.DESK_N_LIST))
    p.add_argument("--grid-size", type=int, default=2001)

    p = command("regression-demo", "partially sparse post-BIC regression along local alternatives")
    p.add_argument("--Q", type=_floats, default=[1.0, 0.5, 0.5, 1.0], help="row-major k*k entries")
    p.add_argument("--k-beta", type=int, default=1)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--alpha", type=_floats, default=[0.0])
    p.add_argument("--gamma", type=_floats, default=[4.0])
    p.add_argument("--A", type=_floats, default=None, help="row-major q*k entries; default identity")
    p.add_argument("--halfwidths", type=_floats, default=None,
                   help="sqrt(n)-scaled box half-widths, one per row of A")
    p.add_argument("--n-list", type=_ints, default=list(sim.DESK_N_LIST))
    p.add_argument("--mode", choices=("protected", "all", "full"), default=PROTECTED)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)

    p = command("mc-verify", "closed forms against Monte Carlo on random configurations")
    p.add_argument("--configs", type=int, default=50)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--n-se", type=float, default=4.0)
    p.add_argument("--min-pass", type=float, default=0.99)
    return parser


def _eta(args) -> float:
    if args.eta is not None:
        return args.eta
    try:
        return ThresholdSchedule.parse(args.schedule).eta(args.n)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise PreconditionError(message)


def _check_common(args, eta=None):
    if hasattr(args, "n") and args.n is not None:
        _require(args.n >= 1, "n must be >= 1")
    if eta is not None:
        _require(math.isfinite(eta) and eta > 0, "eta must be positive")
    if getattr(args, "delta", None) is not None:
        _require(0 < args.delta < 1, "delta must lie in (0, 1)")
    if getattr(args, "reps", None) is not None:
        _require(args.reps >= 1, "reps must be >= 1")
    if getattr(args, "workers", None) is not None:
        _require(args.workers >= 1, "workers must be >= 1")
    for name in ("a", "b"):
        if getattr(args, name, None) is not None:
            _require(args.__dict__[name] >= 0, f"{name} must be nonnegative")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_coverage_curve(args):
    eta = _eta(args)
    _check_common(args, eta)
    curve = cov.coverage_curve(args.n, eta, cov.BoxInterval(args.a, args.b), args.grid_size)
    return [{"theta": t, "coverage": v, "branch_id": f"{curve.regime}:{br}"}
            for t, v, br in zip(curve.theta_grid, curve.values, curve.branch_ids)]


def cmd_infimal(args):
    eta = _eta(args)
    _check_common(args, eta)
    box = cov.BoxInterval(args.a, args.b)
    left, right = cov.jump_limits(args.n, eta, box)
    return [{"n": args.n, "eta": eta, "a": args.a, "b": args.b,
             "regime": cov.regime_of(eta, args.a, args.b),
             "infimal_coverage": cov.infimal_coverage(args.n, eta, box),
             "left_limit": left, "right_limit": right,
             "attained": cov.infimum_attained(args.n, eta, box)}]


def cmd_honest_solve(args):
    eta = _eta(args)
    _check_common(args, eta)
    sol = honest.solve_honest_halfwidth(args.n, eta, args.delta)
    return [dict(sol.__dict__)]


def cmd_naive_vs_honest(args):
    eta = _eta(args)
    _check_common(args, eta)
    sol = honest.solve_honest_halfwidth(args.n, eta, args.delta)
    box = cov.BoxInterval.symmetric(sol.a_n)
    grid = np.unique(np.concatenate([cov.naive_theta_grid(args.n, eta, args.delta, args.grid_size),
                                     cov.breakpoints(eta, sol.a_n, sol.a_n)]))
    return [{"theta": t,
             "naive_coverage": cov.naive_coverage_at(t, args.n, eta, args.delta),
             "honest_coverage": cov.coverage_at(t, args.n, eta, box),
             "honest_a_n": sol.a_n,
             "naive_halfwidth": cov.naive_halfwidth(args.n, args.delta)} for t in grid]


def cmd_oracle_width(args):
    eta = _eta(args)
    _check_common(args, eta)
    n, delta = args.n, args.delta
    if args.max:
        c, theta = honest.max_oracle_halfwidth(n, eta, delta)
        a_n = honest.solve_honest_halfwidth(n, eta, delta).a_n
        return [{"theta": theta, "halfwidth": c, "honest_a_n": a_n}]
    thetas = args.theta if args.theta is not None else list(np.linspace(-2 * eta, 2 * eta, 21))
    rows = []
    for t in thetas:
        c = honest.oracle_halfwidth(t, n, eta, delta)
        rows.append({"theta": t, "halfwidth": c,
                     "coverage": cov.coverage_at(t, n, eta, cov.BoxInterval.symmetric(c)),
                     "overshoot": honest.oracle_overshoot(t, n, eta, delta)})
    return rows


def _schedule(text):
    try:
        return ThresholdSchedule.parse(text)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None


def _plan(gamma, n_list, **kw):
    try:
        return sim.MovingParameterPlan(gamma, n_list, **kw)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None


def cmd_theorem1(args):
    _check_common(args)
    plan = _plan([args.gamma], args.n_list, rate=args.rate, rate_c=args.rate_c,
                 rate_q=args.rate_q if args.rate == sim.CUSTOM else 0.5)
    return sim.demo_theorem1(plan, _schedule(args.schedule), args.delta, args.t)


def cmd_uniform_rate(args):
    _require(args.M >= 0, "M must be nonnegative")
    return sim.demo_uniform_rate(args.M, _schedule(args.schedule), args.n_list, size=args.grid_size)


def cmd_regression_demo(args):
    _check_common(args)
    k = math.isqrt(len(args.Q))
    _require(k * k == len(args.Q), "Q needs k*k entries")
    try:
        design = RegressionDesign(np.reshape(args.Q, (k, k)), args.k_beta, args.n_list[0], args.sigma)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None
    A = np.eye(k) if args.A is None else np.reshape(args.A, (-1, k))
    half = args.halfwidths if args.halfwidths is not None else [2.0] * A.shape[0]
    _require(len(half) == A.shape[0], "need one half-width per row of A")
    try:
        results = sim.demo_partial_sparsity(design, args.alpha, _plan(args.gamma, args.n_list), A,
                                            half, args.reps, args.seed, workers=args.workers,
                                            mode=args.mode)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None
    return [r.row() for r in results]


def mc_verify_rows(configs: int, reps: int, seed: int, workers: int = 1, n_se: float = 4.0) -> list[dict]:
    """Random closed-form-vs-Monte-Carlo checks; substream i belongs to check i."""
    rng = np.random.Generator(np.random.Philox(key=sim.substream_key(seed, 1 << 32)))
    rows = []
    sid = 0
    for _ in range(configs):
        n = int(round(10 ** rng.uniform(0, 4.5)))
        eta = float(10 ** rng.uniform(-0.5, 0.5)) / math.sqrt(n) * float(rng.choice([1, 4]))
        a, b = (float(x) for x in rng.uniform(0, 2.0 * eta, 2))
        theta = float(rng.uniform(-(a + eta) * 1.5, (b + eta) * 1.5))
        delta = float(rng.uniform(0.5, 0.99))
        M = float(rng.uniform(0.0, 3.0))
        box = cov.BoxInterval(a, b)
        h = cov.naive_halfwidth(n, delta)
        model = sim.LocationModel(n)
        checks = [
            ("coverage", cov.coverage_at(theta, n, eta, box), sim.coverage_event(n, eta, box, theta)),
            ("naive", cov.naive_coverage_at(theta, n, eta, delta), _naive_event(n, eta, h, theta)),
            ("rate", sim.prob_rate_exceeds(theta, n, eta, M), _rate_event(n, eta, M, theta)),
            ("nonzero", prob_nonzero(theta, n, eta), lambda y, eta=eta: np.abs(y) > eta),
        ]
        for name, closed, event in checks:
            est = sim.mc_probability(event, model, theta, reps, seed, sid, workers)
            z = est.z_score(closed)
            rows.append({"check": name, "substream": sid, "n": n, "eta": eta, "a": a, "b": b,
                         "theta": theta, "delta": delta, "M": M, "closed_form": closed,
                         "p_hat": est.p_hat, "std_err": est.std_err, "z": z,
                         "pass": abs(z) <= n_se})
            sid += 1
    return rows


def _naive_event(n, eta, h, theta):
    def event(y):
        zero = np.abs(y) <= eta
        return np.where(zero, theta == 0.0, np.abs(y - theta) <= h)
    return event


def _rate_event(n, eta, M, theta):
    rn = math.sqrt(n)

    def event(y):
        est = np.where(np.abs(y) > eta, y, 0.0)
        return rn * np.abs(est - theta) > M
    return event


def cmd_mc_verify(args):
    _check_common(args)
    _require(args.configs >= 1, "configs must be >= 1")
    return mc_verify_rows(args.configs, args.reps, args.seed, args.workers, args.n_se)


HANDLERS = {
    "coverage-curve": cmd_coverage_curve, "infimal": cmd_infimal, "honest-solve": cmd_honest_solve,
    "naive-vs-honest": cmd_naive_vs_honest, "oracle-width": cmd_oracle_width,
    "theorem1": cmd_theorem1, "uniform-rate": cmd_uniform_rate,
    "regression-demo": cmd_regression_demo, "mc-verify": cmd_mc_verify,
}


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"sparseci": pkg, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("from_provenance",)}


def dispatch(args) -> int:
    if getattr(args, "seed", "absent") is None:
        args.seed = int(os.environ.get(SEED_ENV, DEFAULT_SEED))
    try:
        rows = HANDLERS[args.command](args)
    except PreconditionError as exc:
        print(f"sparseci: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"sparseci: numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"sparseci: error: {exc}", file=sys.stderr)
        return 2
    buf = io.StringIO()
    write_table(rows, args.format, buf)
    if args.out is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
        prov = {"command": args.command, "config": _config(args),
                "seed": getattr(args, "seed", None), "versions": _versions()}
        with open(args.out + ".provenance.json", "w") as fh:
            json.dump(prov, fh, indent=2, default=_jsonable)
            fh.write("\n")
    if args.command == "mc-verify":
        passed = sum(bool(r["pass"]) for r in rows)
        if passed < args.min_pass * len(rows):
            print(f"sparseci: mc-verify: {passed}/{len(rows)} checks within {args.n_se} SE",
                  file=sys.stderr)
            return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.from_provenance:
        with open(args.from_provenance) as fh:
            prov = json.load(fh)
        args = argparse.Namespace(**prov["config"])
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())

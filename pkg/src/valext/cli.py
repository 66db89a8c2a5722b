"""Seeded experiment harness.

Every subcommand produces a list of records. Each record carries the seed,
the tolerance it was judged against, a residual and a ``passed`` flag. The
process exits 0 when every record passed, 1 when some record failed and 2 on
configuration errors.

Report columns by subcommand (CSV header order; JSON objects mirror them):

  decompose    n, p, dim_Y, dim_Z, dim_A, kernel_dim, seed, tolerance, residual, passed
  lift         n, k, trial, hyperplanes, seed, tolerance, residual, passed
  extend       n, k, N, trial, kind, seed, tolerance, residual, passed
  cohomology   kind, n, N, p, trial, dimension_count, rank_d1, expected_rank,
               image_distance, solve_failed, seed, tolerance, residual, passed
  cosine       seed, n, k, N, basis_count, rank, sigma_min, trial, tolerance, residual, passed
  crofton      experiment, estimate, stderr, expected, samples, seed, tolerance,
               residual, passed [, wall_time_ms with --timing]
  nonparallel  source, samples, ok, s, t, worst_value, seed, tolerance, residual, passed
"""
import argparse
import csv
import io as _stdio
import json
import math
import sys
import time

import numpy as np

from . import crofton as cr
from .arrangements import (is_minimally_intersecting, random_general_position_hyperplanes,
                           random_minimally_intersecting)
from .doubleforms import (SymmetricDoubleForm, basis_A, basis_Z, dim_Y, gray_prime, project_ZA,
                          restrict_double, lift_from_hyperplanes)
from .errors import ValextError
from .exterior import ExtForm, Subspace, restrict_form
from .extension import (build_counterexample, coboundary, extend_forms, extend_general_position,
                        family_from_global, random_cocycle, solve_coboundary)
from .grassmann import TangentField, evaluation_rank, perfectly_nonparallel_check, sample_grassmannian
from .io import arrangement_from_json, cocycle_from_json, family_from_json, lift_problem_from_json, load
from .rng import default_shards, stream

COLUMNS = {
    "decompose": ["n", "p", "dim_Y", "dim_Z", "dim_A", "kernel_dim"],
    "lift": ["n", "k", "trial", "hyperplanes"],
    "extend": ["n", "k", "N", "trial", "kind"],
    "cohomology": ["kind", "n", "N", "p", "trial", "dimension_count", "rank_d1", "expected_rank",
                   "image_distance", "solve_failed"],
    "cosine": ["seed", "n", "k", "N", "basis_count", "rank", "sigma_min", "trial"],
    "crofton": ["experiment", "estimate", "stderr", "expected", "samples"],
    "nonparallel": ["source", "samples", "ok", "s", "t", "worst_value"],
}
TRAILER = ["seed", "tolerance", "residual", "passed"]


class ConfigError(Exception):
    """Invalid experiment configuration (exit code 2)."""


def _ints(text):
    try:
        return [int(x) for x in str(text).split(",") if x != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _record(seed, tol, residual, passed, **fields):
    return dict(fields, seed=seed, tolerance=tol, residual=float(residual), passed=bool(passed))


# ------------------------------------------------------------ subcommands

def run_decompose(args):
    ns = args.n or [1, 2, 3, 4, 5, 6]
    ps = args.p or [1, 2, 3]
    tol = args.tol if args.tol is not None else 1e-10
    rows = []
    for n in ns:
        for p in ps:
            if p > n:
                continue
            rng = stream(args.seed, "decompose", n * 16 + p)
            Z, A = basis_Z(n, p), basis_A(n, p)
            m = math.comb(n, p)
            M = rng.standard_normal((m, m))
            Q = SymmetricDoubleForm.from_matrix(n, p, M + M.T)
            z, a = project_ZA(Q)
            resid = (z + a - Q).norm() / Q.norm()
            kernel = sum(1 for x in A if gray_prime(x).norm() < 1e-9)
            dy = dim_Y(n, p)
            ok = len(Z) + len(A) == dy and resid < tol and kernel == len(A)
            rows.append(_record(args.seed, tol, resid, ok, n=n, p=p, dim_Y=dy, dim_Z=len(Z),
                                dim_A=len(A), kernel_dim=kernel))
    return rows


def _hidden_A(n, k, rng):
    basis = basis_A(n, k)
    coef = rng.standard_normal(len(basis))
    Q = basis[0] * coef[0]
    for c, b in zip(coef[1:], basis[1:]):
        Q = Q + b * c
    return Q


def run_lift(args):
    tol = args.tol if args.tol is not None else 1e-8
    rows = []
    if args.problem:
        samples = lift_problem_from_json(load(args.problem))
        Q = lift_from_hyperplanes(samples)
        worst = max((restrict_double(Q, H) - QH).norm() for H, QH in samples)
        return [_record(args.seed, tol, worst, worst <= tol, n=Q.n, k=Q.p, trial=0,
                        hyperplanes=len(samples))]
    n, k = (args.n or [4])[0], args.k
    if not 1 <= k <= n - 2:
        raise ConfigError("lift needs 1 <= k <= n-2")
    count = args.hyperplanes or 3 * dim_Y(n, k)
    for trial in range(args.trials):
        rng = stream(args.seed, "lift", trial)
        Q = _hidden_A(n, k, rng)
        hyps = [Subspace(rng.standard_normal((n, n - 1))) for _ in range(count)]
        try:
            got = lift_from_hyperplanes([(H, restrict_double(Q, H)) for H in hyps])
            err = (got - Q).norm() / Q.norm()
        except ValextError:
            err = math.inf
        rows.append(_record(args.seed, tol, err, err < tol, n=n, k=k, trial=trial, hyperplanes=count))
    return rows


def run_extend(args):
    tol = args.tol if args.tol is not None else 1e-10
    if args.problem:
        fam = family_from_json(load(args.problem))
        omega = extend_forms(fam)
        worst = _family_residual(fam, omega)
        return [_record(args.seed, tol, worst, worst <= tol, n=omega.n, k=fam.k,
                        N=len(fam.arrangement), trial=0, kind="problem")]
    fixed = arrangement_from_json(load(args.arrangement)) if args.arrangement else None
    n = fixed.n if fixed else (args.n or [7])[0]
    codims = args.codims or [1, 2, 2]
    k = args.k
    rows = []
    for trial in range(args.trials):
        rng = stream(args.seed, "extend", trial)
        if fixed:
            omega = ExtForm(n, k, rng.standard_normal(math.comb(n, k)))
            fam = family_from_global(fixed, omega)
            try:
                got = extend_forms(fam) if is_minimally_intersecting(fixed) \
                    else extend_general_position(fam)[0]
                resid = _family_residual(fam, got)
            except ValextError:
                resid = math.inf
            rows.append(_record(args.seed, tol, resid, resid < tol, n=n, k=k, N=len(fixed),
                                trial=trial, kind="arrangement"))
            continue
        arr = random_minimally_intersecting(n, codims, rng)
        omega = ExtForm(n, k, rng.standard_normal(math.comb(n, k)))
        fam = family_from_global(arr, omega)
        try:
            got = extend_forms(fam)
            resid = _family_residual(fam, got)
        except ValextError:
            resid = math.inf
        rows.append(_record(args.seed, tol, resid, resid < tol, n=n, k=k, N=len(arr), trial=trial,
                            kind="minimal"))
        if k <= n - 2:
            hyp = random_general_position_hyperplanes(n, k + 2, rng)
            fam = family_from_global(hyp, omega)
            try:
                got, _ = extend_general_position(fam)
                resid = _family_residual(fam, got)
            except ValextError:
                resid = math.inf
            rows.append(_record(args.seed, tol, resid, resid < tol, n=n, k=k, N=len(hyp),
                                trial=trial, kind="general-position"))
    return rows


def _family_residual(fam, omega):
    scale = fam.scale()
    return max(float(np.linalg.norm(restrict_form(omega, E).coeffs - w.coeffs)) / scale
               for E, w in zip(fam.arrangement, fam.forms) if fam.k <= E.d)


def run_cohomology(args):
    tol = args.tol if args.tol is not None else 1e-9
    p = args.p[0] if args.p else 1
    rows = []
    if args.cocycle:
        R = cocycle_from_json(load(args.cocycle))
        try:
            L = solve_coboundary(R, tol)
            resid = _coboundary_residual(R, L)
            ok = True
        except ValextError:
            resid, ok = math.inf, False
        return [_record(args.seed, tol, resid, ok, kind="input", n=R.arrangement.n,
                        N=len(R.arrangement), p=R.p, trial=0, dimension_count="", rank_d1="",
                        expected_rank="", image_distance="", solve_failed=not ok)]
    fixed = arrangement_from_json(load(args.arrangement)) if args.arrangement else None
    n = fixed.n if fixed else (args.n or [3])[0]
    N = len(fixed) if fixed else args.N
    for trial in range(args.trials):
        rng = stream(args.seed, "cohomology", trial)
        arr = fixed or random_general_position_hyperplanes(n, N, rng)
        if N == 3:
            R = random_cocycle(arr, p, rng)
        else:
            L = [ExtForm(E.d, p, rng.standard_normal(math.comb(E.d, p))) for E in arr]
            R = coboundary(arr, L)
        try:
            resid = _coboundary_residual(R, solve_coboundary(R, tol))
        except ValextError:
            resid = math.inf
        rows.append(_record(args.seed, tol, resid, resid < tol, kind="roundtrip", n=n, N=N, p=p,
                            trial=trial, dimension_count="", rank_d1="", expected_rank="",
                            image_distance="", solve_failed=False))
    if n == 3 and N >= 4 and not fixed:
        cert = build_counterexample(N, stream(args.seed, "counterexample", 0)).certificate
        ok = (cert["solve_failed"] and cert["rank_d1"] == cert["expected_rank"]
              and cert["image_distance"] >= 0.1)
        rows.append(_record(args.seed, 0.1, cert["image_distance"], ok, kind="counterexample",
                            n=3, N=N, p=1, trial=0, dimension_count=cert["dimension_count"],
                            rank_d1=cert["rank_d1"], expected_rank=cert["expected_rank"],
                            image_distance=cert["image_distance"],
                            solve_failed=cert["solve_failed"]))
    return rows


def _coboundary_residual(R, L):
    check = coboundary(R.arrangement, L)
    worst = 0.0
    for key in set(R.entries) | set(check.entries):
        worst = max(worst, float(np.linalg.norm(check.entry(*key).coeffs - R.entry(*key).coeffs)))
    return worst / R.scale()


def run_cosine(args):
    n = (args.n or [4])[0]
    k = args.k
    tol = args.tol if args.tol is not None else 1e-6
    rows = []
    for trial in range(args.trials):
        rng = stream(args.seed, "cosine", trial)
        pts = sample_grassmannian(n, k, args.N, rng).subspaces
        res = evaluation_rank(pts, args.basis_count, rng)
        rel = res.sigma_min / res.singular_values[0]
        rows.append(_record(args.seed, tol, rel, res.rank == args.N, n=n, k=k, N=args.N,
                            basis_count=args.basis_count, rank=res.rank, sigma_min=res.sigma_min,
                            trial=trial))
    return rows


def _shard_streams(args, tag):
    return [stream(args.seed, tag, s) for s in range(args.shards)]


def run_crofton(args):
    samples = args.samples or 100000
    exps = ["circle", "homogeneity", "perimeter", "odd", "kernel"] if args.experiment == "all" \
        else [args.experiment]
    rows = []
    for exp in exps:
        start = time.perf_counter()
        if exp == "circle":
            tol = args.tol if args.tol is not None else 0.02
            est = cr.crofton_curve_length(cr.circle_polyline(args.radius, 2000), samples,
                                          1.1 * args.radius, _shard_streams(args, "crofton-circle"))
            expected = 2 * math.pi * args.radius
            resid = abs(est.value - expected) / expected
            row = dict(estimate=est.value, stderr=est.stderr, expected=expected, samples=samples,
                       residual=resid, passed=resid < tol, tolerance=tol)
        elif exp in ("homogeneity", "perimeter"):
            gens = _shard_streams(args, "crofton-" + exp)
            unit = cr.crofton_even_estimate(cr.Segment.between([-0.5, 0], [0.5, 0]), 1, 1.0, samples,
                                            [stream(args.seed, "crofton-unit", s) for s in range(args.shards)])
            if exp == "homogeneity":
                body, expected = cr.Segment.between([-1, 0], [1, 0]), 2.0
            else:
                body, expected = cr.Ball([0.0, 0.0], 0.5), math.pi * 0.5
            est = cr.crofton_even_estimate(body, 1, 1.0, samples, gens).ratio(unit)
            tol = args.tol if args.tol is not None else 3.0
            resid = abs(est.value - expected) / est.stderr
            row = dict(estimate=est.value, stderr=est.stderr, expected=expected, samples=samples,
                       residual=resid, passed=resid <= tol, tolerance=tol)
        elif exp == "odd":
            rep = cr.crofton_odd_simplex(args.odd_n, args.j)
            tol = args.tol if args.tol is not None else 1e-10
            row = dict(estimate=rep.phi, stderr=0.0, expected="", samples=0,
                       residual=rep.moment_residual,
                       passed=rep.phi > 0 and rep.moment_residual < tol, tolerance=tol)
        elif exp == "kernel":
            x = np.linspace(-10, 10, args.grid)
            res = cr.exp_kernel_pair(np.exp(-x ** 2 / 2), x[1] - x[0])
            tol = args.tol if args.tol is not None else 1e-3
            row = dict(estimate=res.error, stderr=0.0, expected=0.0, samples=args.grid,
                       residual=res.error, passed=res.error < tol, tolerance=tol)
        else:
            raise ConfigError(f"unknown experiment {exp!r}")
        row.update(experiment=exp, seed=args.seed)
        if args.timing:
            row["wall_time_ms"] = round(1000.0 * (time.perf_counter() - start), 3)
        rows.append(row)
    return rows


def _read_field(path, periodic):
    data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    if data.shape[1] < 3 or (data.shape[1] - 1) % 2:
        raise ConfigError("tangent field CSV needs columns t, x1..xn, v1..vn")
    n = (data.shape[1] - 1) // 2
    try:
        return TangentField(data[:, 1:1 + n], data[:, 1 + n:], periodic)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def run_nonparallel(args):
    tol = args.tol if args.tol is not None else 1e-6
    if args.field:
        field, source = _read_field(args.field, args.periodic), args.field
    else:
        t = 2 * math.pi * np.arange(args.grid) / args.grid
        if args.curve == "circle":
            x = np.column_stack([np.cos(t), np.sin(t)])
            v = np.column_stack([-np.sin(t), np.cos(t)])
        else:
            x = np.column_stack([np.cos(t), np.sin(t), np.cos(2 * t), np.sin(2 * t)])
            v = np.column_stack([-np.sin(t), np.cos(t), -2 * np.sin(2 * t), 2 * np.cos(2 * t)])
        field, source = TangentField.from_derivative(x, v, periodic=True), args.curve
    res = perfectly_nonparallel_check(field, tol)
    expected = {"true": True, "false": False}.get(args.expect)
    passed = True if expected is None else res.ok == expected
    s, t = res.worst_pair if res.worst_pair else ("", "")
    return [_record(args.seed, tol, res.worst_value, passed, source=source,
                    samples=field.points.shape[0], ok=res.ok, s=s, t=t, worst_value=res.worst_value)]


COMMANDS = {
    "decompose": run_decompose,
    "lift": run_lift,
    "extend": run_extend,
    "cohomology": run_cohomology,
    "cosine": run_cosine,
    "crofton": run_crofton,
    "nonparallel": run_nonparallel,
}


# ----------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed for all randomness")
    common.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
    common.add_argument("--tol", type=float, default=None, help="pass/fail tolerance")
    common.add_argument("--out", default=None, help="report path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--shards", type=int, default=None,
                        help="shard count for sampling (default: $VALEXT_SHARDS or 1)")
    common.add_argument("--config", default=None, help="JSON file whose keys override flags")
    common.add_argument("--trials", type=int, default=1)

    parser = argparse.ArgumentParser(prog="valext", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="Y/Z/A dimensions and residuals")
    p.add_argument("--n", type=_ints)
    p.add_argument("--p", type=_ints)

    p = sub.add_parser("lift", parents=[common], help="hyperplane lift round trips")
    p.add_argument("--n", type=_ints)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--hyperplanes", type=int, default=None)
    p.add_argument("--problem", default=None, help="lift problem JSON")

    p = sub.add_parser("extend", parents=[common], help="arrangement extension round trips")
    p.add_argument("--n", type=_ints)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--codims", type=_ints)
    p.add_argument("--problem", default=None, help="form family JSON")
    p.add_argument("--arrangement", default=None, help="arrangement JSON to round-trip on")

    p = sub.add_parser("cohomology", parents=[common], help="coboundary solves and counterexample")
    p.add_argument("--n", type=_ints)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--p", type=_ints)
    p.add_argument("--cocycle", default=None, help="cocycle JSON")
    p.add_argument("--arrangement", default=None, help="arrangement JSON to round-trip on")

    p = sub.add_parser("cosine", parents=[common], help="evaluation-rank sweeps")
    p.add_argument("--n", type=_ints)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--basis-count", type=int, default=50)

    p = sub.add_parser("crofton", parents=[common], help="Crofton experiments")
    p.add_argument("--experiment", default="circle",
                   choices=("circle", "homogeneity", "perimeter", "odd", "kernel", "all"))
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--odd-n", type=int, default=4)
    p.add_argument("--j", type=int, default=2)
    p.add_argument("--grid", type=int, default=2000)
    p.add_argument("--timing", action="store_true", help="add a wall_time_ms column")

    p = sub.add_parser("nonparallel", parents=[common], help="tangent-direction check")
    p.add_argument("--curve", choices=("circle", "torus4"), default="torus4")
    p.add_argument("--grid", type=int, default=400)
    p.add_argument("--field", default=None, help="CSV with columns t, x1..xn, v1..vn")
    p.add_argument("--periodic", action="store_true")
    p.add_argument("--expect", choices=("true", "false"), default=None)
    return parser


def _apply_config(args):
    if not args.config:
        return
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config") or not hasattr(args, dest):
            raise ConfigError(f"unknown config key {key!r}")
        if dest in ("n", "p", "codims") and not isinstance(value, list):
            value = [value]
        setattr(args, dest, value)


def _sort_key(row, cols):
    out = []
    for c in cols:
        v = row.get(c, "")
        out.append((0, v, "") if isinstance(v, (int, float)) and not isinstance(v, bool) else (1, 0, str(v)))
    return out


def _format(value):
    if isinstance(value, float):
        return repr(value)
    return value


def render(rows, command, fmt):
    cols = COLUMNS[command] + [c for c in TRAILER if c not in COLUMNS[command]]
    if any("wall_time_ms" in r for r in rows):
        cols.append("wall_time_ms")
    rows = sorted(rows, key=lambda r: _sort_key(r, COLUMNS[command]))
    if fmt == "json":
        clean = [{c: (None if isinstance(r.get(c), float) and not math.isfinite(r[c]) else r.get(c))
                  for c in cols} for r in rows]
        return json.dumps(clean, indent=2) + "\n"
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_format(r.get(c, "")) for c in cols])
    return buf.getvalue()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        if args.shards is None:
            args.shards = default_shards()
        if args.shards < 1:
            raise ConfigError("--shards must be positive")
        if args.trials < 1:
            raise ConfigError("--trials must be positive")
        rows = COMMANDS[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"valext: configuration error: {exc}", file=sys.stderr)
        return 2
    text = render(rows, args.command, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r["passed"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())

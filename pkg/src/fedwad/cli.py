"""Command line front end.

Subcommands
-----------
solve          W_p between two measure files -> JSON
interp         geodesic interpolant between two measure files -> measure CSV
fedwad         federated distance, both parties in-process -> JSON
serve-client   host one party's data over TCP for a remote coordinator
fedwad-remote  federated distance against two serve-client endpoints -> JSON
coreset        Wasserstein coreset of one dataset or a federation -> CSV
otdd           pairwise dataset distances over labeled CSVs -> matrix CSV
cluster        spectral clustering of a distance matrix -> JSON
bench          timing / accuracy sweep on synthetic Gaussians -> CSV
gauss-check    closed-form Gaussian self-test -> JSON report

Conventions shared by every subcommand: data goes to stdout unless --out
is given, logs go to stderr (level from the FEDWAD_LOG environment
variable, default WARNING), all randomness sits behind --seed, exit code
0 on success, 2 on usage errors, 1 on runtime errors. JSON is emitted
with sorted keys so a fixed seed yields byte-identical output; the only
non-deterministic fields are wall-clock timings (runtime_ms, time_ms).

Measure CSV: header row required, one point per row, d coordinate
columns, optional trailing `weight` column. Labeled CSV: same but the
last column is `label`. Distance matrix CSV: header c0..c{n-1}, square
numeric body. The `.fwm` extension selects the binary measure format.

Bench config files are flat `key = value` lines (# comments allowed);
list values are comma separated. Recognized keys and defaults:

    sizes   = 10, 50, 200          per-side sample counts (mu side)
    dims    = 2                    ambient dimensions
    methods = centralized, fedwad-exact, fedwad-approx
    supports = 2, 10, 100          surrogate sizes for fedwad-approx
    ratios  = 1:1, 1:3             nu side gets n * ratio points
    seeds   = 10                   seeds 0..seeds-1, one run each
    rounds  = 20                   federation rounds
    mean_gap = 20.0                distance between the planted means
    t       = 0.5                  interpolation parameter

Flags with the same names override file values.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import logging
import os
import sys
import time

import numpy as np

from .errors import FedwadError
from .measures import (
    DiscreteMeasure,
    load_labeled_csv,
    load_measure,
    measure_to_csv_text,
    new_discrete,
    new_gaussian,
    save_measure,
)
from .ot_core import cost_matrix, solve_exact, wasserstein
from .geodesics import gaussian_w2, interp_approx, interp_exact
from .protocol import (
    BoxInit,
    FedConfig,
    FixedT,
    GaussianInit,
    UniformT,
    run_fedwad,
    run_fedwad_gaussian,
    trajectory_to_csv,
)
from .netproto import run_remote_fedwad, serve_client
from .apps import (
    ClientPool,
    coreset_fit,
    coreset_fit_federated,
    label_coreset,
    otdd_distance,
    pairwise_distance_matrix,
    spectral_cluster,
)
from .apps.otdd import DistanceMatrix

log = logging.getLogger("fedwad.cli")


class UsageError(Exception):
    """Bad arguments discovered after argparse; maps to exit code 2."""


# ---------------------------------------------------------------- io helpers

def _emit(text: str, out):
    """Write data to --out or stdout. OSError propagates to exit code 1."""
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", newline="") as fh:
        fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _load_measure_arg(path) -> DiscreteMeasure:
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such measure file: {path}")
    return load_measure(path)


def _matrix_to_csv(values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    c = values.shape[0]
    w.writerow([f"c{i}" for i in range(c)])
    for row in values:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _load_matrix_csv(path):
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise UsageError("empty matrix CSV") from None
        c = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != c:
                raise UsageError(f"matrix line {lineno}: expected {c} cells")
            rows.append([float(v) for v in row])
    V = np.asarray(rows, dtype=np.float64)
    if V.shape != (c, c):
        raise UsageError(f"matrix must be square, got {V.shape}")
    return V


def _fed_config_from(args, seed: int) -> FedConfig:
    if args.t_lo is not None or args.t_hi is not None:
        if args.t_lo is None or args.t_hi is None:
            raise UsageError("--t-lo and --t-hi must be given together")
        t_policy = UniformT(lo=args.t_lo, hi=args.t_hi, seed=seed)
    else:
        t_policy = FixedT(value=args.t)
    init = BoxInit(seed=seed) if args.init == "box" else GaussianInit(seed=seed)
    return FedConfig(
        rounds=args.rounds,
        interp_mode=args.mode,
        support_size=args.support,
        t_policy=t_policy,
        xi0_policy=init,
        report_policy="every_round" if args.report == "every" else "last_round_only",
        stop_tol=args.stop_tol,
        p=args.p,
    )


def _add_fed_flags(sp):
    sp.add_argument("--rounds", type=int, default=10, help="federation rounds K")
    sp.add_argument("--support", type=int, default=10,
                    help="surrogate support size S (approx mode)")
    sp.add_argument("--mode", choices=["exact", "approx"], default="approx")
    sp.add_argument("--t", type=float, default=0.5, help="fixed interpolation parameter")
    sp.add_argument("--t-lo", type=float, default=None,
                    help="draw t uniformly from [lo, hi] instead of --t")
    sp.add_argument("--t-hi", type=float, default=None)
    sp.add_argument("--init", choices=["gaussian", "box"], default="gaussian",
                    help="initial surrogate: unit gaussian or announced-range box")
    sp.add_argument("--report", choices=["last", "every"], default="last",
                    help="when clients report their local distances")
    sp.add_argument("--stop-tol", type=float, default=None,
                    help="stop early once the round estimate moves less than this")
    sp.add_argument("--p", type=int, choices=[1, 2], default=2)
    sp.add_argument("--seed", type=int, default=0)


def _fed_result_json(res) -> str:
    return _json({
        "distance": res.distance,
        "rounds_run": res.rounds_run,
        "bytes_exchanged": res.bytes_exchanged,
        "measure_bytes": res.measure_bytes,
    })


# --------------------------------------------------------------- subcommands

def cmd_solve(args) -> int:
    mu = _load_measure_arg(args.mu)
    nu = _load_measure_arg(args.nu)
    t0 = time.perf_counter()
    plan = solve_exact(mu.weights, nu.weights, cost_matrix(mu, nu, args.p))
    runtime_ms = (time.perf_counter() - t0) * 1e3
    distance = plan.objective ** (1.0 / args.p)
    if args.plan is not None:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["i", "j", "mass"])
        for i, j in zip(*np.nonzero(plan.coupling)):
            w.writerow([int(i), int(j), repr(float(plan.coupling[i, j]))])
        with open(args.plan, "w", newline="") as fh:
            fh.write(buf.getvalue())
    _emit(_json({
        "distance": distance,
        "objective": plan.objective,
        "plan_nnz": plan.nnz,
        "runtime_ms": runtime_ms,
    }), args.out)
    return 0


def cmd_interp(args) -> int:
    mu = _load_measure_arg(args.mu)
    nu = _load_measure_arg(args.nu)
    fn = interp_exact if args.mode == "exact" else interp_approx
    xi = fn(mu, nu, args.t)
    if args.out is not None and str(args.out).endswith(".fwm"):
        save_measure(xi, args.out)
    else:
        _emit(measure_to_csv_text(xi), args.out)
    return 0


def cmd_fedwad(args) -> int:
    mu = _load_measure_arg(args.mu)
    nu = _load_measure_arg(args.nu)
    config = _fed_config_from(args, args.seed)
    res = run_fedwad(mu, nu, config)
    if args.trajectory is not None:
        with open(args.trajectory, "w", newline="") as fh:
            fh.write(trajectory_to_csv(res))
    _emit(_fed_result_json(res), args.out)
    return 0


def cmd_fedwad_remote(args) -> int:
    config = _fed_config_from(args, args.seed)
    res = run_remote_fedwad(args.mu, args.nu, config, timeout=args.timeout)
    if args.trajectory is not None:
        with open(args.trajectory, "w", newline="") as fh:
            fh.write(trajectory_to_csv(res))
    _emit(_fed_result_json(res), args.out)
    return 0


def cmd_serve_client(args) -> int:
    local = _load_measure_arg(args.data)
    log.info("serving %s on %s", args.data, args.bind)
    distance = serve_client(args.bind, local, timeout=args.timeout)
    _emit(_json({"distance": distance}), args.out)
    return 0


def cmd_coreset(args) -> int:
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    if len(args.data) == 1:
        data = _load_measure_arg(args.data[0])
        cs = coreset_fit(data, args.k, steps=args.steps,
                         learning_rate=args.lr, seed=args.seed)
    else:
        clients = tuple(_load_measure_arg(p) for p in args.data)
        pool = ClientPool(clients, subsample_size=args.subsample, seed=args.seed)
        fed = FedConfig(rounds=args.fed_rounds, interp_mode="approx",
                        support_size=args.support,
                        t_policy=FixedT(0.5), xi0_policy=BoxInit(seed=args.seed),
                        p=2)
        cs = coreset_fit_federated(pool, args.k, rounds=args.steps,
                                   clients_per_round=args.clients_per_round,
                                   learning_rate=args.lr, fed=fed,
                                   seed=args.seed)
    if args.labels is not None:
        cs = label_coreset(cs, load_labeled_csv(args.labels))
    if args.trace is not None:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["step", "objective"])
        for i, val in enumerate(cs.objective_trace):
            w.writerow([i, repr(float(val))])
        with open(args.trace, "w", newline="") as fh:
            fh.write(buf.getvalue())
    buf = io.StringIO()
    w = csv.writer(buf)
    d = cs.points.shape[1]
    if cs.labels is not None:
        w.writerow([f"x{i}" for i in range(d)] + ["label"])
        for row, lab in zip(cs.points, cs.labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])
    else:
        w.writerow([f"x{i}" for i in range(d)])
        for row in cs.points:
            w.writerow([repr(float(v)) for v in row])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_otdd(args) -> int:
    datasets = [load_labeled_csv(p) for p in args.data]
    pool = ClientPool(tuple(datasets), subsample_size=args.subsample,
                      seed=args.seed)
    diag_only = not args.full_cov
    if args.otdd_mode == "centralized":
        rng = np.random.default_rng(pool.seed)
        ds = [pool.dataset(i, rng) for i in range(len(pool))]
        c = len(ds)
        V = np.zeros((c, c))
        for i in range(c):
            for j in range(i + 1, c):
                V[i, j] = V[j, i] = otdd_distance(
                    ds[i], ds[j], mode="centralized", diag_only=diag_only)
        matrix = V
    else:
        fed = FedConfig(rounds=args.rounds, interp_mode=args.mode,
                        support_size=args.support, t_policy=FixedT(args.t),
                        xi0_policy=GaussianInit(seed=args.seed), p=2)
        matrix = pairwise_distance_matrix(pool, fed=fed,
                                          diag_only=diag_only).values
    _emit(_matrix_to_csv(matrix), args.out)
    return 0


def cmd_cluster(args) -> int:
    V = _load_matrix_csv(args.matrix)
    labels = spectral_cluster(DistanceMatrix(V), args.k, mode=args.cluster_mode,
                              seed=args.seed)
    _emit(_json({str(i): int(lab) for i, lab in enumerate(labels)}), args.out)
    return 0


# ------------------------------------------------------------------- bench

_BENCH_DEFAULTS = {
    "sizes": (10, 50, 200),
    "dims": (2,),
    "methods": ("centralized", "fedwad-exact", "fedwad-approx"),
    "supports": (2, 10, 100),
    "ratios": ("1:1", "1:3"),
    "seeds": 10,
    "rounds": 20,
    "mean_gap": 20.0,
    "t": 0.5,
}

_BENCH_INT_LISTS = {"sizes", "dims", "supports"}
_BENCH_STR_LISTS = {"methods", "ratios"}
_BENCH_INTS = {"seeds", "rounds"}
_BENCH_FLOATS = {"mean_gap", "t"}


def _parse_bench_config(path) -> dict:
    cfg = dict(_BENCH_DEFAULTS)
    if path is None:
        return cfg
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected `key = value`")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key in _BENCH_INT_LISTS:
                cfg[key] = tuple(int(v) for v in val.split(","))
            elif key in _BENCH_STR_LISTS:
                cfg[key] = tuple(v.strip() for v in val.split(","))
            elif key in _BENCH_INTS:
                cfg[key] = int(val)
            elif key in _BENCH_FLOATS:
                cfg[key] = float(val)
            else:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
    return cfg


def _parse_ratio(text: str) -> int:
    # "1:3" -> nu side holds 3x the points. Only 1:r forms are meaningful.
    parts = text.split(":")
    if len(parts) != 2 or parts[0].strip() != "1":
        raise UsageError(f"ratio must look like 1:r, got {text!r}")
    r = int(parts[1])
    if r < 1:
        raise UsageError(f"ratio multiplier must be >= 1, got {r}")
    return r


def _bench_cell(cell):
    """One (n, d, method, support, ratio, seed) measurement. Module level
    so process pools can pickle it."""
    n, d, method, support, ratio_text, seed, rounds, mean_gap, t = cell
    r = _parse_ratio(ratio_text)
    rng = np.random.default_rng([seed, n, d, r, support if support else 0])
    mean_mu = np.zeros(d)
    mean_nu = np.zeros(d)
    mean_nu[0] = mean_gap
    truth = mean_gap  # identity covariances: W2 is the mean distance
    X = rng.standard_normal((n, d)) + mean_mu
    Y = rng.standard_normal((n * r, d)) + mean_nu
    mu, nu = new_discrete(X), new_discrete(Y)
    t0 = time.perf_counter()
    if method == "centralized":
        est = wasserstein(mu, nu, 2)
    else:
        mode = "exact" if method == "fedwad-exact" else "approx"
        config = FedConfig(rounds=rounds, interp_mode=mode,
                           support_size=support or 10,
                           t_policy=FixedT(t), xi0_policy=GaussianInit(seed=seed),
                           p=2)
        est = run_fedwad(mu, nu, config).distance
    time_ms = (time.perf_counter() - t0) * 1e3
    rel_error = abs(est - truth) / truth
    return (n, d, method, support, ratio_text, time_ms, rel_error, seed)


def cmd_bench(args) -> int:
    cfg = _parse_bench_config(args.config)
    for key in _BENCH_DEFAULTS:
        flag = getattr(args, key, None)
        if flag is None:
            continue
        if key in _BENCH_INT_LISTS:
            cfg[key] = tuple(int(v) for v in flag.split(","))
        elif key in _BENCH_STR_LISTS:
            cfg[key] = tuple(v.strip() for v in flag.split(","))
        else:
            cfg[key] = flag
    cells = []
    for n in cfg["sizes"]:
        for d in cfg["dims"]:
            for method in cfg["methods"]:
                supports = cfg["supports"] if method == "fedwad-approx" else (0,)
                for S in supports:
                    for ratio in cfg["ratios"]:
                        for seed in range(cfg["seeds"]):
                            cells.append((n, d, method, S, ratio, seed,
                                          cfg["rounds"], cfg["mean_gap"],
                                          cfg["t"]))
    log.info("bench: %d cells, %d job(s)", len(cells), args.jobs)
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_bench_cell, cells))
    else:
        rows = [_bench_cell(c) for c in cells]
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4], r[7]))
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["n", "d", "method", "support", "sample_ratio", "time_ms",
                "rel_error", "seed"])
    for n, d, method, S, ratio, time_ms, rel_error, seed in rows:
        w.writerow([n, d, method, S if S else "", ratio,
                    f"{time_ms:.3f}", repr(float(rel_error)), seed])
    _emit(buf.getvalue(), args.out)
    return 0


# -------------------------------------------------------------- gauss-check

def _random_gaussian_triple(rng, d):
    """Shared-covariance triple with means kept well off a common line."""
    A = rng.standard_normal((d, d))
    cov = A @ A.T + 0.5 * np.eye(d)
    while True:
        m_mu = rng.uniform(-5, 5, size=d)
        m_nu = rng.uniform(-5, 5, size=d)
        m_xi = rng.uniform(-5, 5, size=d)
        u = m_nu - m_mu
        v = m_xi - m_mu
        nu_, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu_ < 1e-6 or nv < 1e-6:
            continue
        # reject nearly collinear placements, they are the excluded case
        sin2 = 1.0 - (float(u @ v) / (nu_ * nv)) ** 2
        if sin2 > 1e-2:
            break
    return (new_gaussian(m_mu, cov), new_gaussian(m_nu, cov),
            new_gaussian(m_xi, cov))


def cmd_gauss_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    tol = 1e-12
    worst = {"distance_recovery": 0.0, "client_interpolant_identity": 0.0,
             "residual_halving": 0.0, "excess_bound": 0.0}
    for _ in range(args.trials):
        g_mu, g_nu, g_xi = _random_gaussian_triple(rng, args.dim)
        res = run_fedwad_gaussian(g_mu, g_nu, g_xi, rounds=args.rounds)
        truth = gaussian_w2(g_mu, g_nu)
        worst["distance_recovery"] = max(
            worst["distance_recovery"], abs(res.distance - truth))
        prev = res.xi0_residual
        for rec in res.rounds:
            ident = abs(2.0 * gaussian_w2(rec.xi_mu, rec.xi_nu) - truth)
            worst["client_interpolant_identity"] = max(
                worst["client_interpolant_identity"], ident)
            if prev > 0:
                worst["residual_halving"] = max(
                    worst["residual_halving"], abs(rec.residual / prev - 0.5))
            prev = rec.residual
            excess = (gaussian_w2(g_mu, rec.xi) + gaussian_w2(rec.xi, g_nu)
                      - truth)
            bound = res.xi0_residual / (2.0 ** (rec.round - 1))
            worst["excess_bound"] = max(worst["excess_bound"], excess - bound)
    checks = {name: {"worst": val, "tol": tol, "pass": bool(val <= tol)}
              for name, val in worst.items()}
    report = {
        "trials": args.trials,
        "rounds": args.rounds,
        "dim": args.dim,
        "seed": args.seed,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks.values()),
    }
    _emit(_json(report), args.out)
    return 0


# ------------------------------------------------------------------ parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedwad",
        description="Federated Wasserstein distances over a coordinator.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="exact W_p between two measure files")
    sp.add_argument("--mu", required=True)
    sp.add_argument("--nu", required=True)
    sp.add_argument("--p", type=int, choices=[1, 2], default=2)
    sp.add_argument("--plan", default=None,
                    help="also dump the optimal plan as (i, j, mass) CSV")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("interp", help="geodesic interpolant at parameter t")
    sp.add_argument("--mu", required=True)
    sp.add_argument("--nu", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--mode", choices=["exact", "approx"], default="exact")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_interp)

    sp = sub.add_parser("fedwad", help="federated distance, both sides local")
    sp.add_argument("--mu", required=True, help="measure file for party one")
    sp.add_argument("--nu", required=True, help="measure file for party two")
    _add_fed_flags(sp)
    sp.add_argument("--trajectory", default=None,
                    help="write per-round leg distances as CSV")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_fedwad)

    sp = sub.add_parser("serve-client",
                        help="host one party's data for a remote coordinator")
    sp.add_argument("--bind", required=True, help="host:port to listen on")
    sp.add_argument("--data", required=True, help="measure file to serve")
    sp.add_argument("--timeout", type=float, default=30.0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_serve_client)

    sp = sub.add_parser("fedwad-remote",
                        help="coordinate two serve-client endpoints")
    sp.add_argument("--mu", required=True, help="host:port of party one")
    sp.add_argument("--nu", required=True, help="host:port of party two")
    _add_fed_flags(sp)
    sp.add_argument("--timeout", type=float, default=30.0)
    sp.add_argument("--trajectory", default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_fedwad_remote)

    sp = sub.add_parser("coreset", help="Wasserstein coreset of k points")
    sp.add_argument("--data", required=True, action="append",
                    help="measure file; repeat for a federated fit")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--steps", type=int, default=300,
                    help="gradient steps (or federated rounds)")
    sp.add_argument("--lr", type=float, default=1.0)
    sp.add_argument("--clients-per-round", type=int, default=None)
    sp.add_argument("--subsample", type=int, default=None,
                    help="per-round client subsample size")
    sp.add_argument("--support", type=int, default=10,
                    help="surrogate support for the inner federation")
    sp.add_argument("--fed-rounds", type=int, default=10,
                    help="rounds of the inner federation per outer step")
    sp.add_argument("--labels", default=None,
                    help="labeled CSV used to label the coreset afterwards")
    sp.add_argument("--trace", default=None,
                    help="write the objective trace as CSV")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_coreset)

    sp = sub.add_parser("otdd", help="pairwise dataset distance matrix")
    sp.add_argument("--data", required=True, action="append",
                    help="labeled CSV; repeat per client")
    sp.add_argument("--otdd-mode", choices=["centralized", "federated"],
                    default="federated")
    sp.add_argument("--rounds", type=int, default=10)
    sp.add_argument("--support", type=int, default=10)
    sp.add_argument("--mode", choices=["exact", "approx"], default="approx",
                    help="interpolation mode of the inner federation")
    sp.add_argument("--t", type=float, default=0.5)
    sp.add_argument("--subsample", type=int, default=None)
    sp.add_argument("--full-cov", action="store_true",
                    help="augment with the full covariance, not its diagonal")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_otdd)

    sp = sub.add_parser("cluster", help="spectral clustering of a matrix CSV")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--cluster-mode", choices=["affinity", "knn3", "knn5"],
                    default="affinity")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("bench", help="timing / accuracy sweep")
    sp.add_argument("--config", default=None, help="key = value config file")
    sp.add_argument("--sizes", default=None, help="override: comma list")
    sp.add_argument("--dims", default=None)
    sp.add_argument("--methods", default=None)
    sp.add_argument("--supports", default=None)
    sp.add_argument("--ratios", default=None)
    sp.add_argument("--seeds", type=int, default=None)
    sp.add_argument("--rounds", type=int, default=None)
    sp.add_argument("--mean-gap", dest="mean_gap", type=float, default=None)
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("gauss-check",
                        help="closed-form Gaussian protocol self-test")
    sp.add_argument("--trials", type=int, default=50)
    sp.add_argument("--rounds", type=int, default=20)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_gauss_check)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=os.environ.get("FEDWAD_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FedwadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line experiment runner with machine-readable reports.

Each subcommand loads a JSON config, runs one experiment kind, and
writes a JSON report (plus optional CSV) into the output directory.
Reports are deterministic for a fixed (config, seed, workers) triple:
the timestamp is the only nondeterministic field.

Exit codes: 0 completed (a "violated" verdict is data, not failure),
1 configuration error, 2 runtime/stall error, 3 underpowered,
4 acceptance failure (summarize only).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import bhp, exitstats, kernel as kernelmod
from .config import (build_domain, build_kernel, build_model, load_config,
                     resolve)
from .errors import (BhpLabError, CapabilityError, ConfigError,
                     DivergenceError, DomainError, EstimationError,
                     SamplerStallError, UnderpoweredError)
from .rng import RngStream
from .sampler import survival_prob_ball

SCHEMA = "bhplab/1"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_UNDERPOWERED = 3
EXIT_ACCEPTANCE = 4


# ===================================================================== #
# report plumbing
# ===================================================================== #

def _clean(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, float) and not np.isfinite(v):
        return {"__float__": "inf" if v > 0 else "-inf"} if not np.isnan(v) \
            else {"__float__": "nan"}
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "to_dict"):
        return _clean(v.to_dict())
    return v


def check(name: str, value, threshold, op: str, status=None) -> dict:
    if status is None:
        ok = {"<": value < threshold, "<=": value <= threshold,
              ">": value > threshold, ">=": value >= threshold,
              "==": value == threshold,
              "abs<=": abs(value) <= threshold}[op]
        status = "pass" if ok else "fail"
    return {"name": name, "value": value, "threshold": threshold,
            "op": op, "status": status}


def write_report(out_dir: str, kind: str, config: dict, results,
                 checks: list) -> str:
    config = {k: v for k, v in config.items() if k != "out"}
    payload = {
        "schema": SCHEMA,
        "kind": kind,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": _clean(config),
        "results": _clean(results),
        "checks": _clean(checks),
    }
    path = Path(out_dir) / f"{kind}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return str(path)


def _predicate(spec: dict):
    """Vectorized exit-point predicate from a JSON target spec."""
    kind = spec.get("kind", "complement")
    if kind == "complement":
        return lambda y: np.ones(len(np.atleast_2d(y)), dtype=bool)
    if kind == "norm-gt":
        c = np.asarray(spec.get("center", [0.0]), dtype=float)
        v = float(spec["value"])
        return lambda y: np.linalg.norm(np.atleast_2d(y) - c, axis=1) > v
    if kind == "norm-le":
        c = np.asarray(spec.get("center", [0.0]), dtype=float)
        v = float(spec["value"])
        return lambda y: np.linalg.norm(np.atleast_2d(y) - c, axis=1) <= v
    if kind == "coordinate-gt":
        axis = int(spec.get("axis", 0))
        v = float(spec["value"])
        return lambda y: np.atleast_2d(y)[:, axis] > v
    if kind == "coordinate-lt":
        axis = int(spec.get("axis", 0))
        v = float(spec["value"])
        return lambda y: np.atleast_2d(y)[:, axis] < v
    raise ConfigError(f"unknown target kind {kind!r}")


# ===================================================================== #
# experiment runners
# ===================================================================== #

def run_check_kernel(cfg: dict, rng: RngStream, workers: int,
                     out: str) -> list:
    J = build_kernel(cfg["kernel"])
    jt_grid = np.asarray(cfg.get("jt_grid", np.logspace(-2, 1, 13).tolist()))
    phi_grid = np.asarray(cfg.get("phi_grid",
                                  np.logspace(-3, 2, 26).tolist()))
    results = {}
    try:
        results["jt"] = kernelmod.check_jt(J, J.scale, jt_grid, rng=rng)
    except DivergenceError as exc:
        results["jt"] = {"condition": "(Jt)", "verdict": "violated",
                         "notes": f"tail integral diverged: {exc}"}
    results["phi"] = kernelmod.check_phi(
        J.scale, phi_grid,
        check_reverse=cfg.get("check_reverse_doubling", True))
    tails = {}
    for r in jt_grid:
        try:
            tails[f"{float(r):g}"] = kernelmod.tail_mass(J, np.zeros(J.dim),
                                                         float(r)).value
        except DivergenceError:
            tails[f"{float(r):g}"] = None
    results["tail_mass"] = tails

    checks = []
    expect = cfg.get("expect", {})
    jt = results["jt"]
    consts = jt.constants if hasattr(jt, "constants") else {}
    if "c4" in expect:
        checks.append(check("jt-c4", consts.get("C4", float("nan")),
                            expect["c4"],
                            "==" if expect.get("tol", 0) == 0 else "abs<=",
                            status="pass" if abs(consts.get("C4", np.inf)
                                                 - expect["c4"])
                            <= expect.get("tol", 1e-6) else "fail"))
    if "c5" in expect:
        checks.append(check("jt-c5", consts.get("C5", float("nan")),
                            expect["c5"], "abs<=",
                            status="pass" if abs(consts.get("C5", np.inf)
                                                 - expect["c5"])
                            <= expect.get("tol", 1e-6) else "fail"))
    if "jt_verdict" in expect:
        verdict = jt.verdict if hasattr(jt, "verdict") else jt["verdict"]
        checks.append(check("jt-verdict", verdict, expect["jt_verdict"], "==",
                            status="pass" if verdict == expect["jt_verdict"]
                            else "fail"))
    if "reverse_doubling_violated" in expect:
        got = results["phi"].verdict == "violated"
        checks.append(check("phi-reverse-doubling-violated", got,
                            expect["reverse_doubling_violated"], "=="))
    return [write_report(out, "check-kernel", cfg, results, checks)], checks


def run_exit_stats(cfg: dict, rng: RngStream, workers: int,
                   out: str) -> list:
    model = build_model(cfg["model"])
    D = build_domain(cfg["domain"])
    x = np.asarray(cfg.get("x", [0.0] * D.dim), dtype=float)
    n = int(cfg.get("n", 100_000))
    rho = float(cfg.get("rho", 0.5))
    results = {"mean_exit_time": exitstats.mean_exit_time(
        model, D, x, n, rng.substream(0), workers=workers, rho=rho)}
    targets = {}
    for i, tspec in enumerate(cfg.get("targets", [])):
        est = exitstats.harmonic_measure(model, D, x, _predicate(tspec), n,
                                         rng.substream(1 + i),
                                         workers=workers, rho=rho)
        targets[tspec.get("name", f"target{i}")] = est
    results["targets"] = targets

    checks = []
    for exp in cfg.get("expect", []):
        name = exp["target"]
        if name == "mean_exit_time":
            est = results["mean_exit_time"]
        else:
            est = targets[name]
        sig = float(exp.get("sigmas", 3.0))
        tol = sig * est.stderr + float(exp.get("tol", 0.0))
        checks.append(check(f"exit-stats:{name}",
                            est.value - float(exp["value"]), tol, "abs<="))
    return [write_report(out, "exit-stats", cfg, results, checks)], checks


def run_ep_check(cfg: dict, rng: RngStream, workers: int, out: str) -> list:
    model = build_model(cfg["model"])
    phi = model.kernel.scale
    r_list = [float(r) for r in cfg.get("r_list", [0.25, 1.0, 4.0])]
    t_factors = [float(t) for t in cfg.get("t_factors",
                                           [1e-3, 3e-3, 1e-2, 3e-2, 1e-1])]
    n = int(cfg.get("n", 20_000))
    n_steps = int(cfg.get("n_steps", 64))
    fallback = bool(cfg.get("sde_fallback", False))
    x0 = np.zeros(model.dim)
    rows = []
    k = 0
    for r in r_list:
        for f in t_factors:
            t = f * float(phi(r))
            est = survival_prob_ball(model, x0, r, t, n, rng.substream(k),
                                     n_steps=n_steps, sde_fallback=fallback)
            k += 1
            rows.append({"r": r, "t": t, "p": est.value,
                         "stderr": est.stderr, "n": est.n,
                         "c_hat": est.value * float(phi(r)) / t})
    c_max = max(row["c_hat"] for row in rows)
    results = {"table": rows, "c_max": c_max}

    if cfg.get("scaling_check", True):
        pairs = []
        for (r1, t1), (r2, t2) in cfg.get(
                "scaling_pairs", [[[1.0, 1.0], [2.0, 2.0 ** 1]]]):
            e1 = survival_prob_ball(model, x0, r1, t1, n, rng.substream(k),
                                    n_steps=n_steps, sde_fallback=fallback)
            e2 = survival_prob_ball(model, x0, r2, t2, n,
                                    rng.substream(k + 1),
                                    n_steps=n_steps, sde_fallback=fallback)
            k += 2
            joint = float(np.hypot(e1.stderr, e2.stderr))
            pairs.append({"p1": e1.value, "p2": e2.value,
                          "diff": e1.value - e2.value,
                          "joint_stderr": joint,
                          "within_3se": abs(e1.value - e2.value)
                          <= 3 * joint + 1e-12})
        results["scaling_pairs"] = pairs

    checks = []
    if "max_chat" in cfg:
        checks.append(check("ep-c-bound", c_max, float(cfg["max_chat"]), "<"))
    for i, pair in enumerate(results.get("scaling_pairs", [])):
        checks.append(check(f"ep-scaling-{i}", pair["diff"],
                            3 * pair["joint_stderr"] + 1e-12, "abs<="))
    return [write_report(out, "ep-check", cfg, results, checks)], checks


def _half_plane_pair(xi, r: float, axis: int):
    level = float(xi[axis])
    g1 = bhp.far_field_indicator(xi, 2.0 * r,
                                 lambda y: y[:, axis] > level)
    g2 = bhp.far_field_indicator(xi, 2.0 * r,
                                 lambda y: y[:, axis] < level)
    return g1, g2


def run_bhp_scan(cfg: dict, rng: RngStream, workers: int, out: str) -> list:
    model = build_model(cfg["model"])
    D = build_domain(cfg["domain"])
    xi = np.asarray(cfg.get("xi", [0.0] * D.dim), dtype=float)
    kappa = float(cfg.get("kappa", 1.0))
    r_series = [float(r) for r in cfg.get("r_series", [0.4, 0.2, 0.1, 0.05])]
    grid_size = int(cfg.get("grid_size", 12))
    n = int(cfg.get("n", 4096))
    cap = int(cfg.get("cap", exitstats.ESCALATION_CAP))
    axis = int(cfg.get("split_axis", D.dim - 1))
    series = bhp.bhp_scan_series(
        model, D, xi, r_series, kappa,
        lambda r: _half_plane_pair(xi, r, axis),
        grid_size, n, rng, workers=workers, cap=cap)

    for rep in series["reports"]:
        csv_path = Path(out) / f"bhp-scan-r{rep.r:g}.csv"
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "y", "h1_x", "h2_x", "h1_y", "h2_y", "ratio"])
            m = len(rep.grid)
            for i in range(m):
                for j in range(m):
                    wr.writerow([rep.grid[i].tolist(), rep.grid[j].tolist(),
                                 rep.h1[i].value, rep.h2[i].value,
                                 rep.h1[j].value, rep.h2[j].value,
                                 rep.ratio[i, j]])

    checks = [check("bhp-series-spread", series["series_spread"],
                    float(cfg.get("max_spread", 2.0)), "<")]
    results = {"r_series": series["r_series"],
               "c_hat_series": series["c_hat_series"],
               "series_spread": series["series_spread"],
               "reports": [rep.to_dict() for rep in series["reports"]]}
    return [write_report(out, "bhp-scan", cfg, results, checks)], checks


def run_factorization(cfg: dict, rng: RngStream, workers: int,
                      out: str) -> list:
    model = build_model(cfg["model"])
    D = build_domain(cfg["domain"])
    xi = np.asarray(cfg.get("xi", [0.0] * D.dim), dtype=float)
    c1 = float(cfg.get("c1", 0.5))
    c2 = float(cfg.get("c2", 1.5))
    c3 = float(cfg.get("c3", 2.0 / 3.0))
    grid_size = int(cfg.get("grid_size", 8))
    n = int(cfg.get("n", 4096))
    cap = int(cfg.get("cap", exitstats.ESCALATION_CAP))
    axis = int(cfg.get("split_axis", 0))
    radii = [float(r) for r in cfg.get("r_series", [cfg.get("r", 0.5)])]
    reports = []
    for k, r in enumerate(radii):
        g = bhp.far_field_indicator(xi, 2.0 * r,
                                    lambda y: y[:, axis] > float(xi[axis]))
        reports.append(bhp.factorization_check(
            model, D, xi, r, c1, c2, c3, g, grid_size, n, rng.substream(k),
            workers=workers, cap=cap))
    checks = []
    for rep, r in zip(reports, radii):
        checks.append(check(f"factorization-band-r{r:g}", rep["band_ratio"],
                            float(cfg.get("max_band", 10.0)), "<"))
    if len(reports) >= 2:
        change = abs(reports[1]["band_ratio"] / reports[0]["band_ratio"] - 1)
        checks.append(check("factorization-band-stability", change,
                            float(cfg.get("max_band_change", 0.5)), "<"))
    results = {"radii": radii,
               "reports": [{k: v for k, v in rep.items()} for rep in reports]}
    return [write_report(out, "factorization", cfg, results, checks)], checks


def run_box_method(cfg: dict, rng: RngStream, workers: int, out: str) -> list:
    model = build_model(cfg["model"])
    D = build_domain(cfg["domain"])
    xi = np.asarray(cfg.get("xi", [0.0] * D.dim), dtype=float)
    r = float(cfg.get("r", 1.0))
    diag = bhp.box_diagnostics(model, D, xi, r, int(cfg.get("j_max", 6)),
                               int(cfg.get("grid_size", 24)),
                               int(cfg.get("n", 8192)), rng, workers=workers)
    lam = [lay["lambda_j"] for lay in diag.layers]
    finite = [v for v in lam if np.isfinite(v)]
    checks = []
    if finite:
        checks.append(check("box-lambda-positive", min(finite), 0.0, ">"))
    return [write_report(out, "box-method", cfg, diag, checks)], checks


def run_chain_decay(cfg: dict, rng: RngStream, workers: int,
                    out: str) -> list:
    model = build_model(cfg["model"])
    D = build_domain(cfg["domain"])
    xi = np.asarray(cfg.get("xi", [0.0] * D.dim), dtype=float)
    r = float(cfg.get("r", 0.5))
    x = np.asarray(cfg.get("x", (xi + r / 2).tolist()), dtype=float)
    table = bhp.chain_decay(model, D, xi, r, x, int(cfg.get("n", 20_000)),
                            rng, m_max=int(cfg.get("m_max", 8)))
    checks = []
    if table["fit"] is not None:
        checks.append(check("chain-decay-rate", table["fit"]["rate_upper95"],
                            1.0, "<"))
    return [write_report(out, "chain-decay", cfg, table, checks)], checks


RUNNERS = {
    "check-kernel": run_check_kernel,
    "exit-stats": run_exit_stats,
    "ep-check": run_ep_check,
    "bhp-scan": run_bhp_scan,
    "factorization": run_factorization,
    "box-method": run_box_method,
    "chain-decay": run_chain_decay,
}


# ===================================================================== #
# summarize
# ===================================================================== #

def summarize(paths) -> int:
    if not paths:
        print("usage: bhp-lab summarize REPORT.json [REPORT.json ...]",
              file=sys.stderr)
        return EXIT_CONFIG
    any_fail = False
    rows = []
    for p in paths:
        try:
            with open(p) as fh:
                rep = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read report {p}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for c in rep.get("checks", []):
            rows.append((rep.get("kind", "?"), c["name"], c.get("value"),
                         c.get("op"), c.get("threshold"), c["status"]))
            if c["status"] == "fail":
                any_fail = True
    header = ("kind", "check", "value", "op", "threshold", "status")
    widths = [max(len(str(r[i])) for r in rows + [header])
              for i in range(6)] if rows else [len(h) for h in header]
    fmt = "  ".join("{:<%d}" % w for w in widths)
    print(fmt.format(*header))
    for r in rows:
        print(fmt.format(*[str(v) for v in r]))
    if not rows:
        print("(no checks found in the given reports)")
    return EXIT_ACCEPTANCE if any_fail else EXIT_OK


# ===================================================================== #
# entry point
# ===================================================================== #

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bhp-lab",
        description="Monte Carlo verification toolkit for exit laws, "
                    "harmonic functions, and boundary Harnack ratios "
                    "of jump processes")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--r-series", default=None,
                        help="comma-separated radius list override")
        sp.add_argument("--n", type=int, default=None)
    ssum = sub.add_parser("summarize")
    ssum.add_argument("paths", nargs="*")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "summarize":
        return summarize(args.paths)

    try:
        cfg = load_config(args.config)
        overrides = {"seed": args.seed, "workers": args.workers,
                     "out": args.out, "n": args.n}
        if args.r_series:
            overrides["r_series"] = [float(v)
                                     for v in args.r_series.split(",")]
        cfg = resolve(cfg, overrides)
        seed = int(cfg.get("seed", 0))
        workers = int(os.environ.get("BHPLAB_WORKERS",
                                     cfg.get("workers", 1)))
        cfg["workers"] = workers
        cfg["seed"] = seed
        out = cfg.get("out") or "."
        rng = RngStream(seed)
        paths, checks = RUNNERS[args.command](cfg, rng, workers, out)
    except (ConfigError, DomainError, CapabilityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnderpoweredError as exc:
        print(f"underpowered: {exc}", file=sys.stderr)
        return EXIT_UNDERPOWERED
    except (SamplerStallError, EstimationError, DivergenceError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except BhpLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    for p in paths:
        print(p)
    if any(c.get("status") == "underpowered" for c in checks):
        return EXIT_UNDERPOWERED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

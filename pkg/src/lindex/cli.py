"""Command-line entry point: ``lindex COMMAND [--config PATH] ...``.

Exit codes: 0 completed, 1 completed with a violated/inconsistent verdict,
2 configuration or parse error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from . import __version__
from .config import ConfigError, load_config, point, radius
from .derivatives import QuadratureError, cauchy_derivatives, log_normalized_derivatives, symbolic_derivative
from .expr import EvaluationError, ExpressionError, count_nodes, unparse
from .functions import EntireFunction, PositivityError, WeightVector
from .growth import (
    DegenerateBasePoint,
    Thm2Config,
    convexity_check,
    growth_verdict,
    r0_sensitivity,
    sheremeta_gap,
    suplinf_C,
    thm2_ratio_scan,
    thm3_rhs,
)
from .index import estimate_joint_index, local_behavior_ratio
from .modulus import log_max_modulus
from .polydisc import FactorialOverflow, GridSpec, SampleCapExceeded, multi_indices, polydisc_samples
from .quadrature import IntegrationError
from .weights import KN_GRID, LAMBDA_GRID, Thresholds, kn_scan, qn_scan

COMMANDS = ("parse", "eval", "deriv", "index", "classify", "growth", "verdict", "gap", "convexity", "sweep")
CSV_COLUMNS = ("ray_id", "r", "ln_M", "thm2_bound", "thm3_rhs", "ratio", "C_estimate")
FIXED_CLOCK = "1970-01-01T00:00:00+00:00"
NUMERICAL_ERRORS = (
    PositivityError,
    EvaluationError,
    QuadratureError,
    IntegrationError,
    DegenerateBasePoint,
    SampleCapExceeded,
    FactorialOverflow,
    ZeroDivisionError,
    FloatingPointError,
    OverflowError,
    ArithmeticError,
)


def _complex_text(z: complex) -> str:
    return repr(complex(z)).strip("()")


def jsonable(x):
    """Plain JSON types; complex numbers become strings, non-finite floats too."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (complex, np.complexfloating)):
        return _complex_text(x)
    return x


@dataclass
class Context:
    cfg: dict
    n: int
    grid: GridSpec
    threads: int

    @property
    def F(self) -> EntireFunction:
        return EntireFunction.parse(self.cfg["problem"]["function"], self.n)

    @property
    def L(self) -> WeightVector:
        return WeightVector.parse(self.cfg["problem"]["weights"])

    def thm2(self) -> Thm2Config:
        g = self.cfg["growth"]
        return Thm2Config(
            R0=tuple(radius(g["R0"], self.n, "growth.R0", positive=True)),
            theta_resolution=g["theta_resolution"] or None,
            mode=g["mode"],
            seed=self.cfg["seed"],
            rtol=g["rtol"],
        )

    def r_seq(self) -> list[float]:
        g = self.cfg["growth"]
        return [float(r) for r in g["r_seq"]] or [2.0**k for k in range(1, g["K"] + 1)]

    def directions(self) -> list[list[float]]:
        return [
            radius(d, self.n, f"growth.directions[{i}]", positive=True)
            for i, d in enumerate(self.cfg["growth"]["directions"])
        ]

    def pivot(self):
        return self.cfg["growth"]["pivot"] or None


@dataclass
class Outcome:
    results: dict
    status: str = "ok"  # "ok" | "violated" | "inconsistent"
    csv_rows: list | None = None
    notes: list | None = None


def cmd_parse(ctx: Context) -> Outcome:
    F, L = ctx.F, ctx.L
    return Outcome(
        {
            "function": {"text": F.text, "canonical": unparse(F.ast), "nodes": count_nodes(F.ast)},
            "weights": [
                {"text": t, "canonical": unparse(c), "holomorphic": c.holomorphic}
                for t, c in zip(ctx.cfg["problem"]["weights"], L.components)
            ],
            "arity": ctx.n,
        }
    )


def cmd_eval(ctx: Context) -> Outcome:
    F, L = ctx.F, ctx.L
    raw = ctx.cfg["eval"]["points"] or [[]]
    Z = np.array([point(p, ctx.n, f"eval.points[{i}]") for i, p in enumerate(raw)])
    values = F(Z)
    logs = F.log_abs(Z)
    weights = L.values(Z)
    return Outcome(
        {
            "points": [
                {"z": z, "F": v, "ln_abs_F": lg, "L": w}
                for z, v, lg, w in zip(Z, values, logs, weights)
            ]
        }
    )


def cmd_deriv(ctx: Context) -> Outcome:
    d = ctx.cfg["deriv"]
    F, L = ctx.F, ctx.L
    z = np.array(point(d["point"], ctx.n, "deriv.point"))
    Ks = multi_indices(ctx.n, d["max_order"])
    rows = []
    cauchy = None
    if d["method"] in ("cauchy", "both"):
        cauchy = cauchy_derivatives(F, z, Ks, rtol=d["rtol"])
    lognorm = log_normalized_derivatives(F, L, z[None, :], Ks)[:, 0]
    for i, K in enumerate(Ks):
        row = {"K": K.entries, "normalized": math.exp(lognorm[i]) if np.isfinite(lognorm[i]) else 0.0}
        if d["method"] in ("symbolic", "both"):
            row["symbolic"] = complex(symbolic_derivative(F, z[None, :], K.entries)[0])
        if cauchy is not None:
            row["cauchy"] = complex(cauchy[0][i])
            row["cauchy_error"] = float(cauchy[1][i])
        rows.append(row)
    return Outcome({"point": z, "derivatives": rows, "tolerance": d["rtol"]})


def _index_grid(ctx: Context):
    s = ctx.cfg["index"]
    center = point(s["center"], ctx.n, "index.center")
    R = radius(s["radius"], ctx.n, "index.radius")
    spec = GridSpec(s["angular_resolution"], s["radial_resolution"], 0, ctx.grid.sample_cap)
    return polydisc_samples(center, R, spec), {"center": center, "radius": R}


def cmd_index(ctx: Context) -> Outcome:
    s = ctx.cfg["index"]
    F, L = ctx.F, ctx.L
    Z, box = _index_grid(ctx)
    est = estimate_joint_index(
        F, L, Z, m_max=s["m_max"], j_max=s["j_max"] or None, rtol=s["rtol"],
        method=s["method"], threads=ctx.threads,
    )
    results = {"estimate": est.as_dict(), "scanned_range": box}
    status = "ok" if est.candidate_N is not None else "violated"
    if s["local"]:
        z0 = [[t] * ctx.n for t in s["local_moduli"]]
        rep = local_behavior_ratio(
            F, L,
            radius(s["R_inner"], ctx.n, "index.R_inner", positive=True),
            radius(s["R_outer"], ctx.n, "index.R_outer", positive=True),
            z0, ctx.grid,
        )
        results["local_behavior"] = {
            "R_inner": rep.R_inner,
            "R_outer": rep.R_outer,
            "p1_estimate": rep.p1_estimate,
            "growth": rep.growth,
            "consistent": rep.consistent,
            "trace": rep.trace,
        }
        if not rep.consistent:
            status = "inconsistent"
    return Outcome(results, status)


def _verdict_dict(v) -> dict:
    return {
        "verdict": v.verdict,
        "extremal_value": v.extremal_value,
        "reason": v.reason,
        "witness": v.witness,
        "scanned_range": v.scanned_range,
        "trace": v.trace,
        "provenance": v.provenance,
    }


def cmd_classify(ctx: Context) -> Outcome:
    s = ctx.cfg["classify"]
    L = ctx.L
    th = Thresholds(blowup=s["blowup"], growth_factor=s["growth_factor"])
    results, status, notes = {}, "ok", []
    if s["class"] in ("Q", "both"):
        z0 = polydisc_samples(
            point(s["z0_center"], ctx.n, "classify.z0_center"),
            radius(s["z0_radius"], ctx.n, "classify.z0_radius"),
            GridSpec(s["z0_angular_resolution"], s["z0_radial_resolution"], 0, ctx.grid.sample_cap),
        )
        Rs = [radius(r, ctx.n, f"classify.R[{i}]", positive=True) for i, r in enumerate(s["R"])]
        results["Q"] = _verdict_dict(qn_scan(L, Rs, z0, LAMBDA_GRID, th))
    if s["class"] in ("K", "both"):
        Rs = [radius(r, ctx.n, f"classify.r_seq[{i}]", positive=True) for i, r in enumerate(s["r_seq"])]
        results["K"] = _verdict_dict(kn_scan(L, Rs, KN_GRID, th))
    for name, v in results.items():
        if v["verdict"] == "violated":
            status = "violated"
        elif v["verdict"] == "satisfied":
            notes.append(f"{name}-class verdict 'satisfied' holds only on the scanned range")
    return Outcome(results, status, notes=notes)


def _growth_rows(ctx: Context, F, L, ray_id: int, d, scan, verdict) -> tuple[list, list]:
    """Per-radius CSV rows plus the derivative-growth checks along one ray."""
    N = ctx.cfg["growth"]["N"]
    rows, checks = [], []
    for rec_s, rec_v in zip(scan.records, verdict.records):
        R = np.asarray(d) * rec_s["r"]
        theta = log_max_modulus(F, R, ctx.grid).angles
        t3 = thm3_rhs(F, L, R, theta, N, ctx.pivot(), tol=ctx.cfg["growth"]["tol"])
        checks.append({"r": rec_s["r"], "theta": theta, "lhs": t3.lhs, "rhs": t3.rhs, "holds": t3.holds})
        rows.append(
            {
                "ray_id": ray_id,
                "r": rec_s["r"],
                "ln_M": rec_s["ln_M"],
                "thm2_bound": rec_s["bound"],
                "thm3_rhs": t3.rhs,
                "ratio": rec_v["ratio"],
                "C_estimate": suplinf_C(L, [R], pivot=ctx.pivot()).C,
            }
        )
    return rows, checks


def _verdict_summary(v) -> dict:
    return {
        "verdict": v.verdict,
        "limsup": v.limsup,
        "bound": v.bound,
        "bound_kind": v.bound_kind,
        "C": v.C,
        "C_vanishing": v.C_vanishing,
        "N": v.N,
        "tail_count": v.tail_count,
        "records": v.records,
    }


def _rays(ctx: Context, with_thm3: bool) -> tuple[list, list, bool]:
    F, L = ctx.F, ctx.L
    cfg2, r_seq = ctx.thm2(), ctx.r_seq()
    rays, csv_rows, consistent = [], [], True
    for ray_id, d in enumerate(ctx.directions()):
        v = growth_verdict(F, L, d, r_seq, ctx.cfg["growth"]["N"], cfg2, ctx.grid, ctx.pivot(), ctx.cfg["growth"]["tol"])
        ray = {"ray_id": ray_id, "direction": d, "r_seq": r_seq, "growth_verdict": _verdict_summary(v)}
        consistent &= v.verdict != "inconsistent"
        if with_thm3:
            scan = thm2_ratio_scan(F, L, d, r_seq, cfg2, ctx.grid)
            rows, checks = _growth_rows(ctx, F, L, ray_id, d, scan, v)
            ray["thm2_scan"] = {"consistent": scan.consistent, "records": scan.records}
            ray["thm3_checks"] = checks
            consistent &= scan.consistent and all(c["holds"] for c in checks)
            csv_rows.extend(rows)
        else:
            for rec in v.records:
                csv_rows.append({"ray_id": ray_id, "r": rec["r"], "ln_M": rec["ln_M"], "ratio": rec["ratio"], "C_estimate": rec["C_tail"]})
        rays.append(ray)
    return rays, csv_rows, consistent


def cmd_growth(ctx: Context) -> Outcome:
    rays, rows, ok = _rays(ctx, with_thm3=True)
    return Outcome({"rays": rays, "tolerance": ctx.cfg["growth"]["tol"]}, "ok" if ok else "inconsistent", rows)


def cmd_verdict(ctx: Context) -> Outcome:
    rays, rows, ok = _rays(ctx, with_thm3=False)
    return Outcome({"rays": rays, "tolerance": ctx.cfg["growth"]["tol"]}, "ok" if ok else "inconsistent", rows)


def cmd_gap(ctx: Context) -> Outcome:
    N = ctx.cfg["gap"]["N"]
    C = Fraction(str(ctx.cfg["gap"]["C"]))
    new, old, gap = sheremeta_gap(N, C)
    return Outcome(
        {
            "N": N,
            "C": float(C),
            "new_bound": new,
            "old_bound": old,
            "gap": gap,
            "exact": {"new_bound": str(new), "old_bound": str(old), "gap": str(gap)},
            "strict_improvement": gap > 0,
        }
    )


def cmd_convexity(ctx: Context) -> Outcome:
    c = ctx.cfg["convexity"]
    rep = convexity_check(ctx.F, c["r_min"], c["r_max"], c["points"], ctx.grid)
    return Outcome(
        {
            "passes": rep.passes,
            "min_second_difference": rep.min_second_difference,
            "slack": rep.slack,
            "log_r": rep.log_r,
        },
        "ok" if rep.passes else "violated",
    )


def cmd_sweep(ctx: Context) -> Outcome:
    F, L = ctx.F, ctx.L
    out, ok = [], True
    for ray_id, d in enumerate(ctx.directions()):
        sweep = r0_sensitivity(F, L, d, ctx.r_seq(), ctx.cfg["growth"]["factors"], ctx.thm2(), ctx.grid)
        ok &= all(s["consistent"] for s in sweep)
        out.append({"ray_id": ray_id, "direction": d, "sweep": sweep})
    return Outcome({"rays": out}, "ok" if ok else "inconsistent")


HANDLERS = {
    "parse": cmd_parse,
    "eval": cmd_eval,
    "deriv": cmd_deriv,
    "index": cmd_index,
    "classify": cmd_classify,
    "growth": cmd_growth,
    "verdict": cmd_verdict,
    "gap": cmd_gap,
    "convexity": cmd_convexity,
    "sweep": cmd_sweep,
}


def run(command: str, cfg: dict, fixed_clock: bool = False) -> tuple[dict, int, list | None]:
    """Execute ``command``; returns ``(envelope, exit_code, csv_rows)``.

    Raises ``ConfigError``/``ExpressionError`` and numerical errors; ``main``
    maps them to exit codes.
    """
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    g = cfg["grid"]
    ctx = Context(
        cfg=cfg,
        n=cfg["problem"]["arity"],
        grid=GridSpec(g["angular_resolution"], g["radial_resolution"], g["refinement_depth"], g["sample_cap"]),
        threads=cfg["threads"],
    )
    started = time.perf_counter()
    stamp = FIXED_CLOCK if fixed_clock else datetime.now(timezone.utc).isoformat(timespec="seconds")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        outcome = HANDLERS[command](ctx)
    notes = sorted({str(w.message) for w in caught}) + (outcome.notes or [])
    code = 0 if outcome.status == "ok" else 1
    envelope = {
        "command": command,
        "config": cfg,
        "results": outcome.results,
        "status": outcome.status,
        "exit_code": code,
        "warnings": notes,
        "provenance": {
            "tool": "lindex",
            "version": __version__,
            "numpy": np.__version__,
            "started_at": stamp,
            "wall_time_s": 0.0 if fixed_clock else round(time.perf_counter() - started, 6),
            "seed": cfg["seed"],
        },
    }
    return jsonable(envelope), code, outcome.csv_rows


def dumps(envelope: dict) -> str:
    return json.dumps(envelope, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path: str, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, restval="", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lindex", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="TOML or JSON run configuration")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="write per-ray series (growth, verdict)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--fixed-clock", action="store_true", help="deterministic timestamps for testing")
    p.add_argument("--function", help="override problem.function")
    p.add_argument("--weights", nargs="+", help="override problem.weights")
    p.add_argument("--arity", type=int, help="override problem.arity")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    problem = {k: v for k, v in (("function", args.function), ("weights", args.weights), ("arity", args.arity)) if v is not None}
    overrides = {k: v for k, v in (("seed", args.seed), ("threads", args.threads)) if v is not None}
    if problem:
        overrides["problem"] = problem
    try:
        cfg = load_config(args.config, overrides)
        envelope, code, rows = run(args.command, cfg, args.fixed_clock)
    except (ConfigError, ExpressionError) as exc:
        print(f"lindex: error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"lindex: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"lindex: error: {exc}", file=sys.stderr)
        return 2
    text = dumps(envelope)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv and rows is not None:
        write_csv(args.csv, rows)
    return code


if __name__ == "__main__":
    sys.exit(main())

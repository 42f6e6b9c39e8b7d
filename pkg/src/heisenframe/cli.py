"""Command-line front end.

Subcommands: bracket | check | gabor-scan | classify.  Every run writes a
canonical JSON report plus plot-ready CSV traces into the output directory.
Exit status: 0 pass, 1 fail, 2 hypothesis failure or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np

from .bracket import (
    CheckReport,
    bessel_sum_check,
    bracket,
    check_biorthogonality,
    check_orthogonality,
    check_reproducing,
    decomposition_parseval_check,
    gabor_application_scan,
)
from .config import RunConfig, load_config, load_instance
from .errors import ConfigError, EngineError, HypothesisError
from .fiberframes import FiberSystem, classify_dual_type, fiber_frame_bounds
from .fields import ScaleSpec, build_Ht, OperatorField
from .grid import TorusGrid
from .report import make_report, write_csv, write_report

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="heisenframe",
        description="Bracket maps, reproducing-formula checks and fiberwise "
        "dual classification for translation generated systems.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--out", default=None, help="output directory (default from config)")
        sp.add_argument("--grid", type=int, default=None, help="override torus grid size")
        sp.add_argument("--tol", type=float, default=None, help="override check tolerance")
        sp.add_argument("--seed", type=int, default=None, help="override random seed")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")

    common(sub.add_parser("bracket", help="bracket traces with closed-form deviations"))
    sp_check = sub.add_parser("check", help="run one verdict")
    sp_check.add_argument("which", choices=["orth", "bio", "repro", "bessel", "parseval"])
    common(sp_check)
    common(sub.add_parser("gabor-scan", help="scan the Gabor reproducing equivalence over t"))
    sp_cls = sub.add_parser("classify", help="classify fiber duals from an instance file")
    sp_cls.add_argument("--instance", required=True, help="JSON instance file")
    common(sp_cls)
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    if args.grid is not None:
        if args.grid < 2:
            raise ConfigError(f"--grid: need at least 2 points, got {args.grid}")
        updates["n_alpha"] = args.grid
    if args.tol is not None:
        if args.tol <= 0:
            raise ConfigError("--tol: must be positive")
        updates["tol_check"] = args.tol
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out_dir"] = args.out
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _config_echo(cfg: RunConfig) -> dict:
    """Reproducibility-relevant parameters only (no output routing paths)."""
    echo = dataclasses.asdict(cfg)
    echo.pop("raw", None)
    echo.pop("base_dir", None)
    echo.pop("out_dir", None)
    return echo


def _zero_safe_fields(cfg: RunConfig):
    """Fields for the bracket trace; zero windows induce the zero field."""
    from .grid import window_preset

    w1, w2 = cfg.build_windows()

    def mk(win, scale):
        if win.norm() == 0.0:
            # zero window: represent the induced zero field explicitly
            placeholder = window_preset("box", max(win.n, 2), (0.0, 1.0))
            return OperatorField(
                kind="rank-one",
                generator=placeholder,
                support=(cfg.field.t, 1.0),
                scale=ScaleSpec("const", 0.0),
            )
        return build_Ht(win, cfg.field.t, scale)

    return w1, w2, mk(w1, cfg.field.scale), mk(w2, cfg.field.scale2)


def cmd_bracket(cfg: RunConfig, args) -> tuple[int, dict, dict]:
    grid = cfg.torus_grid()
    w1, w2, phi, psi = _zero_safe_fields(cfg)
    self_tf = bracket(phi, phi, grid, cfg.M)
    cross_tf = bracket(phi, psi, grid, cfg.M)
    unit_scales = (
        cfg.field.scale == ScaleSpec("const", 1.0)
        and cfg.field.scale2 == ScaleSpec("const", 1.0)
    )
    unit_windows = abs(w1.norm() - 1.0) < 1e-6 and abs(w2.norm() - 1.0) < 1e-6
    closed_forms = unit_scales and unit_windows
    header = ["alpha", "self_re", "self_im", "cross_re", "cross_im"]
    alphas = grid.points
    d = phi.d
    rows = []
    dev_self = dev_cross = None
    if closed_forms:
        from .grid import inner_product

        header += ["dev_self_closed", "dev_cross_closed"]
        on = (alphas > cfg.field.t) & (alphas <= 1.0)
        ip2 = abs(inner_product(w1, w2)) ** 2
        dev_self = self_tf.values.real - np.where(on, alphas**d, 0.0)
        dev_cross = cross_tf.values.real - np.where(on, ip2 * alphas**d, 0.0)
    for i, a in enumerate(alphas):
        row = [
            a,
            self_tf.values[i].real,
            self_tf.values[i].imag,
            cross_tf.values[i].real,
            cross_tf.values[i].imag,
        ]
        if closed_forms:
            row += [dev_self[i], dev_cross[i]]
        rows.append(row)
    results = {
        "max_abs_self": self_tf.max_abs(),
        "max_abs_cross": cross_tf.max_abs(),
        "closed_form_columns": closed_forms,
    }
    if closed_forms:
        results["max_dev_self_closed"] = float(np.max(np.abs(dev_self)))
        results["max_dev_cross_closed"] = float(np.max(np.abs(dev_cross)))
    traces = {"bracket_trace.csv": (header, rows)}
    return EXIT_PASS, results, traces


def _status_code(report: CheckReport) -> int:
    if report.status == "hypothesis-failure":
        return EXIT_ERROR
    return EXIT_PASS if report.verdict else EXIT_FAIL


def cmd_check(cfg: RunConfig, args) -> tuple[int, dict, dict]:
    grid = cfg.torus_grid()
    phi, psi = cfg.build_fields()
    which = args.which
    jobs = args.jobs
    traces: dict = {}
    if which == "orth":
        rep = check_orthogonality(phi, cfg.lattice, grid, cfg.tol_orth, cfg.M, jobs=jobs)
    elif which == "bio":
        rep = check_biorthogonality(phi, psi, cfg.lattice, grid, cfg.tol_check, cfg.M, jobs=jobs)
    elif which == "repro":
        rep = check_reproducing(
            phi,
            psi,
            cfg.lattice,
            grid,
            cfg.tol_check,
            cfg.M,
            trials=cfg.trials,
            seed=cfg.seed,
            orth_tol=cfg.tol_orth,
            jobs=jobs,
        )
        if rep.hypothesis_ok:
            rows = [
                (
                    a,
                    rep.details["bracket_values"][i].real,
                    rep.details["bracket_values"][i].imag,
                    rep.details["residual_B_profile"][i],
                    bool(rep.details["omega_mask"][i]),
                )
                for i, a in enumerate(grid.points)
            ]
            traces["reproducing_trace.csv"] = (
                ["alpha", "bracket_re", "bracket_im", "residual_B", "in_omega"],
                rows,
            )
    elif which == "bessel":
        rep = bessel_sum_check(
            phi,
            cfg.lattice,
            grid,
            trials=cfg.trials,
            seed=cfg.seed,
            M=cfg.M,
            orth_tol=cfg.tol_orth,
        )
    elif which == "parseval":
        rep = decomposition_parseval_check(
            phi,
            cfg.lattice,
            grid,
            trials=cfg.trials,
            seed=cfg.seed,
            tol=cfg.tol_check,
            M=cfg.M,
            orth_tol=cfg.tol_orth,
            jobs=jobs,
        )
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown check '{which}'")
    results = {"check": which, "report": _strip_arrays(rep)}
    return _status_code(rep), results, traces


def _strip_arrays(rep: CheckReport) -> dict:
    """Report view of a CheckReport without bulky per-point arrays."""
    keep = {}
    for k, v in rep.details.items():
        if isinstance(v, np.ndarray):
            continue
        keep[k] = v
    return {
        "status": rep.status,
        "verdict": rep.verdict,
        "max_violation": rep.max_violation,
        "tolerance": rep.tolerance,
        "worst_witness": rep.worst_witness,
        "truncation_residual": rep.truncation_residual,
        "hypothesis_ok": rep.hypothesis_ok,
        "details": keep,
    }


def cmd_gabor_scan(cfg: RunConfig, args) -> tuple[int, dict, dict]:
    w1, w2 = cfg.build_windows()
    base = cfg.torus_grid().points
    rows = []
    per_t = []
    any_hyp_fail = False
    all_consistent = True
    for t in cfg.field.t_list:
        pts = base[(base > t) & (base <= 1.0)]
        if cfg.scan_include_endpoint and (pts.size == 0 or pts[-1] < 1.0):
            pts = np.concatenate([pts, [1.0]])
        grid = TorusGrid.from_points(pts)
        rep, _ = gabor_application_scan(
            w1,
            w2,
            cfg.lattice,
            t,
            grid,
            tol=cfg.tol_check,
            trials=cfg.trials,
            seed=cfg.seed,
            M=cfg.M,
        )
        det = rep.details
        hyp_ok = rep.hypothesis_ok
        any_hyp_fail |= not hyp_ok
        all_consistent &= bool(det["consistent"])
        for i, a in enumerate(det["alphas"]):
            rows.append(
                (
                    t,
                    a,
                    hyp_ok,
                    det["condition_profile"][i],
                    det["residual_A_profile"][i],
                    det["residual_B_profile"][i],
                )
            )
        per_t.append(
            {
                "t": t,
                "hypothesis_ok": hyp_ok,
                "condition_max": det["condition_max"],
                "condition_ok": det["condition_ok"],
                "residual_A": det["residual_A"],
                "residual_B": det["residual_B"],
                "repro_ok": det["repro_ok"],
                "equivalence_verdict": "consistent" if det["consistent"] else "inconsistent",
                "hypothesis_witness": rep.worst_witness,
            }
        )
    traces = {
        "gabor_scan.csv": (
            ["t", "alpha", "hypothesis_ok", "condition_profile", "residual_A", "residual_B"],
            rows,
        )
    }
    results = {"per_t": per_t, "all_consistent": all_consistent}
    if any_hyp_fail:
        return EXIT_ERROR, results, traces
    return (EXIT_PASS if all_consistent else EXIT_FAIL), results, traces


def cmd_classify(cfg: RunConfig, args) -> tuple[int, dict, dict]:
    fibers = load_instance(args.instance)
    per_fiber = []
    rows = []
    all_alternate = True
    flags_profile = {"alternate": [], "oblique": [], "type_i": [], "type_ii": []}
    for fib in fibers:
        system = FiberSystem.from_vectors(fib["alpha"], fib["system"], fib["weights"])
        dual = FiberSystem.from_vectors(fib["alpha"], fib["dual"], fib["weights"])
        dr = classify_dual_type(system, dual, cfg.tol_check)
        try:
            bounds = fiber_frame_bounds(system)
        except EngineError:
            bounds = (float("nan"), float("nan"))
        all_alternate &= dr.alternate
        for key in flags_profile:
            flags_profile[key].append(bool(getattr(dr, key)))
        per_fiber.append(
            {
                "alpha": fib["alpha"],
                "report": dataclasses.asdict(dr),
                "frame_bounds": list(bounds),
            }
        )
        rows.append(
            (
                fib["alpha"],
                dr.alternate,
                dr.oblique,
                dr.type_i,
                dr.type_ii,
                dr.residuals.get("alternate", 0.0),
                dr.residuals.get("oblique", 0.0),
                dr.residuals.get("type_i_projection", float("nan")),
                dr.residuals.get("type_ii_rank_excess", -1),
                bounds[0],
                bounds[1],
            )
        )
    summary = {
        "fibers": len(fibers),
        "uniform": {k: (all(v) or not any(v)) for k, v in flags_profile.items()},
        "counts": {k: int(sum(v)) for k, v in flags_profile.items()},
    }
    traces = {
        "classify_trace.csv": (
            [
                "alpha",
                "alternate",
                "oblique",
                "type_i",
                "type_ii",
                "residual_alternate",
                "residual_oblique",
                "residual_type_i",
                "type_ii_rank_excess",
                "frame_bound_A",
                "frame_bound_B",
            ],
            rows,
        )
    }
    return (EXIT_PASS if all_alternate else EXIT_FAIL), {"per_fiber": per_fiber, "summary": summary}, traces


COMMANDS = {
    "bracket": cmd_bracket,
    "check": cmd_check,
    "gabor-scan": cmd_gabor_scan,
    "classify": cmd_classify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        code, results, traces = COMMANDS[args.command](cfg, args)
    except HypothesisError as exc:
        print(f"hypothesis error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    command = args.command if args.command != "check" else f"check-{args.which}"
    report = make_report(
        command,
        _config_echo(cfg),
        results,
        seed=cfg.seed,
        jobs=args.jobs,
        wall_time_s=time.perf_counter() - t0,
    )
    write_report(report, out_dir / "report.json")
    for name, (header, rows) in traces.items():
        write_csv(out_dir / name, header, rows)
    status = {EXIT_PASS: "pass", EXIT_FAIL: "fail", EXIT_ERROR: "hypothesis-failure"}[code]
    print(f"{command}: {status} (report in {out_dir})")
    return code


if __name__ == "__main__":
    sys.exit(main())

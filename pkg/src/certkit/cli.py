"""Command-line front end.

Exit codes: 0 feasible/success, 1 usage or configuration error,
2 infeasible certificate / hypothesis violation / bound violation,
3 simulation divergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .certificate import (
    GENERAL,
    audit_hypotheses,
    certify,
    corollary_constants,
    general_bound_constants,
    rho,
)
from .config import RunConfig, load_config, load_example, parse_config
from .errors import CertkitError, ConfigurationError, DivergenceError
from .galerkin import simulate
from .gridfn import Grid
from .green_bvp import solve_p12
from .report import atomic_write, build_report, fmt, to_text, write_report

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_DIVERGED = 0, 1, 2, 3
CSV_COLUMNS = ("t", "u_l2", "x_norm", "V", "x_bound", "u_bound")
SWEEP_SHORTCUTS = ("p", "sigma", "L", "a", "l", "b", "c", "d")


# ---------------------------------------------------------------------------
# shared pipeline


def run_certificate(cfg: RunConfig):
    problem = cfg.cascade().coupling_problem(cfg.P, cfg.numerics.m)
    spec = cfg.spec()
    p12 = solve_p12(problem, cfg.numerics.residual_rtol)
    cert = certify(problem, spec, p12, cfg.numerics.stale_rtol)
    return problem, spec, cert


def iss_constants_for(cfg: RunConfig, spec, cert):
    if not cert.feasible:
        return None
    if spec.mode == GENERAL:
        return general_bound_constants(cert, spec, cfg.disturbance.d_inf)
    return corollary_constants(cert)


def certificate_numerics(cfg: RunConfig, cert) -> dict:
    nb = cfg.numerics
    return {
        "grid_nodes": nb.m,
        "residual_rtol": fmt(nb.residual_rtol),
        "stale_rtol": fmt(nb.stale_rtol),
        "p12_method": cert.p12.method,
        "p12_residual": fmt(cert.p12.residual_norm),
    }


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    data = cfg.echo()
    if getattr(args, "out", None):
        data["output"]["dir"] = str(args.out)
    if getattr(args, "seed", None) is not None:
        data["numerics"]["seed"] = int(args.seed)
    return parse_config(data)


def _load(args) -> RunConfig:
    if args.config is None:
        raise ConfigurationError("--config PATH is required for this command")
    return _apply_overrides(load_config(args.config), args)


# ---------------------------------------------------------------------------
# commands


def cmd_certify(args) -> int:
    cfg = _load(args)
    _, spec, cert = run_certificate(cfg)
    k = iss_constants_for(cfg, spec, cert)
    report = build_report(cfg, cert, k, certificate_numerics(cfg, cert))
    write_report(report, cfg.output.dir, cfg.output.report_name, cfg.output.formats)
    print(to_text(report))
    if not cert.feasible:
        failed = [v.name for v in cert.verdicts if v.passed is False]
        print(f"infeasible: failed condition(s) {cert.failed_conditions()}: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def trajectory_csv(traj, x_bound, u_bound) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    V = traj.V if traj.V is not None else np.full(len(traj), math.nan)
    for row in zip(traj.times, traj.u_l2, traj.x_norm, V, x_bound, u_bound):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def cmd_simulate(args) -> int:
    cfg = _load(args)
    cascade = cfg.cascade()
    dist = cfg.disturbance_model()
    spec = cfg.spec()
    cert = k = None
    cert_error = None
    try:
        _, spec, cert = run_certificate(cfg)
        k = iss_constants_for(cfg, spec, cert)
    except CertkitError as exc:  # simulation does not depend on certification
        cert_error = str(exc)
    sc = cfg.sim_config()
    phi, x0 = cfg.phi(), cfg.x0()
    try:
        traj = simulate(
            cascade, cfg.scalar_nonlinearity(), cfg.vector_field(), dist, phi=phi, x0=x0, config=sc,
            p12=cert.p12 if cert is not None else None, P=cfg.P, backend=getattr(args, "backend", None),
        )
    except DivergenceError as exc:
        print(f"divergence at t = {exc.time!r} (step {exc.step}): {exc}", file=sys.stderr)
        return EXIT_DIVERGED

    nan = np.full(len(traj), math.nan)
    x_bound, u_bound = nan, nan
    if k is not None:
        grid = Grid(cfg.system.l, cfg.numerics.m)
        rho0 = rho(x0, grid.sample(lambda z: phi(z)[:, None]))
        x_bound, u_bound = k.bounds(traj.times, cfg.disturbance.d_inf, rho0)
    out = Path(cfg.output.dir)
    atomic_write(out / cfg.output.trajectory_name, trajectory_csv(traj, x_bound, u_bound))

    summary = {
        "records": len(traj),
        "max_u_l2": fmt(np.max(traj.u_l2)),
        "max_x_norm": fmt(np.max(traj.x_norm)),
        "final_u_l2": fmt(traj.u_l2[-1]),
        "final_x_norm": fmt(traj.x_norm[-1]),
        "max_w_sup": fmt(np.max(traj.w_sup)),
        "bounds_available": k is not None,
    }
    violations = 0
    if k is not None:
        margin = np.maximum(traj.x_norm - x_bound, traj.u_l2 - u_bound)
        violations = int(np.sum(margin > 0))
        summary["max_bound_violation_margin"] = fmt(np.max(margin))
        summary["bound_violations"] = violations
    if cert_error:
        summary["certificate_error"] = cert_error
    numerics = {
        "scheme": sc.scheme,
        "dt": fmt(sc.dt),
        "T": fmt(sc.T),
        "record_dt": fmt(cfg.numerics.record_dt),
        "basis_modes": sc.N,
        "simulation_grid_nodes": traj.m,
        "backend": traj.backend,
        "grid_nodes": cfg.numerics.m,
    }
    if cert is not None:
        report = build_report(cfg, cert, k, numerics, {"trajectory": summary})
        write_report(report, out, cfg.output.report_name, cfg.output.formats)
    print("\n".join(f"{key}: {val}" for key, val in summary.items()))
    if violations:
        print(f"{violations} recorded time(s) exceed the ISS bound", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _set_param(data: dict, name: str, value: float) -> None:
    s, nb = data["system"], data["nonlinearity"]
    if name == "p":
        n = np.atleast_2d(np.asarray(s["P"], dtype=float)).shape[0]
        s["P"] = (value * np.eye(n)).tolist() if n > 1 else value
    elif name in ("sigma", "L"):
        nb[name] = value
    elif name in ("a", "l"):
        s[name] = value
    elif name == "c":
        if np.atleast_2d(np.asarray(s["C"], dtype=float)).shape != (1, 1):
            raise ConfigurationError("sweep parameter 'c' needs a scalar C")
        s["C"] = value
    elif name in ("b", "d"):
        s[name.upper()] = {"kind": "constant", "value": value}
    elif "." in name:
        node = data
        *path, leaf = name.split(".")
        for part in path:
            if not isinstance(node, dict) or part not in node:
                raise ConfigurationError(f"unknown sweep parameter {name!r}")
            node = node[part]
        if not isinstance(node, dict) or leaf not in node:
            raise ConfigurationError(f"unknown sweep parameter {name!r}")
        node[leaf] = value
    else:
        raise ConfigurationError(
            f"unknown sweep parameter {name!r}; use one of {', '.join(SWEEP_SHORTCUTS)} or a dotted config path"
        )


SWEEP_COLUMNS = (
    "param", "value", "feasible", "omega", "Omega", "lambda_min_Xi", "lambda_min_Pi1", "lambda_max_Pi2",
    "p12_l2", "tau1", "tau2", "Pi1_pd", "omega_pos", "Omega_pd", "Xi_pd", "tau_order", "error",
)


def sweep_row(base: dict, name: str, value: float) -> list:
    data = _deepcopy(base)
    _set_param(data, name, value)
    row = {"param": name, "value": value}
    try:
        cfg = parse_config(data)
        _, _, cert = run_certificate(cfg)
    except CertkitError as exc:
        row.update(feasible=False, error=str(exc).replace("\n", " "))
        return [row.get(c, "") for c in SWEEP_COLUMNS]
    verdict = {v.name: v.passed for v in cert.verdicts}
    row.update(
        feasible=cert.feasible, omega=cert.omega, Omega=cert.lambda_min_Omega, lambda_min_Xi=cert.lambda_min_Xi,
        lambda_min_Pi1=cert.lambda_min_Pi1, lambda_max_Pi2=cert.lambda_max_Pi2, p12_l2=cert.p12.norm_l2,
        tau1=cert.tau1 if cert.tau1 is not None else "", tau2=cert.tau2 if cert.tau2 is not None else "",
        Pi1_pd=verdict["Pi1 positive definite"], omega_pos=verdict["omega > 0"],
        Omega_pd=verdict["Omega positive definite"], Xi_pd=verdict["Xi positive definite"],
        tau_order="" if verdict["tau2 < tau1"] is None else verdict["tau2 < tau1"], error="",
    )
    return [row[c] for c in SWEEP_COLUMNS]


def _deepcopy(data):
    if isinstance(data, dict):
        return {k: _deepcopy(v) for k, v in data.items()}
    if isinstance(data, list):
        return [_deepcopy(v) for v in data]
    return data


def parse_grid(text: Optional[str]) -> list[float]:
    if text is None:
        raise ConfigurationError("sweep needs --grid v1,v2,...")
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigurationError("sweep grid is empty")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigurationError(f"bad sweep grid value: {exc}") from None


def sweep_threads() -> int:
    env = os.environ.get("CERTKIT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"CERTKIT_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigurationError("CERTKIT_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if not args.param:
        raise ConfigurationError("sweep needs --param NAME")
    grid = parse_grid(args.grid)
    base = cfg.echo()
    _set_param(_deepcopy(base), args.param, grid[0])  # reject unknown names before any work
    with ThreadPoolExecutor(max_workers=sweep_threads()) as pool:
        rows = list(pool.map(lambda v: sweep_row(base, args.param, v), grid))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    atomic_write(Path(cfg.output.dir) / cfg.output.sweep_name, buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_audit(args) -> int:
    cfg = _load(args)
    spec = cfg.spec()
    nb = cfg.numerics
    rep = audit_hypotheses(spec, cfg.P, samples=nb.audit_samples, seed=nb.seed, s_range=tuple(nb.audit_range))
    lines = [rep.note]
    for c in rep.checks:
        if not c.applicable:
            state = "n/a"
        elif c.passed:
            state = "pass"
        else:
            state = "info" if c.informational else "VIOLATION"
        line = f"  {c.name:<40} {state:<9} samples={c.samples} worst_excess={c.worst_excess:.9g}"
        if c.witness is not None and c.applicable:
            line += f" witness={c.witness}"
        lines.append(line)
    text = "\n".join(lines) + "\n"
    atomic_write(Path(cfg.output.dir) / f"{cfg.output.report_name}_audit.txt", text)
    print(text, end="")
    return EXIT_OK if rep.passed else EXIT_INFEASIBLE


def reproduce_example_report(out_dir=None):
    cfg = load_example()
    if out_dir is not None:
        data = cfg.echo()
        data["output"]["dir"] = str(out_dir)
        cfg = parse_config(data)
    _, spec, cert = run_certificate(cfg)
    k = iss_constants_for(cfg, spec, cert)
    return cfg, build_report(cfg, cert, k, certificate_numerics(cfg, cert))


def cmd_reproduce_example(args) -> int:
    cfg, report = reproduce_example_report(args.out)
    if args.out:
        write_report(report, cfg.output.dir, cfg.output.report_name, cfg.output.formats)
    print(to_text(report))
    return EXIT_OK


COMMANDS = {
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
    "reproduce-example": cmd_reproduce_example,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="certkit", description="ISS certificates and Galerkin simulation for ODE-PDE cascades")
    ap.add_argument("--version", action="version", version=f"certkit {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path)
    ap.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    ap.add_argument("--param", help="sweep parameter name")
    ap.add_argument("--grid", help="comma-separated sweep values")
    ap.add_argument("--seed", type=int, help="audit sampling seed (overrides numerics.seed)")
    ap.add_argument("--backend", choices=("python", "compiled"), help="time-loop kernel for simulate")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, ValueError, ImportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

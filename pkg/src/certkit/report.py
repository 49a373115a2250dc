"""Report assembly and rendering (JSON and plain text).

Every scalar is stored as ``{"value": ..., "formula": ...}`` so a reader can
trace it back to the expression that produced it. Floats carry 9 significant
digits; non-finite values are written as the strings ``inf``/``-inf``/``nan``.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .certificate import Certificate, IssConstants, kappa_chi

# Published values for the reference scalar cascade (a = l = 1, C = 0.25,
# B = 1, D = -5, P = 1, sigma = L = 1) with the relative tolerance each is
# expected to meet. K2 and beta are listed separately: they do not follow
# from their defining formulas.
REFERENCE_VALUES = {
    "kappa": (0.021367, 1e-4),
    "chi": (0.023414, 1e-4),
    "omega": (13.992949, 1e-4),
    "Omega": (0.183766, 2e-3),
    "p12_l2": (0.374626, 1e-4),
    "lambda_min_Pi1": (0.625374, 1e-5),
    "lambda_max_Pi2": (1.374626, 1e-5),
    "K1": (2.873130, 1e-4),
    "lambda_min_Xi": (0.1736102, 1e-4),
    "theta": (0.06315, 2e-3),
    "overshoot": (1.482594, 1e-4),
}
REFERENCE_INCONSISTENT = {"K2": 8.7462728, "beta": 785.0749, "x_gain": 95.26}

FORMULAS = {
    "p12_l2": "|P12|_L2, P12 solving a^2 P12'' + C^T P12 = -B - P D, P12(0) = P12(l) = 0",
    "p12_l1": "|P12|_L1",
    "p12_linf": "|P12|_Linf",
    "p12_residual": "max |a^2 P12'' + C^T P12 + B + P D| (centered differences)",
    "lambda_min_Pi1": "lambda_min([[1, -|P12|], [-|P12|, lambda_min(P)]])",
    "lambda_max_Pi2": "lambda_max([[1, |P12|], [|P12|, lambda_max(P)]])",
    "omega": "2 (pi^2 a^2 / l^2 - |D|_L2 |P12|_L2 - sigma)",
    "Omega": "lambda_min(-(C^T P + P C + int (P12 B^T + B P12^T) dz))",
    "lambda_min_Xi": "lambda_min([[omega, -L |P12|], [-L |P12|, lambda_min(Omega)]])",
    "tau1": "root of A1 tau^(2q) + B1 tau^(2q/(2q-1)) = 2 delta1",
    "tau2": "root of A2 tau^(-2q) + B2 tau^(-2q/(2q-1)) = 2 alpha",
    "kappa": "2/lam tan(lam l / 2) - l, lam = sqrt(c)/a",
    "chi": "|cos(lam z) - 1 + tan(lam l / 2) sin(lam z)|_L2",
    "K1": "L + |D|_L2 |P12|_L2",
    "K2": "L |P12|_L2 + |D|_L2 |P|",
    "theta": "lambda_min(Xi) / (2 lambda_max(Pi2))",
    "beta": "2 l (K1^2 + K2^2) / lambda_min(Xi)",
    "overshoot": "sqrt(lambda_max(Pi2) / lambda_min(Pi1))",
    "x_gain": "sqrt(beta / (theta lambda_min(Pi1)))",
    "u_gain": "x_gain + sqrt(l)",
    "V_offset_coefficient": "2 beta lambda_max(Pi2) / lambda_min(Xi)",
    "theta0": "lambda_min(Xi) / (2 lambda_max(Pi2))",
    "epsilon": "largest 2^-k with H3 < 0 and H4 < 0",
    "tau": "midpoint of (tau2, tau1)",
    "H1": "general-mode disturbance coefficient H1(eps, tau, d_inf)",
    "H2": "general-mode disturbance coefficient H2(eps, tau, d_inf)",
    "H3": "general-mode dissipation margin H3(eps, tau)",
    "H4": "general-mode dissipation margin H4(eps, tau)",
    "vartheta": "(H1^2 + H2^2) / (2 lambda_min(Xi))",
}


def fmt(x) -> object:
    """Round to 9 significant digits; JSON-safe for non-finite values."""
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.9g}")


def tagged(value, key: str) -> dict:
    return {"value": fmt(value), "formula": FORMULAS.get(key, key)}


def certificate_section(cert: Certificate) -> dict:
    p = cert.p12
    out = {
        "p12_method": p.method,
        "p12_l1": tagged(p.norm_l1, "p12_l1"),
        "p12_l2": tagged(p.norm_l2, "p12_l2"),
        "p12_linf": tagged(p.norm_linf, "p12_linf"),
        "p12_residual": tagged(p.residual_norm, "p12_residual"),
        "lambda_min_Pi1": tagged(cert.lambda_min_Pi1, "lambda_min_Pi1"),
        "lambda_max_Pi2": tagged(cert.lambda_max_Pi2, "lambda_max_Pi2"),
        "omega": tagged(cert.omega, "omega"),
        "Omega": tagged(cert.lambda_min_Omega, "Omega"),
        "lambda_min_Xi": tagged(cert.lambda_min_Xi, "lambda_min_Xi"),
        "feasible": cert.feasible,
        "mode": cert.mode,
    }
    if cert.tau1 is not None:
        out["tau1"] = tagged(cert.tau1, "tau1")
        out["tau2"] = tagged(cert.tau2, "tau2")
    return out


def scalar_extras(cfg, cert: Certificate) -> dict:
    """kappa and chi, defined for a scalar system with C > 0."""
    C = cfg.cascade().C
    if C.shape != (1, 1) or not C[0, 0] > 0:
        return {}
    lam = math.sqrt(C[0, 0]) / cfg.system.a
    try:
        kappa, chi, _, _ = kappa_chi(lam, cfg.system.l, cfg.numerics.m)
    except Exception:  # closed form singular; omit rather than fail the report
        return {}
    return {"kappa": tagged(kappa, "kappa"), "chi": tagged(chi, "chi")}


def iss_section(k: Optional[IssConstants]) -> dict:
    if k is None:
        return {"available": False}
    out = {"available": True, "mode": k.mode}
    if k.mode == "corollary":
        keys = ("K1", "K2", "theta", "beta")
    else:
        keys = ("theta0", "epsilon", "tau", "H1", "H2", "H3", "H4", "vartheta")
    for key in keys:
        out[key] = tagged(getattr(k, key), key)
    out["overshoot"] = tagged(k.overshoot, "overshoot")
    out["x_gain"] = tagged(k.gain, "x_gain")
    out["u_gain"] = tagged(k.gain + math.sqrt(k.l) if k.mode == "corollary" else math.nan, "u_gain")
    if k.mode == "corollary":
        out["V_offset_coefficient"] = tagged(k.V_offset_coefficient, "V_offset_coefficient")
    return out


def comparison_values(cert: Certificate, k: Optional[IssConstants], extras: dict) -> dict:
    vals = {
        "omega": cert.omega,
        "Omega": cert.lambda_min_Omega,
        "p12_l2": cert.p12.norm_l2,
        "lambda_min_Pi1": cert.lambda_min_Pi1,
        "lambda_max_Pi2": cert.lambda_max_Pi2,
        "lambda_min_Xi": cert.lambda_min_Xi,
    }
    for key in ("kappa", "chi"):
        if key in extras:
            vals[key] = extras[key]["value"]
    if k is not None and k.mode == "corollary":
        vals.update(K1=k.K1, K2=k.K2, theta=k.theta, beta=k.beta, overshoot=k.overshoot, x_gain=k.gain)
    return vals


def comparison_section(values: dict, applies: bool) -> dict:
    if not applies:
        return {"applies": False, "note": "configuration differs from the reference cascade"}
    rows = []
    for key, (ref, tol) in REFERENCE_VALUES.items():
        got = values.get(key, math.nan)
        rel = abs(got - ref) / abs(ref)
        rows.append({"quantity": key, "computed": fmt(got), "reference": ref, "rel_delta": fmt(rel),
                     "tolerance": tol, "within_tolerance": bool(rel <= tol)})
    flags = []
    for key, ref in REFERENCE_INCONSISTENT.items():
        got = values.get(key, math.nan)
        flags.append({
            "quantity": key,
            "formula_value": fmt(got),
            "published_value": ref,
            "rel_delta": fmt(abs(got - ref) / abs(ref)),
            "formula": FORMULAS[key],
            "note": "published value does not follow from the formula; bounds use the formula value",
        })
    return {"applies": True, "rows": rows, "discrepancies": flags, "bounds_use": "formula_values"}


def is_reference_config(cfg) -> bool:
    s, nb = cfg.system, cfg.nonlinearity
    try:
        C, P = cfg.cascade().C, cfg.P
    except Exception:
        return False
    const = lambda h, v: h.kind == "constant" and np.allclose(np.ravel(h.params.get("value")), [v])  # noqa: E731
    return (
        s.a == 1.0 and s.l == 1.0 and C.shape == (1, 1) and C[0, 0] == 0.25 and P.shape == (1, 1)
        and P[0, 0] == 1.0 and const(s.B, 1.0) and const(s.D, -5.0)
        and nb.mode == "lipschitz" and nb.sigma == 1.0 and nb.L == 1.0
    )


def verdicts_section(cert: Certificate) -> list:
    return [
        {"condition": v.condition, "name": v.name,
         "passed": None if v.passed is None else bool(v.passed), "value": fmt(v.value)}
        for v in cert.verdicts
    ]


def build_report(cfg, cert: Certificate, k: Optional[IssConstants], numerics: dict, extra: Optional[dict] = None) -> dict:
    extras = scalar_extras(cfg, cert)
    cs = certificate_section(cert)
    cs.update(extras)
    report = {
        "tool": {"name": "certkit", "version": __version__},
        "certificate": cs,
        "iss_constants": iss_section(k),
        "paper_comparison": comparison_section(comparison_values(cert, k, extras), is_reference_config(cfg)),
        "numerics": numerics,
        "verdicts": verdicts_section(cert),
    }
    if extra:
        report.update(extra)
    report["config"] = cfg.echo()
    return report


# ---------------------------------------------------------------------------
# rendering


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def _val(x):
    if isinstance(x, dict) and "value" in x:
        x = x["value"]
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def to_text(report: dict) -> str:
    lines = [f"certkit {report['tool']['version']}", ""]
    for section in ("certificate", "iss_constants"):
        lines.append(f"[{section}]")
        for key, val in report.get(section, {}).items():
            lines.append(f"  {key:<22} {_val(val)}")
        lines.append("")
    lines.append("[verdicts]")
    for v in report.get("verdicts", []):
        state = {True: "pass", False: "FAIL", None: "n/a"}[v["passed"]]
        lines.append(f"  ({v['condition']}) {v['name']:<26} {state:<5} {_val(v['value'])}")
    lines.append("")
    cmp_ = report.get("paper_comparison", {})
    if cmp_.get("applies"):
        lines.append("[paper_comparison]")
        lines.append(f"  {'quantity':<16} {'computed':>14} {'reference':>14} {'rel_delta':>11}  ok")
        for r in cmp_["rows"]:
            lines.append(
                f"  {r['quantity']:<16} {_val(r['computed']):>14} {_val(r['reference']):>14} "
                f"{_val(r['rel_delta']):>11}  {'yes' if r['within_tolerance'] else 'NO'}"
            )
        lines.append("  discrepancies (bounds use the formula values):")
        for r in cmp_["discrepancies"]:
            lines.append(
                f"  {r['quantity']:<16} {_val(r['formula_value']):>14} {_val(r['published_value']):>14} "
                f"{_val(r['rel_delta']):>11}  {r['formula']}"
            )
        lines.append("")
    for section in ("numerics", "trajectory", "audit"):
        if section in report:
            lines.append(f"[{section}]")
            sec = report[section]
            items = sec.items() if isinstance(sec, dict) else enumerate(sec)
            for key, val in items:
                lines.append(f"  {key!s:<22} {_val(val)}")
            lines.append("")
    return "\n".join(lines)


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory and rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: dict, out_dir, name: str, formats) -> list[Path]:
    written = []
    out_dir = Path(out_dir)
    if "json" in formats:
        p = out_dir / f"{name}.json"
        atomic_write(p, to_json(report))
        written.append(p)
    if "text" in formats:
        p = out_dir / f"{name}.txt"
        atomic_write(p, to_text(report))
        written.append(p)
    return written

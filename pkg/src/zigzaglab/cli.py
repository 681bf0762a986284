"""Batch front end: solve, study and validate commands.

Configuration is a JSON document with the domain spec (kind-tagged), solver
settings, physical units and optional sweep settings:

    {
      "domain": {"kind": "l_shape", "d": 3.141592653589793, "unit": "1"},
      "solver": {"h": 0.049, "S": 30.0, "k": 1, "refine": 3, "seed": 1234},
      "units":  {"m": 1.0, "c": 1.0, "hbar": 1.0},
      "study":  {"parameter": "ell", "values": [0.5, 1.0, 2.0]}
    }

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Output
is machine readable: result.json (versioned schema, sorted keys; the
timestamp lives in its own field), eigenvalues.csv with a fixed column
order, and a rendered figure beside them.  Identical config and seed give
byte-identical JSON except for the timestamp field.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import asymptotics as asym
from . import assemble as asm
from . import dirac
from . import eigensolve as es
from . import geometry as geo
from . import oracle
from . import validate as val

__all__ = ["main", "cmd_solve", "cmd_study", "cmd_validate", "ConfigError"]

SCHEMA_VERSION = 1
CSV_COLUMNS = ["index", "lambda_laplace", "lambda_dirac_plus",
               "lambda_dirac_minus", "multiplicity", "residual"]
STUDY_COLUMNS = ["parameter", "value", "h", "S", "lambda1", "gap", "censored",
                 "prediction_gap", "prediction_gap_alt", "count", "count_lo",
                 "count_hi"]


class ConfigError(ValueError):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _units(cfg: dict) -> dirac.UnitSystem:
    u = cfg.get("units", {})
    try:
        return dirac.UnitSystem(m=float(u.get("m", 0.0)), c=float(u.get("c", 1.0)),
                                hbar=float(u.get("hbar", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _dim(spec) -> int:
    return 3 if isinstance(spec, geo.TwistedFiber) else 2


def _write_json(payload: dict, path: Path) -> None:
    payload = dict(payload)
    payload["schema_version"] = SCHEMA_VERSION
    payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    path.write_text(json.dumps(payload, sort_keys=True, indent=2,
                               allow_nan=True) + "\n")


def _write_csv(rows: list[dict], columns: list[str], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in columns})


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def cmd_solve(config: dict, out_dir: str, fmt: str = "both",
              figures: bool = True) -> dict:
    """geometry -> assemble -> eigensolve (-> count, extrapolate) -> Dirac map."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        spec = geo.domain_from_dict(config["domain"])
    except (KeyError, geo.GeometryError) as exc:
        raise ConfigError(f"bad domain spec: {exc}") from exc
    solver = dict(config.get("solver", {}))
    h = float(solver.get("h", 0.05))
    refine = int(solver.get("refine", 1))
    k = int(solver.get("k", 1))
    seed = int(solver.get("seed", es.DEFAULT_SEED))
    tol = solver.get("tol")
    sector = solver.get("sector")
    sigma = float(solver.get("sigma", 0.0))
    h_s = solver.get("h_s")
    if h <= 0 or k < 1 or refine < 1:
        raise ConfigError("solver settings must be positive")
    units = _units(config)
    try:
        domain = geo.build_domain(spec, S=solver.get("S"), sector=sector,
                                  boundary=solver.get("boundary", "snap"))
    except TypeError:
        domain = geo.build_domain(spec, S=solver.get("S"), sector=sector)
    except geo.GeometryError as exc:
        raise ConfigError(str(exc)) from exc

    results = []
    ops = []
    for level in range(refine):
        hi = h / 2 ** level
        op = asm.assemble_domain(domain, hi, h_s=None if h_s is None else float(h_s) / 2 ** level)
        ops.append(op)
        results.append(es.smallest_eigs(op, k, tol=tol, seed=seed, sigma=sigma))

    final = results[-1]
    extrapolated = None
    if refine >= 3:
        final = es.extrapolate(results[-3], results[-2], results[-1])
        extrapolated = final.extrapolated
    elif refine == 2:
        final = es.extrapolate(results[-2], results[-1],
                               assumed_order=float(solver.get("assumed_order", 2.0)))
        extrapolated = final.extrapolated

    values = (np.asarray(extrapolated["values"]) if extrapolated is not None
              else final.eigenvalues)
    op_fine = ops[-1]

    count = None
    if solver.get("count") and math.isfinite(op_fine.threshold):
        tau = op_fine.threshold_discrete * (1.0 - 1e-9)
        count = es.count_below_robust(op_fine, tau)

    spectrum = dirac.map_spectrum(values, threshold=op_fine.threshold,
                                  units=units, dim=_dim(spec))

    # flat eigenvalue table (multiplicity from the Dirac clustering)
    mult = {}
    for d in spectrum.discrete + spectrum.near_threshold + spectrum.excluded:
        mult[round(d["laplacian"], 12)] = d["multiplicity"]
    rows = []
    for i, lam in enumerate(values):
        key = None
        for rep in mult:
            if abs(lam - rep) <= 1e-6 * max(1.0, abs(rep)):
                key = rep
                break
        e = units.energy(lam)
        rows.append({"index": i + 1, "lambda_laplace": float(lam),
                     "lambda_dirac_plus": e, "lambda_dirac_minus": -e,
                     "multiplicity": mult.get(key, 1),
                     "residual": float(final.residuals[min(i, len(final.residuals) - 1)])})

    payload = {
        "command": "solve",
        "domain": geo.domain_to_dict(spec),
        "solver": {"h": h, "h_s": h_s, "S": float(domain.S) if hasattr(domain, "S") and not getattr(domain, "periodic", False) else solver.get("S"),
                   "k": k, "tol": tol, "seed": seed, "refine": refine,
                   "sector": sector, "sigma": sigma,
                   "solver_backend": [r.solver for r in results]},
        "units": units.to_dict(),
        "threshold_laplacian": op_fine.threshold,
        "threshold_discrete": op_fine.threshold_discrete,
        "eigenvalues": rows,
        "residuals": [float(r) for r in final.residuals],
        "extrapolated": extrapolated,
        "count_below": count,
        "dirac": spectrum.to_dict(),
    }
    payload = _sanitize(payload)

    if fmt in ("json", "both"):
        _write_json(payload, out / "result.json")
    if fmt in ("csv", "both"):
        _write_csv(rows, CSV_COLUMNS, out / "eigenvalues.csv")
    if figures:
        from . import report
        report.render_solve_figure(payload, str(out / "spectrum.png"))
    return payload


# ---------------------------------------------------------------------------
# study
# ---------------------------------------------------------------------------

def _study_point_bent(spec, beta, solver):
    gam = spec.gamma
    pred = asym.bent_strip_series(gam, spec.a, beta,
                                  n_max=int(solver.get("n_max", 20)))
    kappa_pred = max(pred.value, 1e-12)
    S = solver.get("S")
    if S is None:
        lo, hi = gam.support
        S = max(abs(lo), abs(hi)) + float(solver.get("margin", 4.0)) / kappa_pred
    new = geo.BentStrip(gamma=gam.with_beta(beta), a=spec.a)
    dom = geo.build_domain(new, S=float(S), sector="ee" if solver.get("symmetric", True) else None)
    return dom, {"prediction_gap": kappa_pred ** 2, "kappa_pred": kappa_pred,
                 "prediction_gap_alt": pred.details["leading"] ** 2,
                 "series": pred.details}


def _study_point_deformed(spec, beta, solver):
    pred = asym.deformed_strip_prediction(spec.f, spec.d, beta)
    mean = pred.details["f_mean"]
    if mean > 0:
        kappa_pred = math.sqrt(pred.details["gap_oracle"])
    else:
        kappa_pred = float(solver.get("critical_kappa_coeff", 3.7)) * beta ** 2
    S = solver.get("S")
    if S is None:
        S = pred.details["support_halflength"] + float(solver.get("margin", 4.0)) / max(kappa_pred, 1e-12)
        S = min(S, float(solver.get("S_cap", 800.0)))
    new = geo.DeformedStrip(d=spec.d, f=spec.f, beta=beta)
    dom = geo.build_domain(new, S=float(S), sector="e",
                           boundary=solver.get("boundary", "snap"))
    return dom, {"prediction_gap": pred.details["gap_oracle"],
                 "prediction_gap_alt": pred.details["gap_paper_literal"],
                 "kappa_pred": kappa_pred, "verdict": pred.details["verdict"]}


def _study_point_window(spec, ell, solver):
    kappa_pred = math.pi ** 3 * ell ** 2 / 16.0
    S = solver.get("S")
    if S is None:
        S = min(22.0 + float(solver.get("margin", 3.2)) / max(kappa_pred, 1e-12),
                float(solver.get("S_cap", 400.0)))
    new = geo.CoupledStrips(d1=spec.d1, d2=spec.d2, ell=ell)
    dom = geo.build_domain(new, S=float(S), sector=solver.get("sector"))
    wc = asym.window_count(spec.d1, spec.d2, ell)
    return dom, {"kappa_pred": 2.2 * kappa_pred, "count_lo": wc["per_sign"][0],
                 "count_hi": wc["per_sign"][1], "window_count": wc}


def cmd_study(config: dict, out_dir: str, fmt: str = "both",
              figures: bool = True) -> dict:
    """Parameter sweep: per-point solves, gap extraction, power-law fit.

    Points whose eigenvalue does not separate from the band edge are recorded
    as censored, not dropped.  For deformed strips, study.adjudicate_mean
    repeats the sweep with the deformation amplitude doubled and reports
    whether the fitted gap coefficient scales linearly or quadratically in
    the mean deformation (with fit uncertainties).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        spec = geo.domain_from_dict(config["domain"])
    except (KeyError, geo.GeometryError) as exc:
        raise ConfigError(f"bad domain spec: {exc}") from exc
    study = config.get("study", {})
    param = study.get("parameter")
    values = study.get("values", [])
    if param is None or len(values) < 1:
        raise ConfigError("study needs a parameter and sweep values")
    values = sorted(float(v) for v in values)
    solver = dict(config.get("solver", {}))
    solver.setdefault("sector", None)
    h = float(solver.get("h", 0.05))
    seed = int(solver.get("seed", es.DEFAULT_SEED))
    units = _units(config)

    if param == "loop_perturbation":
        payload = _study_loops(spec, values, study, solver, units)
    else:
        sweeps = [("primary", spec)]
        if study.get("adjudicate_mean"):
            if not isinstance(spec, geo.DeformedStrip):
                raise ConfigError("adjudicate_mean applies to deformed strips")
            import dataclasses
            f2 = dataclasses.replace(spec.f, amplitude=2.0 * spec.f.amplitude)
            sweeps.append(("doubled", geo.DeformedStrip(d=spec.d, f=f2, beta=spec.beta)))
        payload = {"sweeps": {}}
        for label, sp in sweeps:
            pts = []
            for v in values:
                if param == "beta" and isinstance(sp, geo.BentStrip):
                    dom, info = _study_point_bent(sp, v, solver)
                elif param == "beta" and isinstance(sp, geo.DeformedStrip):
                    dom, info = _study_point_deformed(sp, v, solver)
                elif param == "ell" and isinstance(sp, geo.CoupledStrips):
                    dom, info = _study_point_window(sp, v, solver)
                else:
                    raise ConfigError(f"unsupported sweep {param!r} for {sp.kind}")
                op = asm.assemble_domain(dom, h)
                kp = info.get("kappa_pred", 0.0)
                sigma = max(op.threshold_discrete - 2.0 * kp ** 2, 0.0) if kp else 0.0
                r = es.smallest_eigs(op, 1, seed=seed, sigma=sigma)
                gap = op.threshold_discrete - r.eigenvalues[0]
                point = {"parameter": param, "value": v, "h": h,
                         "S": float(getattr(dom, "S", 0.0) or op.meta.get("S", 0.0)),
                         "lambda1": float(r.eigenvalues[0]), "gap": float(gap),
                         "censored": bool(gap <= 0.0)}
                for key in ("prediction_gap", "prediction_gap_alt", "count_lo",
                            "count_hi", "verdict"):
                    if key in info:
                        point[key] = info[key]
                if param == "ell" and solver.get("count", True):
                    tau = op.threshold_discrete * (1.0 - 1e-9)
                    point["count"] = es.count_below_robust(op, tau)
                pts.append(point)
            good = [p for p in pts if not p["censored"]]
            fit = None
            if len(good) >= 3:
                try:
                    fit = asym.power_law_fit([p["value"] for p in good],
                                             [p["gap"] for p in good],
                                             expected=study.get("expected_exponent"))
                except ValueError:
                    fit = None
            payload["sweeps"][label] = {"points": pts, "fit": fit}
        payload.update(payload["sweeps"]["primary"])
        payload["parameter"] = param

        if study.get("adjudicate_mean") and payload["sweeps"]["doubled"]["fit"]:
            payload["adjudication"] = _adjudicate(payload["sweeps"]["primary"],
                                                  payload["sweeps"]["doubled"])

    payload["command"] = "study"
    payload["domain"] = geo.domain_to_dict(spec)
    payload["solver"] = {"h": h, "seed": seed, "sector": solver.get("sector"),
                         "boundary": solver.get("boundary", "snap")}
    payload["units"] = units.to_dict()
    payload = _sanitize(payload)

    if fmt in ("json", "both"):
        _write_json(payload, out / "study.json")
    if fmt in ("csv", "both"):
        rows = []
        for label, sweep in payload.get("sweeps", {"primary": payload}).items():
            for p in sweep["points"]:
                rows.append(p)
        _write_csv(rows, STUDY_COLUMNS, out / "study.csv")
    if figures:
        from . import report
        report.render_study_figure(payload, str(out / "study.png"))
    return payload


def _adjudicate(primary: dict, doubled: dict) -> dict:
    """Linear vs quadratic scaling of the gap coefficient in the mean.

    Both sweeps share the leading beta^2 law, so the coefficient of each is
    estimated as the mean of log(gap / beta^2) with its standard error; the
    ratio of the two coefficients is then compared against 2 (linear in the
    mean) and 4 (quadratic).
    """
    def coeff(sweep):
        logs = [math.log(p["gap"] / p["value"] ** 2)
                for p in sweep["points"] if not p["censored"] and p["gap"] > 0]
        m = sum(logs) / len(logs)
        var = sum((x - m) ** 2 for x in logs) / max(len(logs) - 1, 1)
        return m, math.sqrt(var / len(logs))

    m1, se1 = coeff(primary)
    m2, se2 = coeff(doubled)
    log_ratio = m2 - m1
    se = math.hypot(se1, se2)
    ratio = math.exp(log_ratio)
    dist2 = abs(log_ratio - math.log(2.0))
    dist4 = abs(log_ratio - math.log(4.0))
    verdict = "quadratic" if dist4 < dist2 else "linear"
    return {"coefficient_ratio": ratio, "log_ratio": log_ratio,
            "se_log": se, "verdict": verdict,
            "excludes_linear": bool(log_ratio - 2 * se > math.log(2.0)),
            "excludes_quadratic": bool(log_ratio + 2 * se < math.log(4.0))}


def _study_loops(spec, values, study, solver, units) -> dict:
    """Fixed-length loop strips against the circular annulus."""
    if not isinstance(spec, geo.LoopStrip):
        raise ConfigError("loop_perturbation sweeps need a loop_strip domain")
    L, a = spec.L, spec.a
    h_s = L / int(solver.get("n_s", 512))
    h_u = 2 * a / int(solver.get("n_u", 64))
    mode = int(study.get("mode", 2))
    base = 2 * math.pi / L
    pts = []
    for eps in [0.0] + [v for v in values if v != 0.0]:
        if eps == 0.0:
            prof = geo.constant_curvature(base, (0.0, L))
            label = "annulus"
        else:
            s = np.linspace(0.0, L, 4001)
            prof = geo.tabulated_curvature(s, base + eps * np.cos(mode * 2 * math.pi * s / L))
            label = f"perturbed_{eps:g}"
        op = asm.assemble_curvilinear(prof, a, h_s, h_u, periodic=True, L=L)
        r = es.smallest_eigs(op, 1, seed=int(solver.get("seed", es.DEFAULT_SEED)))
        pts.append({"parameter": "loop_perturbation", "value": eps,
                    "label": label, "lambda1": float(r.eigenvalues[0]),
                    "h": h_u, "S": 0.0, "gap": float("nan"), "censored": False})
    rho = L / (2 * math.pi)
    ref = oracle.reference_spectrum(oracle.ReferenceShape(
        kind="annulus", R_in=rho - a, R_out=rho + a, count=1))[0]
    lam_ann = pts[0]["lambda1"]
    others = [p["lambda1"] for p in pts[1:]]
    return {"points": pts, "fit": None,
            "annulus": {"lambda1": lam_ann, "oracle": float(ref),
                        "oracle_rel_err": abs(lam_ann - ref) / ref},
            "annulus_maximal": bool(all(v < lam_ann for v in others))}


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def cmd_validate(out_dir: Optional[str] = None, corrupt: bool = False) -> tuple[int, list[dict]]:
    results = val.run_suite(corrupt=corrupt)
    for r in results:
        print(f"[{'PASS' if r['passed'] else 'FAIL'}] {r['name']}: {r['detail']}")
    n_fail = sum(not r["passed"] for r in results)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json({"command": "validate", "checks": results,
                     "failures": n_fail}, out / "validate.json")
    return (0 if n_fail == 0 else 3), results


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zigzaglab",
                                description="Dirichlet/Dirac waveguide spectra")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve", "study"):
        q = sub.add_parser(name)
        q.add_argument("--config", required=True)
        q.add_argument("--out", default="out")
        q.add_argument("--h", type=float, default=None)
        q.add_argument("--refine", type=int, default=None)
        q.add_argument("--sector", choices=["ee", "eo", "oe", "oo"], default=None)
        q.add_argument("--seed", type=int, default=None)
        q.add_argument("--format", choices=["json", "csv", "both"], default="both")
        q.add_argument("--no-figures", action="store_true")
    v = sub.add_parser("validate")
    v.add_argument("--out", default=None)
    v.add_argument("--self-test-corrupt", action="store_true",
                   help="negative control: corrupt a matrix before checking")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            code, _ = cmd_validate(args.out, corrupt=args.self_test_corrupt)
            return code
        config = _load_config(args.config)
        solver = config.setdefault("solver", {})
        if args.h is not None:
            solver["h"] = args.h
        if args.refine is not None:
            solver["refine"] = args.refine
        if args.sector is not None:
            solver["sector"] = args.sector
        if args.seed is not None:
            solver["seed"] = args.seed
        if args.command == "solve":
            cmd_solve(config, args.out, fmt=args.format,
                      figures=not args.no_figures)
        else:
            cmd_study(config, args.out, fmt=args.format,
                      figures=not args.no_figures)
        return 0
    except ConfigError as exc:
        _emit_error(args, "config_error", exc)
        return 2
    except (geo.GeometryError,) as exc:
        _emit_error(args, "config_error", exc)
        return 2
    except (es.ConvergenceError, es.SingularShiftError, np.linalg.LinAlgError) as exc:
        _emit_error(args, "numerical_failure", exc)
        return 3


def _emit_error(args, kind: str, exc: Exception) -> None:
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)
    out = getattr(args, "out", None)
    if out:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            _write_json(record, Path(out) / "error.json")
        except OSError:
            pass


if __name__ == "__main__":
    sys.exit(main())

"""Configuration-driven command line front end.

Subcommands: townes, minimize, sweep, trial-scan, analyze, spectrum.
Options resolve in precedence order: explicit flag > config file (YAML)
> built-in default. Every run writes a manifest.json with the fully
resolved configuration and the derived constants, so no physical default
stays implicit. Numeric CSV fields are printed at 15 significant digits
and runs are deterministic given config + seed.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 accuracy gate failure (strict mode).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .analysis import (blowup_rescale, energy_identity_audit, fit_scaling,
                       linearized_spectrum, mu_limit_check, x_a_drift_check)
from .errors import (AccuracyError, ConfigurationError, NumericalError,
                     RotbecError)
from .field import Grid2D, load_snapshot, save_snapshot
from .minimizer import (MinimizeConfig, MinimizeResult, default_townes,
                        gp_problem, minimize, multistart_minimize,
                        predicted_eps, resample_field, trial_energy_scan)
from .potential import (OMEGA_STAR_INF, PotentialSpec, effective_potential,
                        lambda_const, quartic_quadratic, power,
                        shifted_harmonic)
from .townes import (a_star_midpoint, export_profile, solve_townes,
                     townes_constants)

CSV_COLUMNS = [
    "a", "a_over_astar", "omega", "potential_tag", "n", "L", "eps_a",
    "x_a_x", "x_a_y", "mu", "total", "kinetic", "potential", "interaction",
    "rotation", "covariant_kinetic", "veff", "residual", "steps",
    "converged",
]


# ---------------------------------------------------------------------------
# small helpers

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.15g" % float(x)


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: str, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: str, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    _atomic_write(path, "\n".join(lines) + "\n")


def parse_potential(text: str) -> PotentialSpec:
    """Parse trap descriptions like power:2, quartic_quadratic:k=1,q=4,
    shifted_harmonic:bx=0.3,by=-0.2, or the harmonic shorthand."""
    text = text.strip()
    if text == "harmonic":
        return power(2.0)
    if ":" not in text:
        raise ConfigurationError(
            "potential %r not understood; expected harmonic, power:S, "
            "quartic_quadratic:k=K,q=Q, or shifted_harmonic:bx=X,by=Y"
            % text)
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    try:
        if kind == "power":
            return power(float(rest))
        params = {}
        for item in rest.split(","):
            key, _, val = item.partition("=")
            params[key.strip()] = float(val)
        if kind in ("quartic_quadratic", "qq"):
            return quartic_quadratic(params["k"], params["q"])
        if kind in ("shifted_harmonic", "shifted"):
            return shifted_harmonic(params["bx"], params["by"])
    except (ValueError, KeyError) as exc:
        raise ConfigurationError(
            "could not parse potential %r: %s" % (text, exc))
    raise ConfigurationError("unknown potential kind %r" % kind)


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    if not os.path.exists(path):
        raise ConfigurationError("config file %s not found" % path)
    with open(path) as fh:
        try:
            cfg = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigurationError("config parse error: %s" % exc)
    if not isinstance(cfg, dict):
        raise ConfigurationError("config root must be a mapping")
    known = {"grid", "problem", "minimize", "sweep", "output", "trial",
             "spectrum", "townes"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigurationError(
            "unknown config sections %s; known: %s"
            % (sorted(unknown), sorted(known)))
    return cfg


def _pick(flag, cfg: dict, dotted: str, default):
    """Flag > config > default, with numeric coercion to default's type."""
    val = flag
    if val is None:
        cur = cfg
        for part in dotted.split("."):
            if not isinstance(cur, dict) or part not in cur:
                cur = None
                break
            cur = cur[part]
        val = cur
    if val is None:
        return default
    if isinstance(default, bool):
        if isinstance(val, str):
            return val.lower() in ("1", "true", "yes", "on")
        return bool(val)
    if isinstance(default, int) and not isinstance(default, bool):
        return int(val)
    if isinstance(default, float):
        return float(val)
    return val


def _check_seed(seed: int) -> int:
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigurationError("seed must be a 64-bit unsigned value")
    return int(seed)


def _outdir(ns, cfg, command: str) -> str:
    out = _pick(getattr(ns, "out", None), cfg, "output.dir",
                os.path.join("runs", command))
    os.makedirs(out, exist_ok=True)
    probe = os.path.join(out, ".write_probe")
    try:
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise ConfigurationError(
            "output directory %s not writable: %s" % (out, exc))
    return out


def _townes_block(profile, consts) -> dict:
    return {
        "w0": consts.w0, "a_star": consts.a_star,
        "grad_sq": consts.grad_sq, "m4": consts.m4, "m2": consts.m2,
        "r_max": profile.r_max, "h_r": profile.h_r,
    }


def _derived_block(spec: PotentialSpec, omega: float, profile, consts) -> dict:
    eff = effective_potential(spec, omega)
    star = eff.omega_star
    try:
        lam = lambda_const(eff, consts, profile)
    except RotbecError:
        lam = None
    return {
        "potential_tag": spec.tag(),
        "omega": omega,
        "omega_star": star if star == OMEGA_STAR_INF else float(star),
        "gamma": eff.gamma,
        "p": eff.p,
        "lambda": lam,
        "regime_note": eff.regime_note,
    }


def _result_row(res: MinimizeResult, spec: PotentialSpec, n: int,
                L: float) -> dict:
    b = res.breakdown
    return {
        "a": res.a,
        "a_over_astar": res.a / default_townes()[1].a_star,
        "omega": res.omega,
        "potential_tag": spec.tag(),
        "n": n, "L": L,
        "eps_a": res.eps_a,
        "x_a_x": float(res.x_a[0]), "x_a_y": float(res.x_a[1]),
        "mu": res.mu,
        "total": b.total, "kinetic": b.kinetic, "potential": b.potential,
        "interaction": b.interaction, "rotation": b.rotation,
        "covariant_kinetic": b.covariant_kinetic, "veff": b.veff,
        "residual": res.residual, "steps": res.steps,
        "converged": bool(res.converged),
    }


def _minimize_config(ns, cfg) -> MinimizeConfig:
    return MinimizeConfig(
        dt=_pick(ns.dt, cfg, "minimize.dt", 5e-3),
        tol=_pick(ns.tol, cfg, "minimize.tol", 1e-9),
        max_steps=_pick(ns.max_steps, cfg, "minimize.max_steps", 200000),
        init=_pick(getattr(ns, "init", None), cfg, "minimize.init",
                   "gaussian"),
        strict=bool(getattr(ns, "strict", False)
                    or _pick(None, cfg, "minimize.strict", False)),
        n=_pick(ns.n, cfg, "grid.n", 256),
        L=_pick(ns.L, cfg, "grid.L", 12.0),
        seed=_check_seed(_pick(ns.seed, cfg, "minimize.seed", 0)),
        dt_max=_pick(getattr(ns, "dt_max", None), cfg, "minimize.dt_max",
                     0.05),
        pot_cap=_pick(None, cfg, "minimize.pot_cap", 200.0),
        perturb_amp=_pick(None, cfg, "minimize.perturb_amp", 1e-5),
        workers=_pick(getattr(ns, "workers", None), cfg, "sweep.workers", 1),
    )


def _config_block(mc: MinimizeConfig) -> dict:
    return {
        "grid": {"n": mc.n, "L": mc.L},
        "minimize": {
            "dt": mc.dt, "dt_max": mc.dt_max, "tol": mc.tol,
            "max_steps": mc.max_steps, "init": mc.init, "seed": mc.seed,
            "pot_cap": mc.pot_cap, "perturb_amp": mc.perturb_amp,
            "strict": mc.strict, "workers": mc.workers,
        },
    }


def _resolve_a(ns, cfg, a_star: float, allow_list: bool = False):
    a_flag = getattr(ns, "a", None)
    ratio_flag = getattr(ns, "a_over_astar", None)
    a_conf = _pick(None, cfg, "problem.a", None)
    ratio_conf = _pick(None, cfg, "problem.a_over_astar", None)
    a_val = a_flag if a_flag is not None else a_conf
    ratio_val = ratio_flag if ratio_flag is not None else ratio_conf
    if (a_val is None) == (ratio_val is None):
        raise ConfigurationError(
            "exactly one of --a and --a-over-astar must be given")

    def to_list(v):
        if isinstance(v, str):
            return [float(t) for t in v.split(",") if t.strip()]
        if isinstance(v, (list, tuple)):
            return [float(t) for t in v]
        return [float(v)]

    if a_val is not None:
        vals = to_list(a_val)
    else:
        vals = [r * a_star for r in to_list(ratio_val)]
    if not allow_list:
        if len(vals) != 1:
            raise ConfigurationError("this command takes a single a value")
        return vals[0]
    return vals


# ---------------------------------------------------------------------------
# subcommands

def cmd_townes(ns) -> int:
    cfg = _load_config(ns.config)
    out = _outdir(ns, cfg, "townes")
    r_max = _pick(ns.r_max, cfg, "townes.r_max", 20.0)
    h_r = _pick(ns.h_r, cfg, "townes.h_r", 0.005)
    tol = _pick(ns.ode_tol, cfg, "townes.tol", 1e-12)
    profile = solve_townes(r_max=r_max, h_r=h_r, tol=tol)
    consts = townes_constants(profile)
    mid = a_star_midpoint(profile)
    agree = abs(mid - consts.a_star) / consts.a_star
    manifest = {
        "command": "townes", "version": __version__,
        "config": {"townes": {"r_max": r_max, "h_r": h_r, "tol": tol},
                   "output_dir": out},
        "townes": dict(_townes_block(profile, consts),
                       a_star_midpoint=mid, quadrature_agreement=agree),
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    if ns.export:
        export_profile(profile, ns.export)
    print("w0        = %s" % _fmt(consts.w0))
    print("a_star    = %s" % _fmt(consts.a_star))
    print("a_star'   = %s  (midpoint cross-check, rel diff %.2e)"
          % (_fmt(mid), agree))
    print("grad_sq   = %s" % _fmt(consts.grad_sq))
    print("m4        = %s" % _fmt(consts.m4))
    print("m2        = %s" % _fmt(consts.m2))
    print("manifest  : %s" % os.path.join(out, "manifest.json"))
    return 0


def _solve_scale_for(ns, cfg, a: float, omega: float, spec: PotentialSpec,
                     a_star: float) -> float:
    mode = _pick(getattr(ns, "solve_scale", None), cfg,
                 "minimize.solve_scale", "auto")
    if isinstance(mode, str) and mode != "auto":
        return float(mode)
    if isinstance(mode, (int, float)):
        return float(mode)
    if a / a_star > 0.5:
        try:
            probe = gp_problem(a, omega, spec, a_star=a_star)
            return predicted_eps(probe)
        except RotbecError:
            return 1.0
    return 1.0


def cmd_minimize(ns) -> int:
    cfg = _load_config(ns.config)
    out = _outdir(ns, cfg, "minimize")
    profile, consts = default_townes()
    spec = parse_potential(_pick(ns.potential, cfg, "problem.potential",
                                 "harmonic"))
    omega = _pick(ns.omega, cfg, "problem.omega", 0.0)
    a = _resolve_a(ns, cfg, consts.a_star)
    mc = _minimize_config(ns, cfg)
    scale = _solve_scale_for(ns, cfg, a, omega, spec, consts.a_star)
    prob = gp_problem(a, omega, spec, solve_scale=scale,
                      a_star=consts.a_star)
    if ns.multistart:
        res, _ = multistart_minimize(prob, mc)
    else:
        res = minimize(prob, mc)
    row = _result_row(res, spec, mc.n, mc.L)
    manifest = {
        "command": "minimize", "version": __version__,
        "config": dict(_config_block(mc),
                       problem={"a": a, "omega": omega,
                                "potential": spec.tag(),
                                "solve_scale": res.solve_scale,
                                "multistart": bool(ns.multistart)},
                       output_dir=out),
        "townes": _townes_block(profile, consts),
        "derived": _derived_block(spec, omega, profile, consts),
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    _write_csv(os.path.join(out, "result.csv"), CSV_COLUMNS, [row])
    snap = os.path.join(out, "field.rbec")
    save_snapshot(snap + ".tmp", res.field, a, omega, spec)
    os.replace(snap + ".tmp", snap)
    _write_json(os.path.join(out, "result.json"), {
        "row": {k: row[k] for k in CSV_COLUMNS},
        "solve_scale": res.solve_scale,
        "trial_bound": res.trial_bound,
        "non_global": res.non_global,
        "boundary_mass": res.boundary_mass,
        "multistart_spread": res.multistart_spread,
        "snapshot": "field.rbec",
    })
    if ns.plots:
        from .plots import plot_energy_history, plot_field
        plot_field(res.field, os.path.join(out, "field.png"),
                   title="a=%.6g omega=%.3g" % (a, omega))
        plot_energy_history([res.energy_history], ["minimize"],
                            os.path.join(out, "history.png"))
    print("converged=%s steps=%d total=%s mu=%s eps_a=%s residual=%.3e"
          % (res.converged, res.steps, _fmt(res.breakdown.total),
             _fmt(res.mu), _fmt(res.eps_a), res.residual))
    if res.non_global:
        print("warning: energy exceeds the trial upper bound %.6g by >0.5%%"
              % res.trial_bound)
    if not res.converged:
        print("error: flow did not converge within %d steps" % mc.max_steps)
        return 3
    return 0


def _sweep_identity(spec, omega, mc: MinimizeConfig, rescale: bool,
                    index: int, a: float) -> str:
    payload = json.dumps({
        "tag": spec.tag(), "omega": omega, "n": mc.n, "L": mc.L,
        "dt": mc.dt, "tol": mc.tol, "seed": mc.seed, "rescale": rescale,
        "index": index, "a": "%.15g" % a,
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def cmd_sweep(ns) -> int:
    cfg = _load_config(ns.config)
    out = _outdir(ns, cfg, "sweep")
    profile, consts = default_townes()
    a_star = consts.a_star
    spec = parse_potential(_pick(ns.potential, cfg, "problem.potential",
                                 "harmonic"))
    omega = _pick(ns.omega, cfg, "problem.omega", 0.0)
    a_values = sorted(_resolve_a(ns, cfg, a_star, allow_list=True))
    mc = _minimize_config(ns, cfg)
    rescale = _pick(ns.rescale, cfg, "sweep.rescale", True)
    multistart = _pick(ns.multistart, cfg, "sweep.multistart", True)

    rows_path = os.path.join(out, "rows.jsonl")
    done = {}
    if os.path.exists(rows_path):
        with open(rows_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                snap = os.path.join(out, rec["snapshot"])
                if os.path.exists(snap):
                    done[rec["snapshot"]] = rec

    results = []
    records = []
    prev_field = None
    prev_scale = None
    any_failed = False
    for i, a in enumerate(a_values):
        scale = 1.0
        if rescale and a / a_star > 0.5:
            try:
                probe = gp_problem(a, omega, spec, a_star=a_star)
                scale = predicted_eps(probe)
            except RotbecError:
                scale = 1.0
        snap_name = "pt%03d_%s.rbec" % (
            i, _sweep_identity(spec, omega, mc, rescale, i, a))
        prob = gp_problem(a, omega, spec, solve_scale=scale, a_star=a_star)
        if snap_name in done:
            rec = done[snap_name]
            f, _, _, _ = load_snapshot(os.path.join(out, snap_name))
            res = _rebuild_result(rec, f)
            print("point %d/%d a/a*=%.4g: resumed from %s"
                  % (i + 1, len(a_values), a / a_star, snap_name))
        else:
            warm = None
            if prev_field is not None:
                if (prev_scale != 1.0) == (scale != 1.0):
                    warm = prev_field
                else:
                    warm = resample_field(prev_field, Grid2D(mc.n, mc.L),
                                          ratio=scale / prev_scale)
            if prev_field is None and multistart:
                res, _ = multistart_minimize(prob, mc)
            else:
                res = minimize(prob, mc, warm_start=warm)
            snap_path = os.path.join(out, snap_name)
            save_snapshot(snap_path + ".tmp", res.field, a, omega, spec)
            os.replace(snap_path + ".tmp", snap_path)
            rec = {
                "index": i, "snapshot": snap_name,
                "solve_scale": res.solve_scale,
                "trial_bound": res.trial_bound,
                "non_global": res.non_global,
                "boundary_mass": res.boundary_mass,
                "multistart_spread": res.multistart_spread,
                "row": _result_row(res, spec, mc.n, mc.L),
            }
            with open(rows_path, "a") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            print("point %d/%d a/a*=%.4g: converged=%s steps=%d total=%s"
                  % (i + 1, len(a_values), a / a_star, res.converged,
                     res.steps, _fmt(res.breakdown.total)))
        results.append(res)
        records.append(rec)
        if res.converged:
            prev_field = res.field
            prev_scale = res.solve_scale
        else:
            any_failed = True

    _write_csv(os.path.join(out, "sweep.csv"), CSV_COLUMNS,
               [r["row"] for r in records])
    manifest = {
        "command": "sweep", "version": __version__,
        "config": dict(_config_block(mc),
                       problem={"a_values": list(a_values), "omega": omega,
                                "potential": spec.tag()},
                       sweep={"rescale": rescale, "multistart": multistart},
                       output_dir=out),
        "townes": _townes_block(profile, consts),
        "derived": _derived_block(spec, omega, profile, consts),
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    if any_failed:
        print("warning: some points did not converge (flagged in CSV)")
    if ns.analyze:
        _analyze_results(results, spec, omega, out, bool(ns.plots))
    print("sweep CSV: %s" % os.path.join(out, "sweep.csv"))
    return 0


def _rebuild_result(rec: dict, f) -> MinimizeResult:
    from .energy import EnergyBreakdown
    row = rec["row"]
    breakdown = EnergyBreakdown(
        kinetic=row["kinetic"], potential=row["potential"],
        interaction=row["interaction"], rotation=row["rotation"],
        total=row["total"], covariant_kinetic=row["covariant_kinetic"],
        veff=row["veff"])
    return MinimizeResult(
        field=f, solve_scale=rec["solve_scale"], breakdown=breakdown,
        mu=row["mu"], eps_a=row["eps_a"],
        x_a=np.array([row["x_a_x"], row["x_a_y"]]),
        steps=int(row["steps"]), converged=bool(row["converged"]),
        energy_history=np.array([]), residual=row["residual"],
        boundary_mass=rec.get("boundary_mass", 0.0),
        trial_bound=rec.get("trial_bound", math.inf),
        non_global=rec.get("non_global", False),
        a=row["a"], omega=row["omega"],
        multistart_spread=rec.get("multistart_spread", 0.0))


def _analyze_results(results, spec: PotentialSpec, omega: float, out: str,
                     plots: bool) -> None:
    profile, consts = default_townes()
    a_star = consts.a_star
    eff = effective_potential(spec, omega)
    conv = [r for r in results if r.converged]
    lines = ["analysis report", "=" * 15, ""]
    lines.append("potential  : %s" % spec.tag())
    lines.append("omega      : %s" % _fmt(omega))
    lines.append("a_star     : %s" % _fmt(a_star))
    lines.append("points     : %d (%d converged)"
                 % (len(results), len(conv)))
    try:
        lam = lambda_const(eff, consts, profile)
        lines.append("lambda     : %s" % _fmt(lam))
    except RotbecError as exc:
        lam = None
        lines.append("lambda     : unavailable (%s)" % exc)
    lines.append("gamma      : %s" % _fmt(eff.gamma))
    lines.append("")

    energy_fit = width_fit = None
    if lam is not None:
        pts_e = [(r.a, abs(r.breakdown.total)) for r in conv]
        pts_w = [(r.a, r.eps_a) for r in conv]
        try:
            energy_fit = fit_scaling(pts_e, "energy", a_star, eff.gamma, lam)
            width_fit = fit_scaling(pts_w, "epsilon", a_star, eff.gamma, lam)
        except ConfigurationError as exc:
            lines.append("scaling fits skipped: %s" % exc)
    fit_rows = []
    for name, fit in (("energy", energy_fit), ("epsilon", width_fit)):
        if fit is None:
            continue
        fit_rows.append({
            "mode": name, "exponent": fit.exponent,
            "coefficient": fit.coefficient, "r_squared": fit.r_squared,
            "predicted_exponent": fit.predicted_exponent,
            "predicted_coefficient": fit.predicted_coefficient,
        })
        lines.append("%s fit : exponent %.4f (predicted %.4f), "
                     "coefficient %.5g (predicted %.5g), r^2 %.6f"
                     % (name, fit.exponent, fit.predicted_exponent,
                        fit.coefficient, fit.predicted_coefficient,
                        fit.r_squared))
        if fit.r_squared < 0.99:
            lines.append("  warning: r^2 below 0.99")
    if fit_rows:
        _write_csv(os.path.join(out, "report_fits.csv"),
                   list(fit_rows[0].keys()), fit_rows)
    lines.append("")

    prof_rows = []
    last_obs = None
    for r in conv:
        try:
            obs = blowup_rescale(r, profile, consts)
        except RotbecError as exc:
            lines.append("blowup skipped at a=%.6g: %s" % (r.a, exc))
            continue
        audit = energy_identity_audit(r, consts)
        prof_rows.append({
            "a": r.a, "a_over_astar": r.a / a_star, "eps_a": r.eps_a,
            "modulus_sup_err": obs.modulus_sup_err,
            "profile_sup_err": obs.profile_sup_err,
            "imag_l2": obs.imag_l2, "imag_h1": obs.imag_h1,
            "theta_a": obs.theta_a, "windings": len(obs.windings),
            "identity_defect": audit.defect, "bracket": audit.bracket,
        })
        last_obs = obs
    if prof_rows:
        _write_csv(os.path.join(out, "report_profile.csv"),
                   list(prof_rows[0].keys()), prof_rows)
        lines.append("profile deviation (modulus sup err) by a/a*:")
        for row in prof_rows:
            lines.append("  %.5f : %.5g   (windings %d, imag_l2 %.3g)"
                         % (row["a_over_astar"], row["modulus_sup_err"],
                            row["windings"], row["imag_l2"]))
        lines.append("")

    mu_rep = mu_limit_check(conv, a_star) if conv else None
    if mu_rep is not None:
        mu_rows = [{
            "a": mu_rep.a[i], "mu_eps_sq": mu_rep.mu_eps_sq[i],
            "one_plus": mu_rep.one_plus[i],
            "eps_fourth": mu_rep.eps_fourth[i], "ratio": mu_rep.ratio[i],
        } for i in range(len(mu_rep.a))]
        _write_csv(os.path.join(out, "report_mu.csv"),
                   list(mu_rows[0].keys()), mu_rows)
        lines.append("multiplier limit: trend_ok=%s in_range=%s"
                     % (mu_rep.trend_ok, mu_rep.in_range))
    drift = x_a_drift_check(conv, eff, profile) if conv else None
    if drift is not None:
        dr = [{"a": drift.a[i], "drift": drift.drift[i],
               "x_a_norm": drift.x_a_norm[i]} for i in range(len(drift.a))]
        _write_csv(os.path.join(out, "report_drift.csv"),
                   list(dr[0].keys()), dr)
        lines.append("peak drift: final_ok=%s (last drift %.4g)"
                     % (drift.final_ok, drift.drift[-1]))
    lines.append("")

    gaps = [a_star - r.a for r in conv]
    if conv:
        _atomic_write(os.path.join(out, "energy_vs_gap.dat"),
                      "\n".join("%s %s" % (_fmt(g),
                                           _fmt(abs(r.breakdown.total)))
                                for g, r in zip(gaps, conv)) + "\n")
        _atomic_write(os.path.join(out, "eps_vs_gap.dat"),
                      "\n".join("%s %s" % (_fmt(g), _fmt(r.eps_a))
                                for g, r in zip(gaps, conv)) + "\n")
    _atomic_write(os.path.join(out, "report.txt"), "\n".join(lines) + "\n")
    print("\n".join(lines))

    if plots and conv:
        from .plots import (plot_field, plot_profile_convergence,
                            plot_scaling)
        if energy_fit is not None:
            plot_scaling(gaps, [abs(r.breakdown.total) for r in conv],
                         [r.eps_a for r in conv], energy_fit, width_fit,
                         os.path.join(out, "scaling.png"))
        if prof_rows:
            plot_profile_convergence(
                [row["a_over_astar"] for row in prof_rows],
                [row["modulus_sup_err"] for row in prof_rows],
                last_obs, os.path.join(out, "profiles.png"))
        plot_field(conv[-1].field, os.path.join(out, "field_final.png"),
                   title="a/a*=%.4g" % (conv[-1].a / a_star))


def cmd_analyze(ns) -> int:
    cfg = _load_config(ns.config)
    sweep_dir = ns.sweep_dir
    if not sweep_dir or not os.path.isdir(sweep_dir):
        raise ConfigurationError("--sweep-dir must point at a sweep output")
    rows_path = os.path.join(sweep_dir, "rows.jsonl")
    if not os.path.exists(rows_path):
        raise ConfigurationError("no rows.jsonl in %s" % sweep_dir)
    out = _outdir(ns, cfg, "analyze")
    recs = []
    with open(rows_path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                recs.append(json.loads(line))
    recs.sort(key=lambda r: r["row"]["a"])
    results = []
    spec = None
    omega = 0.0
    for rec in recs:
        snap = os.path.join(sweep_dir, rec["snapshot"])
        if not os.path.exists(snap):
            continue
        f, a, om, sp = load_snapshot(snap)
        spec = sp
        omega = om
        results.append(_rebuild_result(rec, f))
    if not results:
        raise ConfigurationError("no complete sweep points found")
    _analyze_results(results, spec, omega, out, bool(ns.plots))
    return 0


def cmd_trial_scan(ns) -> int:
    cfg = _load_config(ns.config)
    out = _outdir(ns, cfg, "trial-scan")
    profile, consts = default_townes()
    spec = parse_potential(_pick(ns.potential, cfg, "problem.potential",
                                 "harmonic"))
    omega = _pick(ns.omega, cfg, "problem.omega", 0.0)
    a = _resolve_a(ns, cfg, consts.a_star)
    unsafe = bool(ns.unsafe_nonexistence_scan)
    prob = gp_problem(a, omega, spec, a_star=consts.a_star,
                      unsafe_nonexistence=unsafe)
    tau_min = _pick(ns.tau_min, cfg, "trial.tau_min", 1.0)
    tau_max = _pick(ns.tau_max, cfg, "trial.tau_max", 40.0)
    tau_count = _pick(ns.tau_count, cfg, "trial.tau_count", 16)
    x0 = (0.0, 0.0)
    if ns.x0:
        parts = [float(t) for t in ns.x0.split(",")]
        if len(parts) != 2:
            raise ConfigurationError("--x0 takes 'x,y'")
        x0 = tuple(parts)
    taus = np.geomspace(tau_min, tau_max, tau_count)
    scan = trial_energy_scan(prob, taus, x0=x0, profile=profile,
                             consts=consts)
    rows = [{"tau": t, "tau_sq": t * t, "energy": en}
            for t, en in zip(scan.tau, scan.energy)]
    _write_csv(os.path.join(out, "trial_scan.csv"),
               ["tau", "tau_sq", "energy"], rows)
    manifest = {
        "command": "trial-scan", "version": __version__,
        "config": {"problem": {"a": a, "omega": omega,
                               "potential": spec.tag(),
                               "unsafe_nonexistence_scan": unsafe},
                   "trial": {"tau_min": tau_min, "tau_max": tau_max,
                             "tau_count": tau_count, "x0": list(x0)},
                   "output_dir": out},
        "townes": _townes_block(profile, consts),
        "derived": dict(_derived_block(spec, omega, profile, consts),
                        slope=scan.slope,
                        min_energy=float(scan.energy.min())),
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    if ns.plots:
        from .plots import plot_trial_scan
        plot_trial_scan(scan, os.path.join(out, "trial_scan.png"))
    print("slope of energy vs tau^2: %s" % _fmt(scan.slope))
    print("min energy over scan    : %s" % _fmt(float(scan.energy.min())))
    print("table: %s" % os.path.join(out, "trial_scan.csv"))
    return 0


def cmd_spectrum(ns) -> int:
    cfg = _load_config(ns.config)
    out = _outdir(ns, cfg, "spectrum")
    profile, consts = default_townes()
    pairs = []
    for item in (ns.pairs or "L:0,L_hat:1,L_hat:0").split(","):
        op, _, sec = item.partition(":")
        if op not in ("L", "L_hat") or not sec.isdigit():
            raise ConfigurationError(
                "spectrum pair %r not understood; expected OP:SECTOR" % item)
        pairs.append((op, int(sec)))
    count = _pick(ns.count, cfg, "spectrum.count", 3)
    h = _pick(None, cfg, "spectrum.h", 0.01)
    r_max = _pick(None, cfg, "spectrum.r_max", 20.0)
    entries = []
    for op, sec in pairs:
        rep = linearized_spectrum(profile, op=op, sector=sec, count=count,
                                  h=h, r_max=r_max, consts=consts)
        entries.append({
            "operator": op, "sector": sec,
            "lowest_eigs": [float(v) for v in rep.lowest_eigs],
            "residuals": [float(v) for v in rep.residuals],
            "kernel_cosine": None if math.isnan(rep.kernel_cosine)
            else rep.kernel_cosine,
        })
        eig_text = ", ".join("%.6g" % v for v in rep.lowest_eigs)
        extra = ""
        if not math.isnan(rep.kernel_cosine):
            extra = "  kernel cosine %.8f" % rep.kernel_cosine
        print("%-5s m=%d : %s%s" % (op, sec, eig_text, extra))
    _write_json(os.path.join(out, "spectrum.json"), {
        "version": __version__,
        "config": {"count": count, "h": h, "r_max": r_max},
        "townes": _townes_block(profile, consts),
        "entries": entries,
    })
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotbec",
        description="Ground states of the planar rotating attractive "
                    "condensate energy, with collapse-limit analysis.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--plots", action=argparse.BooleanOptionalAction,
                       default=None, help="render figures")
        if grid:
            p.add_argument("--n", type=int, help="grid points per axis")
            p.add_argument("--L", type=float, help="half box size")
            p.add_argument("--dt", type=float)
            p.add_argument("--dt-max", dest="dt_max", type=float)
            p.add_argument("--tol", type=float)
            p.add_argument("--max-steps", dest="max_steps", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--strict", action="store_true")
            p.add_argument("--workers", type=int)

    def problem(p, lists=False):
        p.add_argument("--a", help="interaction strength"
                       + (" (comma list allowed)" if lists else ""))
        p.add_argument("--a-over-astar", dest="a_over_astar",
                       help="interaction strength relative to critical"
                       + (" (comma list allowed)" if lists else ""))
        p.add_argument("--omega", type=float, help="rotation speed")
        p.add_argument("--potential",
                       help="harmonic | power:S | quartic_quadratic:k=K,q=Q"
                            " | shifted_harmonic:bx=X,by=Y")

    p = sub.add_parser("townes", help="critical profile and constants")
    common(p, grid=False)
    p.add_argument("--r-max", dest="r_max", type=float)
    p.add_argument("--h-r", dest="h_r", type=float)
    p.add_argument("--ode-tol", dest="ode_tol", type=float)
    p.add_argument("--export", help="write the radial profile to this path")
    p.set_defaults(func=cmd_townes)

    p = sub.add_parser("minimize", help="single ground-state solve")
    common(p)
    problem(p)
    p.add_argument("--init", choices=["gaussian", "vortex", "random"])
    p.add_argument("--solve-scale", dest="solve_scale",
                   help="'auto' (default) or a numeric frame scale")
    p.add_argument("--multistart", action="store_true",
                   help="best of gaussian/vortex/2 random starts")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("sweep", help="warm-started continuation sweep")
    common(p)
    problem(p, lists=True)
    p.add_argument("--rescale", action=argparse.BooleanOptionalAction,
                   default=None, help="solve in predicted-width frames")
    p.add_argument("--multistart", action=argparse.BooleanOptionalAction,
                   default=None, help="multi-start the first point")
    p.add_argument("--analyze", action="store_true",
                   help="run the analysis report after the sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trial-scan",
                       help="trial-family energies over the width parameter")
    common(p, grid=False)
    problem(p)
    p.add_argument("--tau-min", dest="tau_min", type=float)
    p.add_argument("--tau-max", dest="tau_max", type=float)
    p.add_argument("--tau-count", dest="tau_count", type=int)
    p.add_argument("--x0", help="trial center 'x,y'")
    p.add_argument("--unsafe-nonexistence-scan", action="store_true",
                   help="allow a >= a* or omega >= omega* in the scan")
    p.set_defaults(func=cmd_trial_scan)

    p = sub.add_parser("analyze", help="post-process a finished sweep")
    common(p, grid=False)
    p.add_argument("--sweep-dir", dest="sweep_dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("spectrum", help="radial linearization spectra")
    common(p, grid=False)
    p.add_argument("--pairs", help="comma list of OP:SECTOR "
                                   "(default L:0,L_hat:1,L_hat:0)")
    p.add_argument("--count", type=int, help="eigenvalues per pair")
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if getattr(ns, "plots", None) is None:
        # report paths render figures by default
        ns.plots = ns.command in ("sweep", "analyze", "trial-scan")
    try:
        return ns.func(ns)
    except ConfigurationError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 2
    except NumericalError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3
    except AccuracyError as exc:
        print("accuracy gate failure: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Usage::

    backaction spectrum --config job.json --out results/spectrum.csv
    backaction energy --config job.json --out results/energy.csv --verbose

Every subcommand writes a CSV table and a JSON sidecar (same stem, ``.json``)
echoing the resolved configuration.  Files appear only when the whole job
succeeded.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, fullmodel, metrology, sideband, verify
from .errors import BackactionError, ConfigurationError
from .physparams import HBAR, LabParams, SystemParams, derive_system, eta, validate_resolved_sideband

log = logging.getLogger("backaction")

MODES = ("spectrum", "energy", "force-min", "cancel-check", "compare")
TWO_PI = 2.0 * math.pi


class SchemaError(ConfigurationError):
    """The configuration document does not match the job schema."""


def load_schema(name: str) -> dict:
    return json.loads(resources.files("backaction.schemas").joinpath(name).read_text(encoding="utf-8"))


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON in {path}: {exc}") from None
    validate_config(config)
    return config


def validate_config(config) -> None:
    validator = jsonschema.Draft202012Validator(load_schema("job_config.v1.json"))
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(f"config field '{where}': {err.message}")


def _rate(block: dict, name: str, where: str, required: bool = True, default=None):
    """Read ``name_rad_s`` or ``name_hz`` (converted to rad/s)."""
    keys = [k for k in (f"{name}_rad_s", f"{name}_hz") if k in block]
    if len(keys) > 1:
        raise SchemaError(f"config field '{where}/{name}': give either {name}_rad_s or {name}_hz, not both")
    if not keys:
        if required:
            raise SchemaError(f"config field '{where}/{name}_rad_s': required (or {name}_hz)")
        return default
    value = float(block[keys[0]])
    return value * TWO_PI if keys[0].endswith("_hz") else value


def resolve_system(config: dict):
    """Build ``(SystemParams, mass or None)`` from the parameter block."""
    params = config["parameters"]
    if "lab" in params:
        b = params["lab"]
        where = "parameters/lab"
        lab = LabParams(
            m=b["m_kg"],
            L=b["L_m"],
            omega_m=_rate(b, "omega_m", where),
            gamma_m=_rate(b, "gamma_m", where),
            T_mirror=b["T_mirror"],
            I0=b["I0_W"],
            k=b["k_per_m"],
            n_T=b.get("n_T", 0.0),
            detuning_sign=b.get("detuning_sign", 1),
        )
        return derive_system(lab), lab.m
    b = params["system"]
    where = "parameters/system"
    m = b.get("m_kg")
    omega_m = _rate(b, "omega_m", where)
    phase = b.get("G0_phase_rad", 0.0)
    g0 = _rate(b, "G0_abs", where, required=False, default=0.0)
    x0 = None
    if m is not None and m > 0 and omega_m > 0:
        x0 = math.sqrt(HBAR / (2.0 * m * omega_m))
    sysp = SystemParams(
        gamma=_rate(b, "gamma", where),
        gamma_m=_rate(b, "gamma_m", where),
        omega_m=omega_m,
        G0=g0 * complex(math.cos(phase), math.sin(phase)),
        n_T=b.get("n_T", 0.0),
        detuning_sign=b.get("detuning_sign", 1),
        x0=x0,
    )
    return sysp, m


def _nu_grid(config: dict, sysp: SystemParams) -> np.ndarray:
    g = config.get("grid", {})
    lo = _rate(g, "nu_min", "grid", required=False)
    hi = _rate(g, "nu_max", "grid", required=False)
    n = g.get("n_points", 101)
    if lo is None or hi is None:
        width = sysp.gamma_m + abs(eta(sysp, 0.0).real)
        lo, hi = -10.0 * width, 10.0 * width
    if not hi > lo and n > 1:
        raise SchemaError(f"config field 'grid': nu_max ({hi}) must exceed nu_min ({lo})")
    return np.linspace(lo, hi, n)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    return format(float(x), ".16e")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _system_dict(s: SystemParams) -> dict:
    return {
        "gamma_rad_s": s.gamma,
        "gamma_m_rad_s": s.gamma_m,
        "omega_m_rad_s": s.omega_m,
        "G0_abs_rad_s": s.G0_abs,
        "G0_phase_rad": s.pump_phase,
        "n_T": s.n_T,
        "detuning_sign": s.detuning_sign,
        "x0_m": s.x0,
    }


def _run_spectrum(config, sysp, mass):
    model = config.get("model", "rsb")
    theta = config.get("theta_rad", 0.0)
    nu = _nu_grid(config, sysp)
    if model == "rsb":
        S = np.atleast_1d(sideband.quadrature_spectrum_from_rows(sideband.solve_rows(sysp, nu), theta, sysp.n_T))
    else:
        S = np.atleast_1d(fullmodel.spectrum(sysp, sysp.omega_m + nu, sysp.Delta, theta))
    csv = _csv(["nu_rad_s", "S_y"], zip(nu, S))
    check = _sideband_check(sysp)
    return csv, {"n_points": int(nu.size), "resolved_sideband_check": check}


def _sideband_check(sysp):
    c = validate_resolved_sideband(sysp)
    return {
        "passed": c.passed,
        "gamma_over_gamma_m": c.cavity_to_mechanical_damping if math.isfinite(c.cavity_to_mechanical_damping) else None,
        "omega_m_over_gamma": c.mechanical_to_cavity_rate,
        "min_ratio": c.min_ratio,
    }


def _run_energy(config, sysp, mass):
    model = config.get("model", "rsb")
    rows = []
    n_closed = sideband.mean_phonon_closed(sysp)
    hw = HBAR * sysp.omega_m
    rows.append(("closed", n_closed, hw * (n_closed + 0.5)))
    result = {"closed": {"mean_phonon_number": n_closed, "energy_J": hw * (n_closed + 0.5)}}
    if model == "full":
        integ = fullmodel.integrate_phonons(sysp, sysp.Delta)
        rows.append(("full", integ.n_phonon, hw * (integ.n_phonon + 0.5)))
        result["full"] = {
            "mean_phonon_number": integ.n_phonon,
            "energy_J": hw * (integ.n_phonon + 0.5),
            "n_points": integ.n_points,
            "relative_change": integ.relative_change,
        }
    return _csv(["method", "mean_phonon_number", "energy_J"], rows), result


def _run_force_min(config, sysp, mass):
    met = config.get("metrology", {})
    if "tau_s" not in met:
        raise SchemaError("config field 'metrology/tau_s': required for force-min")
    m = met.get("m_kg", mass)
    if m is None:
        raise SchemaError("config field 'metrology/m_kg': required when parameters come from a system block")
    band = config.get("band_convention", "symmetric")
    branch = met.get("branch", "exact")
    budget = metrology.force_budget(
        m,
        sysp.omega_m,
        sysp.gamma_m,
        sysp.n_T,
        met["tau_s"],
        band=band,
        branch=branch,
        detuning_sign=sysp.detuning_sign,
        n_grid=met.get("n_points", 101),
    )
    f0_sql, F_sql, xi_sql = metrology.sql_force(m, sysp.omega_m, met["tau_s"], band=band, branch=branch)
    result = budget.summary()
    result["sql"] = {"f0": f0_sql, "F0_N": F_sql, "xi": xi_sql, "F0_N_convention": "F = f0*sqrt(2*hbar*m*omega_m)"}
    return _csv(["nu_rad_s", "S_f"], zip(budget.nu, budget.S_f)), result


def _pump_grid(config, sysp):
    g = config.get("grid", {})
    n = g.get("n_pump", 7)
    lo = g.get("eta_min_rad_s")
    hi = g.get("eta_max_rad_s")
    if lo is None or hi is None:
        base = max(sysp.gamma_m, abs(eta(sysp, 0.0).real), 1e-12 * sysp.gamma)
        lo, hi = 0.1 * base, base
    if not hi > lo:
        raise SchemaError(f"config field 'grid': eta_max_rad_s ({hi}) must exceed eta_min_rad_s ({lo})")
    return verify.chebyshev_grid(lo, hi, n)


def _run_cancel_check(config, sysp, mass):
    v = config.get("verification", {})
    model = config.get("model", "rsb")
    theta = config.get("theta_rad", 0.0)
    grid = _pump_grid(config, sysp)
    nu = v.get("nu_rad_s", 0.0)
    ratios = config.get("grid", {}).get("ratios", [1e-1, 1e-2, 1e-3])
    report = verify.build_report(
        sysp, grid, theta, model, nu=nu, ratios=ratios, n_audit=v.get("n_audit", 200), seed=v.get("seed", 0)
    )
    doc = report.to_dict()
    jsonschema.validate(doc, load_schema("verification_report.v1.json"))
    return _csv(["eta_r_rad_s", "S_y_minus_half"], zip(grid, doc["details"]["excess"])), doc


def _run_compare(config, sysp, mass):
    ratios = config.get("grid", {}).get("ratios", [1e-1, 1e-2, 1e-3])
    nu = _nu_grid(config, sysp)
    table = verify.compare_models(sysp, ratios, nu, theta=config.get("theta_rad", 0.0))
    csv = _csv(
        ["ratio", "max_relative_deviation", "flagged"],
        [(r.ratio, r.max_relative_deviation, r.flagged) for r in table],
    )
    return csv, {
        "non_increasing": verify.is_non_increasing(table),
        "rows": [
            {"ratio": r.ratio, "max_relative_deviation": None if math.isnan(r.max_relative_deviation) else r.max_relative_deviation, "flagged": r.flagged, "message": r.message}
            for r in table
        ],
    }


RUNNERS = {
    "spectrum": _run_spectrum,
    "energy": _run_energy,
    "force-min": _run_force_min,
    "cancel-check": _run_cancel_check,
    "compare": _run_compare,
}


def run(config: dict, mode: str):
    """Execute one job; returns ``(csv_text, sidecar_dict)`` without touching disk."""
    if config.get("mode", mode) != mode:
        raise SchemaError(f"config field 'mode': file says {config['mode']!r} but subcommand is {mode!r}")
    sysp, mass = resolve_system(config)
    log.debug("resolved system: %s", sysp)
    csv, result = RUNNERS[mode](config, sysp, mass)
    sidecar = {
        "schema": "backaction.job_result",
        "schema_version": "v1",
        "library_version": __version__,
        "mode": mode,
        "config": config,
        "resolved_system": _system_dict(sysp),
        "result": result,
    }
    return csv, sidecar


def write_outputs(csv_path: Path, csv_text: str, sidecar: dict) -> Path:
    """Write both files through temporaries and rename them into place."""
    json_path = csv_path.with_suffix(".json")
    if json_path == csv_path:
        raise ConfigurationError(f"output path {csv_path} must not end in .json")
    json_text = json.dumps(sidecar, indent=2, allow_nan=False, default=_json_default) + "\n"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    temps = []
    try:
        for text, target in ((csv_text, csv_path), (json_text, json_path)):
            fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            temps.append((tmp, target))
        for tmp, target in temps:
            os.replace(tmp, target)
    finally:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
    return json_path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="backaction", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="JSON job configuration")
        p.add_argument("--out", help="CSV output path (overrides output_path in the config)")
        p.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        out = args.out or config.get("output_path")
        if not out:
            raise SchemaError("config field 'output_path': required unless --out is given")
        csv_text, sidecar = run(config, args.mode)
        json_path = write_outputs(Path(out), csv_text, sidecar)
    except BackactionError as exc:
        print(f"backaction {args.mode}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    log.info("wrote %s and %s", out, json_path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

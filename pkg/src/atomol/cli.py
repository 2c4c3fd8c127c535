"""Command-line front end: reproducible parameter runs to CSV/JSON (+ figures).

Every run writes its data file(s) plus `<output>.manifest.json` recording the
fully resolved parameters, tool version and wall time.  A JSON config file
(`--config`) can pre-set any flag; explicit flags win.  Floating-point output
carries 17 significant digits, so re-running an identical configuration
produces byte-identical data files.  `--plot` additionally renders a PNG
figure next to the delimited output.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import fidelity_sweep, pseudo_critical_point, scaling_study
from .dynamics import berry_phase_linearized, integrate_loop
from .errors import AtomolError, InvalidParameterError
from .fock import build_basis
from .meanfield import MeanFieldParams, critical_point, energy_derivative_profile
from .quantum import (ModelParams, build_hamiltonian, eigensolve_dense,
                      eigensolve_lowest, ground_observables)

_USAGE_EXIT = 2
_FAILURE_EXIT = 1


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _write_manifest(output: Path, subcommand: str, resolved: dict,
                    outputs: list[Path], wall_time: float) -> None:
    manifest = {
        "tool": "atomol",
        "version": __version__,
        "subcommand": subcommand,
        "parameters": {k: (v if not isinstance(v, Path) else str(v))
                       for k, v in resolved.items()},
        "outputs": [str(p) for p in outputs],
        "wall_time_s": wall_time,
    }
    _write_json(Path(str(output) + ".manifest.json"), manifest)


def _resolve(args: argparse.Namespace, defaults: dict[str, object]) -> dict:
    """Merge flag values over config-file values over hard defaults."""
    config = {}
    if args.config is not None:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(config, dict):
            raise InvalidParameterError("config file must hold a JSON object")
    resolved = {}
    for key, default in defaults.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None and flag_val is not False:
            resolved[key] = flag_val
        elif key in config:
            resolved[key] = config[key]
        else:
            resolved[key] = default
    missing = [k for k, v in resolved.items() if v is Ellipsis]
    if missing:
        raise InvalidParameterError(
            "missing required parameter(s): " + ", ".join(f"--{m.replace('_', '-')}" for m in missing))
    return resolved


def _energy_scale(resolved: dict) -> float:
    """Energies are reported in units of rho unless --raw-units is set."""
    return 1.0 if resolved.get("raw_units") else float(resolved["rho"])


def _parse_n_list(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(tok) for tok in str(value).split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# subcommand runners: each returns the list of files written
# ---------------------------------------------------------------------------

def _run_basis(resolved: dict, out: Path) -> list[Path]:
    basis = build_basis(int(resolved["n"]))
    rows = zip(range(basis.dim), basis.n_a, basis.n_g, basis.n_e)
    _write_csv(out, ["index", "n_a", "n_g", "n_e"], rows)
    return [out]


def _run_spectrum(resolved: dict, out: Path) -> list[Path]:
    params = ModelParams(N=int(resolved["n"]), z=float(resolved["z"]),
                         delta=float(resolved["delta"]),
                         rho=float(resolved["rho"]),
                         phi=float(resolved["phi"]))
    basis = build_basis(params.N)
    H = build_hamiltonian(params, basis)
    k = int(resolved["k"])
    spec = eigensolve_dense(H) if k == 0 else eigensolve_lowest(H, k)
    scale = _energy_scale(resolved)
    n_rho = params.N * params.rho
    rows = [(i, e / scale, e / n_rho if n_rho > 0 else math.nan)
            for i, e in enumerate(spec.energies)]
    _write_csv(out, ["index", "energy", "energy_per_N_rho"], rows)
    written = [out]
    if resolved.get("plot"):
        from . import plots
        energies = spec.energies / n_rho if n_rho > 0 else spec.energies
        written.append(plots.spectrum_figure(out.with_suffix(".png"),
                                             energies, params.N))
    return written


def _run_sweep(resolved: dict, out: Path) -> list[Path]:
    z_grid = np.linspace(float(resolved["z_min"]), float(resolved["z_max"]),
                         int(resolved["z_steps"]))
    N = int(resolved["n"])
    delta, rho = float(resolved["delta"]), float(resolved["rho"])
    basis = build_basis(N)

    def one(z: float):
        obs = ground_observables(ModelParams(N=N, z=float(z), delta=delta,
                                             rho=rho), basis)
        return (float(z), obs.E0, obs.E1, obs.gap, obs.atomic_fraction)

    workers = int(resolved["threads"])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, z_grid))
    else:
        records = [one(z) for z in z_grid]
    records.sort(key=lambda r: r[0])
    scale = _energy_scale(resolved)
    rows = [(z, e0 / scale, e1 / scale, gap, af)
            for z, e0, e1, gap, af in records]
    _write_csv(out, ["z", "E0", "E1", "gap", "atomic_fraction"], rows)
    written = [out]
    if resolved.get("plot"):
        from . import plots
        arr = np.array(rows)
        written.append(plots.sweep_figure(out.with_suffix(".png"), arr[:, 0],
                                          arr[:, 1], arr[:, 2], arr[:, 3],
                                          arr[:, 4], N))
    return written


def _run_meanfield(resolved: dict, out: Path) -> list[Path]:
    z_grid = np.linspace(float(resolved["z_min"]), float(resolved["z_max"]),
                         int(resolved["z_steps"]))
    params = MeanFieldParams(z=float(z_grid[0]), rho=float(resolved["rho"]),
                             delta=float(resolved["delta"]))
    profile = energy_derivative_profile(z_grid, params,
                                        fd_step=resolved["fd_step"])
    scale = _energy_scale(resolved)
    rows = [(p.z, p.mu / scale, p.energy / scale, p.dEdz / scale,
             p.d2Edz2 / scale, p.a2, p.p1, p.p2) for p in profile.points]
    _write_csv(out, ["z", "mu", "E", "dEdz", "d2Edz2", "a2", "p1", "p2"], rows)
    written = [out]
    if resolved.get("plot"):
        from . import plots
        arr = np.array(rows)
        written.append(plots.meanfield_figure(
            out.with_suffix(".png"), arr[:, 0], arr[:, 2], arr[:, 3],
            arr[:, 4], critical_point(params.rho, params.delta)))
    return written


def _run_geophase(resolved: dict, out: Path) -> list[Path]:
    z, rho = float(resolved["z"]), float(resolved["rho"])
    samples = int(resolved["samples"])
    want_plot = bool(resolved.get("plot"))
    result = integrate_loop(
        MeanFieldParams(z=z, rho=rho, delta=float(resolved["delta"])),
        T=float(resolved["period"]), rtol=float(resolved["rtol"]),
        samples=samples if samples > 0 else (2048 if want_plot else 0))
    berry = (berry_phase_linearized(z, rho) if z <= 2.0 * rho else math.nan)
    _write_csv(out, ["z", "T", "lambda_total", "lambda_dynamic", "lambda_g",
                     "berry_linearized"],
               [(z, result.T, result.lambda_total, result.lambda_dynamic,
                 result.lambda_g, berry)])
    written = [out]
    if want_plot and result.trajectory is not None:
        from . import plots
        tr = result.trajectory
        written.append(plots.loop_figure(out.with_suffix(".png"), tr.t, tr.p1,
                                         tr.p2, tr.lam, result.mu0, z))
    return written


def _run_trajectory(resolved: dict, out: Path) -> list[Path]:
    samples = int(resolved["samples"])
    result = integrate_loop(
        MeanFieldParams(z=float(resolved["z"]), rho=float(resolved["rho"]),
                        delta=float(resolved["delta"])),
        T=float(resolved["period"]), rtol=float(resolved["rtol"]),
        samples=max(samples, 2))
    tr = result.trajectory
    rows = [(t, phi, psi[0].real, psi[0].imag, psi[1].real, psi[1].imag,
             psi[2].real, psi[2].imag, norm, p1, p2)
            for t, phi, psi, norm, p1, p2 in
            zip(tr.t, tr.phi, tr.psi, tr.norm, tr.p1, tr.p2)]
    _write_csv(out, ["t", "phi", "re_a", "im_a", "re_bg", "im_bg", "re_be",
                     "im_be", "norm", "p1", "p2"], rows)
    written = [out]
    if resolved.get("plot"):
        from . import plots
        written.append(plots.trajectory_figure(out.with_suffix(".png"), tr.t,
                                               tr.psi, tr.norm))
    return written


def _bracket(resolved: dict) -> tuple[float, float] | None:
    lo, hi = resolved.get("z_min"), resolved.get("z_max")
    if lo is None and hi is None:
        return None
    if lo is None or hi is None:
        raise InvalidParameterError("--z-min and --z-max must be given together")
    return float(lo), float(hi)


def _run_gap_min(resolved: dict, out: Path) -> list[Path]:
    gm = pseudo_critical_point(int(resolved["n"]), float(resolved["delta"]),
                               float(resolved["rho"]), _bracket(resolved))
    _write_csv(out, ["N", "z_N", "gap_min"], [(gm.N, gm.z_N, gm.gap_min)])
    return [out]


def _run_scaling(resolved: dict, out: Path) -> list[Path]:
    n_list = _parse_n_list(resolved["n_list"])
    study = scaling_study(n_list, float(resolved["delta"]),
                          float(resolved["rho"]), _bracket(resolved))
    _write_csv(out, ["N", "z_N", "gap_min"],
               [(m.N, m.z_N, m.gap_min) for m in study.minima])
    fit_path = Path(str(out) + ".fit.json")
    _write_json(fit_path, {
        "nu": study.nu_fit.exponent,
        "kappa": study.nu_fit.prefactor,
        "zeta": study.zeta_fit.exponent,
        "gamma": study.zeta_fit.prefactor,
        "r2_nu": study.nu_fit.r_squared,
        "r2_zeta": study.zeta_fit.r_squared,
    })
    written = [out, fit_path]
    if resolved.get("plot"):
        from . import plots
        z_c = critical_point(float(resolved["rho"]), float(resolved["delta"]))
        n_arr = np.array([m.N for m in study.minima], dtype=float)
        written.append(plots.scaling_figure(
            out.with_suffix(".png"), n_arr,
            np.array([z_c - m.z_N for m in study.minima]),
            np.array([m.gap_min for m in study.minima]),
            study.nu_fit.exponent, study.zeta_fit.exponent))
    return written


def _run_fidelity(resolved: dict, out: Path) -> list[Path]:
    z_grid = np.linspace(float(resolved["z_min"]), float(resolved["z_max"]),
                         int(resolved["z_steps"]))
    sweep = fidelity_sweep(int(resolved["n"]), float(resolved["alpha"]),
                           z_grid, float(resolved["rho"]))
    _write_csv(out, ["z", "F"], zip(sweep.z, sweep.F))
    dip_path = Path(str(out) + ".dip.json")
    _write_json(dip_path, {
        "n": sweep.N,
        "alpha": sweep.alpha,
        "rho": float(resolved["rho"]),
        "dip_z": sweep.dip_z,
        "dip_f": sweep.dip_F,
        "interior_minima": sweep.interior_minima,
    })
    written = [out, dip_path]
    if resolved.get("plot"):
        from . import plots
        written.append(plots.fidelity_figure(out.with_suffix(".png"), sweep.z,
                                             sweep.F, sweep.dip_z, sweep.N,
                                             sweep.alpha))
    return written


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

_MODEL_FLAGS = {
    "n": dict(type=int, help="total atom number (even)"),
    "z": dict(type=float, help="molecular-mode coupling in units of rho"),
    "delta": dict(type=float, help="detuning in units of rho"),
    "rho": dict(type=float, help="photoassociation coupling (energy unit)"),
    "phi": dict(type=float, help="coupling phase in radians"),
}

# key -> (flag kwargs, hard default); Ellipsis marks required parameters
_SUBCOMMANDS: dict[str, dict[str, tuple[dict, object]]] = {
    "basis": {
        "n": (_MODEL_FLAGS["n"], Ellipsis),
    },
    "spectrum": {
        "n": (_MODEL_FLAGS["n"], Ellipsis),
        "z": (_MODEL_FLAGS["z"], Ellipsis),
        "delta": (_MODEL_FLAGS["delta"], 0.0),
        "rho": (_MODEL_FLAGS["rho"], 1.0),
        "phi": (_MODEL_FLAGS["phi"], 0.0),
        "k": (dict(type=int, help="number of lowest levels (0 = full)"), 0),
    },
    "sweep": {
        "n": (_MODEL_FLAGS["n"], Ellipsis),
        "z_min": (dict(type=float), Ellipsis),
        "z_max": (dict(type=float), Ellipsis),
        "z_steps": (dict(type=int), 41),
        "delta": (_MODEL_FLAGS["delta"], 0.0),
        "rho": (_MODEL_FLAGS["rho"], 1.0),
    },
    "meanfield": {
        "z_min": (dict(type=float), Ellipsis),
        "z_max": (dict(type=float), Ellipsis),
        "z_steps": (dict(type=int), 201),
        "delta": (_MODEL_FLAGS["delta"], 0.0),
        "rho": (_MODEL_FLAGS["rho"], 1.0),
        "fd_step": (dict(type=float, help="finite-difference step (default: grid spacing)"), None),
    },
    "geophase": {
        "z": (_MODEL_FLAGS["z"], Ellipsis),
        "delta": (_MODEL_FLAGS["delta"], 0.0),
        "rho": (_MODEL_FLAGS["rho"], 1.0),
        "period": (dict(type=float, help="loop period T"), 500.0),
        "samples": (dict(type=int, help="trajectory rows to keep"), 0),
        "rtol": (dict(type=float), 1e-10),
    },
    "trajectory": {
        "z": (_MODEL_FLAGS["z"], Ellipsis),
        "delta": (_MODEL_FLAGS["delta"], 0.0),
        "rho": (_MODEL_FLAGS["rho"], 1.0),
        "period": (dict(type=float, help="loop period T"), 500.0),
        "samples": (dict(type=int), 1001),
        "rtol": (dict(type=float), 1e-10),
    },
    "gap-min": {
        "n": (_MODEL_FLAGS["n"], Ellipsis),
        "delta": (_MODEL_FLAGS["delta"], 0.0),
        "rho": (_MODEL_FLAGS["rho"], 1.0),
        "z_min": (dict(type=float, help="bracket lower edge"), None),
        "z_max": (dict(type=float, help="bracket upper edge"), None),
    },
    "scaling": {
        "n_list": (dict(type=str, help="comma-separated even N values"), Ellipsis),
        "delta": (_MODEL_FLAGS["delta"], 0.0),
        "rho": (_MODEL_FLAGS["rho"], 1.0),
        "z_min": (dict(type=float, help="bracket lower edge"), None),
        "z_max": (dict(type=float, help="bracket upper edge"), None),
    },
    "fidelity": {
        "n": (_MODEL_FLAGS["n"], Ellipsis),
        "alpha": (dict(type=float, help="detuning of the perturbed state"), Ellipsis),
        "z_min": (dict(type=float), Ellipsis),
        "z_max": (dict(type=float), Ellipsis),
        "z_steps": (dict(type=int), 121),
        "rho": (_MODEL_FLAGS["rho"], 1.0),
    },
}

_RUNNERS = {
    "basis": _run_basis,
    "spectrum": _run_spectrum,
    "sweep": _run_sweep,
    "meanfield": _run_meanfield,
    "geophase": _run_geophase,
    "trajectory": _run_trajectory,
    "gap-min": _run_gap_min,
    "scaling": _run_scaling,
    "fidelity": _run_fidelity,
}

_PLOTTABLE = {"spectrum", "sweep", "meanfield", "geophase", "trajectory",
              "scaling", "fidelity"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomol",
        description="Spectra, criticality and adiabatic loop phases of a "
                    "three-level atom-molecule conversion model.")
    parser.add_argument("--version", action="version",
                        version=f"atomol {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name, flags in _SUBCOMMANDS.items():
        sub = subs.add_parser(name)
        for key, (kwargs, _) in flags.items():
            sub.add_argument("--" + key.replace("_", "-"), dest=key,
                             default=None, **kwargs)
        sub.add_argument("--output", "-o", type=Path, default=None,
                         help=f"output path (default {name.replace('-', '_')}.csv)")
        sub.add_argument("--config", type=Path, default=None,
                         help="JSON file pre-setting any flag (flags win)")
        sub.add_argument("--threads", type=int, default=None,
                         help="worker threads for grid sweeps")
        sub.add_argument("--raw-units", dest="raw_units", action="store_true",
                         default=None, help="emit raw energies, not E/rho")
        if name in _PLOTTABLE:
            sub.add_argument("--plot", action="store_true", default=None,
                             help="render a PNG next to the data file")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    name = args.subcommand
    defaults: dict[str, object] = {k: d for k, (_, d)
                                   in _SUBCOMMANDS[name].items()}
    defaults["output"] = Path(name.replace("-", "_") + ".csv")
    defaults["threads"] = os.cpu_count() or 1
    defaults["raw_units"] = False
    if name in _PLOTTABLE:
        defaults["plot"] = False

    start = time.perf_counter()
    try:
        resolved = _resolve(args, defaults)
        out = Path(resolved["output"])
        out.parent.mkdir(parents=True, exist_ok=True)
        outputs = _RUNNERS[name](resolved, out)
    except InvalidParameterError as exc:
        print(f"atomol {name}: invalid parameters: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    except AtomolError as exc:
        print(f"atomol {name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _FAILURE_EXIT
    _write_manifest(out, name, resolved, outputs,
                    time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

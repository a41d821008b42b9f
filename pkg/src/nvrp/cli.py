"""Command-line runner: presets, config files, CSV and manifest emission.

Exit codes: 0 success, 2 configuration error, 3 infeasible physics,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config, validate_params
from .dynamics import (
    _expectation_series,
    initial_state,
    make_propagator,
    nyquist_samples,
    singlet_yield_mean,
)
from .ensemble import EnsembleSpec, OrientationMode, ensemble_sweep
from .errors import ConfigError, NumericalError, PhysicsError
from .hamiltonian import (
    FieldConfig,
    RadicalPairConfig,
    SensorParams,
    build_rp_hamiltonian,
    coupling_geometry,
)
from .oracle import MAX_DIM, rk4_evolve
from .presets import (
    Preset,
    get_preset,
    grid_from_spec,
    list_presets,
    one_nucleus_config,
    system_config,
    two_nucleus_config,
)
from .signal import (
    aligned_prefactor,
    observable_series,
    signal_single_molecule,
    single_molecule_prefactor,
    spectrum,
    sweep_field_angle,
    sweep_field_magnitude,
    with_exchange,
    with_lifetime,
)
from .spincore import site_operators
from .strongcoupling import count_resolved_peaks, level_structure, peak_contrast


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{value:.12g}"
    return str(value)


def write_csv(
    path: Path,
    comments: dict[str, Any],
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """CSV with a leading '# key: value' comment block."""
    with open(path, "w", newline="") as fh:
        for key, value in comments.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _base_comments(cfg: ExperimentConfig) -> dict[str, Any]:
    return {
        "generator": f"nvrp {__version__}",
        "kind": cfg.kind,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "units": "fields mT, angles rad unless noted, signals Tesla",
    }


def _theta_grid(params: dict, default: list[float] | None = None) -> np.ndarray:
    spec = params.get("theta_deg", default or [0.0, 180.0, 181])
    return np.deg2rad(grid_from_spec(spec))


def _prefactor(cfg: ExperimentConfig) -> float:
    scale = cfg.params.get("scale", "single_molecule")
    if scale == "single_molecule":
        return single_molecule_prefactor(float(cfg.params.get("r_nm", 10.0)))
    if scale == "max_aligned":
        return aligned_prefactor(cfg.sensor)
    raise ConfigError(f"params.scale: unknown scale {scale!r}")


def _require_rp(cfg: ExperimentConfig) -> RadicalPairConfig:
    if cfg.radical_pair is None:
        raise ConfigError(
            f"radical_pair: required for kind {cfg.kind!r} "
            "(give the section or params.system in a preset)"
        )
    return cfg.radical_pair


def _sweep_rows(result, prefix_cols: Sequence[Any] = ()) -> list[list[Any]]:
    rows = []
    norm = result.normalized
    for i, v in enumerate(result.grid):
        row = list(prefix_cols) + [
            v,
            result.x_integrated[0, i],
            result.x_integrated[1, i],
            result.x_integrated[2, i],
            norm[0, i] if norm is not None else float("nan"),
            norm[2, i] if norm is not None else float("nan"),
        ]
        rows.append(row)
    return rows


_SWEEP_HEADER = ["sweep_value", "X_x_I", "X_y_I", "X_z_I", "X_x_I_norm", "X_z_I_norm"]


def run_coupling_map(cfg: ExperimentConfig, out: Path, threads: int) -> list[Path]:
    r_lo, r_hi, nr = cfg.params.get("r_nm", [5.0, 30.0, 26])
    radii = np.linspace(r_lo, r_hi, int(nr))
    thetas = np.deg2rad(grid_from_spec(cfg.params.get("theta_deg", [0.0, 180.0, 37])))
    rows = []
    for r in radii:
        for th in thetas:
            g = coupling_geometry(float(r), float(th), 0.0)
            rows.append([r, th, g.g_eff / (2 * np.pi)])
    path = write_csv(
        out / "coupling_map.csv",
        _base_comments(cfg) | {"columns": "r_nm, theta_rad, g_eff_over_2pi_hz"},
        ["r_nm", "theta_rad", "g_eff_over_2pi_hz"],
        rows,
    )
    return [path]


def run_time_trace(cfg: ExperimentConfig, out: Path, threads: int) -> list[Path]:
    rp = _require_rp(cfg)
    b = float(cfg.params.get("b_mT", 1.16))
    theta = np.deg2rad(float(cfg.params.get("theta_deg", 0.0)))
    phi = np.deg2rad(float(cfg.params.get("phi_deg", 0.0)))
    r_nm = float(cfg.params.get("r_nm", 10.0))
    n = int(cfg.params.get("n_samples", 32768))
    if "t_max_us" not in cfg.params and rp.effective_decay_rate == 0:
        raise ConfigError("params.t_max_us: required when the decay rate is zero")
    t_max = float(cfg.params.get("t_max_us", 5e6 / rp.effective_decay_rate)) * 1e-6
    t_grid = np.linspace(0.0, t_max, n, endpoint=False)
    series = observable_series(rp, FieldConfig(b, theta, phi), t_grid, r_nm=r_nm)
    trace = signal_single_molecule(series, r_nm)
    spec = spectrum(trace)
    comments = _base_comments(cfg) | {"b_mT": b, "r_nm": r_nm}
    p1 = write_csv(
        out / "time_trace.csv",
        comments,
        ["t_s", "X_x_T", "X_y_T", "X_z_T"],
        ([t, trace.x[0, i], trace.x[1, i], trace.x[2, i]] for i, t in enumerate(t_grid)),
    )
    p2 = write_csv(
        out / "spectrum.csv",
        comments | {"note": "one-sided DFT magnitude, Tesla*s"},
        ["freq_hz", "mag_x", "mag_y", "mag_z"],
        (
            [f, spec.magnitude[0, i], spec.magnitude[1, i], spec.magnitude[2, i]]
            for i, f in enumerate(spec.freq_hz)
        ),
    )
    return [p1, p2]


def _t_max(cfg: ExperimentConfig) -> float | None:
    value = cfg.params.get("t_max_us")
    return None if value is None else float(value) * 1e-6


def run_field_sweep(cfg: ExperimentConfig, out: Path, threads: int) -> list[Path]:
    rp = _require_rp(cfg)
    grid = grid_from_spec(cfg.params.get("b_grid", [0.01, 50.0, 60]), log=True)
    result = sweep_field_magnitude(
        rp,
        theta=0.0,
        phi=0.0,
        b_grid_mT=grid,
        sensor=cfg.sensor,
        prefactor=_prefactor(cfg),
        t_max=_t_max(cfg),
        densify=bool(cfg.params.get("densify", False)),
        threads=threads,
    )
    path = write_csv(
        out / "field_sweep.csv",
        _base_comments(cfg) | {"sweep": "field magnitude, mT"},
        _SWEEP_HEADER,
        _sweep_rows(result),
    )
    return [path]


def run_angle_sweep(cfg: ExperimentConfig, out: Path, threads: int) -> list[Path]:
    rp = _require_rp(cfg)
    b = float(cfg.params.get("b_mT", 1.16))
    thetas = _theta_grid(cfg.params)
    result = sweep_field_angle(
        rp,
        b_mT=b,
        theta_grid=thetas,
        phi=np.deg2rad(float(cfg.params.get("phi_deg", 0.0))),
        sensor=cfg.sensor,
        prefactor=_prefactor(cfg),
        t_max=_t_max(cfg),
        normalize=bool(cfg.params.get("normalize", True)),
        threads=threads,
    )
    path = write_csv(
        out / "angle_sweep.csv",
        _base_comments(cfg) | {"sweep": "field polar angle, rad", "b_mT": b},
        _SWEEP_HEADER,
        _sweep_rows(result),
    )
    return [path]


def run_ensemble(cfg: ExperimentConfig, out: Path, threads: int) -> list[Path]:
    rp = _require_rp(cfg)
    grid = grid_from_spec(cfg.params.get("b_grid", [0.05, 10.0, 10]), log=True)
    n_real = int(cfg.params.get("n_realizations", 50))
    n_mol = cfg.params.get("n_molecules")
    r_range = tuple(cfg.params.get("r_range_nm", (cfg.sensor.r1_nm, cfg.sensor.r2_nm)))
    seed = int(cfg.params.get("seed", cfg.seed))
    rows = []
    for mode in (OrientationMode.ALIGNED, OrientationMode.RANDOM_EULER):
        spec = EnsembleSpec(
            n_realizations=n_real,
            orientation_mode=mode,
            r_range_nm=r_range,
            seed=seed,
            density_per_nm3=None if n_mol is not None else cfg.sensor.density_per_nm3,
            n_molecules=None if n_mol is None else int(n_mol),
        )
        stats = ensemble_sweep(rp, spec, b_grid_mT=grid, threads=threads)
        for i, b in enumerate(stats.grid):
            rows.append(
                [
                    b,
                    stats.mean[0, i],
                    stats.variance[0, i],
                    stats.mean[2, i],
                    stats.variance[2, i],
                    mode.value,
                    seed,
                ]
            )
    path = write_csv(
        out / "ensemble.csv",
        _base_comments(cfg) | {"sweep": "field magnitude, mT"},
        ["sweep_value", "mean_X_x_I", "var_X_x_I", "mean_X_z_I", "var_X_z_I", "mode", "seed"],
        rows,
    )
    return [path]


def run_peak_count(cfg: ExperimentConfig, out: Path, threads: int) -> list[Path]:
    rp = _require_rp(cfg)
    r_nm = float(cfg.params.get("r_nm", 5.0))
    theta = np.deg2rad(float(cfg.params.get("theta_deg", 0.0)))
    phi = np.deg2rad(float(cfg.params.get("phi_deg", 0.0)))
    grid = grid_from_spec(cfg.params.get("b_grid", [0.05, 10.0, 24]), log=True)
    gamma = cfg.sensor.gamma_hz
    rows = []
    for b in grid:
        geom = coupling_geometry(r_nm, theta, phi)
        levels = level_structure(rp, FieldConfig(float(b), theta, phi), geom, cfg.sensor)
        peaks = count_resolved_peaks(levels, gamma)
        for c, m in zip(peaks.centers_hz, peaks.multiplicities):
            rows.append([b, c, m])
    p1 = write_csv(
        out / "peak_count.csv",
        _base_comments(cfg) | {"gamma_hz": gamma, "r_nm": r_nm},
        ["b_mT", "peak_center_offset_hz", "multiplicity"],
        rows,
    )
    # contrast traces at the central field point
    b_mid = float(grid[len(grid) // 2])
    geom = coupling_geometry(r_nm, theta, phi)
    t_max = 5.0 / rp.effective_decay_rate
    t_grid = np.linspace(0.0, t_max, 2048, endpoint=False)
    contrasts = peak_contrast(rp, FieldConfig(b_mid, theta, phi), geom, t_grid)
    p2 = write_csv(
        out / "peak_contrast.csv",
        _base_comments(cfg) | {"b_mT": b_mid, "note": "C_n(t) per transition"},
        ["t_s"] + [f"C_{n}" for n in range(contrasts.shape[0])],
        ([t] + list(contrasts[:, i]) for i, t in enumerate(t_grid)),
    )
    return [p1, p2]


def run_anisotropy_sweep(cfg: ExperimentConfig, out: Path, threads: int) -> list[Path]:
    cases = cfg.params.get("cases", ["iso", "axial1", "axial2", "axial3", "rhombic"])
    b = float(cfg.params.get("b_mT", 0.05))
    j = float(cfg.params.get("j_mT", 0.25))
    thetas = _theta_grid(cfg.params)
    pref = single_molecule_prefactor(float(cfg.params.get("r_nm", 10.0)))
    rows = []
    for case in cases:
        rp = one_nucleus_config(case, j_exchange_mT=j)
        result = sweep_field_angle(
            rp, b_mT=b, theta_grid=thetas, phi=0.0, sensor=cfg.sensor,
            prefactor=pref, normalize=True, threads=threads,
        )
        rows.extend(_sweep_rows(result, prefix_cols=[case]))
    path = write_csv(
        out / "anisotropy_sweep.csv",
        _base_comments(cfg) | {"b_mT": b, "j_mT": j, "sweep": "theta, rad"},
        ["case"] + _SWEEP_HEADER,
        rows,
    )
    return [path]


def _yield_at_theta0(rp: RadicalPairConfig, b_mT: float) -> float:
    layout = rp.layout()
    h = build_rp_hamiltonian(rp, FieldConfig(b_mT, 0.0, 0.0))
    factor = rp.effective_decay_rate / rp.recombination_rate if rp.recombination_rate else 1.0
    prop = make_propagator(h, rp.recombination_rate, factor)
    rho0 = initial_state(rp.initial_state, layout)
    t_max = 5.0 / rp.effective_decay_rate
    n = nyquist_samples(prop, t_max)
    return singlet_yield_mean(rho0, prop, layout, rp.effective_decay_rate, t_max, n)


def run_exchange_sweep(cfg: ExperimentConfig, out: Path, threads: int) -> list[Path]:
    case = cfg.params.get("case", "axial3")
    j_grid = [float(j) for j in cfg.params.get("j_grid_mT", [0.0, 0.25, 0.5, 1.0])]
    r_rp = cfg.params.get("r_rp_nm", 2.5)
    b = float(cfg.params.get("b_mT", 0.05))
    thetas = _theta_grid(cfg.params, [0.0, 180.0, 61])
    pref = single_molecule_prefactor(float(cfg.params.get("r_nm", 10.0)))
    base = one_nucleus_config(case, r_rp_nm=r_rp)
    rows, summary = [], []
    for j in j_grid:
        rp = with_exchange(base, j)
        result = sweep_field_angle(
            rp, b_mT=b, theta_grid=thetas, phi=0.0, sensor=cfg.sensor,
            prefactor=pref, normalize=False, threads=threads,
        )
        rows.extend(_sweep_rows(result, prefix_cols=[j]))
        summary.append([j, float(np.max(np.abs(result.x_integrated))), _yield_at_theta0(rp, b)])
    p1 = write_csv(
        out / "exchange_sweep.csv",
        _base_comments(cfg) | {"b_mT": b, "case": case, "r_rp_nm": r_rp},
        ["j_mT"] + _SWEEP_HEADER,
        rows,
    )
    p2 = write_csv(
        out / "exchange_summary.csv",
        _base_comments(cfg) | {"note": "max over theta grid and both components"},
        ["j_mT", "max_abs_X_I", "singlet_yield_theta0"],
        summary,
    )
    return [p1, p2]


def run_lifetime_sweep(cfg: ExperimentConfig, out: Path, threads: int) -> list[Path]:
    case = cfg.params.get("case", "axial3")
    taus_us = [float(t) for t in cfg.params.get("tau_us", [1.0, 2.5, 5.0, 10.0, 25.0])]
    if any(t2 <= t1 for t1, t2 in zip(taus_us, taus_us[1:])):
        raise ConfigError("params.tau_us: lifetime grid must be strictly increasing")
    b = float(cfg.params.get("b_mT", 0.05))
    thetas = _theta_grid(cfg.params, [0.0, 180.0, 61])
    pref = single_molecule_prefactor(float(cfg.params.get("r_nm", 10.0)))
    base = two_nucleus_config(case)
    rows, summary = [], []
    for tau in taus_us:
        rp = with_lifetime(base, tau * 1e-6)
        result = sweep_field_angle(
            rp, b_mT=b, theta_grid=thetas, phi=0.0, sensor=cfg.sensor,
            prefactor=pref, normalize=False, threads=threads,
        )
        rows.extend(_sweep_rows(result, prefix_cols=[tau]))
        summary.append([tau, float(np.max(np.abs(result.x_integrated))), _yield_at_theta0(rp, b)])
    p1 = write_csv(
        out / "lifetime_sweep.csv",
        _base_comments(cfg) | {"b_mT": b, "case": case},
        ["tau_us"] + _SWEEP_HEADER,
        rows,
    )
    p2 = write_csv(
        out / "lifetime_summary.csv",
        _base_comments(cfg) | {"note": "max over theta grid and both components"},
        ["tau_us", "max_abs_X_I", "singlet_yield_theta0"],
        summary,
    )
    return [p1, p2]


_RUNNERS = {
    "coupling-map": run_coupling_map,
    "time-trace": run_time_trace,
    "field-sweep": run_field_sweep,
    "angle-sweep": run_angle_sweep,
    "ensemble": run_ensemble,
    "peak-count": run_peak_count,
    "anisotropy-sweep": run_anisotropy_sweep,
    "exchange-sweep": run_exchange_sweep,
    "lifetime-sweep": run_lifetime_sweep,
}


def run_oracle_check(cfg: ExperimentConfig, out: Path) -> list[Path]:
    """Cross-check the eigen-propagator against the RK4 reference."""
    rp = cfg.radical_pair
    if rp is None:
        rp = one_nucleus_config(cfg.params.get("cases", ["axial3"])[0])
    layout = rp.layout()
    if layout.total_dimension > MAX_DIM:
        raise PhysicsError(
            f"oracle cross-check handles dim <= {MAX_DIM}, system has "
            f"{layout.total_dimension}"
        )
    b = float(cfg.params.get("b_mT", 0.05))
    field = FieldConfig(b, 0.0, 0.0)
    h = build_rp_hamiltonian(rp, field)
    factor = rp.effective_decay_rate / rp.recombination_rate if rp.recombination_rate else 1.0
    prop = make_propagator(h, rp.recombination_rate, factor)
    rho0 = initial_state(rp.initial_state, layout)

    lam_max = float(np.max(np.abs(prop.eigenvalues)))
    dt = 0.02 / max(lam_max, rp.effective_decay_rate, 1.0)
    t_max = 2e-6
    n_steps = max(int(round(t_max / dt)), 100)
    dt = t_max / n_steps
    s1 = site_operators(layout, 0)
    s2 = site_operators(layout, 1)
    ops = [s1[i] + s2[i] for i in range(3)]
    res = rk4_evolve(rho0, h, rp.effective_decay_rate, dt, t_max, observables=ops)
    exact = _expectation_series(prop, rho0, ops, res.t_grid)
    deviation = float(np.max(np.abs(exact - res.observables)))
    path = write_csv(
        out / "oracle_check.csv",
        _base_comments(cfg) | {"dt_s": dt, "t_max_s": t_max},
        ["max_abs_deviation", "dt_s", "n_steps"],
        [[deviation, dt, n_steps]],
    )
    print(f"oracle cross-check: max observable deviation {deviation:.3e}")
    if deviation > 1e-6:
        raise NumericalError(
            f"eigen-propagator and RK4 oracle disagree: {deviation:.3e} > 1e-6"
        )
    return [path]


def experiment_from_preset(preset: Preset, seed: int | None) -> ExperimentConfig:
    params = dict(preset.params)
    validate_params(preset.kind, params)
    rp = system_config(params["system"]) if "system" in params else None
    return ExperimentConfig(
        kind=preset.kind,
        radical_pair=rp,
        sensor=preset.sensor if preset.sensor is not None else SensorParams(),
        params=params,
        seed=seed if seed is not None else int(params.get("seed", 0)),
    )


def run(
    cfg: ExperimentConfig, out_dir: str | Path, threads: int = 1, oracle: bool = False
) -> list[Path]:
    """Execute one experiment; returns the list of written files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    if oracle:
        files = run_oracle_check(cfg, out)
    else:
        files = _RUNNERS[cfg.kind](cfg, out, threads)
    manifest = {
        "config_hash": cfg.config_hash(),
        "config": cfg.canonical_dict(),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "wall_time_s": round(time.time() - started, 3),
        "outputs": [f.name for f in files],
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return files + [manifest_path]


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nvrp",
        description="Radical-pair spin dynamics and sensor-detectable signal sweeps",
    )
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--preset", help="named experiment preset")
    group.add_argument("--config", help="JSON experiment file")
    group.add_argument("--list", action="store_true", help="list presets and exit")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument(
        "--oracle", action="store_true", help="run the RK4 cross-check instead of the experiment"
    )
    args = parser.parse_args(argv)

    try:
        if args.list or (args.preset is None and args.config is None):
            for name, desc in list_presets():
                print(f"{name:36s} {desc}")
            return 0
        if args.preset:
            try:
                preset = get_preset(args.preset)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from exc
            cfg = experiment_from_preset(preset, args.seed)
        else:
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg = ExperimentConfig(
                    kind=cfg.kind,
                    radical_pair=cfg.radical_pair,
                    sensor=cfg.sensor,
                    params=cfg.params,
                    seed=args.seed,
                )
        files = run(cfg, args.out, threads=args.threads, oracle=args.oracle)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PhysicsError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f"wrote {f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

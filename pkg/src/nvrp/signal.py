"""Sensor-detectable magnetic signals and the field sweeps built on them.

The radical pair's coupling-weighted magnetisation s_tilde_i(t) converts
to a magnetic field at the sensor (in Tesla) through one of two linear
scales:

* per molecule at distance r:   x_i(t) = |D_r(r)| / gamma_e * s_tilde_i(t)
* aligned shell of density xi:  x_i(t) = (xi mu0 gamma_e hbar / 2)
                                          * log(r2/r1) * s_tilde_i(t)

The second form is the aligned-frame maximum of the sensing-volume
integral; its radial part is analytic because the r^-3 prefactor meets
the r^2 volume element.  The time-integrated signal X_i^I is the plain
sample mean of a trace (units Tesla): "per second" in the quantity's
name is a label, not an extra 1/s factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .constants import GAMMA_E, HBAR, MU0, dipolar_prefactor
from .dynamics import (
    ObservableSeries,
    _expectation_means,
    _pair_spin_ops,
    evolve_observables,
    initial_state,
    make_propagator,
    nyquist_samples,
)
from .errors import PhysicsError
from .hamiltonian import (
    DecayConvention,
    FieldConfig,
    RadicalPairConfig,
    SensorParams,
    build_rp_hamiltonian,
    coupling_geometry,
)
from .spincore import Rotation

#: angular factor guard for theta-corrected signals
NORMALIZE_EPS = 1e-3


def _parallel_map(fn, items, threads: int) -> list:
    """Order-preserving map, optionally on a thread pool (BLAS releases the GIL)."""
    if threads <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SignalTrace:
    """Time-resolved detectable signal, Tesla per component."""

    t_grid: np.ndarray
    x: np.ndarray  # shape (3, n)
    provenance: str

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def duration(self) -> float:
        return float(self.t_grid[-1] - self.t_grid[0]) + self.dt


@dataclass(frozen=True)
class SignalSpectrum:
    """One-sided DFT magnitude of a trace, Tesla * s per component."""

    freq_hz: np.ndarray
    magnitude: np.ndarray  # shape (3, n_freq)


@dataclass(frozen=True)
class SweepResult:
    """Integrated signal against a swept variable.

    ``x_integrated`` has shape (3, n) in Tesla.  ``normalized`` divides
    each component by its angular factor d_ci where |d_ci| > 1e-3 and is
    NaN elsewhere (angle sweeps only).
    """

    sweep_kind: str
    grid: np.ndarray
    x_integrated: np.ndarray
    normalized: np.ndarray | None = None


def single_molecule_prefactor(r_nm: float) -> float:
    """Tesla per unit s_tilde for one molecule at distance r."""
    return abs(dipolar_prefactor(r_nm)) / GAMMA_E


def aligned_prefactor(sensor: SensorParams) -> float:
    """Tesla per unit s_tilde for an aligned sensing shell (Eq.-13 scale)."""
    density_si = sensor.density_per_nm3 * 1e27
    return 0.5 * density_si * MU0 * GAMMA_E * HBAR * math.log(sensor.r2_nm / sensor.r1_nm)


def signal_max(series: ObservableSeries, sensor: SensorParams) -> SignalTrace:
    """Aligned-frame maximum signal of a sensing shell, in Tesla."""
    pref = aligned_prefactor(sensor)
    return SignalTrace(t_grid=series.t_grid, x=pref * series.s_tilde, provenance="max_aligned")


def signal_single_molecule(series: ObservableSeries, r_nm: float) -> SignalTrace:
    """Signal of a single molecule at distance r, in Tesla."""
    pref = single_molecule_prefactor(r_nm)
    return SignalTrace(
        t_grid=series.t_grid, x=pref * series.s_tilde, provenance="single_molecule"
    )


def _decay_factor(cfg: RadicalPairConfig) -> float:
    return 1.0 if cfg.decay_convention is DecayConvention.RATE_K else 2.0


def _default_t_max(cfg: RadicalPairConfig) -> float:
    if cfg.effective_decay_rate == 0:
        raise PhysicsError("t_max must be given explicitly when the decay rate is zero")
    return 5.0 / cfg.effective_decay_rate


def observable_series(
    cfg: RadicalPairConfig,
    field_cfg: FieldConfig,
    t_grid: np.ndarray,
    rotation: Rotation | None = None,
    r_nm: float = 10.0,
) -> ObservableSeries:
    """Evolve one molecule and return its s_tilde time series."""
    layout = cfg.layout()
    h = build_rp_hamiltonian(cfg, field_cfg, rotation)
    prop = make_propagator(h, cfg.recombination_rate, _decay_factor(cfg))
    rho0 = initial_state(cfg.initial_state, layout)
    geom = coupling_geometry(r_nm, field_cfg.theta, field_cfg.phi, rotation)
    return evolve_observables(rho0, prop, t_grid, geom, layout)


def integrated_observables(
    cfg: RadicalPairConfig,
    field_cfg: FieldConfig,
    rotation: Rotation | None = None,
    t_max: float | None = None,
    min_samples: int = 4096,
) -> np.ndarray:
    """Sample-mean of s_tilde over a Nyquist-resolved uniform grid.

    Dimensionless; multiply by a prefactor to obtain X_i^I in Tesla.  The
    sample count per point adapts to the spectral spread of H, which
    leaves the closed-form mean exact for the grid actually used.
    """
    layout = cfg.layout()
    h = build_rp_hamiltonian(cfg, field_cfg, rotation)
    prop = make_propagator(h, cfg.recombination_rate, _decay_factor(cfg))
    rho0 = initial_state(cfg.initial_state, layout)
    t_max = t_max if t_max is not None else _default_t_max(cfg)
    n = nyquist_samples(prop, t_max, min_samples)
    means = _expectation_means(prop, rho0, _pair_spin_ops(layout), t_max / n, n)
    geom = coupling_geometry(1.0, field_cfg.theta, field_cfg.phi)
    return geom.d_c * means


def time_integrated(trace: SignalTrace) -> np.ndarray:
    """X_i^I: the sample mean of each component, Tesla."""
    if trace.x.shape[1] == 0:
        raise ValueError("cannot integrate an empty trace")
    return np.mean(trace.x, axis=1)


def spectrum(trace: SignalTrace) -> SignalSpectrum:
    """One-sided DFT magnitude; the zero bin equals duration * X^I."""
    n = trace.x.shape[1]
    if n < 2:
        raise ValueError("spectrum needs at least two samples")
    dt = trace.dt
    mag = np.abs(np.fft.rfft(trace.x, axis=1)) * dt
    freq = np.fft.rfftfreq(n, dt)
    return SignalSpectrum(freq_hz=freq, magnitude=mag)


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts for the sensing-volume angular integrals."""

    n_alpha: int = 8
    n_beta: int = 16
    beta_symmetric: bool = True

    def __post_init__(self) -> None:
        if self.n_alpha < 8:
            raise ValueError(f"alpha quadrature needs >= 8 nodes, got {self.n_alpha}")
        if self.n_beta < 1:
            raise ValueError("beta quadrature needs >= 1 node")


OrientationField = Callable[[float, float], Rotation]


def signal_volume(
    cfg: RadicalPairConfig,
    field_cfg: FieldConfig,
    sensor: SensorParams,
    t_grid: np.ndarray,
    quadrature: QuadratureSpec = QuadratureSpec(),
    orientation: OrientationField | None = None,
) -> SignalTrace:
    """Sensing-volume signal with an optional orientation field R(alpha, beta).

    The radial integral is analytic (log(r2/r1)); alpha is integrated by
    Gauss-Legendre on [0, pi/2] against sin(alpha); beta contributes a
    2 pi factor when the orientation is beta-independent, otherwise a
    periodic rectangle rule.  With the identity orientation this reduces
    to :func:`signal_max` (to quadrature accuracy).
    """
    density_si = sensor.density_per_nm3 * 1e27
    radial = (MU0 * GAMMA_E * HBAR / (4 * math.pi)) * math.log(sensor.r2_nm / sensor.r1_nm)

    nodes, weights = np.polynomial.legendre.leggauss(quadrature.n_alpha)
    alphas = 0.5 * (nodes + 1.0) * (math.pi / 2)
    w_alpha = 0.5 * (math.pi / 2) * weights * np.sin(alphas)

    if orientation is None or quadrature.beta_symmetric:
        betas = np.array([0.0])
        w_beta = np.array([2 * math.pi])
    else:
        betas = np.linspace(0.0, 2 * math.pi, quadrature.n_beta, endpoint=False)
        w_beta = np.full(quadrature.n_beta, 2 * math.pi / quadrature.n_beta)

    t_grid = np.asarray(t_grid, dtype=float)
    total = np.zeros((3, t_grid.shape[0]))
    cache: dict[bytes, np.ndarray] = {}
    for a, wa in zip(alphas, w_alpha):
        for b, wb in zip(betas, w_beta):
            rot = orientation(a, b) if orientation is not None else Rotation.identity()
            key = np.round(rot.matrix, 14).tobytes()
            if key not in cache:
                series = observable_series(cfg, field_cfg, t_grid, rot)
                cache[key] = series.s_tilde
            total += wa * wb * cache[key]
    return SignalTrace(t_grid=t_grid, x=density_si * radial * total, provenance="volume")


def log_field_grid(
    b_min_mT: float = 0.01, b_max_mT: float = 50.0, n_points: int = 60
) -> np.ndarray:
    """Logarithmic field-magnitude grid (default 10 uT to 50 mT, 60 points)."""
    return np.logspace(math.log10(b_min_mT), math.log10(b_max_mT), n_points)


def sweep_field_magnitude(
    cfg: RadicalPairConfig,
    theta: float,
    phi: float,
    b_grid_mT: Sequence[float],
    sensor: SensorParams,
    prefactor: float | None = None,
    t_max: float | None = None,
    allow_tilted: bool = False,
    densify: bool = False,
    threads: int = 1,
) -> SweepResult:
    """X_i^I against field magnitude at fixed direction.

    theta = 0 is enforced (the two-level sensor approximation) unless
    ``allow_tilted``.  With ``densify`` a second pass adds a 5x denser
    patch of points around the detected maximum of |X_z^I|.
    """
    if theta != 0.0 and not allow_tilted:
        raise PhysicsError(
            "magnitude sweeps run at theta = 0 unless allow_tilted is set "
            "(large transverse fields break the two-level sensor approximation)"
        )
    pref = prefactor if prefactor is not None else aligned_prefactor(sensor)
    b_grid = np.asarray(b_grid_mT, dtype=float)

    def point(b: float) -> np.ndarray:
        return pref * integrated_observables(cfg, FieldConfig(b, theta, phi), t_max=t_max)

    values = np.stack(_parallel_map(point, b_grid, threads), axis=1)

    if densify and b_grid.shape[0] >= 3:
        i = int(np.argmax(np.abs(values[2])))
        lo = b_grid[max(i - 1, 0)]
        hi = b_grid[min(i + 1, b_grid.shape[0] - 1)]
        extra = np.logspace(math.log10(lo), math.log10(hi), 5 * 2 + 1)[1:-1]
        extra = np.setdiff1d(np.round(extra, 12), np.round(b_grid, 12))
        if extra.size:
            extra_vals = np.stack(_parallel_map(point, extra, threads), axis=1)
            order = np.argsort(np.concatenate([b_grid, extra]))
            b_grid = np.concatenate([b_grid, extra])[order]
            values = np.concatenate([values, extra_vals], axis=1)[:, order]

    return SweepResult(sweep_kind="field_magnitude_mT", grid=b_grid, x_integrated=values)


def sweep_field_angle(
    cfg: RadicalPairConfig,
    b_mT: float,
    theta_grid: Sequence[float],
    phi: float,
    sensor: SensorParams,
    prefactor: float | None = None,
    t_max: float | None = None,
    normalize: bool = False,
    threads: int = 1,
) -> SweepResult:
    """X_i^I against the field polar angle at fixed magnitude.

    With ``normalize``, each component is divided by its angular factor
    d_ci(theta, phi) wherever |d_ci| > 1e-3; undefined points are NaN.
    """
    pref = prefactor if prefactor is not None else aligned_prefactor(sensor)
    thetas = np.asarray(theta_grid, dtype=float)

    def point(th: float) -> np.ndarray:
        return pref * integrated_observables(cfg, FieldConfig(b_mT, th, phi), t_max=t_max)

    values = np.stack(_parallel_map(point, thetas, threads), axis=1)
    normalized = None
    if normalize:
        d_c = np.stack(
            [coupling_geometry(1.0, th, phi).d_c for th in thetas], axis=1
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            normalized = np.where(np.abs(d_c) > NORMALIZE_EPS, values / d_c, np.nan)
    return SweepResult(
        sweep_kind="theta_rad", grid=thetas, x_integrated=values, normalized=normalized
    )


def with_exchange(cfg: RadicalPairConfig, j_mT: float) -> RadicalPairConfig:
    """Copy of a configuration with a different exchange constant."""
    return replace(cfg, j_exchange_mT=j_mT)


def with_lifetime(cfg: RadicalPairConfig, tau_s: float) -> RadicalPairConfig:
    """Copy of a configuration with lifetime tau (k = 1/tau)."""
    if tau_s <= 0:
        raise PhysicsError(f"lifetime must be positive, got {tau_s}")
    return replace(cfg, recombination_rate=1.0 / tau_s)

"""Strong-coupling level analysis: conditional spectra and peak contrasts.

When the coupling exceeds the dephasing linewidth, the sensor transition
splits into resonances at offsets f_n = (E'_n - E_n) / 2 pi, where E_n
and E'_n are eigenvalues of the pair Hamiltonian alone and of the pair
Hamiltonian plus the conditional coupling operator.  Eigenstates of the
two manifolds are matched by maximum overlap (Hungarian assignment on
|<psi_m|psi'_n>|^2); nearly degenerate clusters are rotated to diagonalise
the coupling operator inside the cluster first, which makes the matching
stable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .constants import dipolar_prefactor
from .dynamics import (
    _expectation_series,
    initial_state,
    make_propagator,
)
from .errors import PhysicsError
from .hamiltonian import (
    CouplingGeometry,
    FieldConfig,
    RadicalPairConfig,
    Regime,
    SensorParams,
    build_coupling_hamiltonian,
    build_rp_hamiltonian,
    classify_regime,
)

#: eigenvalue gap below which states count as one degenerate cluster, rad/s
DEGENERACY_GAP = 1e-6


@dataclass(frozen=True)
class LevelStructure:
    """Eigen systems of the two sensor-state manifolds plus transitions.

    ``pairing[n]`` is the index of the |0>-manifold state matched to the
    n-th |1>-manifold state; ``transition_freqs_hz[n]`` is the resonance
    offset (E'_n - E_pairing[n]) / 2 pi from the bare sensor transition.
    """

    energies_0: np.ndarray
    states_0: np.ndarray
    energies_1: np.ndarray
    states_1: np.ndarray
    pairing: np.ndarray
    transition_freqs_hz: np.ndarray

    @property
    def n_transitions(self) -> int:
        return self.transition_freqs_hz.shape[0]


@dataclass(frozen=True)
class PeakSet:
    """Resolution-clustered resonance peaks."""

    centers_hz: np.ndarray
    multiplicities: np.ndarray
    gamma_hz: float

    @property
    def count(self) -> int:
        return self.centers_hz.shape[0]


def _stabilize_degenerate(w: np.ndarray, v: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Rotate degenerate eigenvector clusters to diagonalise ``op`` within."""
    v = v.copy()
    i = 0
    n = w.shape[0]
    while i < n:
        j = i + 1
        while j < n and w[j] - w[j - 1] < DEGENERACY_GAP:
            j += 1
        if j - i > 1:
            block = v[:, i:j]
            sub = block.conj().T @ op @ block
            _, u = np.linalg.eigh(0.5 * (sub + sub.conj().T))
            v[:, i:j] = block @ u
        i = j
    return v


def level_structure(
    cfg: RadicalPairConfig,
    field_cfg: FieldConfig,
    geom: CouplingGeometry,
    sensor: SensorParams | None = None,
    enforce_regime: bool = True,
) -> LevelStructure:
    """Conditional level structure of the coupled sensor-pair system.

    The |0>-manifold generator is H_RP; the |1>-manifold generator is
    H_RP + D_r sum_i d_ci (S1i + S2i).  In the strong-coupling analysis
    the caller should be in the strong regime; pass ``enforce_regime``
    False (or no sensor) to skip the check.
    """
    if enforce_regime and sensor is not None:
        if classify_regime(geom.g_eff, sensor) is not Regime.STRONG:
            warnings.warn(
                "level_structure called in the weak-coupling regime "
                "(g_eff <= Gamma); peaks will not be resolvable",
                stacklevel=2,
            )
    layout = cfg.layout()
    h0 = build_rp_hamiltonian(cfg, field_cfg, geom.rotation)
    coupling = build_coupling_hamiltonian(geom, layout)
    h1 = h0 + coupling

    w0, v0 = np.linalg.eigh(h0)
    w1, v1 = np.linalg.eigh(h1)
    v0 = _stabilize_degenerate(w0, v0, coupling)
    v1 = _stabilize_degenerate(w1, v1, coupling)

    overlap = np.abs(v0.conj().T @ v1) ** 2  # overlap[m, n] = |<psi_m|psi'_n>|^2
    row, col = linear_sum_assignment(-overlap)
    pairing = np.empty(w1.shape[0], dtype=int)
    pairing[col] = row
    freqs = (w1 - w0[pairing]) / (2 * np.pi)
    return LevelStructure(
        energies_0=w0,
        states_0=v0,
        energies_1=w1,
        states_1=v1,
        pairing=pairing,
        transition_freqs_hz=freqs,
    )


def count_resolved_peaks(
    levels: LevelStructure,
    gamma_hz: float,
    contrasts: np.ndarray | None = None,
    min_contrast: float | None = None,
) -> PeakSet:
    """Greedy clustering of transition frequencies at resolution Gamma.

    Transitions are swept in ascending frequency; a new cluster opens when
    the gap to the current cluster's running center exceeds ``gamma_hz``.
    Optionally drops transitions whose peak contrast |C_n| never reaches
    ``min_contrast`` before clustering.
    """
    if gamma_hz <= 0:
        raise PhysicsError(f"resolution linewidth must be positive, got {gamma_hz}")
    freqs = np.sort(levels.transition_freqs_hz)
    if contrasts is not None and min_contrast is not None:
        order = np.argsort(levels.transition_freqs_hz)
        keep = np.max(np.abs(contrasts), axis=1)[order] >= min_contrast
        freqs = freqs[keep]
    centers: list[float] = []
    counts: list[int] = []
    members: list[float] = []
    for f in freqs:
        if members and f - np.mean(members) > gamma_hz:
            centers.append(float(np.mean(members)))
            counts.append(len(members))
            members = []
        members.append(f)
    if members:
        centers.append(float(np.mean(members)))
        counts.append(len(members))
    return PeakSet(
        centers_hz=np.asarray(centers),
        multiplicities=np.asarray(counts, dtype=int),
        gamma_hz=gamma_hz,
    )


def peak_contrast(
    cfg: RadicalPairConfig,
    field_cfg: FieldConfig,
    geom: CouplingGeometry,
    t_grid: np.ndarray,
    sensor: SensorParams | None = None,
    n_radial: int = 8,
) -> np.ndarray:
    """Population-difference contrast C_n(t) per transition, shape (d, n_t).

    The pair evolves under H_RP alone (the pulsed scheme keeps the sensor
    in |0>, no backaction) with the uniform recombination decay.
    C_n(t) = <P_psi'_n>(t) - <P_psi_n>(t).

    With ``sensor`` given, the single-molecule contrast is replaced by the
    sensing-volume integral: Gauss-Legendre in r against r^2 (the
    |1>-manifold states depend on r through D_r), the alpha integral
    contributes its aligned-frame factor, beta the 2 pi factor, all times
    the number density.
    """
    layout = cfg.layout()
    rho0 = initial_state(cfg.initial_state, layout)
    h0 = build_rp_hamiltonian(cfg, field_cfg, geom.rotation)
    factor = cfg.effective_decay_rate / cfg.recombination_rate if cfg.recombination_rate else 1.0
    prop = make_propagator(h0, cfg.recombination_rate, factor)
    t_grid = np.asarray(t_grid, dtype=float)

    def contrast_at(geometry: CouplingGeometry) -> np.ndarray:
        levels = level_structure(cfg, field_cfg, geometry, enforce_regime=False)
        projectors = []
        for n in range(levels.n_transitions):
            p1 = np.outer(levels.states_1[:, n], levels.states_1[:, n].conj())
            p0_state = levels.states_0[:, levels.pairing[n]]
            p0 = np.outer(p0_state, p0_state.conj())
            projectors.extend([p1, p0])
        series = _expectation_series(prop, rho0, projectors, t_grid)
        return series[0::2] - series[1::2]

    if sensor is None:
        return contrast_at(geom)

    nodes, weights = np.polynomial.legendre.leggauss(n_radial)
    r1, r2 = sensor.r1_nm, sensor.r2_nm
    rs = 0.5 * (nodes + 1.0) * (r2 - r1) + r1
    w_r = 0.5 * (r2 - r1) * weights * rs**2  # nm^3 weights
    density = sensor.density_per_nm3
    total = None
    for r, w in zip(rs, w_r):
        g = CouplingGeometry(
            r_nm=r,
            d_r=dipolar_prefactor(r),
            d_cx=geom.d_cx,
            d_cy=geom.d_cy,
            d_cz=geom.d_cz,
            g_eff=geom.g_eff,
            rotation=geom.rotation,
        )
        c = contrast_at(g)
        total = w * c if total is None else total + w * c
    return density * 2 * np.pi * total

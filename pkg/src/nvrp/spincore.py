"""Spin-operator algebra for multi-spin radical-pair systems.

Single-spin angular momentum matrices (spin 1/2 and spin 1), Kronecker
embedding into a product Hilbert space, and rotation of 3x3 coupling
tensors between molecular and sensor frames.

Conventions
-----------
* hbar = 1; spin matrices are dimensionless.
* A layout always starts with the two unpaired electrons, followed by the
  nuclei of radical 1 and then the nuclei of radical 2.  This keeps the
  singlet/triplet projectors block operators on the leading 4-dimensional
  electron factor.
* Dense complex matrices throughout; the largest system built at desk
  scale is 864-dimensional, where dense Hermitian solvers win.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache, reduce

import numpy as np

_SUPPORTED_SPINS = (0.5, 1.0)

_SQRT2 = np.sqrt(2.0)

_SPIN_HALF = (
    np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex),
    np.array([[0.0, -0.5j], [0.5j, 0.0]], dtype=complex),
    np.array([[0.5, 0.0], [0.0, -0.5]], dtype=complex),
)

_SPIN_ONE = (
    np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / _SQRT2,
    np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / _SQRT2,
    np.array([[1, 0, 0], [0, 0, 0], [0, 0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class SpinSpecies:
    """A spin-carrying particle: an electron or a nucleus.

    ``spin`` is the spin quantum number, restricted to 1/2 (electrons,
    protons) and 1 (e.g. nitrogen-14).
    """

    label: str
    spin: float

    def __post_init__(self) -> None:
        if self.spin not in _SUPPORTED_SPINS:
            raise ValueError(
                f"unsupported spin quantum number {self.spin!r} for species "
                f"{self.label!r}: only 1/2 and 1 are supported"
            )

    @property
    def dimension(self) -> int:
        return int(round(2 * self.spin + 1))

    @classmethod
    def electron(cls, label: str = "e") -> "SpinSpecies":
        return cls(label, 0.5)


@dataclass(frozen=True)
class SpinSystemLayout:
    """Ordered spin species defining the tensor-product structure.

    The first two entries must be the unpaired electrons.
    """

    species: tuple[SpinSpecies, ...]

    def __post_init__(self) -> None:
        if len(self.species) < 2:
            raise ValueError("a radical-pair layout needs at least two electrons")
        for s in self.species[:2]:
            if s.spin != 0.5:
                raise ValueError(
                    f"the first two layout entries must be spin-1/2 electrons, got {s}"
                )

    @property
    def dimensions(self) -> tuple[int, ...]:
        return tuple(s.dimension for s in self.species)

    @property
    def total_dimension(self) -> int:
        return int(np.prod(self.dimensions))

    @property
    def nuclear_dimension(self) -> int:
        return self.total_dimension // 4

    @classmethod
    def for_radical_pair(
        cls,
        nuclei_radical1: tuple[SpinSpecies, ...] = (),
        nuclei_radical2: tuple[SpinSpecies, ...] = (),
    ) -> "SpinSystemLayout":
        electrons = (SpinSpecies.electron("e1"), SpinSpecies.electron("e2"))
        return cls(electrons + tuple(nuclei_radical1) + tuple(nuclei_radical2))


def spin_matrices(species: SpinSpecies) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (Sx, Sy, Sz) for a species, satisfying [Sx, Sy] = i Sz."""
    if species.spin == 0.5:
        return _SPIN_HALF
    return _SPIN_ONE


def embed(local: np.ndarray, site: int, layout: SpinSystemLayout) -> np.ndarray:
    """Embed a single-site operator: I x ... x local x ... x I.

    Raises ``ValueError`` when the site index or the local dimension does
    not match the layout.
    """
    dims = layout.dimensions
    if not 0 <= site < len(dims):
        raise ValueError(f"site {site} out of range for a {len(dims)}-site layout")
    local = np.asarray(local, dtype=complex)
    if local.shape != (dims[site], dims[site]):
        raise ValueError(
            f"operator of shape {local.shape} does not fit site {site} "
            f"with dimension {dims[site]}"
        )
    factors = [
        local if i == site else np.eye(d, dtype=complex) for i, d in enumerate(dims)
    ]
    return reduce(np.kron, factors)


@lru_cache(maxsize=64)
def site_operators(layout: SpinSystemLayout, site: int) -> tuple[np.ndarray, ...]:
    """Cached embedded (Sx, Sy, Sz) for one site of a layout."""
    ops = tuple(embed(m, site, layout) for m in spin_matrices(layout.species[site]))
    for o in ops:
        o.setflags(write=False)
    return ops


@dataclass(frozen=True)
class Rotation:
    """A proper rotation, stored as its 3x3 matrix.

    ``euler_angles`` is kept when the rotation was built from Euler angles
    (x-y-z convention, see :func:`euler_rotation`); it is ``None`` for
    rotations constructed directly from a matrix.
    """

    matrix: np.ndarray
    euler_angles: tuple[float, float, float] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"rotation matrix must be 3x3, got shape {m.shape}")
        if np.linalg.norm(m.T @ m - np.eye(3)) > 1e-12:
            raise ValueError("rotation matrix is not orthogonal to 1e-12")
        if np.linalg.det(m) < 0:
            raise ValueError("rotation matrix has determinant -1 (improper rotation)")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3), euler_angles=(0.0, 0.0, 0.0))

    @property
    def is_identity(self) -> bool:
        return bool(np.allclose(self.matrix, np.eye(3), atol=1e-15))

    def compose(self, other: "Rotation") -> "Rotation":
        """Return the rotation 'self after other'."""
        return Rotation(self.matrix @ other.matrix)


def _axis_rotation(axis: int, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    m = np.eye(3)
    i, j = [(1, 2), (2, 0), (0, 1)][axis]
    m[i, i] = c
    m[j, j] = c
    m[i, j] = -s
    m[j, i] = s
    return m


def euler_rotation(alpha: float, beta: float, gamma: float) -> Rotation:
    """Rotation Rx(alpha) . Ry(beta) . Rz(gamma); identity at zero angles."""
    m = _axis_rotation(0, alpha) @ _axis_rotation(1, beta) @ _axis_rotation(2, gamma)
    return Rotation(m, euler_angles=(alpha, beta, gamma))


def rotate_tensor(rotation: Rotation, tensor: np.ndarray) -> np.ndarray:
    """Transform a 3x3 coupling tensor into the rotated frame: R T R^T."""
    t = np.asarray(tensor, dtype=float)
    if t.shape != (3, 3):
        raise ValueError(f"coupling tensor must be 3x3, got shape {t.shape}")
    r = rotation.matrix
    return r @ t @ r.T


def isotropic_tensor(a: float) -> np.ndarray:
    """Isotropic coupling tensor a * I, components in mT."""
    return a * np.eye(3)


def diagonal_tensor(axx: float, ayy: float, azz: float) -> np.ndarray:
    """Diagonal coupling tensor with the given principal components (mT)."""
    return np.diag([axx, ayy, azz]).astype(float)


def symmetrize(tensor: np.ndarray) -> np.ndarray:
    """Symmetric part (T + T^T) / 2 of a coupling tensor."""
    t = np.asarray(tensor, dtype=float)
    return 0.5 * (t + t.T)

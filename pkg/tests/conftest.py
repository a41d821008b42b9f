"""Shared fixtures: small reference systems used across the suite."""

import numpy as np
import pytest

from nvrp.hamiltonian import (
    FieldConfig,
    InitialElectronState,
    Nucleus,
    RadicalPairConfig,
    SensorParams,
)
from nvrp.presets import fadtrp_config, one_nucleus_config
from nvrp.spincore import SpinSpecies, isotropic_tensor


@pytest.fixture
def bare_pair() -> RadicalPairConfig:
    """Two electrons, no nuclei (dim 4)."""
    return RadicalPairConfig(recombination_rate=2e5)


@pytest.fixture
def one_proton_pair() -> RadicalPairConfig:
    """One spin-1/2 nucleus with isotropic coupling on radical 1 (dim 8)."""
    return RadicalPairConfig(
        nuclei_radical1=(Nucleus(SpinSpecies("H", 0.5), isotropic_tensor(0.5)),),
        recombination_rate=2e5,
    )


@pytest.fixture
def axial3_pair() -> RadicalPairConfig:
    """The one-nucleus axial3 model (dim 12)."""
    return one_nucleus_config("axial3")


@pytest.fixture
def fadtrp2() -> RadicalPairConfig:
    """Flavin-tryptophan pair, two nuclei per radical (dim 216)."""
    return fadtrp_config(2)


@pytest.fixture
def earth_field() -> FieldConfig:
    return FieldConfig(0.05, 0.0, 0.0)


@pytest.fixture
def sensor() -> SensorParams:
    return SensorParams()


def make_pair(
    tensors1=(), tensors2=(), spins1=(), spins2=(), j_mT=0.0, r_rp_nm=None, k=2e5,
    initial=InitialElectronState.SINGLET,
) -> RadicalPairConfig:
    """Helper for ad-hoc pair configurations in tests."""
    n1 = tuple(
        Nucleus(SpinSpecies(f"n1_{i}", s), np.asarray(t, dtype=float))
        for i, (t, s) in enumerate(zip(tensors1, spins1))
    )
    n2 = tuple(
        Nucleus(SpinSpecies(f"n2_{i}", s), np.asarray(t, dtype=float))
        for i, (t, s) in enumerate(zip(tensors2, spins2))
    )
    return RadicalPairConfig(
        nuclei_radical1=n1,
        nuclei_radical2=n2,
        j_exchange_mT=j_mT,
        r_rp_nm=r_rp_nm,
        recombination_rate=k,
        initial_state=initial,
    )

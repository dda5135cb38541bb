import numpy as np
import pytest

from opencavity.hilbert import make_space
from opencavity.lindblad import SystemParams

# Reference device parameters used across the suite (GHz, omega/2pi values):
# two non-degenerate cavity modes split by 36.3 GHz, each coupled to its own
# resonant dot.
REF_KAPPA_H = 16.04
REF_KAPPA_V = 18.04
REF_SPLIT = 36.3
REF_G_H = 1.37
REF_G_V = 1.64
REF_GAMMA = 0.16
REF_GAMMA_D1 = 0.05
REF_GAMMA_D2 = 0.17
REF_ETA = 0.1
REF_NU_H = 309017.7
REF_NU_V = 309054.0
REF_GAMMA_TOTAL_1 = 0.26
REF_COOPERATIVITY_H = 1.8


def reference_params(**overrides) -> SystemParams:
    base = dict(
        kappa_h=REF_KAPPA_H,
        kappa_v=REF_KAPPA_V,
        delta_h=0.0,
        delta_v=REF_SPLIT,
        delta_1=0.0,
        delta_2=REF_SPLIT,
        g_h=REF_G_H,
        g_v=REF_G_V,
        gamma_1=REF_GAMMA,
        gamma_2=REF_GAMMA,
        gamma_d1=REF_GAMMA_D1,
        gamma_d2=REF_GAMMA_D2,
        eta_h=REF_ETA,
        eta_v=REF_ETA,
        omega_ref=REF_NU_H,
    )
    base.update(overrides)
    return SystemParams(**base)


@pytest.fixture
def ref_params() -> SystemParams:
    return reference_params()


@pytest.fixture
def bare_params() -> SystemParams:
    return reference_params(g_h=0.0, g_v=0.0)


@pytest.fixture
def space_small():
    return make_space(1, 1)


@pytest.fixture
def space_default():
    return make_space(3, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_system_params(rng: np.random.Generator) -> SystemParams:
    return SystemParams(
        kappa_h=float(rng.uniform(5.0, 30.0)),
        kappa_v=float(rng.uniform(5.0, 30.0)),
        delta_h=float(rng.uniform(-20.0, 20.0)),
        delta_v=float(rng.uniform(-20.0, 20.0)),
        delta_1=float(rng.uniform(-20.0, 20.0)),
        delta_2=float(rng.uniform(-20.0, 20.0)),
        g_h=float(rng.uniform(0.0, 3.0)),
        g_v=float(rng.uniform(0.0, 3.0)),
        gamma_1=float(rng.uniform(0.01, 0.5)),
        gamma_2=float(rng.uniform(0.01, 0.5)),
        gamma_d1=float(rng.uniform(0.0, 0.3)),
        gamma_d2=float(rng.uniform(0.0, 0.3)),
        eta_h=float(rng.uniform(0.0, 0.3)),
        eta_v=float(rng.uniform(0.0, 0.3)),
    )

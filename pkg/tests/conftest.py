import json
from pathlib import Path

import pytest

import ricciflow as rf
from ricciflow.families import TrigPoly, TWO_PI

GOLDENS_PATH = Path(__file__).parent / "goldens.json"


@pytest.fixture(scope="session")
def goldens():
    return json.loads(GOLDENS_PATH.read_text())


@pytest.fixture(scope="session")
def sinxy_profile():
    """u = 0.1 sin x sin y on the 2pi-periodic square."""
    return TrigPoly.product_of_waves(
        (TWO_PI, TWO_PI), [("sin", 0, 1), ("sin", 1, 1)], amplitude=0.1
    )


@pytest.fixture(scope="session")
def sinx_profile():
    """u = 0.1 sin x, constant along y (isometry direction)."""
    return TrigPoly.product_of_waves((TWO_PI, TWO_PI), [("sin", 0, 1)], amplitude=0.1)


@pytest.fixture(scope="session")
def flat16():
    return rf.flat_torus(shape=(16, 16), order=4)


@pytest.fixture(scope="session")
def flat32():
    return rf.flat_torus(shape=(32, 32), order=4)


@pytest.fixture(scope="session")
def conformal24(sinxy_profile):
    return rf.conformal_torus(sinxy_profile, shape=(24, 24), order=4)


@pytest.fixture(scope="session")
def conformal48(sinxy_profile):
    return rf.conformal_torus(sinxy_profile, shape=(48, 48), order=4)


@pytest.fixture(scope="session")
def killing_torus32(sinx_profile):
    return rf.conformal_torus(sinx_profile, shape=(32, 32), order=4)


@pytest.fixture(scope="session")
def band32():
    return rf.sphere_band(radius=1.0, theta_margin=0.3, n_theta=32, n_phi=64, order=4)


@pytest.fixture(scope="session")
def cigar161():
    return rf.cigar(nodes=161, half_width=2.0, order=4)


@pytest.fixture(scope="session")
def gaussian21():
    return rf.gaussian_shrinker(lam=-0.5, nodes=21, half_width=2.0, order=4)

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gdicke.model import lambda_model, vee_model, xi_model
from gdicke.symmetry import conventional_constants


@pytest.fixture(scope="session")
def xi1():
    return xi_model(1, 4.0, 4.0)


@pytest.fixture(scope="session")
def xi4():
    return xi_model(4, 2.0, 4.0)


@pytest.fixture(scope="session")
def models3():
    return {"lambda": lambda_model(2), "xi": xi_model(2), "vee": vee_model(2)}


@pytest.fixture(scope="session")
def xi4_ops(xi4):
    return conventional_constants(xi4)

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from maryland.determinants import ModelParams  # noqa: E402
from maryland.torus import golden  # noqa: E402


@pytest.fixture(scope="session")
def gold():
    return golden()


@pytest.fixture(scope="session")
def params(gold):
    return ModelParams(1.5, gold, 0.2, 0.0)

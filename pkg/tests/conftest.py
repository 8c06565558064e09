import numpy as np
import pytest
from hypothesis import settings

from witten_dolbeault import geometry as geo
from witten_dolbeault import spectral as S
from witten_dolbeault.forms import Form, FourierFunction

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def sin_omega(m: int = 1, k=(1, 0), c: complex = 1.0) -> Form:
    """``c sin(2 pi k.x) dz^1``."""
    return Form(m, {((1,), ()): FourierFunction.sin(m, k) * c})


@pytest.fixture(scope="session")
def flat_sin_spec():
    return geo.ManifoldSpec.flat(1, sin_omega(), label="flat-sin")


@pytest.fixture(scope="session")
def isin_y_spec():
    return geo.ManifoldSpec.flat(1, sin_omega(k=(0, 1), c=0.5j), label="isin-y")


@pytest.fixture(scope="session")
def conformal_spec():
    return geo.ManifoldSpec.conformal(FourierFunction.sin(1, (1, 0), 0.1))


@pytest.fixture(scope="session")
def flat_sin_complex(flat_sin_spec):
    return S.assemble(flat_sin_spec, 24)


@pytest.fixture(scope="session")
def isin_y_complex(isin_y_spec):
    return S.assemble(isin_y_spec, 24)


@pytest.fixture(scope="session")
def conformal_complex(conformal_spec):
    return S.assemble(conformal_spec, 24)


@pytest.fixture(scope="session")
def grid32():
    xs = np.arange(32) / 32
    return np.meshgrid(xs, xs, indexing="ij")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance")
        for line in LINES:
            terminalreporter.write_line(line)

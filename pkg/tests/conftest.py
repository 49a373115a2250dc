
import numpy as np
import pytest

from certkit.certificate import NonlinearitySpec, certify, corollary_constants
from certkit.config import load_example
from helpers import reference_problem


@pytest.fixture(scope="session")
def ref_problem():
    return reference_problem()


@pytest.fixture(scope="session")
def ref_spec():
    return NonlinearitySpec(sigma=1.0, L=1.0, f0=lambda s: np.sin(s))


@pytest.fixture(scope="session")
def ref_cert(ref_problem, ref_spec):
    return certify(ref_problem, ref_spec)


@pytest.fixture(scope="session")
def ref_constants(ref_cert):
    return corollary_constants(ref_cert)


@pytest.fixture(scope="session")
def example_cfg():
    return load_example()


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {number:>2}. {title}: {detail}")

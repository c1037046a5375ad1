import pytest

from helpers import ACCEPTANCE
from snapsim import _kernels_py, kernels


@pytest.fixture(params=["python", "compiled"])
def kernel_impl(request):
    """Both kernel backends; the compiled one is skipped when not built."""
    if request.param == "python":
        return _kernels_py
    try:
        from snapsim import _kernels
    except ImportError:
        pytest.skip("compiled kernels not built")
    return _kernels


class ScriptedUniforms:
    """Stands in for an RngStream: replays fixed uniforms, zero gaussian noise."""

    def __init__(self, *values):
        self.values = list(values)

    def uniform(self):
        return self.values.pop(0)

    def gauss(self, mu, sigma):
        return mu


@pytest.fixture
def scripted():
    return ScriptedUniforms


def pytest_report_header(config):
    return f"snapsim kernel backend: {kernels.BACKEND}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

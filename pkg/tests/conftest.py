import numpy as np
import pytest

from semibif import kernels

BACKENDS = ["python"] + (["cython"] if kernels.compiled is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def simpson(f, a, b, n=1_000_000):
    """Composite Simpson rule, used as an independent quadrature oracle."""
    if n % 2:
        n += 1
    x = np.linspace(a, b, n + 1)
    y = f(x)
    h = (b - a) / n
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def pytest_terminal_summary(terminalreporter):
    import sys
    lines = []
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            lines = getattr(mod, "SUMMARY", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

import pytest

from riccicert import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    prev = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """record(k, passed, detail) stores one acceptance line and asserts it."""
    def record(k, passed, detail):
        line = f"CRITERION {k}: {'PASS' if passed else 'FAIL'} {detail}"
        _CRITERIA[k] = line
        print(line)
        assert passed, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])

import pytest

from nfapprox.presets import load_preset

PRESETS = ("Q", "Qi", "Qsqrt2", "Qsqrt5", "Qcubic")

# acceptance criteria report their outcome here; printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def fields():
    return {name: load_preset(name) for name in PRESETS}


@pytest.fixture(params=PRESETS)
def any_field(request):
    return load_preset(request.param)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import pytest

from nlrd.sampling import RngStream


@pytest.fixture
def rng():
    return RngStream(2024, 0)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: the full acceptance battery (slow)")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when == "call":
                lines += [v for k, v in rep.user_properties if k == "criterion_line"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)

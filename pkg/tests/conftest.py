import pytest

from skinloc.layout import make_patch_a, make_patch_b, uniform_probe_plan
from skinloc.sensing import ResponseModel

# criterion label -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def patch_a():
    return make_patch_a()


@pytest.fixture(scope="session")
def patch_b():
    return make_patch_b()


@pytest.fixture(scope="session")
def plan_b(patch_b):
    return uniform_probe_plan(patch_b, 5, 20)


@pytest.fixture(scope="session")
def noiseless():
    return ResponseModel(noise_sigma=0.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")

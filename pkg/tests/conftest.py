import pytest

from geoflow import load_model

# criterion -> list of (part, ok, detail); filled by test_acceptance, printed at the end
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def heis():
    return load_model("heisenberg")


@pytest.fixture(scope="session")
def flat():
    return load_model("flat_split")


@pytest.fixture(scope="session")
def warped():
    return load_model("warped_control")


@pytest.fixture(scope="session")
def hopf():
    return load_model("hopf_s3")


@pytest.fixture(scope="session")
def octo():
    return load_model("octonionic_hopf")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        failed = "; ".join(f"{name}: {detail}" for name, good, detail in parts if not good)
        passed = "; ".join(f"{name}: {detail}" for name, good, detail in parts if good)
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {failed or passed}")

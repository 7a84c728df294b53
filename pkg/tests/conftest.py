import pytest
from hypothesis import settings

from whitehead.charmap import whitehead_maps
from whitehead.modgroup import level_subgroup
from whitehead.moebius import diag

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def maps_2_2():
    A = diag(2, 1)
    return whitehead_maps(A, level_subgroup(A, 2))


def record(n: int, ok: bool, detail: str = "") -> bool:
    # several tests may report parts of one criterion; the line passes only if all do
    prev_ok, prev_detail = ACCEPTANCE.get(n, (True, ""))
    ACCEPTANCE[n] = (prev_ok and ok, "; ".join(d for d in (prev_detail, detail) if d))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"acceptance {n}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())

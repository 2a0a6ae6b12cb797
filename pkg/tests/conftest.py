from hypothesis import HealthCheck, settings

settings.register_profile("stpart", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("stpart")

import pytest

# criterion -> list of (part, ok, detail), filled by the acceptance tests
_CRITERIA: dict = {}


@pytest.fixture(scope="session")
def criterion():
    def record(k: int, part: str, ok: bool, detail: str = "") -> None:
        _CRITERIA.setdefault(k, []).append((part, ok, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        parts = _CRITERIA[k]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{p} {'ok' if ok else 'FAILED'}{': ' + d if d else ''}" for p, ok, d in parts)
        terminalreporter.write_line(f"criterion {k:>2}: {verdict}  {detail}")

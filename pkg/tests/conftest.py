"""Shared fixtures and the acceptance summary printed at the end of a run."""

ACCEPTANCE_RESULTS: dict = {}


def record_acceptance(criterion: str, title: str, passed: bool, detail: str):
    ACCEPTANCE_RESULTS[criterion] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k)):
        title, passed, detail = ACCEPTANCE_RESULTS[key]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status} criterion {key} ({title}): {detail}")

"""Collects acceptance-criterion results and prints one line per
criterion in the terminal summary."""

_CRITERION_RESULTS = []


def record_criterion(result: dict):
    _CRITERION_RESULTS.append(result)
    status = "PASS" if result["passed"] else "FAIL"
    print(f"ACCEPTANCE {result['id']:>2} {status} - {result['name']}: "
          f"{result['detail']}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for result in sorted(_CRITERION_RESULTS, key=lambda r: r["id"]):
        status = "PASS" if result["passed"] else "FAIL"
        terminalreporter.write_line(
            f"criterion {result['id']:>2} {status} - {result['name']}: "
            f"{result['detail']}")

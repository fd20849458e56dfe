from hypothesis import HealthCheck, settings

settings.register_profile(
    "racelike",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("racelike")

_acceptance: list[tuple[str, bool, str]] = []


def record_criterion(label: str, passed: bool, detail: str = "") -> None:
    _acceptance.append((label, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _acceptance:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())

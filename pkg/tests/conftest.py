import pytest

from dualjc.model import ModelParams

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _criteria[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, verdict = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {title}")


def base(**kw) -> ModelParams:
    """Detuning 2, kappa 0.1, atomic detuning 1e4 and equal couplings unless overridden."""
    values = dict(delta=2.0, sagnac=1.0, delta_q=1e4, kappa=0.1, lambda_a=1.5)
    values.update(kw)
    return ModelParams.from_lambdas(**values)


@pytest.fixture
def make_params():
    return base

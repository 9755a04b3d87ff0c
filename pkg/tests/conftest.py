import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def compiled():
    """Trigger the one-off JIT compile so timed tests measure integration only."""
    from friction_observer.controller import ReferenceGenerator
    from friction_observer.engine import ClosedLoopSystem, SimConfig, simulate
    from friction_observer.models import FrictionParams
    from friction_observer.observer import ObserverGains

    sys_ = ClosedLoopSystem(FrictionParams(0.4, 1.0, 100.0), ObserverGains(1.0, 100.0),
                            open_loop_input=ReferenceGenerator("sinusoid"))
    simulate(sys_, SimConfig(t_end=1e-3, dt=1e-4, log_every=1))
    return True


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in summary")


_VERDICTS: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    measured = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _VERDICTS.append((mark.args[0], "PASS" if rep.passed else "FAIL", measured))


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict, measured in _VERDICTS:
        terminalreporter.write_line(f"{verdict}  {label}" + (f"  [{measured}]" if measured else ""))

from functools import lru_cache

import pytest

from campus_ties.records import filter_valid
from campus_ties.synth import SynthConfig, generate
from campus_ties.ties import TieParams, count_cooccurrences, critical_frequency, infer_network


@lru_cache(maxsize=None)
def pipeline(seed: int, **overrides):
    """Synthetic campus for ``seed``, its pair counts, the solver's a_c and
    the inferred network. Cached across test modules."""
    cfg = SynthConfig(seed=seed, **overrides)
    campus = generate(cfg)
    window = campus.windows[0]
    valid = filter_valid(campus.consumption, window, 10)
    counts = count_cooccurrences(valid)
    a_c = critical_frequency(cfg.null_model())
    net = infer_network(valid, TieParams(a_c), window, counts=counts)
    return campus, counts, a_c, net


@pytest.fixture(scope="session")
def default_campus():
    return pipeline(0)


ACCEPTANCE_LINES: list[tuple[str, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(item.user_properties).get("detail", "")
        status = "PASS" if rep.passed else "FAIL"
        ACCEPTANCE_LINES.append((marker.args[0], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{status}  {label}" + (f"  [{detail}]" if detail else ""))

import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from netstab.scenario import load_scenario

settings.register_profile("netstab", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("netstab")


@pytest.fixture(scope="session")
def bundled():
    """name -> (scenario, system, equilibrium) for every bundled scenario."""
    out = {}
    for name in ("example1_set1", "example1_set2", "example2_set1", "example2_set2"):
        sc = load_scenario(name)
        system = sc.system()
        out[name] = (sc, system, sc.equilibrium(system))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRIT = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRIT.search(getattr(rep, "nodeid", ""))
            if not m or (outcome != "error" and rep.when != "call"):
                continue
            detail = ", ".join(f"{k}={v}" for k, v in rep.user_properties)
            rows[int(m.group(1))] = ("PASS" if outcome == "passed" else "FAIL", m.group(2), detail)
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(rows):
        status, label, detail = rows[k]
        terminalreporter.write_line(f"{status}  criterion {k}: {label.replace('_', ' ')}  [{detail}]")

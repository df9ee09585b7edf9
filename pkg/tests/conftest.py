import numpy as np
import pytest

from mimoee.config import PowerModelConfig, SystemConfig
from mimoee.geometry import LargeScaleMap, build_layout, drop_users


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cfg():
    return SystemConfig()


@pytest.fixture
def pm():
    return PowerModelConfig()


@pytest.fixture
def small_cfg():
    return SystemConfig(M=16, K=4, N=64, L=8)


def make_drop(config, K=None, seed=0):
    K = config.K if K is None else K
    return drop_users(build_layout(config), K, seed, config)


def hand_map(beta, noise_over_rho_p=1.0):
    """LargeScaleMap from an explicit (C, K, C) beta tensor."""
    beta = np.asarray(beta, dtype=float)
    C, K, _ = beta.shape
    return LargeScaleMap(beta, beta.sum(axis=2) + noise_over_rho_p, np.zeros((C, K, 2)), noise_over_rho_p)


# --- acceptance reporting -----------------------------------------------------

_RECORDS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RECORDS] = []


@pytest.fixture
def record(request):
    """Log one acceptance check as (criterion, label, ok, detail) and return ok."""
    def _record(criterion, label, ok, detail=""):
        ok = bool(ok)
        request.config.stash[_RECORDS].append((str(criterion), label, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'} [{criterion}] {label}: {detail}")
        return ok
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    recs = config.stash.get(_RECORDS, [])
    if not recs:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    by_crit = {}
    for crit, label, ok, detail in recs:
        by_crit.setdefault(crit, []).append((label, ok, detail))
    for crit, items in by_crit.items():
        ok = all(i[1] for i in items)
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {crit}")
        for label, iok, detail in items:
            tr.write_line(f"    {'pass' if iok else 'FAIL'}  {label}: {detail}")

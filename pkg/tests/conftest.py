import numpy as np
import pytest

from pointer_sieve.modelio import normalized, preset
from pointer_sieve.optimizer import haar_random_states

PRESETS = ("su2", "spin-boson", "spin:1", "spin:3/2", "qbm")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def normalized_preset(name, **kw):
    loaded = preset(name, **kw)
    model, _ = normalized(loaded)
    return model


def random_states(dim, count, seed=0):
    return haar_random_states(dim, count, np.random.default_rng(seed))


def low_fock_states(n_trunc, count, levels=8, seed=0):
    """Random states supported on the lowest ``levels`` Fock levels."""
    out = np.zeros((count, n_trunc), dtype=complex)
    out[:, :levels] = random_states(levels, count, seed)
    return out


# acceptance criteria register their outcome here; printed at the end of the run
ACCEPTANCE = {}


def record_criterion(number, title, checks):
    """Store and print one pass/fail line; return the failing checks."""
    failed = [name for name, ok in checks.items() if not ok]
    status = "PASS" if not failed else "FAIL"
    line = f"[{status}] criterion {number:2d}: {title}"
    if failed:
        line += " (failed: " + "; ".join(failed) + ")"
    ACCEPTANCE[number] = line
    print(line)
    return failed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])

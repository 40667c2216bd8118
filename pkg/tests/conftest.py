import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from plmcl.datagen import SyntheticSpec, generate  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_data():
    return generate(SyntheticSpec(n_images=400, n_features=8, n_classes=5,
                                  target_label_cardinality=1.8, seed=7))


@pytest.fixture(scope="session")
def default_data():
    return generate(SyntheticSpec())


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """``check(number, title, ok, detail)`` records a criterion line, then asserts it."""
    log = request.config.stash.setdefault(_ACCEPTANCE, [])

    def check(number, title, ok, detail=""):
        log.append((number, title, bool(ok), detail))
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, [])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(log):
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] {number}. {title}" + (f" - {detail}" if detail else ""))

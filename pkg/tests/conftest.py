import time
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# (number, title, passed, detail) for every acceptance criterion that ran
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@contextmanager
def criterion(number: int, title: str, time_limit: float | None = None, detail: dict | None = None):
    """Record PASS/FAIL for one acceptance criterion; ``detail`` may be filled in by the block."""
    detail = {} if detail is None else detail
    t0 = time.perf_counter()
    try:
        yield detail
    except AssertionError as exc:
        msg = str(exc).splitlines()[0] if str(exc) else "assertion failed"
        _record(number, title, False, f"{msg} ({time.perf_counter() - t0:.1f}s)", detail)
        raise
    elapsed = time.perf_counter() - t0
    if time_limit is not None and elapsed > time_limit:
        _record(number, title, False, f"runtime {elapsed:.1f}s exceeds {time_limit:.0f}s", detail)
        raise AssertionError(f"criterion {number} runtime {elapsed:.1f}s > {time_limit}s")
    _record(number, title, True, f"{elapsed:.1f}s", detail)


def _record(number, title, passed, timing, detail):
    extra = "; ".join(f"{k}={v}" for k, v in detail.items())
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title} [{timing}]" + (f" {extra}" if extra else "")
    ACCEPTANCE.append((number, title, passed, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, _, line in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(line)

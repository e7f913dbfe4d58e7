import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_modes(rng, r, K, damped=False):
    from emac.signal import Mode

    out = []
    for f in rng.random((r, K)):
        amp = complex(rng.standard_normal(), rng.standard_normal())
        damp = tuple(rng.uniform(0.9, 1.0, K)) if damped else None
        out.append(Mode(tuple(f), amp, damp))
    return tuple(out)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda s: (int(s.split()[0]), s)):
        status, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"criterion {label:<13s} {status:4s}  {detail}")

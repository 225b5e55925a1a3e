import numpy as np
import pytest
from hypothesis import settings

from agspectrum import curve as cv
from agspectrum import floquet as fl
from agspectrum import special as sf
from agspectrum import spectrum as sp

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def lame_std():
    s = sf.lame_scenario(1.0, 1j)
    c = cv.new_curve(s.branch_points)
    pd = cv.spectral_normalization(c)
    return s, c, pd


@pytest.fixture(scope="session")
def lame_std_trace(lame_std):
    _, c, pd = lame_std
    return sp.trace_arcs(c, pd)


@pytest.fixture(scope="session")
def lame_std_pot(lame_std):
    return fl.PeriodicPotential.from_lame(lame_std[0])


@pytest.fixture(scope="session")
def lame_conj():
    s = sf.lame_scenario(1 - 0.8j, 1 + 0.8j, "conjugate_pair", 0.1 + 0.3j)
    c = cv.new_curve(s.branch_points)
    pd = cv.spectral_normalization(c)
    return s, c, pd


@pytest.fixture(scope="session")
def lame_conj_trace(lame_conj):
    _, c, pd = lame_conj
    return sp.trace_arcs(c, pd)


@pytest.fixture(scope="session")
def lame_tilted():
    # complex-valued potential with Im<V> != 0: used for the asymptote fit
    s = sf.lame_scenario(1.0, 0.4 + 0.9j)
    c = cv.new_curve(s.branch_points)
    pd = cv.spectral_normalization(c)
    return s, c, pd


@pytest.fixture(scope="session")
def lame_tilted_trace(lame_tilted):
    _, c, pd = lame_tilted
    return sp.trace_arcs(c, pd)


@pytest.fixture(scope="session")
def sym3():
    c = cv.new_curve([-1.0, 0.0, 1.0])
    pd = cv.spectral_normalization(c)
    return c, pd


@pytest.fixture(scope="session")
def sym3_trace(sym3):
    return sp.trace_arcs(*sym3)


def random_genus2(seed: int):
    """Generic complex genus-2 branch points, well separated."""
    rng = np.random.default_rng(seed)
    while True:
        E = rng.uniform(-2, 2, 5) + 1j * rng.uniform(-1.5, 1.5, 5)
        d = np.abs(E[:, None] - E[None, :]) + np.eye(5) * 10
        if d.min() > 0.4:
            return list(E)


@pytest.fixture(scope="session")
def genus2_traces():
    out = []
    for seed in range(5):
        c = cv.new_curve(random_genus2(seed))
        pd = cv.spectral_normalization(c)
        out.append((c, pd, sp.trace_arcs(c, pd)))
    return out

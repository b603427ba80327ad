"""Shared fixtures: the reference profile, session-scoped sweeps, and the
acceptance summary printed at the end of the run."""

from contextlib import contextmanager

import pytest

from rotbec import (MinimizeConfig, continuation_sweep, default_townes,
                    gp_problem, harmonic, minimize, predicted_eps)

#: interaction ratios used by the shared near-critical sweep
SWEEP_RATIOS = (0.9, 0.95, 0.975, 0.99, 0.995)

_ACCEPTANCE_LINES = []


@contextmanager
def criterion(num: int, desc: str):
    """Collect one pass/fail line per acceptance criterion."""
    try:
        yield
    except BaseException:
        _ACCEPTANCE_LINES.append("FAIL criterion %2d: %s" % (num, desc))
        raise
    _ACCEPTANCE_LINES.append("PASS criterion %2d: %s" % (num, desc))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES,
                           key=lambda s: int(s.split("criterion")[1][:3])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def townes():
    return default_townes()


@pytest.fixture(scope="session")
def profile(townes):
    return townes[0]


@pytest.fixture(scope="session")
def consts(townes):
    return townes[1]


@pytest.fixture(scope="session")
def harmonic_sweep(consts):
    """Rescaled continuation sweep, harmonic trap, omega = 1."""
    a_vals = [r * consts.a_star for r in SWEEP_RATIOS]
    cfg = MinimizeConfig(n=256, L=12.0, seed=3)
    return continuation_sweep(a_vals, harmonic(), 1.0, cfg, multistart=False)


@pytest.fixture(scope="session")
def nonrot_sweep(consts):
    """The omega = 0 twin of harmonic_sweep."""
    a_vals = [r * consts.a_star for r in SWEEP_RATIOS]
    cfg = MinimizeConfig(n=256, L=12.0, seed=3)
    return continuation_sweep(a_vals, harmonic(), 0.0, cfg, multistart=False)


@pytest.fixture(scope="session")
def quick_result(consts):
    """One cheap converged interacting minimizer (a = 0.5 a*, omega = 1)."""
    prob = gp_problem(0.5 * consts.a_star, 1.0, harmonic())
    return minimize(prob, MinimizeConfig(n=128, L=12.0, seed=2))


@pytest.fixture(scope="session")
def multistart_battery(consts):
    """Four-start minimizations at the near-critical rotation combinations."""
    out = {}
    starts = (("gaussian", {}), ("vortex", {"charge": 1}),
              ("random", {"seed": 11}), ("random", {"seed": 12}))
    for ratio in (0.95, 0.99):
        for omega in (1.0, 1.5):
            a = ratio * consts.a_star
            eps_p = predicted_eps(gp_problem(a, omega, harmonic()))
            prob = gp_problem(a, omega, harmonic(), solve_scale=eps_p)
            runs = []
            for init, params in starts:
                cfg = MinimizeConfig(n=128, L=12.0, init=init,
                                     init_params=dict(params), seed=7)
                runs.append(minimize(prob, cfg))
            out[(ratio, omega)] = runs
    return out

"""Trap families, the rotation-adjusted trap, and the collapse-law constants.

Three trap families are supported:

    power(s)             V(x) = |x|^s,              s >= 2
    quartic_quadratic    V(x) = |x|^2 + k|x|^q,     k >= 0, q > 0
    shifted_harmonic     V(x) = |x - b|^2

The rotation-adjusted trap is V_omega(x) = V(x) - (omega^2/4)|x|^2; the
critical velocity omega_star is the supremum of rotation speeds keeping
V_omega confining. Near the origin V_omega is (to leading order) a
homogeneous profile h of degree p; gamma = min(p, 2) sets the collapse
exponent and lambda the collapse coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, RegimeError
from .townes import RadialProfile, TownesConstants, sample_w_2d

#: Tagged sentinel for an unbounded critical velocity. Never compare
#: rotation speeds against a large float; use ``omega_allowed``.
OMEGA_STAR_INF = "inf"


@dataclass(frozen=True)
class PotentialSpec:
    """Tagged trap description. ``params`` holds the family parameters."""

    kind: str
    params: tuple
    label: str = ""

    def __post_init__(self):
        if self.kind == "power":
            (s,) = self.params
            if s < 2:
                raise ConfigurationError("power trap needs s >= 2, got %g" % s)
        elif self.kind == "quartic_quadratic":
            k, q = self.params
            if k < 0 or q <= 0:
                raise ConfigurationError(
                    "quartic_quadratic needs k >= 0 and q > 0, got k=%g q=%g"
                    % (k, q))
        elif self.kind == "shifted_harmonic":
            b = self.params
            if len(b) != 2:
                raise ConfigurationError("shifted_harmonic needs a 2-vector b")
        else:
            raise ConfigurationError("unknown trap kind %r" % self.kind)
        if not self.label:
            object.__setattr__(self, "label", self.tag())

    def tag(self) -> str:
        if self.kind == "power":
            return "power:%g" % self.params[0]
        if self.kind == "quartic_quadratic":
            return "quartic_quadratic:k=%g,q=%g" % self.params
        return "shifted_harmonic:b=(%g,%g)" % self.params

    def __call__(self, x, y):
        """V evaluated on coordinate arrays."""
        if self.kind == "power":
            (s,) = self.params
            return (x * x + y * y) ** (s / 2.0)
        if self.kind == "quartic_quadratic":
            k, q = self.params
            r2 = x * x + y * y
            return r2 + k * r2 ** (q / 2.0)
        bx, by = self.params
        return (x - bx) ** 2 + (y - by) ** 2


def power(s: float) -> PotentialSpec:
    return PotentialSpec("power", (float(s),))


def quartic_quadratic(k: float, q: float) -> PotentialSpec:
    return PotentialSpec("quartic_quadratic", (float(k), float(q)))


def shifted_harmonic(bx: float, by: float) -> PotentialSpec:
    return PotentialSpec("shifted_harmonic", (float(bx), float(by)))


def harmonic() -> PotentialSpec:
    return power(2.0)


def critical_omega(spec: PotentialSpec):
    """Largest rotation speed for which V - (omega^2/4)|x|^2 still confines.

    Finite values are returned as floats; an unbounded threshold is the
    tagged sentinel OMEGA_STAR_INF.
    """
    if spec.kind == "power":
        (s,) = spec.params
        return 2.0 if s == 2.0 else OMEGA_STAR_INF
    if spec.kind == "quartic_quadratic":
        k, q = spec.params
        if k == 0.0 or q < 2.0:
            # growth stays quadratic; the k|x|^q part is lower order
            return 2.0
        if q == 2.0:
            return 2.0 * math.sqrt(1.0 + k)
        return OMEGA_STAR_INF
    return 2.0  # shifted harmonic


def omega_allowed(spec: PotentialSpec, omega: float) -> bool:
    star = critical_omega(spec)
    return star == OMEGA_STAR_INF or omega < star


@dataclass(frozen=True)
class EffectivePotential:
    """Trap + rotation pair with the derived collapse-law data."""

    spec: PotentialSpec
    omega: float
    p: float
    gamma: float
    omega_star: object  # float or OMEGA_STAR_INF
    #: nonempty when an assumption behind the collapse constants fails
    #: literally for this combination (see leading_profile)
    regime_note: str = ""

    def v(self, x, y):
        return self.spec(x, y)

    def v_omega(self, x, y):
        return self.spec(x, y) - 0.25 * self.omega ** 2 * (x * x + y * y)


def effective_potential(spec: PotentialSpec, omega: float) -> EffectivePotential:
    if omega < 0:
        raise ConfigurationError("omega must be >= 0, got %g" % omega)
    star = critical_omega(spec)
    p, _, note = _leading(spec, omega)
    return EffectivePotential(spec=spec, omega=omega, p=p,
                              gamma=min(p, 2.0), omega_star=star,
                              regime_note=note)


def v_omega(eff: EffectivePotential, x) -> float:
    """V(x) - (omega^2/4)|x|^2 at a single point x = (x1, x2)."""
    return float(eff.v_omega(float(x[0]), float(x[1])))


def _leading(spec: PotentialSpec, omega: float):
    """(p, h, note): degree and handle of the small-|x| profile of V_omega."""
    c_harm = 1.0 - 0.25 * omega * omega
    if spec.kind == "power":
        (s,) = spec.params
        if s == 2.0:
            if omega >= 2.0:
                return 2.0, None, "degenerate: harmonic leading term with omega >= 2"
            return 2.0, _radial_h(c_harm, 2.0), ""
        note = ""
        if omega > 0.0:
            note = ("p > 2 with rotation: the centrifugal dip near 0 is left "
                    "unmodeled; h is the pure power term")
        return s, _radial_h(1.0, s), note
    if spec.kind == "quartic_quadratic":
        k, q = spec.params
        if k == 0.0 or q > 2.0:
            if omega >= 2.0:
                return 2.0, None, "degenerate: harmonic leading term with omega >= 2"
            return 2.0, _radial_h(c_harm, 2.0), ""
        if q == 2.0:
            c = 1.0 + k - 0.25 * omega * omega
            if c <= 0.0:
                return 2.0, None, "degenerate: harmonic leading term with omega >= omega_star"
            return 2.0, _radial_h(c, 2.0), ""
        # q < 2: the k|x|^q term dominates near 0
        return q, _radial_h(k, q), ""
    # shifted harmonic: handled through the gauge transform; report the
    # centered equivalent
    if omega >= 2.0:
        return 2.0, None, "degenerate: harmonic leading term with omega >= 2"
    note = ""
    if spec.params != (0.0, 0.0):
        note = ("shifted trap: profile refers to the gauge-transformed "
                "centered problem")
    return 2.0, _radial_h(c_harm, 2.0), note


def _radial_h(c: float, p: float) -> Callable:
    def h(x, y):
        return c * (x * x + y * y) ** (p / 2.0)

    h.coefficient = c
    h.degree = p
    return h


def leading_profile(eff: EffectivePotential):
    """Degree p and handle h with V_omega(x) = (1+o(1)) h(x) near 0."""
    p, h, note = _leading(eff.spec, eff.omega)
    if h is None:
        raise RegimeError(
            "leading profile degenerate for %s at omega=%g (%s)"
            % (eff.spec.tag(), eff.omega, note))
    return p, h


_QUAD_CACHE: dict = {}


def _quad_grid(profile: RadialProfile, n: int = 256, L: float = 16.0):
    """Cached 2D quadrature mesh with w^2 sampled on it."""
    key = (profile.r_max, profile.h_r, profile.w0, n, L)
    if key not in _QUAD_CACHE:
        from .field import Grid2D

        grid = Grid2D(n=n, L=L)
        w2d = sample_w_2d(profile, grid).values.real
        _QUAD_CACHE[key] = (grid, w2d * w2d)
    return _QUAD_CACHE[key]


def h_moment(eff: EffectivePotential, y, profile: RadialProfile) -> float:
    """H(y) = int h(x + y) w(x)^2 dx by 2D quadrature of the sampled w."""
    p, h = leading_profile(eff)
    grid, w2 = _quad_grid(profile)
    y1, y2 = float(y[0]), float(y[1])
    if abs(y1) > grid.L / 2 or abs(y2) > grid.L / 2:
        raise ConfigurationError(
            "offset (%g, %g) too large for the quadrature box" % (y1, y2))
    vals = h(grid.X + y1, grid.Y + y2)
    return float((vals * w2).sum() * grid.dx ** 2)


def h_moment_gradient(eff: EffectivePotential, y, profile: RadialProfile,
                      step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of H at y."""
    g = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        g[i] = (h_moment(eff, np.asarray(y) + e, profile)
                - h_moment(eff, np.asarray(y) - e, profile)) / (2 * step)
    return g


def minimize_h(eff: EffectivePotential, profile: RadialProfile,
               y_init=(0.0, 0.0), max_iter: int = 30,
               grad_tol: float = 1e-7) -> np.ndarray:
    """Damped Newton on y for the minimizer y0 of H.

    All implemented families are radial, so the answer is y0 = 0; the
    optimizer is kept as a regression guard on the quadrature path.
    """
    y = np.asarray(y_init, dtype=float)
    step = 1e-4
    for _ in range(max_iter):
        g = h_moment_gradient(eff, y, profile, step=step)
        if np.hypot(*g) < grad_tol:
            break
        hess = np.zeros((2, 2))
        for i in range(2):
            e = np.zeros(2)
            e[i] = step
            gp = h_moment_gradient(eff, y + e, profile, step=step)
            gm = h_moment_gradient(eff, y - e, profile, step=step)
            hess[:, i] = (gp - gm) / (2 * step)
        hess = 0.5 * (hess + hess.T)
        try:
            delta = np.linalg.solve(hess + 1e-12 * np.eye(2), g)
        except np.linalg.LinAlgError:
            delta = g
        # damping: halve until H decreases
        t = 1.0
        h0 = h_moment(eff, y, profile)
        while t > 1e-4:
            if h_moment(eff, y - t * delta, profile) < h0 + 1e-15:
                break
            t *= 0.5
        y = y - t * delta
    return y


def lambda_const(eff: EffectivePotential, constants: TownesConstants,
                 profile: Optional[RadialProfile] = None,
                 y0=None) -> float:
    """Collapse coefficient lambda, by the case split on p.

        p < 2:  [ (p/2) H(y0) ]^(1/(2+p))
        p = 2:  [ H(y0) + (omega^2/4) m2 ]^(1/4)
        p > 2:  [ (omega^2/4) m2 ]^(1/4)

    For the centered harmonic trap the p = 2 branch collapses to m2^(1/4)
    exactly: H(0) = (1 - omega^2/4) m2 and the centrifugal moment restores
    the full m2.
    """
    p = eff.p
    quarter_o2_m2 = 0.25 * eff.omega ** 2 * constants.m2
    if p > 2.0:
        if eff.omega == 0.0:
            raise RegimeError(
                "lambda undefined (zero) for p > 2 without rotation; "
                "out of the collapse-law regime")
        return quarter_o2_m2 ** 0.25
    # H(y0) needed; default y0 = 0 (all families are radial)
    if y0 is None:
        y0 = (0.0, 0.0)
    if profile is None:
        raise ConfigurationError("profile required for the p <= 2 branches")
    hy0 = h_moment(eff, y0, profile)
    if p == 2.0:
        return (hy0 + quarter_o2_m2) ** 0.25
    return ((p / 2.0) * hy0) ** (1.0 / (2.0 + p))


def lambda_harmonic(constants: TownesConstants) -> float:
    """Closed-form lambda = m2^(1/4) for the centered harmonic trap."""
    return constants.m2 ** 0.25


def gauge_energy_offset(b, omega: float) -> float:
    """Field-independent energy offset between the shifted and centered trap.

    F_shifted(u) = F_centered(transform(u)) - omega^2 |b|^2 / (4 - omega^2).
    """
    if omega >= 2.0:
        raise RegimeError("gauge transform needs omega < 2, got %g" % omega)
    b2 = float(b[0]) ** 2 + float(b[1]) ** 2
    return -(omega ** 2) * b2 / (4.0 - omega ** 2)

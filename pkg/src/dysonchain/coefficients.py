"""Time-dependent coefficient functions derived from a width profile sigma(t).

Naming: ``g`` is the coupling of the quartic term, ``m`` the mass-like term,
and the Dyson map is ``exp(alpha x) exp(beta p^3 + i gamma p^2 + i delta p)``.
Trailing digits denote time derivatives (``g1`` is dg/dt).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CouplingDomainError, SingularityError
from .profiles import DerivativeJet, Jet, log

SINGULAR_EPS = 1e-8


@dataclass(frozen=True)
class Couplings:
    t: float
    g: float
    g1: float
    g2: float
    g3: float
    m: float
    m1: float
    c2: float = 0.0


@dataclass(frozen=True)
class DysonCoefficients:
    t: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    alpha1: float
    beta1: float
    gamma1: float
    delta1: float
    c1: float = 0.0


@dataclass(frozen=True)
class HermitianCoefficients:
    """Coefficients of sigma^3 p^4 + f_pp p^2 + f_x x + f_p p + f_xp {x,p} + f_xx x^2 + C."""

    t: float
    f_pp: float
    f_xp: float
    f_p: float
    f_x: float
    f_xx: float
    C: float
    quartic: float  # sigma^3


@dataclass(frozen=True)
class PotentialPoly:
    """V(y) = a4 y^4 + a2 y^2 + a1 y + a0."""

    t: float
    a4: float
    a2: float
    a1: float
    a0: float

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return ((self.a4 * y * y + self.a2) * y + self.a1) * y + self.a0


def _sigma_jet(jet: DerivativeJet, need: int) -> Jet:
    if jet.order < need:
        raise ValueError(f"jet of order {jet.order} given, {need} required")
    if jet[0] <= 0:
        raise CouplingDomainError(f"sigma(t)={jet[0]!r} must be positive (g = 1/(4 sigma^3))")
    return Jet.from_derivatives(jet.values[: need + 1])


def couplings_from_sigma(jet: DerivativeJet, c2: float = 0.0) -> Couplings:
    """g = 1/(4 sigma^3) and m = (4 c2 + sigma'^2 - 2 sigma sigma'')/(4 sigma^2), with derivatives."""
    s = _sigma_jet(jet, 3)
    s1 = s.derivative()
    s2 = s1.derivative()
    g = 1.0 / (4.0 * s ** 3)
    m = (4.0 * c2 + s1 * s1 - 2.0 * s * s2) / (4.0 * s ** 2)
    gd = g.derivatives()
    md = m.derivatives()
    return Couplings(jet.t, gd[0], gd[1], gd[2], gd[3], md[0], md[1], float(c2))


def constraint_residual(c: Couplings) -> float:
    """Left side of 9g^2(g''' - 6g m') + 36 g g'(g m - g'') + 28 g'^3 = 0."""
    g, g1, g2, g3 = c.g, c.g1, c.g2, c.g3
    return 9 * g * g * (g3 - 6 * g * c.m1) + 36 * g * g1 * (g * c.m - g2) + 28 * g1 ** 3


def constraint_scale(c: Couplings) -> float:
    return max(1.0, abs(9 * c.g * c.g * c.g3), abs(28 * c.g1 ** 3))


def _check_regular(g, g1, t, eps):
    if not abs(g1) >= eps * abs(g):
        raise SingularityError(
            f"Dyson map singular at t={t!r}: dg/dt={g1!r} vanishes (sigma stationary)")


def dyson_coefficients(c: Couplings, c1: float = 0.0, eps: float = SINGULAR_EPS) -> DysonCoefficients:
    """alpha, beta, gamma, delta of the Dyson map and their first time derivatives."""
    _check_regular(c.g, c.g1, c.t, eps)
    g = Jet([c.g, c.g1, c.g2 / 2, c.g3 / 6])
    m = Jet([c.m, c.m1])
    g1 = g.derivative()
    g2 = g1.derivative()
    g = Jet(g.c[:3])
    alpha = g1 / (6 * g)
    beta = 1.0 / (6 * g)
    gamma = (12 * g ** 3 + 6 * m * g * g + g1 * g1 - g * g2) / (4 * g1 * g * g)
    delta = c1 * g / g1 - g * log(g) / (2 * g1)
    a, b, gm, d = (x.derivatives() for x in (alpha, beta, gamma, delta))
    return DysonCoefficients(c.t, a[0], b[0], gm[0], d[0], a[1], b[1], gm[1], d[1], float(c1))


def hermitian_coefficients(jet: DerivativeJet, c1: float = 0.0, c2: float = 0.0,
                           eps: float = SINGULAR_EPS) -> HermitianCoefficients:
    """Coefficients of the Hermitian counterpart h(x, t) for general c1, c2.

    The linear momentum term uses the factored form
    ``(2 c1 + ln 4 sigma^3) [sigma(4 c2 + s'^2 - 2 sigma s'') + 2] / (12 sigma s'^2)``;
    it is the form for which the time-dependent Dyson equation closes.
    """
    if jet.order < 2:
        raise ValueError("jet of order >= 2 required")
    s, s1, s2 = jet[0], jet[1], jet[2]
    if s <= 0:
        raise CouplingDomainError(f"sigma(t)={s!r} must be positive")
    # same threshold as dyson_coefficients: |g'| >= eps g  <=>  3|s'|/s >= eps
    if not 3 * abs(s1) >= eps * s:
        raise SingularityError(f"Hermitian Hamiltonian singular at t={jet.t!r}: dsigma/dt vanishes")
    L = 2 * c1 + math.log(4 * s ** 3)
    f_pp = (s * (s * (2 * (s * (s1 ** 2 - 4 * c2) - 2) * s2 + 16 * c2 ** 2 + s1 ** 4) + 16 * c2) + 4) \
        / (4 * s * s1 ** 2)
    f_xp = (s * (s1 ** 2 - 4 * c2) - 2) / (4 * s ** 2 * s1)
    f_p = L * (s * (4 * c2 + s1 ** 2 - 2 * s * s2) + 2) / (12 * s * s1 ** 2)
    f_x = -L / (12 * s ** 2 * s1)
    f_xx = 1 / (4 * s ** 3)
    C = (L ** 2 + 36 * s1 ** 2 * (4 * c2 ** 2 + s2)) / (144 * s * s1 ** 2) \
        + (s1 ** 2 - 4 * c2) * s2 / 8 - s1 ** 2 / (4 * s ** 2)
    return HermitianCoefficients(jet.t, f_pp, f_xp, f_p, f_x, f_xx, C, s ** 3)


def hermitian_coefficients_from_couplings(c: Couplings, eps: float = SINGULAR_EPS) -> HermitianCoefficients:
    """Same operator written through g and m (only for c1 = c2 = 0).

    Independent route used as a cross-check of :func:`hermitian_coefficients`.
    """
    if c.c2 != 0:
        raise ValueError("the g, m form assumes c2 = 0")
    _check_regular(c.g, c.g1, c.t, eps)
    g, g1, m = c.g, c.g1, c.m
    lg = math.log(g)
    f_pp = 18 * g * g * (2 * g + m) / g1 ** 2 + g1 ** 2 / (72 * g ** 3) - (2 * g + m) / (4 * g)
    f_p = -3 * (g * g * m + 2 * g ** 3) * lg / g1 ** 2
    f_x = -g * g * lg / g1
    f_xp = 6 * g * g / g1 - g1 / (12 * g)
    C = (1296 * g ** 8 * lg ** 2 + g1 ** 6 - 36 * g1 ** 4 * g * g * (2 * g + m)) / (5184 * g ** 5 * g1 ** 2) - m / 2
    return HermitianCoefficients(c.t, f_pp, f_xp, f_p, f_x, g, C, 1 / (4 * g))


def doublewell_coefficients(jet: DerivativeJet, c1: float = 0.0, c2: float = 0.0) -> PotentialPoly:
    """Potential of the momentum-space Hamiltonian p_y^2 + V(y)."""
    return doublewell_from_hermitian(hermitian_coefficients(jet, c1, c2))


def doublewell_from_hermitian(f: HermitianCoefficients) -> PotentialPoly:
    r = math.sqrt(f.f_xx)
    return PotentialPoly(
        f.t,
        a4=f.quartic * f.f_xx ** 2,
        a2=f.f_xx * f.f_pp - f.f_xp ** 2,
        a1=r * f.f_p - f.f_x * f.f_xp / r,
        a0=f.C - f.f_x ** 2 / (4 * f.f_xx),
    )


def doublewell_from_couplings(c: Couplings) -> PotentialPoly:
    """Closed g, m form of the double-well potential (c1 = c2 = 0).

    The linear coefficient is that of the reflected coordinate y -> -y relative
    to :func:`doublewell_coefficients`; the spectrum is unaffected.
    """
    g, g1, m = c.g, c.g1, c.m
    a2 = g / 4 * (g1 ** 2 / (36 * g ** 3) + 72 * g * g * m / g1 ** 2 - m / g + 2)
    a1 = (36 * g * g * m + g1 ** 2) * math.sqrt(g) * math.log(g) / (12 * g1 ** 2)
    a0 = g1 ** 4 / (5184 * g ** 5) - g1 ** 2 * m / (144 * g ** 3) - g1 ** 2 / (72 * g * g) - m / 2
    return PotentialPoly(c.t, g / 4, a2, a1, a0)


def potential_eval(which: str, point, c):
    """Evaluate a real potential curve.

    ``anharmonic-z``: (m/4) z^2 - (g/16) z^4 on the real line (needs :class:`Couplings`).
    ``doublewell-y``: the double-well potential (needs :class:`PotentialPoly`).
    """
    point = np.asarray(point, dtype=float)
    if which == "anharmonic-z":
        if not isinstance(c, Couplings):
            raise TypeError("anharmonic-z needs Couplings")
        z2 = point * point
        return c.m / 4 * z2 - c.g / 16 * z2 * z2
    if which == "doublewell-y":
        if not isinstance(c, PotentialPoly):
            raise TypeError("doublewell-y needs PotentialPoly")
        return c(point)
    raise ValueError(f"unknown potential {which!r}")


def massless_c2(k0: float, k1: float, k2: float) -> float:
    """c2 for which sigma = k0 + k1 t + k2 t^2 gives m = 0."""
    return k0 * k2 - k1 * k1 / 4

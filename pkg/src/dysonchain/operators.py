"""Truncated harmonic-oscillator matrices for every operator in the chain.

Conventions: hbar = 1, ``x = (a + a^dag)/sqrt(2 omega)``, ``p = i sqrt(omega/2)(a^dag - a)``,
so that ``[x, p] = i`` away from the truncation edge.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.linalg import expm

from .coefficients import Couplings, DysonCoefficients, HermitianCoefficients, PotentialPoly
from .errors import DysonOverflowError

EXP_BUDGET = 50.0
BCH_NAMES = ("x", "p", "x2", "p2", "xp2", "xp")


@dataclass(frozen=True)
class Basis:
    N: int
    omega: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8:
            raise ValueError(f"basis dimension must be an integer >= 8, got {self.N!r}")
        if not self.omega > 0:
            raise ValueError(f"basis scale must be positive, got {self.omega!r}")

    def padded(self, extra: int) -> "Basis":
        return Basis(self.N + extra, self.omega)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    basis: Basis
    entries: np.ndarray
    label: str = ""
    hermitian: bool = False

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.shape != (self.basis.N, self.basis.N):
            raise ValueError(f"shape {a.shape} does not match basis N={self.basis.N}")
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"non-finite entries in {self.label or 'matrix'}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def N(self):
        return self.basis.N

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, self.entries.conj().T, self.label + "^dag", self.hermitian)

    def hermiticity_defect(self) -> float:
        a = self.entries
        return float(np.abs(a - a.conj().T).max())

    def to_csv(self, stream):
        """Row-major dump; each matrix entry becomes an ``re,im`` pair."""
        w = csv.writer(stream, lineterminator="\n")
        for row in self.entries:
            w.writerow([f"{v:.17g}" for z in row for v in (z.real, z.imag)])


def _herm(b, a, label):
    # exact Hermiticity for Hermitian-tagged outputs
    return OperatorMatrix(b, 0.5 * (a + a.conj().T), label, hermitian=True)


def interior(a, k: int) -> np.ndarray:
    """Block of ``a`` on the lowest ``k`` basis states (both sides projected)."""
    a = a.entries if isinstance(a, OperatorMatrix) else np.asarray(a)
    return a[:k, :k]


def _xp(b: Basis):
    n = np.sqrt(np.arange(1, b.N, dtype=float))
    a = np.diag(n, 1).astype(complex)
    ad = a.T.copy()
    X = (a + ad) / math.sqrt(2 * b.omega)
    P = 1j * math.sqrt(b.omega / 2) * (ad - a)
    return X, P


def basis_matrices(b: Basis) -> tuple[OperatorMatrix, OperatorMatrix]:
    X, P = _xp(b)
    return (OperatorMatrix(b, X, "x", hermitian=True),
            OperatorMatrix(b, P, "p", hermitian=True))


class _Ops:
    """Cached powers and anti-commutators in one basis."""

    def __init__(self, b: Basis):
        self.b = b
        self.X, self.P = _xp(b)
        self.I = np.eye(b.N, dtype=complex)
        self.P2 = self.P @ self.P
        self.P3 = self.P2 @ self.P
        self.P4 = self.P2 @ self.P2
        self.X2 = self.X @ self.X
        self.XP = self.X @ self.P + self.P @ self.X
        self.XP2 = self.X @ self.P2 + self.P2 @ self.X


def _label(name, t):
    return f"{name}(t={t!r})" if t is not None else name


def build_H_real_line(c: Couplings, b: Basis) -> OperatorMatrix:
    """p^2 - p/2 + (i/2){x, p^2} - m(1 + i x) + g (x - i)^2."""
    o = _Ops(b)
    XmI = o.X - 1j * o.I
    a = o.P2 - 0.5 * o.P + 0.5j * o.XP2 - c.m * (o.I + 1j * o.X) + c.g * (XmI @ XmI)
    return OperatorMatrix(b, a, _label("H", c.t))


def build_h(f: HermitianCoefficients, b: Basis) -> OperatorMatrix:
    o = _Ops(b)
    a = (f.quartic * o.P4 + f.f_pp * o.P2 + f.f_x * o.X + f.f_p * o.P + f.f_xp * o.XP
         + f.f_xx * o.X2 + f.C * o.I)
    return _herm(b, a, _label("h", f.t))


def build_hhat(f: HermitianCoefficients, b: Basis) -> OperatorMatrix:
    """h after the unitary that removes the x and {x,p} terms."""
    if not f.f_xx > 0:
        raise ValueError("f_xx must be positive")
    o = _Ops(b)
    a = (f.quartic * o.P4 + (f.f_pp - f.f_xp ** 2 / f.f_xx) * o.P2
         + (f.f_p - f.f_x * f.f_xp / f.f_xx) * o.P + f.f_xx * o.X2
         + (f.C - f.f_x ** 2 / (4 * f.f_xx)) * o.I)
    return _herm(b, a, _label("hhat", f.t))


def build_htilde(pp: PotentialPoly, b: Basis) -> OperatorMatrix:
    """p_y^2 + V(y) with y represented by X."""
    if not pp.a4 > 0:
        raise ValueError("quartic coefficient must be positive")
    o = _Ops(b)
    a = o.P2 + pp.a4 * (o.X2 @ o.X2) + pp.a2 * o.X2 + pp.a1 * o.X + pp.a0 * o.I
    return _herm(b, a, _label("htilde", pp.t))


def build_unitary_U(f: HermitianCoefficients, b: Basis) -> OperatorMatrix:
    if not f.f_xx > 0:
        raise ValueError("f_xx must be positive")
    o = _Ops(b)
    gen = -1j * (f.f_xp / (2 * f.f_xx)) * o.P2 - 1j * (f.f_x / (2 * f.f_xx)) * o.P
    return OperatorMatrix(b, expm(gen), _label("U", f.t))


def _dyson_exponents(d: DysonCoefficients, o: _Ops):
    A = d.alpha * o.X
    B = d.beta * o.P3 + 1j * d.gamma * o.P2 + 1j * d.delta * o.P
    return A, B


def exponent_norms(d: DysonCoefficients, b: Basis) -> tuple[float, float]:
    """1-norms of the two exponents of the Dyson map in this basis."""
    A, B = _dyson_exponents(d, _Ops(b))
    return float(np.linalg.norm(A, 1)), float(np.linalg.norm(B, 1))


def build_dyson_map(d: DysonCoefficients, b: Basis, budget: float = EXP_BUDGET):
    """eta = exp(alpha X) exp(beta P^3 + i gamma P^2 + i delta P) and its structured inverse."""
    o = _Ops(b)
    A, B = _dyson_exponents(d, o)
    na, nb = np.linalg.norm(A, 1), np.linalg.norm(B, 1)
    if max(na, nb) > budget:
        raise DysonOverflowError(
            f"Dyson map exponent 1-norm {max(na, nb):.3g} exceeds budget {budget:g} "
            f"(N={b.N}, omega={b.omega:g}); reduce N or adjust omega")
    eA, eB = expm(A), expm(B)
    eta = eA @ eB
    eta_inv = expm(-B) @ expm(-A)
    return (OperatorMatrix(b, eta, _label("eta", d.t)),
            OperatorMatrix(b, eta_inv, _label("eta_inv", d.t)))


def build_metric(eta: OperatorMatrix) -> OperatorMatrix:
    a = eta.entries.conj().T @ eta.entries
    return _herm(eta.basis, a, "rho")


def metric_lower_bound(eta_inv: OperatorMatrix) -> float:
    """Smallest eigenvalue of eta^dag eta, computed as 1/||eta^-1||_2^2.

    Avoids the cancellation that a direct eigen-solve of the (very badly
    conditioned) metric suffers from.
    """
    s = np.linalg.norm(eta_inv.entries, 2)
    return float(1.0 / (s * s))


def build_gauge_right(d: DysonCoefficients, b: Basis) -> OperatorMatrix:
    """i eta^-1 d(eta)/dt in closed form."""
    o = _Ops(b)
    a = (1j * d.alpha1 * o.X + 1j * d.beta1 * o.P3 - (3 * d.alpha1 * d.beta + d.gamma1) * o.P2
         - (2j * d.gamma * d.alpha1 + d.delta1) * o.P - 1j * d.delta * d.alpha1 * o.I)
    return OperatorMatrix(b, a, _label("gauge_right", d.t))


def build_gauge_left(d: DysonCoefficients, b: Basis) -> OperatorMatrix:
    """i d(eta)/dt eta^-1 in closed form."""
    o = _Ops(b)
    al = d.alpha
    a = (1j * d.alpha1 * o.X + 1j * d.beta1 * o.P3 - (3 * d.beta1 * al + d.gamma1) * o.P2
         - (3j * d.beta1 * al ** 2 + 2j * d.gamma1 * al + d.delta1) * o.P
         + (d.beta1 * al ** 3 + d.gamma1 * al ** 2 - 1j * d.delta1 * al) * o.I)
    return OperatorMatrix(b, a, _label("gauge_left", d.t))


def build_energy_operator(c: Couplings, d: DysonCoefficients, b: Basis) -> OperatorMatrix:
    """H + i eta^-1 d(eta)/dt, entrywise sum of the two closed-form builders.

    Note: the raw truncation of this operator is highly non-normal and its
    finite spectra do not settle; use :func:`build_energy_normal_form` for
    eigenvalues.
    """
    H = build_H_real_line(c, b)
    G = build_gauge_right(d, b)
    return OperatorMatrix(b, H.entries + G.entries, _label("energy", c.t))


# --- energy operator in momentum space ---------------------------------------

@dataclass(frozen=True)
class NormalForm:
    """The energy operator as ``kinetic * x^2 + Q(p + shift)``.

    In the momentum representation (x = i d/dp) the energy operator is a
    second-order differential operator. A gauge factor removes the first
    derivative term, and translating p into the complex plane to a stationary
    point of Q leaves an operator with an oscillator-like low spectrum.
    ``potential`` holds the coefficients of Q in ascending powers of p.
    """

    t: float
    kinetic: float
    potential: np.ndarray = field(repr=False)
    shift: complex = 0j

    def shifted(self) -> np.ndarray:
        """Taylor coefficients of Q around ``shift``."""
        q = self.potential
        return np.array([npoly.polyval(self.shift, npoly.polyder(q, k)) / math.factorial(k)
                         for k in range(len(q))], dtype=complex)

    def curvature(self) -> float:
        return float(self.shifted()[2].real)


def energy_normal_form(c: Couplings, d: DysonCoefficients, shift="auto") -> NormalForm:
    g, m = c.g, c.m
    ad = d.alpha1
    # operator: -g d^2 + (2g + m - ad - p^2) d + V(p)
    V = np.array([-(m + g + 1j * d.delta * ad),
                  -(1.5 + 2j * d.gamma * ad + d.delta1),
                  1 - 3 * ad * d.beta - d.gamma1,
                  1j * d.beta1], dtype=complex)
    drift = np.array([2 * g + m - ad, 0.0, -1.0], dtype=complex)
    # gauge exp(w), w' = drift/(2g): removes d; adds -drift'/2 + drift^2/(4g)
    Q = npoly.polyadd(npoly.polyadd(V, [0.0, 1.0]), npoly.polymul(drift, drift) / (4 * g))
    if isinstance(shift, str):
        if shift != "auto":
            raise ValueError(f"unknown shift {shift!r}")
        crit = npoly.polyroots(npoly.polyder(Q))
        vals = npoly.polyval(crit, Q)
        # the PT-symmetric stationary point has a real critical value
        order = sorted(range(len(crit)), key=lambda i: (round(abs(vals[i].imag), 12), vals[i].real))
        shift = complex(crit[order[0]])
    return NormalForm(c.t, g, Q, complex(shift))


def build_energy_normal_form(nf: NormalForm, b: Basis) -> OperatorMatrix:
    o = _Ops(b)
    a = nf.kinetic * o.X2
    Pk = o.I
    for k, coef in enumerate(nf.shifted()):
        a = a + coef * Pk
        Pk = Pk @ o.P
    return OperatorMatrix(b, a, _label("energy_normal_form", nf.t))


# --- adjoint action of the Dyson map ----------------------------------------

def bch_closed_forms(d: DysonCoefficients, b: Basis) -> dict[str, OperatorMatrix]:
    """eta A eta^-1 in closed form for A in x, p, x^2, p^2, {x,p^2}, {x,p}."""
    o = _Ops(b)
    a, be, c, de = d.alpha, d.beta, d.gamma, d.delta
    X, P, I, P2, P3, P4 = o.X, o.P, o.I, o.P2, o.P3, o.P4
    u = 3 * a * a * be + 2 * a * c - 1j * de
    out = {
        "x": X + de * I + (6 * a * be + 2 * c) * P + (3j * a * a * be + 2j * a * c) * I - 3j * be * P2,
        "p": P + 1j * a * I,
        "x2": (o.X2 - 9 * be * be * P4 - 12j * be * (3 * a * be + c) * P3
               + (54 * a * a * be * be + 36 * a * be * c + 4 * c * c - 6j * be * de) * P2
               + 4 * (3 * a * be + c) * (de + 1j * a * (3 * a * be + 2 * c)) * P
               + 2 * (de + 3j * a * a * be + 2j * a * c) * X
               + (6 * a * be + 2 * c) * o.XP - 3j * be * o.XP2 - u * u * I),
        "p2": P2 - a * a * I + 2j * a * P,
        "xp2": (o.XP2 - 6j * be * P4 + (24 * a * be + 4 * c) * P3
                + (36j * a * a * be + 12j * a * c + 2 * de) * P2 - 2 * a * a * X
                + 4 * (1j * a * de - 6 * a ** 3 * be - 3 * a * a * c) * P
                - 2j * a * a * u * I + 2j * a * o.XP),
    }
    # eta x eta^-1 = x - i B'(p + i a) with B(q) = be q^3 + i c q^2 + i de q
    Pa = P + 1j * a * I
    dB = 3 * be * (Pa @ Pa) + 2j * c * Pa + 1j * de * I
    out["xp"] = o.XP + 2j * a * X - 2j * (dB @ Pa)
    return {k: OperatorMatrix(b, v, _label("Ad_" + k, d.t)) for k, v in out.items()}


BARE = {
    "x": lambda o: o.X,
    "p": lambda o: o.P,
    "x2": lambda o: o.X2,
    "p2": lambda o: o.P2,
    "xp2": lambda o: o.XP2,
    "xp": lambda o: o.XP,
}


def hadamard_series(G: np.ndarray, A: np.ndarray, k: int, max_terms: int = 60):
    """exp(G) A exp(-G) = sum_n ad_G^n(A)/n!, truncated when the terms on the
    leading k x k block stop contributing. Returns (result, terms used)."""
    out = A.copy()
    term = A.copy()
    a0 = np.abs(A[:k, :k]).max()
    gn = np.abs(G[:k, :k]).max()
    prev = a0
    best = None  # (smallest term, partial sum before it, index)
    for n in range(1, max_terms):
        term = (G @ term - term @ G) / n
        tn = np.abs(term[:k, :k]).max()
        scale = max(np.abs(out[:k, :k]).max(), gn * a0)
        if tn <= 1e-9 * scale:
            return out + term, n
        if best is None or tn < best[0]:
            best = (tn, out, n - 1)
        # past convergence the terms only carry amplified rounding noise
        if prev <= 1e-6 * scale and tn > prev:
            return out, n - 1
        if not np.isfinite(tn):
            break
        out = out + term
        prev = tn
    if best is not None and best[0] <= 1e-3 * max(np.abs(best[1][:k, :k]).max(), gn * a0):
        return best[1], best[2]
    raise RuntimeError(f"adjoint series did not converge in {max_terms} terms")


def conjugate_series(d: DysonCoefficients, build: Callable, b: Basis, pad: int = 32) -> OperatorMatrix:
    """eta A eta^-1 by nested commutators in a basis padded by ``pad`` states.

    ``build`` maps a padded basis to the matrix of A. No matrix exponential is
    formed, so this stays accurate where eta itself is far too ill-conditioned
    to represent. The padding keeps truncation effects out of the returned
    N x N block.
    """
    bp = b.padded(pad)
    o = _Ops(bp)
    A = build(bp)
    A = A.entries if isinstance(A, OperatorMatrix) else np.asarray(A, dtype=complex)
    Ga, Gb = _dyson_exponents(d, o)
    inner, _ = hadamard_series(Gb, A, b.N + pad // 2)
    outer, _ = hadamard_series(Ga, inner, b.N)
    return OperatorMatrix(b, outer[:b.N, :b.N], _label("conj", d.t))


def conjugate_bare(d: DysonCoefficients, name: str, b: Basis, pad: int = 32) -> OperatorMatrix:
    return conjugate_series(d, lambda bp: BARE[name](_Ops(bp)), b, pad)


def conjugate_expm(eta: OperatorMatrix, A: OperatorMatrix, eta_inv: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(A.basis, eta.entries @ A.entries @ eta_inv.entries, "conj_expm")

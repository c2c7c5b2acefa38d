"""Verification suites producing pass/fail reports."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss

from . import operators as ops
from .coefficients import (DysonCoefficients, constraint_residual, constraint_scale, couplings_from_sigma,
                           doublewell_from_hermitian, dyson_coefficients, hermitian_coefficients)
from .errors import InsufficientConvergenceError, ProfileDomainError, CouplingDomainError, SingularityError
from .gridref import fd_doublewell_spectrum
from .operators import Basis
from .profiles import TimeProfile, eval_jet
from .spectra import converged_levels, match_spectra, write_csv

REPORT_COLUMNS = ("suite", "t", "check", "value", "tolerance", "passed", "note")
OMEGA_SWEEP = (0.5, 1.0, 2.0, 4.0)


@dataclass
class CheckRecord:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""


def upper(name, value, tol, note=""):
    """Check that passes when value <= tol (NaN never passes)."""
    return CheckRecord(name, float(value), float(tol), bool(value <= tol), note)


def lower(name, value, tol, note=""):
    return CheckRecord(name, float(value), float(tol), bool(value >= tol), note)


@dataclass
class VerificationReport:
    suite: str
    t: Optional[float]
    settings: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    extras: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, check: CheckRecord):
        self.checks.append(check)
        return check

    def check(self, name) -> CheckRecord:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        head = " ".join(f"{k}={v}" for k, v in self.settings.items())
        t = "-" if self.t is None else f"{self.t:g}"
        lines = [f"# {self.suite} t={t} {head}".rstrip()]
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            note = f"  ({c.note})" if c.note else ""
            lines.append(f"{flag} {c.name}: {c.value:.3e} (tol {c.tolerance:.1e}){note}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)

    def csv_rows(self):
        t = math.nan if self.t is None else self.t
        return [(self.suite, t, c.name, c.value, c.tolerance, c.passed, c.note) for c in self.checks]


def write_reports_csv(stream, reports: Sequence[VerificationReport]):
    write_csv(stream, REPORT_COLUMNS, [r for rep in reports for r in rep.csv_rows()])


def _scaled_dev(a, b):
    dev = float(np.abs(a - b).max())
    return dev / max(1.0, float(np.abs(b).max())), dev


def _coefficients(profile: TimeProfile, t, c1=0.0, c2=0.0):
    jet = eval_jet(profile, t, 4)
    c = couplings_from_sigma(jet, c2)
    return jet, c, dyson_coefficients(c, c1)


# --- adjoint action ---------------------------------------------------------

def verify_bch(d: DysonCoefficients, b: Basis = Basis(48), tol: float = 1e-7, k: Optional[int] = None,
               method: str = "series", pad: int = 32) -> VerificationReport:
    """Closed-form eta A eta^-1 against direct conjugation for the six identities.

    ``method="series"`` conjugates by nested commutators in a padded basis;
    ``method="expm"`` multiplies the exponentiated Dyson map, also padded
    (subject to the overflow budget, so it needs a small basis scale).
    Deviations are scaled by max(1, max|closed form|) on the interior block.
    """
    k = b.N - 16 if k is None else k
    rep = VerificationReport("bch", d.t, {"N": b.N, "omega": b.omega, "k": k, "method": method})
    closed = ops.bch_closed_forms(d, b)
    if method == "expm":
        # exponentials are formed in the padded basis too; unpadded ones are
        # spoiled by truncation well inside the interior block
        bp = b.padded(pad)
        eta, eta_inv = ops.build_dyson_map(d, bp)
        bare = ops._Ops(bp)
    for name in ops.BCH_NAMES:
        if method == "expm":
            num = (eta.entries @ ops.BARE[name](bare) @ eta_inv.entries)[:b.N, :b.N]
        elif method == "series":
            num = ops.conjugate_bare(d, name, b, pad).entries
        else:
            raise ValueError(f"unknown method {method!r}")
        rel, dev = _scaled_dev(num[:k, :k], closed[name].entries[:k, :k])
        rep.add(upper(f"ad[{name}]", rel, tol, f"abs {dev:.2e}"))
    return rep


# --- Dyson equation ---------------------------------------------------------

def dyson_residual(profile, t, c1=0.0, c2=0.0, b: Basis = Basis(48), k: int = 24,
                   perturb: Optional[tuple] = None, pad: int = 32):
    """(max |R Pi_k|, Hermiticity defect) with R = eta H eta^-1 + i eta' eta^-1 - h.

    ``perturb=(field, factor)`` rescales one Dyson coefficient (negative control).
    """
    jet, c, d = _coefficients(profile, t, c1, c2)
    if perturb is not None:
        name, factor = perturb
        d = dataclasses.replace(d, **{name: getattr(d, name) * factor})
    f = hermitian_coefficients(jet, c1, c2)
    conj = ops.conjugate_series(d, lambda bp: ops.build_H_real_line(c, bp), b, pad).entries
    lhs = conj + ops.build_gauge_left(d, b).entries
    R = lhs - ops.build_h(f, b).entries
    blk = lhs[:k, :k]
    return float(np.abs(R[:, :k]).max()), float(np.abs(blk - blk.conj().T).max())


def residual_omega(f, n: int = 48) -> float:
    """Basis scale that minimises the largest entry of h.

    Rounding in the nested commutators grows with the size of the operators,
    so the most compact representation gives the cleanest residual.
    """
    best = None
    for j in range(0, 15):
        w = 2.0 ** (-j / 2)
        size = np.abs(ops.build_h(f, Basis(n, w)).entries).max()
        if best is None or size < best[0]:
            best = (size, w)
    return best[1]


def verify_dyson_residual(profile: TimeProfile, t: float, c1: float = 0.0, c2: float = 0.0,
                          b: Optional[Basis] = None, tol: float = 1e-5, k: int = 24,
                          control: Optional[tuple] = ("alpha", 1.1),
                          control_factor: float = 100.0) -> VerificationReport:
    """Time-dependent Dyson equation on the interior block.

    ``b=None`` uses N=48 with the scale from :func:`residual_omega`. With
    ``control`` set, the same residual is computed with one coefficient
    perturbed and must grow by at least ``control_factor``.
    """
    if b is None:
        jet = eval_jet(profile, t, 4)
        b = Basis(48, residual_omega(hermitian_coefficients(jet, c1, c2), 48))
    rep = VerificationReport("dyson_residual", t, {"N": b.N, "omega": b.omega, "k": k, "c1": c1, "c2": c2})
    res, herm = dyson_residual(profile, t, c1, c2, b, k)
    rep.add(upper("residual", res, tol))
    rep.add(upper("hermiticity_defect", herm, tol))
    if control is not None:
        bad, _ = dyson_residual(profile, t, c1, c2, b, k, perturb=control)
        ratio = bad / res if res > 0 else math.inf
        rep.add(lower("control_ratio", ratio, control_factor,
                      f"{control[0]} x{control[1]:g}: residual {bad:.2e}"))
    return rep


# --- gauge terms by finite differences -------------------------------------

def _hermite_poly(n, z):
    """Normalised Hermite functions without their Gaussian factor, rows 0..n-1."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros((n,) + z.shape, dtype=complex)
    out[0] = math.pi ** -0.25
    if n > 1:
        out[1] = math.sqrt(2.0) * z * out[0]
    for j in range(1, n - 1):
        out[j + 1] = math.sqrt(2.0 / (j + 1)) * z * out[j] - math.sqrt(j / (j + 1)) * out[j - 1]
    return out


def momentum_matrix(n, omega, mult, shift, nodes=None):
    """Matrix of f(p) -> mult(p) f(p + shift) in the first n oscillator states.

    Works in the momentum representation, where the states are
    (-i)^j omega^(-1/4) hermite_j(p / sqrt(omega)); integrals use Gauss-Hermite
    quadrature and the complex shift is applied analytically.
    """
    nodes = nodes or 2 * n + 80
    u, w = hermgauss(nodes)
    s = shift / math.sqrt(omega)
    p = math.sqrt(omega) * u
    fac = mult(p) * np.exp(-u * s - s * s / 2)  # Gaussian at the shifted point over the one at u
    left = _hermite_poly(n, u) * (1j ** np.arange(n))[:, None] * w
    right = _hermite_poly(n, u + s) * ((-1j) ** np.arange(n))[:, None] * fac
    return left @ right.T


def _B(d, q):
    return d.beta * q ** 3 + 1j * d.gamma * q ** 2 + 1j * d.delta * q


def gauge_fd(profile, t, c1=0.0, c2=0.0, n=48, omega=1.0, eps=1e-4):
    """Central differences of eta(s) eta(t)^-1 and eta(t)^-1 eta(s) at s = t.

    eta acts on momentum wave functions as (eta f)(p) = exp(B(p + i alpha)) f(p + i alpha).
    """
    d0 = _coefficients(profile, t, c1, c2)[2]
    dp = _coefficients(profile, t + eps, c1, c2)[2]
    dm = _coefficients(profile, t - eps, c1, c2)[2]

    def left(ds):
        return momentum_matrix(n, omega, lambda p: np.exp(_B(ds, p + 1j * ds.alpha) - _B(d0, p + 1j * ds.alpha)),
                               1j * (ds.alpha - d0.alpha))

    def right(ds):
        return momentum_matrix(n, omega,
                               lambda p: np.exp(_B(ds, p + 1j * (ds.alpha - d0.alpha)) - _B(d0, p)),
                               1j * (ds.alpha - d0.alpha))

    gl = 1j * (left(dp) - left(dm)) / (2 * eps)
    gr = 1j * (right(dp) - right(dm)) / (2 * eps)
    return d0, gl, gr


def gauge_omega(d: DysonCoefficients, n: int = 48, k: Optional[int] = None) -> float:
    """Basis scale that minimises the interior size of the gauge terms.

    The finite-difference error grows like (eps |G|)^2 |G|, so a compact
    interior block is what makes a fixed step accurate.
    """
    k = n - 16 if k is None else k
    best = None
    for j in range(0, 15):
        w = 2.0 ** (-j / 2)
        b = Basis(n, w)
        size = (np.abs(ops.build_gauge_left(d, b).entries[:k, :k]).max()
                + np.abs(ops.build_gauge_right(d, b).entries[:k, :k]).max())
        if best is None or size < best[0]:
            best = (size, w)
    return best[1]


def verify_gauge_forms(profile: TimeProfile, t: float, c1: float = 0.0, c2: float = 0.0,
                       b: Optional[Basis] = None, eps: float = 1e-4, tol: float = 1e-5,
                       k: Optional[int] = None) -> VerificationReport:
    """Both closed-form gauge terms against finite differences of eta.

    ``b=None`` uses N=48 with the scale from :func:`gauge_omega`.
    """
    d = _coefficients(profile, t, c1, c2)[2]
    if b is None:
        b = Basis(48, gauge_omega(d, 48, k))
    k = b.N - 16 if k is None else k
    rep = VerificationReport("gauge_forms", t, {"N": b.N, "omega": b.omega, "k": k, "eps": eps})
    _, gl, gr = gauge_fd(profile, t, c1, c2, b.N, b.omega, eps)
    cl = ops.build_gauge_left(d, b).entries
    cr = ops.build_gauge_right(d, b).entries
    rep.add(upper("left_vs_fd", np.abs(gl[:k, :k] - cl[:k, :k]).max(), tol))
    rep.add(upper("right_vs_fd", np.abs(gr[:k, :k] - cr[:k, :k]).max(), tol))
    # i eta' eta^-1 = eta (i eta^-1 eta') eta^-1
    moved = ops.conjugate_series(d, lambda bp: ops.build_gauge_right(d, bp), b).entries
    rel, dev = _scaled_dev(moved[:k, :k], cl[:k, :k])
    rep.add(upper("left_vs_conjugated_right", rel, tol, f"abs {dev:.2e}"))
    return rep


# --- compatibility ODE ------------------------------------------------------

def verify_constraint(profile: TimeProfile, ts: Sequence[float], c2: float = 0.0, tol: float = 1e-9,
                      massless: bool = False) -> VerificationReport:
    rep = VerificationReport("constraint", None, {"points": len(ts), "c2": c2})
    worst, worst_m = 0.0, 0.0
    for t in ts:
        try:
            c = couplings_from_sigma(eval_jet(profile, t, 4), c2)
        except (ProfileDomainError, CouplingDomainError) as exc:
            rep.add(CheckRecord(f"domain[t={t:g}]", math.nan, tol, False, str(exc)))
            continue
        worst = max(worst, abs(constraint_residual(c)) / constraint_scale(c))
        worst_m = max(worst_m, abs(c.m))
    rep.add(upper("max_scaled_residual", worst, tol))
    if massless:
        rep.add(upper("max_abs_m", worst_m, 1e-12))
    return rep


# --- spectra ----------------------------------------------------------------

def natural_omegas(f, pp, nf):
    """Basis scales adapted to each operator's dominant terms."""
    return {
        "h": (f.f_xx / f.quartic) ** (1 / 3),
        "hhat": (f.f_xx / f.quartic) ** (1 / 3),
        "htilde": pp.a4 ** (1 / 3),
        "energy": math.sqrt(nf.kinetic / max(abs(nf.curvature()), 1e-300)),
    }


def chain_operators(profile, t, c1=0.0, c2=0.0):
    """Builders (basis -> matrix) for h, hhat, htilde and the energy operator."""
    jet, c, d = _coefficients(profile, t, c1, c2)
    f = hermitian_coefficients(jet, c1, c2)
    pp = doublewell_from_hermitian(f)
    nf = ops.energy_normal_form(c, d)
    builders = {
        "h": lambda b: ops.build_h(f, b),
        "hhat": lambda b: ops.build_hhat(f, b),
        "htilde": lambda b: ops.build_htilde(pp, b),
        "energy": lambda b: ops.build_energy_normal_form(nf, b),
    }
    return builders, natural_omegas(f, pp, nf), pp


def chain_spectrum(name, profile, t, c1=0.0, c2=0.0, k=5, n=256, tol=1e-8, omega=None):
    builders, w0, _ = chain_operators(profile, t, c1, c2)
    centre = w0[name] if omega is None else omega
    return converged_levels(builders[name], k, Basis(n, centre), tol,
                            omegas=[centre * s for s in OMEGA_SWEEP], label=name, t=t)


def verify_spectral_equivalence(profile: TimeProfile, t: float, c1: float = 0.0, c2: float = 0.0,
                                k: int = 5, tol: float = 1e-5, tol_unitary: float = 1e-7,
                                imag_tol: float = 1e-6, n: int = 256, omega: Optional[float] = None,
                                gridref: bool = True) -> VerificationReport:
    """Lowest ``k`` levels of h, hhat, htilde and the energy operator agree.

    Spectra are converged under N -> 2N (so up to 2n states) with a basis-scale
    sweep. The energy operator is diagonalised in its momentum-space normal
    form (an exact similarity transform of H + i eta^-1 eta').
    """
    builders, w0, pp = chain_operators(profile, t, c1, c2)
    conv_tol = min(tol, tol_unitary) / 10
    rep = VerificationReport("spectral_equivalence", t,
                             {"N": n, "N2": 2 * n, "k": k, "c1": c1, "c2": c2, "conv_tol": conv_tol})
    rep.add(CheckRecord("quartic_coefficient", pp.a4, 0.0, bool(pp.a4 > 0), "must be > 0"))
    spectra = {}
    for name, build in builders.items():
        centre = w0[name] if omega is None else omega
        s = converged_levels(build, k, Basis(n, centre), conv_tol,
                             omegas=[centre * m for m in OMEGA_SWEEP], label=name, t=t)
        spectra[name] = s
        rep.add(lower(f"converged[{name}]", s.converged_count, k, f"omega {s.basis.omega:.4g}"))
    for other, limit in (("hhat", tol_unitary), ("htilde", tol), ("energy", tol)):
        try:
            rep.add(upper(f"match[h:{other}]", match_spectra(spectra["h"], spectra[other], k), limit))
        except InsufficientConvergenceError as exc:
            rep.add(CheckRecord(f"match[h:{other}]", math.nan, limit, False, str(exc)))
    en = spectra["energy"]
    rep.add(upper("max_imag[energy]", float(np.abs(en.levels[:k].imag).max()), imag_tol))
    if gridref:
        g = fd_doublewell_spectrum(pp, k=1)
        e0 = spectra["h"].levels[0].real
        rep.add(upper("gridref_ground", abs(g.levels[0].real - e0) / max(1.0, abs(e0)), 10 * tol,
                      f"grid {g.levels[0].real:.10g}"))
    rep.extras["spectra"] = spectra
    return rep


def verify_all(profile, t, c1=0.0, c2=0.0, n=256, k=5, tol=1e-5, omega=None,
               suites=("constraint", "bch", "dyson", "gauge", "spectral")):
    """Run the selected suites at one time point; errors become failed checks."""
    out = []
    for suite in suites:
        try:
            if suite == "constraint":
                rep = verify_constraint(profile, [t], c2)
                rep.t = t
            elif suite == "bch":
                d = _coefficients(profile, t, c1, c2)[2]
                rep = verify_bch(d, Basis(48, omega or 1.0))
            elif suite == "dyson":
                rep = verify_dyson_residual(profile, t, c1, c2, None if omega is None else Basis(48, omega))
            elif suite == "gauge":
                rep = verify_gauge_forms(profile, t, c1, c2, None if omega is None else Basis(48, omega))
            elif suite == "spectral":
                rep = verify_spectral_equivalence(profile, t, c1, c2, k=k, tol=tol, n=n, omega=omega)
            else:
                raise ValueError(f"unknown suite {suite!r}")
        except (SingularityError, ProfileDomainError, CouplingDomainError, OverflowError,
                RuntimeError, np.linalg.LinAlgError) as exc:
            rep = VerificationReport(suite, t)
            rep.add(CheckRecord("error", math.nan, math.nan, False, f"{type(exc).__name__}: {exc}"))
        out.append(rep)
    return out

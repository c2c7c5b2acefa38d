import dataclasses
import io
import math

import numpy as np
import pytest

from dysonchain import operators as ops
from dysonchain.coefficients import DysonCoefficients, hermitian_coefficients
from dysonchain.errors import DysonOverflowError, SingularityError
from dysonchain.operators import Basis
from dysonchain.profiles import cosh_profile, eval_jet, polynomial_profile
from dysonchain.verify import (VerificationReport, _coefficients, dyson_residual, gauge_fd, residual_omega,
                               upper, verify_all, verify_bch, verify_constraint, verify_dyson_residual,
                               verify_gauge_forms, verify_spectral_equivalence, write_reports_csv)

COSH = cosh_profile()


def dyson(alpha=0.0, beta=0.0, gamma=0.0, delta=0.0):
    return DysonCoefficients(0.0, alpha, beta, gamma, delta, 0, 0, 0, 0)


def test_bch_zero_coefficients_exact():
    rep = verify_bch(dyson())
    assert rep.passed
    assert all(c.value == 0 for c in rep.checks)
    assert len(rep.checks) == 6


def test_bch_example():
    assert verify_bch(dyson(0.3, 0.1, 0.2, 0.5), Basis(48)).passed


def test_bch_expm_route():
    rep = verify_bch(dyson(0.3, 0.1, 0.2, 0.5), Basis(48, 0.177), method="expm")
    assert rep.passed, rep.to_text()


def test_bch_expm_overflow():
    with pytest.raises(DysonOverflowError):
        verify_bch(dyson(beta=5.0), Basis(64), method="expm")


@pytest.mark.parametrize("t", [1.0, 2.0])
def test_bch_cosh(t):
    d = _coefficients(COSH, t)[2]
    assert verify_bch(d, Basis(48)).passed


@pytest.mark.parametrize("c1, c2", [(0.0, 0.0), (0.0, 0.3), (0.4, 0.0)])
def test_dyson_residual(c1, c2):
    rep = verify_dyson_residual(COSH, 1.0, c1, c2)
    assert rep.passed, rep.to_text()
    assert rep.check("residual").value <= 1e-7


@pytest.mark.parametrize("name", ["alpha", "beta", "gamma", "delta"])
def test_each_perturbed_coefficient_fails(name):
    f = hermitian_coefficients(eval_jet(COSH, 1.0, 4))
    b = Basis(48, residual_omega(f))
    good, _ = dyson_residual(COSH, 1.0, b=b)
    bad, _ = dyson_residual(COSH, 1.0, b=b, perturb=(name, 1.1))
    assert bad >= 100 * good and bad > 1e-5


def test_unfactored_momentum_coefficient_fails_residual():
    jet, c, d = _coefficients(COSH, 1.0)
    f = hermitian_coefficients(jet)
    s, s1 = jet[0], jet[1]
    unfactored = dataclasses.replace(f, f_p=math.log(4 * s**3) / (12 * s * s1**2))
    b = Basis(48, residual_omega(f))
    lhs = (ops.conjugate_series(d, lambda bp: ops.build_H_real_line(c, bp), b).entries
           + ops.build_gauge_left(d, b).entries)
    assert np.abs((lhs - ops.build_h(f, b).entries)[:, :24]).max() <= 1e-7
    assert np.abs((lhs - ops.build_h(unfactored, b).entries)[:, :24]).max() > 1e-2


def test_doubled_anticommutator_in_xp2_identity_is_caught():
    d = _coefficients(COSH, 1.0)[2]
    b = Basis(48)
    k = b.N - 16
    num = ops.conjugate_bare(d, "xp2", b).entries[:k, :k]
    closed = ops.bch_closed_forms(d, b)["xp2"].entries
    doubled = closed + 2j * d.alpha * ops._Ops(b).XP
    scale = np.abs(closed[:k, :k]).max()
    assert np.abs(num - closed[:k, :k]).max() / scale <= 1e-7
    assert np.abs(num - doubled[:k, :k]).max() / scale > 1e-6


def test_singular_time():
    with pytest.raises(SingularityError):
        verify_dyson_residual(COSH, 0.0)
    with pytest.raises(SingularityError):
        verify_spectral_equivalence(COSH, 0.0)
    reps = verify_all(COSH, 0.0, suites=("bch", "spectral"))
    assert all(not r.passed and r.checks[0].name == "error" for r in reps)
    assert "SingularityError" in reps[0].checks[0].note


def test_gauge_forms():
    rep = verify_gauge_forms(COSH, 1.0)
    assert rep.passed, rep.to_text()


def test_gauge_fd_detects_wrong_form():
    d = _coefficients(COSH, 1.0)[2]
    b = Basis(48, 0.022)
    _, gl, gr = gauge_fd(COSH, 1.0, n=b.N, omega=b.omega)
    k = 32
    # swapping the roles of the two closed forms must be visible
    assert np.abs(gl[:k, :k] - ops.build_gauge_right(d, b).entries[:k, :k]).max() > 1e-3
    assert np.abs(gr[:k, :k] - ops.build_gauge_right(d, b).entries[:k, :k]).max() <= 1e-5


def test_constraint_suite():
    rep = verify_constraint(COSH, np.arange(0.5, 3.0001, 0.1))
    assert rep.passed
    prof = polynomial_profile(1, 0, 1)
    rep = verify_constraint(prof, np.linspace(0.1, 3, 30), c2=1.0, massless=True)
    assert rep.passed and rep.check("max_abs_m").value <= 1e-12


def test_constraint_domain_errors_recorded():
    rep = verify_constraint(polynomial_profile(1, -1, 0), [0.5, 2.0])
    assert not rep.passed
    assert rep.check("domain[t=2]").note


def test_unitary_equivalence_small_basis():
    rep = verify_spectral_equivalence(COSH, 1.0, n=64, gridref=False)
    assert rep.check("match[h:hhat]").value <= 1e-7


def test_report_serialisation():
    rep = VerificationReport("demo", 1.0, {"N": 8})
    rep.add(upper("a", 1e-9, 1e-8))
    rep.add(upper("b", float("nan"), 1e-8))
    assert not rep.passed
    text = rep.to_text()
    assert text.splitlines()[0] == "# demo t=1 N=8"
    assert "FAIL b" in text and text.endswith("overall: FAIL")
    buf = io.StringIO()
    write_reports_csv(buf, [rep])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "suite,t,check,value,tolerance,passed,note"
    assert lines[2] == "demo,1,b,nan,1e-08,false,"


def test_empty_report_does_not_pass():
    assert not VerificationReport("x", None).passed

"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""
import functools
import time

import numpy as np
import pytest

from dysonchain.cli import main
from dysonchain.coefficients import DysonCoefficients, couplings_from_sigma, doublewell_coefficients, massless_c2
from dysonchain.gridref import fd_doublewell_spectrum
from dysonchain.operators import Basis
from dysonchain.profiles import cosh_profile, eval_jet, polynomial_profile
from dysonchain.verify import (_coefficients, verify_bch, verify_constraint, verify_dyson_residual,
                               verify_gauge_forms, verify_spectral_equivalence)

COSH = cosh_profile()
MASSLESS = polynomial_profile(1, 0, 1)
MASSLESS_C2 = massless_c2(1, 0, 1)


def report(capsys, number, title, ok, detail, seconds, limit=None):
    timing = f"{seconds:.2f}s" + (f" (limit {limit:g}s)" if limit else "")
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}; {timing}")


@functools.lru_cache(maxsize=None)
def spectral(profile_name, t):
    profile, c2 = (COSH, 0.0) if profile_name == "cosh" else (MASSLESS, MASSLESS_C2)
    start = time.perf_counter()
    rep = verify_spectral_equivalence(profile, t, 0.0, c2, k=5, tol=1e-5, tol_unitary=1e-7, imag_tol=1e-6, n=256)
    return rep, time.perf_counter() - start


def bch_reports(d_list):
    return [verify_bch(d, Basis(48), tol=1e-7) for d in d_list]


def test_criterion_1_constraint(capsys):
    start = time.perf_counter()
    rep = verify_constraint(COSH, [0.5, 1.0, 1.5, 2.0, 2.5, 3.0], tol=1e-9)
    dt = time.perf_counter() - start
    value = rep.check("max_scaled_residual").value
    ok = rep.passed and dt < 1
    report(capsys, 1, "constraint identity", ok, f"max scaled residual {value:.2e} (tol 1e-9)", dt, 1)
    assert ok


def test_criterion_2_closed_form_couplings(capsys):
    start = time.perf_counter()
    worst = 0.0
    for t in np.linspace(0.1, 3.0, 50):
        c = couplings_from_sigma(eval_jet(COSH, t, 4))
        g = 1 / (4 * np.cosh(t) ** 3)
        m = (np.tanh(t) ** 2 - 2) / 4
        worst = max(worst, abs(c.g - g) / abs(g), abs(c.m - m) / abs(m))
    dt = time.perf_counter() - start
    ok = worst <= 1e-12 and dt < 1
    report(capsys, 2, "closed-form couplings", ok, f"max relative error {worst:.2e} (tol 1e-12) at 50 points", dt, 1)
    assert ok


def test_criterion_3_bch(capsys):
    start = time.perf_counter()
    ds = [_coefficients(COSH, t)[2] for t in (1.0, 2.0)]
    rng = np.random.default_rng(20240601)
    ds += [DysonCoefficients(0.0, *rng.uniform(-1, 1, 4), 0, 0, 0, 0) for _ in range(20)]
    reps = bch_reports(ds)
    dt = time.perf_counter() - start
    worst = max(c.value for r in reps for c in r.checks)
    ok = all(r.passed for r in reps) and dt < 30
    report(capsys, 3, "adjoint-action identities", ok,
           f"max scaled deviation {worst:.2e} (tol 1e-7) over {len(reps)} coefficient sets x 6 identities", dt, 30)
    assert ok


def test_criterion_4_dyson_residual(capsys):
    start = time.perf_counter()
    rep = verify_dyson_residual(COSH, 1.0, 0.0, 0.0, tol=1e-5, k=24)
    dt = time.perf_counter() - start
    ok = rep.passed and dt < 10
    report(capsys, 4, "Dyson residual", ok,
           f"residual {rep.check('residual').value:.2e} (tol 1e-5), control ratio "
           f"{rep.check('control_ratio').value:.2e} (need >= 100), omega {rep.settings['omega']:.4g}", dt, 10)
    assert ok


@pytest.mark.parametrize("t", [1.0, 2.0])
def test_criterion_5_spectral_equivalence(capsys, t):
    rep, dt = spectral("cosh", t)
    vals = {name: rep.check(name).value for name in
            ("match[h:hhat]", "match[h:htilde]", "match[h:energy]", "max_imag[energy]")}
    names = [c.name for c in rep.checks if c.name != "gridref_ground"]
    ok = all(rep.check(n).passed for n in names) and dt < 300
    detail = (f"t={t:g} h/hhat {vals['match[h:hhat]']:.1e} (1e-7), h/htilde {vals['match[h:htilde]']:.1e} (1e-5), "
              f"h/energy {vals['match[h:energy]']:.1e} (1e-5), max|Im| {vals['max_imag[energy]']:.1e} (1e-6)")
    report(capsys, 5, "spectral equivalence", ok, detail, dt, 300)
    assert ok


def test_criterion_6_grid_oracle(capsys):
    worst, details, dt = 0.0, [], 0.0
    for t in (1.0, 2.0):
        rep, _ = spectral("cosh", t)
        e0 = rep.extras["spectra"]["h"].levels[0].real
        start = time.perf_counter()
        pp = doublewell_coefficients(eval_jet(COSH, t, 4))
        grid = fd_doublewell_spectrum(pp, k=1).levels[0].real
        dt += time.perf_counter() - start
        rel = abs(grid - e0) / abs(e0)
        worst = max(worst, rel)
        details.append(f"t={t:g} grid {grid:.8f} basis {e0:.8f} rel {rel:.1e}")
    ok = worst <= 1e-4 and dt < 60
    report(capsys, 6, "grid oracle ground level", ok, "; ".join(details) + " (tol 1e-4)", dt, 60)
    assert ok


def test_criterion_7_massless(capsys):
    start = time.perf_counter()
    ts = np.linspace(0.1, 3.0, 59)
    con = verify_constraint(MASSLESS, ts, c2=MASSLESS_C2, tol=1e-9, massless=True)
    d = _coefficients(MASSLESS, 1.0, 0.0, MASSLESS_C2)[2]
    bch = verify_bch(d, Basis(48), tol=1e-7)
    dys = verify_dyson_residual(MASSLESS, 1.0, 0.0, MASSLESS_C2)
    spec_rep, _ = spectral("massless", 1.0)
    dt = time.perf_counter() - start
    parts = {"constraint": con.passed, "bch": bch.passed, "dyson": dys.passed,
             "spectral": all(c.passed for c in spec_rep.checks if c.name != "gridref_ground")}
    ok = all(parts.values()) and dt < 300
    detail = (f"max|m| {con.check('max_abs_m').value:.1e} (tol 1e-12); "
              + ", ".join(f"{k} {'ok' if v else 'FAIL'}" for k, v in parts.items()))
    report(capsys, 7, "massless case", ok, detail, dt, 300)
    assert ok


def test_criterion_8_gauge_forms(capsys):
    start = time.perf_counter()
    rep = verify_gauge_forms(COSH, 1.0, tol=1e-5)
    dt = time.perf_counter() - start
    ok = rep.check("left_vs_fd").passed and rep.check("right_vs_fd").passed and dt < 10
    report(capsys, 8, "gauge terms vs finite differences", ok,
           f"left {rep.check('left_vs_fd').value:.1e}, right {rep.check('right_vs_fd').value:.1e} (tol 1e-5), "
           f"omega {rep.settings['omega']:.4g}", dt, 10)
    assert ok


def test_criterion_9_determinism(capsys, tmp_path):
    start = time.perf_counter()
    cfg = tmp_path / "run.cfg"
    cfg.write_text("profile = cosh(t)\nt_grid = 0.5:3.0:0.5\nlevels = 5\nn = 128\nwhich = htilde\n")
    outputs = []
    for i in range(2):
        out = tmp_path / f"run{i}.csv"
        main(["spectrum", "--config", str(cfg), "--out", str(out)])
        outputs.append(out.read_bytes())
    dt = time.perf_counter() - start
    ok = outputs[0] == outputs[1] and len(outputs[0]) > 0
    report(capsys, 9, "determinism", ok, f"two runs, {len(outputs[0])} bytes each, identical={ok}", dt)
    assert ok

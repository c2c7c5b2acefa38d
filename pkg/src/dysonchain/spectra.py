"""Eigensolvers, truncation convergence and spectrum comparison."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import InsufficientConvergenceError, NotHermitianError
from .operators import Basis, OperatorMatrix

N_MAX = 1024
COMPLEX_FLAG = 1e-3
SPECTRUM_COLUMNS = ("t", "level_index", "re", "im", "error_estimate", "converged")


@dataclass(frozen=True, eq=False)
class Spectrum:
    levels: np.ndarray
    basis: Optional[Basis]
    converged_count: int
    error_estimates: np.ndarray
    label: str = ""
    t: Optional[float] = None

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=complex)
        order = np.lexsort((lv.imag, lv.real))
        if not np.array_equal(order, np.arange(len(lv))):
            raise ValueError("levels must be sorted by real part, then imaginary part")
        if not 0 <= self.converged_count <= len(lv):
            raise ValueError("converged_count out of range")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "error_estimates", np.asarray(self.error_estimates, dtype=float))

    def __len__(self):
        return len(self.levels)

    def rows(self, k: Optional[int] = None):
        """CSV rows (t, level_index, re, im, error_estimate, converged)."""
        k = len(self.levels) if k is None else min(k, len(self.levels))
        t = math.nan if self.t is None else self.t
        return [(t, j, self.levels[j].real, self.levels[j].imag, self.error_estimates[j],
                 j < self.converged_count) for j in range(k)]


def sort_levels(ev) -> np.ndarray:
    ev = np.asarray(ev, dtype=complex)
    return ev[np.lexsort((ev.imag, ev.real))]


def eig_hermitian(A: OperatorMatrix, tol: float = 1e-12) -> Spectrum:
    a = A.entries
    scale = np.abs(a).max()
    if np.abs(a - a.conj().T).max() > tol * max(scale, np.finfo(float).tiny):
        raise NotHermitianError(f"{A.label or 'matrix'} is not Hermitian")
    ev = scipy.linalg.eigvalsh(a)
    n = len(ev)
    return Spectrum(ev.astype(complex), A.basis, n, np.full(n, np.nan), A.label)


def eig_general(A: OperatorMatrix) -> Spectrum:
    try:
        ev = scipy.linalg.eigvals(A.entries)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError(f"eigensolver failed for {A.label or 'matrix'}: {exc}") from exc
    n = len(ev)
    return Spectrum(sort_levels(ev), A.basis, n, np.full(n, np.nan), A.label)


def _solve(A: OperatorMatrix, hermitian: Optional[bool]) -> Spectrum:
    if hermitian is None:
        hermitian = A.hermitian
    return eig_hermitian(A) if hermitian else eig_general(A)


def _compare(lo: Spectrum, hi: Spectrum, k: int, tol: float):
    k = min(k, len(lo), len(hi))
    a, b = lo.levels[:k], hi.levels[:k]
    err = np.abs(b - a)
    ok = (err <= tol * np.maximum(1.0, np.abs(b))) & (np.abs(b.imag) <= COMPLEX_FLAG)
    count = k if ok.all() else int(np.argmin(ok))
    return err, count


def converged_levels(builder: Callable[[Basis], OperatorMatrix], k: int, b0: Basis, tol: float,
                     omegas: Optional[Iterable[float]] = None, hermitian: Optional[bool] = None,
                     label: str = "", t: Optional[float] = None) -> Spectrum:
    """Lowest ``k`` levels stabilised under N -> 2N.

    With ``omegas`` every basis scale is tried and the one with most converged
    levels (then smallest worst error) wins. The returned spectrum holds the
    2N levels; levels with |Im| > 1e-3 never count as converged.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if 2 * b0.N > N_MAX:
        raise ValueError(f"2N = {2 * b0.N} exceeds the dense-solver cap {N_MAX}")
    best = None
    for w in (omegas if omegas is not None else [b0.omega]):
        lo = _solve(builder(Basis(b0.N, w)), hermitian)
        hi = _solve(builder(Basis(2 * b0.N, w)), hermitian)
        err, count = _compare(lo, hi, k, tol)
        key = (count, -float(np.max(err[:max(count, 1)])))
        if best is None or key > best[0]:
            best = (key, hi, err, count)
    _, hi, err, count = best
    est = np.full(len(hi), np.nan)
    est[:len(err)] = err
    return Spectrum(hi.levels, hi.basis, count, est, label or hi.label, t)


def match_spectra(s1: Spectrum, s2: Spectrum, k: int) -> float:
    """Worst relative mismatch of the real parts of the lowest k levels."""
    for s in (s1, s2):
        if s.converged_count < k:
            raise InsufficientConvergenceError(
                f"{s.label or 'spectrum'} has {s.converged_count} converged levels, {k} needed")
    a, b = s1.levels[:k].real, s2.levels[:k].real
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(stream, header: Sequence[str], rows: Iterable[Sequence]):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def spectrum_to_csv(stream, spectra: Iterable[Spectrum], k: Optional[int] = None):
    rows = [r for s in spectra for r in s.rows(k)]
    rows.sort(key=lambda r: (r[0], r[1]))
    write_csv(stream, SPECTRUM_COLUMNS, rows)

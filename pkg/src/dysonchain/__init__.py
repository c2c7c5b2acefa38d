"""Operators, spectra and checks for a time-dependent unstable quartic oscillator
and its Hermitian double-well counterpart."""

from .coefficients import (Couplings, DysonCoefficients, HermitianCoefficients, PotentialPoly,
                           constraint_residual, couplings_from_sigma, doublewell_coefficients,
                           dyson_coefficients, hermitian_coefficients, massless_c2, potential_eval)
from .operators import Basis, OperatorMatrix, basis_matrices
from .profiles import DerivativeJet, TimeProfile, cosh_profile, eval_jet, parse_profile, polynomial_profile
from .spectra import Spectrum, converged_levels, eig_general, eig_hermitian, match_spectra

__version__ = "0.1.0"

"""Exact periods, couplings and quasi-modular fits for elliptically fibred Calabi-Yau families."""
from .certify import certify
from .coupling import (RationalFn2, YukawaSet, derive_yukawa_series, main_example_yukawa, multicover,
                       bps_from_gw, solve_three_point, to_tau, verify_pf_constraints)
from .mirror import build_mirror, t_expand, t_expand_q
from .modular import FitError, eisenstein, fit
from .periods import ModelParams, frobenius_solve
from .pipeline import fit_report, run_couplings, verify_suite
from .presets import get_model, model_presets
from .series import QExp, Series2
from .weyl import ShiftOp

__version__ = "0.1.0"

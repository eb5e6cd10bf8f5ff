"""Numerical laboratory for the Maryland model ``u(n+1) + u(n-1) + lam tan pi(theta + n alpha) u(n) = E u(n)``.

Submodules: :mod:`~maryland.torus` (frequencies and phases),
:mod:`~maryland.determinants` (box determinants, eigenpairs),
:mod:`~maryland.cocycle` (transfer matrices, Lyapunov exponents),
:mod:`~maryland.interpolation` (Lagrange reconstruction, window schemes),
:mod:`~maryland.localization` (Green's functions, regularity, decay) and
:mod:`~maryland.cli`.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .cocycle import (avg_log_ptilde, d_sequence, default_epsilon, lyapunov, lyapunov_birkhoff,
                      lyapunov_closed_form, transfer_product, x2_root)
from .config import ExperimentConfig, load_config, parse_config
from .determinants import (ModelParams, eig_in_window, g_eval, p_sequence, ptilde_sequence,
                           ptilde_value, sturm_count)
from .errors import *  # noqa: F401,F403
from .interpolation import (IntervalScheme, SampleSet, check_3eps_uniform, interval_scheme,
                            lagrange_reconstruct, uniformity_measure)
from .localization import (classify_point, decay_pipeline, find_I2_large, green_cramer, green_direct,
                           verify_I1_small, verify_regular)
from .signedlog import SignedLog
from .suite import run_lemma_suite
from .torus import Frequency, check_phase_guard, expand_cf, frequency_from_coeffs, golden, silver

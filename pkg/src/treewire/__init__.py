"""Markov-chain sampling of spanning trees of K_n by local rewiring."""

from .errors import *  # noqa: F401,F403
from .exact import (ClassRecord, automorphism_count, enumerate_labeled_trees,
                    exact_class_distribution, exact_mean_observable)
from .observables import ClassCode, class_code, diameter, height_from, max_degree
from .rewire import (ChainConfig, RewireMove, TransitionMatrix, build_transition_matrix,
                     rewire_step, run_chain, sweep)
from .rng import Xoshiro256
from .stats import (FitResult, TauIntEstimate, TimeSeries, bin_series, bootstrap_stderr,
                    chi2_cdf, chi2_sf, chi_square, fit_power_law, tau_int, z_score)
from .tree import (SpanningTree, from_pruefer, new_linear, new_star, to_pruefer, validate)

__version__ = "0.1.0"

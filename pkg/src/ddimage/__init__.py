"""Identify image representations of continuous-time LTI systems from sampled input-output data."""

from .algdiff import DifferentiatorSpec, build_kernel, estimate_derivatives
from .excitation import SplineInputSpec, generate_pe_spline, pe_order
from .experiment import RunConfig, RunResult, run_single, run_sweep
from .gramian import build_gramian, build_pencil, build_stack, numerical_rank, truncate_rank
from .imagerep import ImageRepresentation, behavior_membership_residual, build_image_representation, predict_trajectory
from .lti import StateSpaceModel, example_system, reconstruct_state, simulate
from .metrics import NoiseSpec, add_noise, relative_error, snr_db
from .pencil import embed_unimodular, pencil_inverse, regularized_pinv, staircase_reduce
from .signals import AnalyticSignal, SampledSignal, SplineSignal

__version__ = "0.1.0"

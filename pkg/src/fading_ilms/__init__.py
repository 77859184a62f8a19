"""Incremental LMS over fading links: closed-form steady state and Monte Carlo."""

__version__ = "0.1.0"

from .channels import ChannelModel, moments, rayleigh_from_mean, sample_gain  # noqa: E402
from .network import NetworkProfile, build_covariance, default_profile, eigendecompose, make_profile, validate_profile  # noqa: E402
from .simulation import EnsembleResult, SimConfig, run_ensemble, steady_state_from_curves  # noqa: E402
from .theory import exact_steady_state, ms_stability, theoretical_bias, theoretical_metrics, transient_recursion  # noqa: E402

__all__ = [
    "ChannelModel", "moments", "rayleigh_from_mean", "sample_gain",
    "NetworkProfile", "build_covariance", "default_profile", "eigendecompose", "make_profile", "validate_profile",
    "EnsembleResult", "SimConfig", "run_ensemble", "steady_state_from_curves",
    "exact_steady_state", "ms_stability", "theoretical_bias", "theoretical_metrics", "transient_recursion",
]

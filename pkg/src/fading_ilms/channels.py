"""Fading-gain distributions for the links of the ring.

Each link from node k-1 to node k multiplies the transmitted estimate by a
non-negative random gain h_k(i) and adds zero-mean channel noise with
covariance ``sigma_c2 * I``.  Only the first two moments of the gain enter
the closed-form analysis, so every model here exposes them exactly.

All gains are generated from two standard normal draws, whatever the kind.
This keeps the per-visit draw layout of the simulator fixed, so switching a
link from Rayleigh to Ideal does not shift the random stream of the others.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ParameterError

KINDS = ("ideal", "deterministic", "rayleigh", "rician")

# Number of standard normals consumed per gain draw.
NORMALS_PER_GAIN = 2


@dataclass(frozen=True)
class ChannelModel:
    """Distribution of a non-negative link gain plus additive link noise.

    Parameters
    ----------
    kind : {'ideal', 'deterministic', 'rayleigh', 'rician'}
    gain : float
        Constant gain of a deterministic link.
    sigma : float
        Scale of the Rayleigh / Rician envelope.
    nu : float
        Line-of-sight amplitude of a Rician link.
    sigma_c2 : float
        Variance of the additive channel noise per coordinate.
    """

    kind: str = "ideal"
    gain: float = 1.0
    sigma: float = 0.0
    nu: float = 0.0
    sigma_c2: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown channel kind {self.kind!r}")
        for name in ("gain", "sigma", "nu", "sigma_c2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ParameterError(f"{self.kind} channel: {name}={value} must be finite and >= 0")
        if self.kind == "ideal" and (self.gain != 1.0 or self.sigma_c2 != 0.0):
            raise ParameterError("ideal channel has unit gain and no channel noise")
        if self.kind in ("rayleigh", "rician") and self.sigma <= 0:
            raise ParameterError(f"{self.kind} channel needs sigma > 0")

    @property
    def is_random(self) -> bool:
        return self.kind in ("rayleigh", "rician")


def ideal() -> ChannelModel:
    return ChannelModel("ideal")


def deterministic(gain: float, sigma_c2: float = 0.0) -> ChannelModel:
    return ChannelModel("deterministic", gain=float(gain), sigma_c2=float(sigma_c2))


def rayleigh(sigma: float, sigma_c2: float = 0.0) -> ChannelModel:
    return ChannelModel("rayleigh", sigma=float(sigma), sigma_c2=float(sigma_c2))


def rician(nu: float, sigma: float, sigma_c2: float = 0.0) -> ChannelModel:
    return ChannelModel("rician", nu=float(nu), sigma=float(sigma), sigma_c2=float(sigma_c2))


def rayleigh_from_mean(mean: float, sigma_c2: float = 0.0) -> ChannelModel:
    """Rayleigh link whose mean gain equals `mean`.

    The Rayleigh mean is ``sigma * sqrt(pi/2)``, so the scale is recovered by
    a single division.
    """
    if not mean > 0:
        raise ParameterError(f"Rayleigh mean must be > 0, got {mean}")
    return rayleigh(mean / math.sqrt(math.pi / 2), sigma_c2)


def _rician_mean(nu: float, sigma: float) -> float:
    # sigma*sqrt(pi/2)*L_{1/2}(-K) with K = nu^2/(2 sigma^2), written with
    # exponentially scaled Bessel functions so large K does not overflow.
    k = nu * nu / (2 * sigma * sigma)
    laguerre = (1 + k) * special.i0e(k / 2) + k * special.i1e(k / 2)
    return float(sigma * math.sqrt(math.pi / 2) * laguerre)


def moments(model: ChannelModel) -> tuple[float, float]:
    """Exact mean and second moment ``(E[h], E[h^2])`` of the gain."""
    if model.kind == "ideal":
        return 1.0, 1.0
    if model.kind == "deterministic":
        return model.gain, model.gain * model.gain
    if model.kind == "rayleigh":
        return model.sigma * math.sqrt(math.pi / 2), 2 * model.sigma**2
    return _rician_mean(model.nu, model.sigma), 2 * model.sigma**2 + model.nu**2


def gains_from_normals(model: ChannelModel, z1, z2):
    """Map standard normal pairs to gains of `model` (vectorised)."""
    z1 = np.asarray(z1, dtype=float)
    if model.kind == "ideal":
        return np.ones_like(z1)
    if model.kind == "deterministic":
        return np.full_like(z1, model.gain)
    if model.kind == "rayleigh":
        return model.sigma * np.hypot(z1, z2)
    return np.hypot(model.nu + model.sigma * z1, model.sigma * np.asarray(z2))


def sample_gain(model: ChannelModel, rng: np.random.Generator) -> float:
    """Draw one gain; always consumes two normals from `rng`."""
    z = rng.standard_normal(NORMALS_PER_GAIN)
    return float(gains_from_normals(model, z[0], z[1]))


def sample_gains(model: ChannelModel, rng: np.random.Generator, size: int) -> np.ndarray:
    z = rng.standard_normal((size, NORMALS_PER_GAIN))
    return gains_from_normals(model, z[:, 0], z[:, 1])


def to_dict(model: ChannelModel) -> dict:
    """Config-file form of a channel (inverse of :func:`from_dict`)."""
    out = {"type": model.kind}
    if model.kind == "deterministic":
        out["gain"] = model.gain
    elif model.kind == "rayleigh":
        out["sigma"] = model.sigma
    elif model.kind == "rician":
        out["nu"] = model.nu
        out["sigma"] = model.sigma
    if model.kind != "ideal":
        out["sigma_c2"] = model.sigma_c2
    return out


_ALLOWED_KEYS = {
    "ideal": {"type"},
    "deterministic": {"type", "gain", "sigma_c2"},
    "rayleigh": {"type", "sigma", "mean", "sigma_c2"},
    "rician": {"type", "nu", "sigma", "sigma_c2"},
}


def from_dict(spec: dict) -> ChannelModel:
    """Build a channel from its config form.

    Rayleigh links accept either ``sigma`` or ``mean``.  ``sigma_c2`` must
    already be a number here; per-node random draws are resolved by the
    config loader.
    """
    kind = spec.get("type")
    if kind not in _ALLOWED_KEYS:
        raise ParameterError(f"unknown channel type {kind!r}")
    extra = set(spec) - _ALLOWED_KEYS[kind]
    if extra:
        raise ParameterError(f"{kind} channel: unknown keys {sorted(extra)}")
    sigma_c2 = float(spec.get("sigma_c2", 0.0))
    if kind == "ideal":
        return ideal()
    if kind == "deterministic":
        return deterministic(spec["gain"], sigma_c2)
    if kind == "rayleigh":
        if ("sigma" in spec) == ("mean" in spec):
            raise ParameterError("rayleigh channel needs exactly one of 'sigma' or 'mean'")
        if "mean" in spec:
            return rayleigh_from_mean(float(spec["mean"]), sigma_c2)
        return rayleigh(spec["sigma"], sigma_c2)
    return rician(spec["nu"], spec["sigma"], sigma_c2)

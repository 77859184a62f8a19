"""Static description of the ring: data statistics, step sizes and links."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import channels as ch
from .errors import ParameterError, ValidationError

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class EigenFactorization:
    """``R = U diag(lam) U*`` with eigenvalues in ascending order."""

    U: np.ndarray
    lam: np.ndarray


@dataclass(frozen=True, eq=False)
class NetworkProfile:
    """Everything the simulator and the closed-form analysis need.

    Node ``k`` (0-based here) receives the estimate of node ``k-1`` over
    ``channels[k]``; node 0 receives from the last node of the previous
    cycle.  Arrays are stacked along the first axis by node.

    gamma is the fourth-moment factor of the regressors: 1 for circular
    complex Gaussian data, 2 for real Gaussian data.
    """

    w_o: np.ndarray
    mu: np.ndarray
    R: np.ndarray
    sigma_v2: np.ndarray
    channels: tuple
    Q: np.ndarray
    gamma: float = 2.0
    is_complex: bool = False
    _eig: list = field(default_factory=list, repr=False, compare=False)

    @property
    def N(self) -> int:
        return len(self.mu)

    @property
    def M(self) -> int:
        return len(self.w_o)

    @property
    def m(self) -> np.ndarray:
        return np.array([ch.moments(c)[0] for c in self.channels])

    @property
    def s(self) -> np.ndarray:
        return np.array([ch.moments(c)[1] for c in self.channels])

    def eig(self, k: int) -> EigenFactorization:
        """Cached eigendecomposition of node k's regressor covariance."""
        if not self._eig:
            self._eig.extend(eigendecompose(r) for r in self.R)
        return self._eig[k]

    def replace(self, **changes) -> "NetworkProfile":
        kwargs = dict(
            w_o=self.w_o, mu=self.mu, R=self.R, sigma_v2=self.sigma_v2,
            channels=self.channels, Q=self.Q, gamma=self.gamma, is_complex=self.is_complex,
        )
        kwargs.update(changes)
        if "channels" in changes and "Q" not in changes:
            kwargs["Q"] = None
        return make_profile(**kwargs)


def make_profile(w_o, mu, R, sigma_v2, channels, Q=None, gamma=None, is_complex=None) -> NetworkProfile:
    """Assemble a profile, broadcasting per-node scalars.

    `R` may be a single M x M matrix shared by every node.  When `Q` is
    omitted each node gets ``sigma_c2 * I`` from its channel.  The node count
    is taken from the longest of `mu`, `sigma_v2`, `channels` and `R`.
    """
    w_o = np.atleast_1d(np.asarray(w_o))
    if is_complex is None:
        is_complex = bool(np.iscomplexobj(w_o) or np.iscomplexobj(R))
    dtype = complex if is_complex else float
    w_o = w_o.astype(dtype)
    R = np.asarray(R, dtype=dtype)
    if R.ndim == 2:
        R = R[None]
    if isinstance(channels, ch.ChannelModel):
        channels = (channels,)
    channels = tuple(channels)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma_v2 = np.atleast_1d(np.asarray(sigma_v2, dtype=float))
    N = max(len(mu), len(sigma_v2), len(channels), len(R))

    def widen(a, name):
        if len(a) == N:
            return a
        if len(a) == 1:
            return np.repeat(a, N, axis=0)
        raise ParameterError(f"{name} has {len(a)} entries for {N} nodes")

    mu, sigma_v2, R = widen(mu, "mu"), widen(sigma_v2, "sigma_v2"), widen(R, "R")
    if len(channels) == 1:
        channels = channels * N
    elif len(channels) != N:
        raise ParameterError(f"channels has {len(channels)} entries for {N} nodes")
    M = len(w_o)
    if Q is None:
        Q = np.stack([c.sigma_c2 * np.eye(M) for c in channels]).astype(dtype)
    else:
        Q = np.asarray(Q, dtype=dtype)
        Q = widen(Q[None] if Q.ndim == 2 else Q, "Q")
    if gamma is None:
        gamma = 1.0 if is_complex else 2.0
    for a in (w_o, mu, R, sigma_v2, Q):
        a.setflags(write=False)
    return NetworkProfile(w_o, mu, R, sigma_v2, channels, Q, float(gamma), bool(is_complex))


def build_covariance(M: int, trace: float, spread: float, rng=None, complex_data: bool = False) -> np.ndarray:
    """Covariance with prescribed trace and eigenvalue spread.

    Eigenvalues are geometrically spaced, ``a * r**j`` with
    ``r = spread ** (1/(M-1))``.  The eigenbasis is a Haar-random orthogonal
    (or unitary, for complex data) matrix drawn from `rng`; ``rng=None``
    keeps the canonical basis.
    """
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    if not spread >= 1:
        raise ParameterError(f"eigenvalue spread must be >= 1, got {spread}")
    if not trace > 0:
        raise ParameterError(f"trace must be > 0, got {trace}")
    if M == 1:
        lam = np.array([float(trace)])
    else:
        ratio = spread ** (1.0 / (M - 1))
        powers = ratio ** np.arange(M)
        lam = trace * powers / powers.sum()
    if rng is None:
        return np.diag(lam).astype(complex if complex_data else float)
    group = stats.unitary_group if complex_data else stats.ortho_group
    U = group.rvs(M, random_state=rng) if M > 1 else np.ones((1, 1))
    R = (U * lam) @ U.conj().T
    return (R + R.conj().T) / 2


def eigendecompose(R) -> EigenFactorization:
    """Hermitian eigendecomposition with ascending eigenvalues."""
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {R.shape}")
    scale = max(np.abs(R).max(), 1.0)
    if np.abs(R - R.conj().T).max() > HERMITIAN_TOL * scale:
        raise ValidationError("matrix is not Hermitian")
    lam, U = np.linalg.eigh(R)
    if lam[0] <= 0:
        raise ValidationError(f"matrix is not positive definite (min eigenvalue {lam[0]:.3g})")
    return EigenFactorization(U, lam)


BASES = ("shared", "random", "identity")


def covariances(M, traces, spread, basis="shared", rng=None, complex_data=False) -> list[np.ndarray]:
    """One covariance per trace, all with the same eigenvalue spread.

    basis='shared' rotates every node by one common Haar-random matrix,
    'random' draws an independent rotation per node and 'identity' keeps
    diagonal covariances.  The closed-form steady-state analysis is exact
    only when the nodes share an eigenbasis.
    """
    if basis not in BASES:
        raise ParameterError(f"basis must be one of {BASES}, got {basis!r}")
    if basis == "random":
        return [build_covariance(M, t, spread, rng, complex_data) for t in traces]
    out = [build_covariance(M, t, spread, None, complex_data) for t in traces]
    if basis == "shared" and M > 1:
        group = stats.unitary_group if complex_data else stats.ortho_group
        V = group.rvs(M, random_state=rng)
        out = [(V @ r @ V.conj().T + (V @ r @ V.conj().T).conj().T) / 2 for r in out]
    return out


def shares_eigenbasis(p: NetworkProfile, tol: float = 1e-8) -> bool:
    """True when consecutive nodes' eigenvectors agree up to phase.

    This is the condition under which the diagonal weighted-variance
    analysis is exact; the check follows the ring order including the
    wrap from the last node to the first.
    """
    for k in range(p.N):
        overlap = np.abs(p.eig(k).U.conj().T @ p.eig(k - 1).U)
        if np.abs(overlap - np.eye(p.M)).max() > tol:
            return False
    return True


def validate_profile(p: NetworkProfile) -> list[str]:
    """Every violated profile invariant, as readable strings."""
    out = []
    M = p.M
    if p.N < 1:
        out.append("network needs at least one node")
    if M < 1:
        out.append("w_o must have at least one entry")
    for name in ("mu", "sigma_v2"):
        if len(getattr(p, name)) != p.N:
            out.append(f"{name} has {len(getattr(p, name))} entries for {p.N} nodes")
    if len(p.channels) != p.N:
        out.append(f"{len(p.channels)} channels for {p.N} nodes")
    for name, stack in (("R", p.R), ("Q", p.Q)):
        if stack.ndim != 3 or stack.shape[1:] != (M, M):
            out.append(f"{name} has shape {stack.shape}, expected ({p.N}, {M}, {M}) to match w_o of length {M}")
        elif len(stack) != p.N:
            out.append(f"{name} has {len(stack)} matrices for {p.N} nodes")
    if p.gamma not in (1.0, 2.0):
        out.append(f"gamma must be 1 or 2, got {p.gamma}")
    if out:
        return out
    for k in range(p.N):
        node = k + 1
        if not (np.isfinite(p.mu[k]) and p.mu[k] > 0):
            out.append(f"node {node}: step size {p.mu[k]} must be > 0")
        if not (np.isfinite(p.sigma_v2[k]) and p.sigma_v2[k] >= 0):
            out.append(f"node {node}: noise variance {p.sigma_v2[k]} must be >= 0")
        if not isinstance(p.channels[k], ch.ChannelModel):
            out.append(f"node {node}: channel is not a ChannelModel")
        for name, mat, strict in (("R_u", p.R[k], True), ("Q", p.Q[k], False)):
            if not np.all(np.isfinite(mat)):
                out.append(f"node {node}: {name} has non-finite entries")
                continue
            scale = max(np.abs(mat).max(), 1.0)
            if np.abs(mat - mat.conj().T).max() > HERMITIAN_TOL * scale:
                out.append(f"node {node}: {name} is not Hermitian")
                continue
            lo = np.linalg.eigvalsh(mat)[0]
            if strict and lo <= 0:
                out.append(f"node {node}: R_u is not positive definite (min eigenvalue {lo:.3g})")
            elif not strict and lo < -HERMITIAN_TOL * scale:
                out.append(f"node {node}: Q has negative eigenvalue {lo:.3g}")
    return out


def check_profile(p: NetworkProfile) -> NetworkProfile:
    problems = validate_profile(p)
    if problems:
        raise ValidationError("; ".join(problems), problems)
    return p


def default_profile(
    seed: int = 0,
    N: int = 20,
    M: int = 4,
    mu: float = 0.02,
    spread: float = 5.0,
    trace_range=(2.0, 5.0),
    sigma_v2_range=(1e-3, 1e-2),
    sigma_c2_range=(1e-4, 1e-3),
    channel_mean: float = np.sqrt(2) / 2,
    basis: str = "shared",
    complex_data: bool = False,
) -> NetworkProfile:
    """Ring of Rayleigh links in the style of the reference experiment.

    Per-node noise variances, channel-noise variances and regressor traces
    are drawn uniformly from the given ranges; w_o is ``[1, ..., 1]/2``.
    Each random quantity uses its own child stream of `seed`, so changing
    one range does not reshuffle the others.  See :func:`covariances` for
    the meaning of `basis`.
    """
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]
    sigma_v2 = streams[0].uniform(*sigma_v2_range, size=N)
    sigma_c2 = streams[1].uniform(*sigma_c2_range, size=N)
    traces = streams[2].uniform(*trace_range, size=N)
    R = np.stack(covariances(M, traces, spread, basis, streams[3], complex_data))
    links = [ch.rayleigh_from_mean(channel_mean, c2) for c2 in sigma_c2]
    w_o = np.full(M, 0.5)
    return make_profile(w_o, mu, R, sigma_v2, links, is_complex=complex_data)


def profile_hash(p: NetworkProfile) -> str:
    """Stable digest of the numerical content of a profile."""
    h = hashlib.sha256()
    for a in (p.w_o, p.mu, p.R, p.sigma_v2, p.Q):
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode() + str(a.shape).encode())
        h.update(a.tobytes())
    h.update(json.dumps([ch.to_dict(c) for c in p.channels], sort_keys=True).encode())
    h.update(repr((p.gamma, p.is_complex)).encode())
    return h.hexdigest()

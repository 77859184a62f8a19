"""Monte Carlo simulation of incremental LMS with faded, noisy links.

Random draws
------------
Every run owns a generator seeded from ``(master_seed, run)``.  Each node
visit consumes one block of standard normals laid out as

    [ regressor | measurement noise | channel gain (2) | channel noise ]

with the regressor and the channel noise taking M entries each (2M for
complex data) and the measurement noise 1 entry (2 for complex data).
Drawing one visit at a time or a whole block of iterations at once yields
the same numbers, which is what lets :func:`run_cycle` and
:func:`run_ensemble` share trajectories exactly.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import channels as ch
from .errors import ParameterError
from .network import NetworkProfile

THREADS_ENV = "FADING_ILMS_THREADS"
# Runs simulated together in one vectorised batch; fixed so that results do
# not depend on how batches are spread over threads.
BATCH_RUNS = 50
CHUNK_ITERS = 250


@dataclass(frozen=True)
class SimConfig:
    iterations: int = 2000
    runs: int = 100
    tail: int = 200
    master_seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.runs < 1:
            raise ParameterError("iterations and runs must be >= 1")
        if not 1 <= self.tail <= self.iterations:
            raise ParameterError(f"tail={self.tail} must lie in 1..iterations={self.iterations}")
        if not 0 <= self.master_seed < 2**64:
            raise ParameterError("master_seed must be an unsigned 64-bit integer")


@dataclass
class EnsembleResult:
    """Run-averaged learning curves and per-run tail statistics.

    Curves have shape (N, T) and hold, at node k and iteration i, the
    squared error of the estimate node k receives *before* the channel,
    ``w_{k-1,i}``.  ``mean_weight_error`` is the tail- and run-averaged
    ``w_o - w_{k,i}`` just after node k updates.
    """

    msd_curve: np.ndarray
    emse_curve: np.ndarray
    mse_curve: np.ndarray
    mean_weight_error: np.ndarray
    run_tail_msd: np.ndarray  # (R, N)
    run_tail_emse: np.ndarray
    run_tail_mse: np.ndarray
    run_weight_error: np.ndarray  # (R, N, M)
    tail: int

    @property
    def runs(self) -> int:
        return self.run_tail_msd.shape[0]

    def weight_error_stderr(self) -> np.ndarray:
        """Standard error of ``mean_weight_error`` across runs, shape (N, M)."""
        return _stderr(self.run_weight_error)

    def tail_stderr(self) -> dict:
        return {
            "msd": _stderr(self.run_tail_msd),
            "emse": _stderr(self.run_tail_emse),
            "mse": _stderr(self.run_tail_mse),
            "mse_minus_emse": _stderr(self.run_tail_mse - self.run_tail_emse),
        }


def _stderr(per_run):
    R = per_run.shape[0]
    if R < 2:
        return np.full(per_run.shape[1:], np.nan)
    return np.std(per_run.real, axis=0, ddof=1) / np.sqrt(R)


def run_stream(master_seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run,)))


def _layout(M: int, is_complex: bool):
    width = 2 if is_complex else 1
    u = slice(0, width * M)
    v = slice(u.stop, u.stop + width)
    h = slice(v.stop, v.stop + ch.NORMALS_PER_GAIN)
    q = slice(h.stop, h.stop + width * M)
    return u, v, h, q


def normals_per_visit(p: NetworkProfile) -> int:
    return _layout(p.M, p.is_complex)[3].stop


def _psd_sqrt(Q):
    lam, V = np.linalg.eigh(Q)
    return V * np.sqrt(np.clip(lam, 0, None))


def _gaussian(z, is_complex):
    # Last axis of z holds the real entries; circular complex draws pair
    # the first half with the second half.
    if not is_complex:
        return z
    n = z.shape[-1] // 2
    return (z[..., :n] + 1j * z[..., n:]) / np.sqrt(2)


class _Transform:
    """Turns blocks of standard normals into (u, d, h, q) per node."""

    def __init__(self, p: NetworkProfile):
        self.p = p
        self.slices = _layout(p.M, p.is_complex)
        self.L = [np.linalg.cholesky(r) for r in p.R]
        self.Lq = [_psd_sqrt(q) for q in p.Q]
        self.noise_std = np.sqrt(p.sigma_v2)

    def node(self, z, k):
        """z has shape (..., K) for node k; returns arrays with leading shape z.shape[:-1]."""
        p = self.p
        su, sv, sh, sq = self.slices
        u = np.einsum("...j,ij->...i", _gaussian(z[..., su], p.is_complex), self.L[k].conj())
        v = self.noise_std[k] * _gaussian(z[..., sv], p.is_complex)[..., 0]
        d = np.einsum("...j,j->...", u, p.w_o) + v
        h = ch.gains_from_normals(p.channels[k], z[..., sh.start], z[..., sh.start + 1])
        q = np.einsum("...j,ij->...i", _gaussian(z[..., sq], p.is_complex), self.Lq[k])
        return u, d, h, q


def generate_data(p: NetworkProfile, k: int, rng: np.random.Generator):
    """One regressor row ``u`` and measurement ``d = u w_o + v`` at node k.

    Consumes a full visit block from `rng` (including the link draws, which
    are discarded) so the stream position matches a simulated visit.
    """
    z = rng.standard_normal(normals_per_visit(p))
    u, d, _, _ = _Transform(p).node(z, k)
    return u, d


def fading_ilms_step(w_prev, h, q, u, d, mu):
    """One node update on the faded, noisy copy of the incoming estimate."""
    received = h * w_prev + q
    err = d - np.sum(u * received, axis=-1)
    return received + mu * np.conj(u) * np.expand_dims(err, -1)


def run_cycle(p: NetworkProfile, w_state, rng: np.random.Generator, i: int | None = None) -> np.ndarray:
    """Pass the estimate once around the ring.

    `w_state` is the last node's estimate from the previous cycle.  Returns
    the N intermediate estimates, shape (N, M).  `i` only labels the cycle;
    the draws come from `rng` in visit order.
    """
    tf = _Transform(p)
    K = normals_per_visit(p)
    out = np.empty((p.N, p.M), dtype=complex if p.is_complex else float)
    w = np.asarray(w_state, dtype=out.dtype)
    for k in range(p.N):
        u, d, h, q = tf.node(rng.standard_normal(K), k)
        w = fading_ilms_step(w, h, q, u, d, p.mu[k])
        out[k] = w
    return out


def _simulate_batch(p: NetworkProfile, sim: SimConfig, runs: range):
    tf = _Transform(p)
    N, M, T, W = p.N, p.M, sim.iterations, sim.tail
    B = len(runs)
    K = normals_per_visit(p)
    dtype = complex if p.is_complex else float
    streams = [run_stream(sim.master_seed, r) for r in runs]
    w = np.zeros((B, M), dtype=dtype)
    curves = np.zeros((3, N, T))
    tail = np.zeros((3, B, N))
    werr = np.zeros((B, N, M), dtype=dtype)
    w_o = p.w_o
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, T, CHUNK_ITERS):
            n_it = min(CHUNK_ITERS, T - start)
            Z = np.stack([g.standard_normal((n_it, N, K)) for g in streams])
            per_node = [tf.node(Z[:, :, k, :], k) for k in range(N)]
            for t in range(n_it):
                i = start + t
                in_tail = i >= T - W
                for k in range(N):
                    u, d, h, q = (a[:, t] for a in per_node[k])
                    err_w = w_o - w
                    msd = np.einsum("bj,bj->b", err_w.conj(), err_w).real
                    emse = np.einsum("bj,ij,bi->b", err_w, p.R[k], err_w.conj()).real
                    e = d - np.einsum("bj,bj->b", u, w)
                    mse = (e * e.conj()).real
                    curves[0, k, i] = msd.sum()
                    curves[1, k, i] = emse.sum()
                    curves[2, k, i] = mse.sum()
                    w = fading_ilms_step(w, h[:, None], q, u, d, p.mu[k])
                    if in_tail:
                        tail[0, :, k] += msd
                        tail[1, :, k] += emse
                        tail[2, :, k] += mse
                        werr[:, k] += w_o - w
    return curves, tail / W, werr / W


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None


def run_ensemble(p: NetworkProfile, sim: SimConfig, threads: int | None = None) -> EnsembleResult:
    """Average `sim.runs` independent trajectories of `sim.iterations` cycles.

    Runs are split into fixed batches and the batch sums are reduced in
    batch order, so the result is bit-identical for any thread count.
    Divergent configurations are not an error: curves then grow to inf.
    """
    batches = [range(b, min(b + BATCH_RUNS, sim.runs)) for b in range(0, sim.runs, BATCH_RUNS)]
    threads = min(threads or _thread_count(), len(batches))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda r: _simulate_batch(p, sim, r), batches))
    else:
        parts = [_simulate_batch(p, sim, r) for r in batches]
    total = parts[0][0].copy()
    for part in parts[1:]:
        total += part[0]
    total /= sim.runs
    tail = np.concatenate([part[1] for part in parts], axis=1)
    werr = np.concatenate([part[2] for part in parts], axis=0)
    return EnsembleResult(
        msd_curve=total[0],
        emse_curve=total[1],
        mse_curve=total[2],
        mean_weight_error=werr.mean(axis=0),
        run_tail_msd=tail[0],
        run_tail_emse=tail[1],
        run_tail_mse=tail[2],
        run_weight_error=werr,
        tail=sim.tail,
    )


def steady_state_from_curves(res: EnsembleResult, tail: int | None = None):
    """Per-node ``(msd, emse, mse)`` averaged over the last `tail` iterations."""
    T = res.msd_curve.shape[1]
    W = res.tail if tail is None else tail
    if not 1 <= W <= T:
        raise ParameterError(f"tail={W} must lie in 1..{T}")
    return tuple(c[:, T - W:].mean(axis=1) for c in (res.msd_curve, res.emse_curve, res.mse_curve))

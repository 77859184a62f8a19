"""Closed-form mean and mean-square analysis of incremental LMS over fading links.

Node indices are 0-based in code.  Quantities attached to node ``k`` use
that node's eigenbasis ``R_k = U_k diag(lam_k) U_k*``; weight vectors such
as ``g_k`` and ``a_k`` are real row vectors of length M acting on the
diagonal of a weighting matrix in that basis.

Two ambiguities of the published formulas are exposed as switches:

``pi_convention``
    ``"per_step"`` (default) attaches the second moment ``s_n`` of each link
    to its own ``F_n`` factor in the cycle products.  ``"paper"`` multiplies
    every partial product by the product of all ``s_n`` instead.
``cross_term``
    ``"exact"`` (default) evaluates the bias/variance coupling term as
    ``Re(conj(wb) * (Cb @ wb))``, which is invariant to the sign or phase of
    the eigenvectors.  ``"paper"`` uses ``diag(D) @ Cb``.  Both coincide for
    M = 1 and whenever ``Cb`` is diagonal.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, StabilityError
from .network import NetworkProfile, shares_eigenbasis

PI_CONVENTIONS = ("per_step", "paper")
CROSS_TERMS = ("exact", "paper")
# Relative margin below 1 required of rho(Pi_{k,1}) before solving.
INSTABILITY_MARGIN = 1e-9


def spectral_radius(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.atleast_2d(A)))))


def fbar(mu: float, lam, gamma: float = 1.0) -> np.ndarray:
    """Mean-square propagation matrix ``I - 2 mu L + mu^2 (gamma L^2 + lam lam^T)``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    Y = gamma * np.diag(lam**2) + np.outer(lam, lam)
    return np.eye(len(lam)) - 2 * mu * np.diag(lam) + mu**2 * Y


def _J(p: NetworkProfile, k: int) -> np.ndarray:
    return np.eye(p.M) - p.mu[k] * p.R[k]


def mean_cycle_matrix(p: NetworkProfile) -> np.ndarray:
    """``m_N J_N ... m_1 J_1``: the map of the mean weight error over one cycle."""
    m = p.m
    out = np.eye(p.M, dtype=p.R.dtype)
    for k in range(p.N):
        out = m[k] * _J(p, k) @ out
    return out


@dataclass(frozen=True)
class MeanStability:
    rho: float
    stable: bool
    cycle_matrix: np.ndarray


def mean_stability(p: NetworkProfile) -> MeanStability:
    A = mean_cycle_matrix(p)
    rho = spectral_radius(A)
    return MeanStability(rho, rho < 1, A)


def _closed_form_C0(p: NetworkProfile, cycle: np.ndarray) -> np.ndarray:
    # Unrolling C_k = m_k J_k C_{k-1} + (1 - m_k) J_k over one cycle gives
    # C_N = cycle @ C_0 + sum_n [prod_{l>n} m_l J_l] (1 - m_n) J_n,
    # with the product taken in ring order (largest index leftmost).
    m = p.m
    M = p.M
    drive = np.zeros((M, M), dtype=p.R.dtype)
    tail = np.eye(M, dtype=p.R.dtype)
    for n in range(p.N - 1, -1, -1):
        drive = drive + (1 - m[n]) * tail @ _J(p, n)
        tail = tail @ (m[n] * _J(p, n))
    return np.linalg.solve(np.eye(M) - cycle, drive)


def _propagate_C(p: NetworkProfile, C_start: np.ndarray) -> np.ndarray:
    m = p.m
    out = np.empty((p.N, p.M, p.M), dtype=p.R.dtype)
    C = C_start
    for k in range(p.N):
        J = _J(p, k)
        C = m[k] * J @ C + (1 - m[k]) * J
        out[k] = C
    return out


def steady_state_C(p: NetworkProfile, tol: float = 1e-10, max_cycles: int = 1_000_000) -> np.ndarray:
    """Steady-state bias matrices ``C_{k,inf}`` for every node.

    Entry ``k`` maps w_o to the mean weight error just after node k updates
    (entry ``-1`` is therefore the matrix entering node 0).  The fixed point
    is computed twice, by the closed form and by iterating the recursion
    from ``C = I``, and the two must agree within ``10 * tol``.
    """
    ms = mean_stability(p)
    if not ms.stable:
        raise StabilityError(f"mean recursion is unstable: rho = {ms.rho:.6g} >= 1")
    closed = _propagate_C(p, _closed_form_C0(p, ms.cycle_matrix))

    # Successive-cycle differences shrink like rho**i; the distance to the
    # fixed point is at most diff * rho / (1 - rho).
    stop = tol * (1 - ms.rho)
    C0 = np.eye(p.M, dtype=p.R.dtype)
    for _ in range(max_cycles):
        C_next = _propagate_C(p, C0)[-1]
        diff = np.linalg.norm(C_next - C0)
        C0 = C_next
        if diff < stop:
            break
    else:
        raise ConsistencyError(f"C recursion did not converge in {max_cycles} cycles")
    iterated = _propagate_C(p, C0)

    gap = np.max(np.linalg.norm(iterated - closed, axis=(1, 2)))
    if gap > 10 * tol * max(1.0, np.abs(closed).max()):
        raise ConsistencyError(f"closed-form and iterated C disagree by {gap:.3g}")
    return closed


def theoretical_bias(p: NetworkProfile) -> np.ndarray:
    """Steady-state mean weight error ``C_{k,inf} w_o`` per node, shape (N, M)."""
    return steady_state_C(p) @ p.w_o


def _bias_coupling(wb: np.ndarray, Cb: np.ndarray, cross_term: str) -> np.ndarray:
    if cross_term == "exact":
        return np.real(wb.conj() * (Cb @ wb))
    if cross_term == "paper":
        return np.real(np.abs(wb) ** 2 @ Cb)
    raise ValueError(f"cross_term must be one of {CROSS_TERMS}")


def g_vector(p: NetworkProfile, k: int, C_prev: np.ndarray, cross_term: str = "exact") -> np.ndarray:
    """Driving row vector of the weighted-variance recursion at node `k`.

    `C_prev` is the bias matrix entering node k, in original coordinates;
    it is rotated into node k's eigenbasis here.
    """
    e = p.eig(k)
    m, s = p.m[k], p.s[k]
    F = fbar(p.mu[k], e.lam, p.gamma)
    wb = e.U.conj().T @ p.w_o
    Qb = e.U.conj().T @ p.Q[k] @ e.U
    Cb = e.U.conj().T @ C_prev @ e.U
    D = np.abs(wb) ** 2
    g = p.mu[k] ** 2 * p.sigma_v2[k] * e.lam
    g = g + np.real(np.diag(Qb)) @ F
    g = g + (1 - 2 * m + s) * D @ F
    g = g + 2 * (m - s) * _bias_coupling(wb, Cb, cross_term) @ F
    return g


def _segment(p: NetworkProfile, k: int, l: int) -> list[int]:
    # Nodes k+l-1, ..., N-1, 0, ..., k-1 (mod N) for 0-based k and 1 <= l <= N.
    return [(k + j) % p.N for j in range(l - 1, p.N)]


def pi_kl(p: NetworkProfile, k: int, l: int, pi_convention: str = "per_step") -> np.ndarray:
    """Wrapped cycle product ``Pi_{k,l}`` for 0-based node k and 1 <= l <= N."""
    if not 1 <= l <= p.N:
        raise ValueError(f"l must lie in 1..{p.N}, got {l}")
    s = p.s
    out = np.eye(p.M)
    if pi_convention == "per_step":
        for n in _segment(p, k, l):
            out = out @ (s[n] * fbar(p.mu[n], p.eig(n).lam, p.gamma))
    elif pi_convention == "paper":
        for n in _segment(p, k, l):
            out = out @ fbar(p.mu[n], p.eig(n).lam, p.gamma)
        out = np.prod(s) * out
    else:
        raise ValueError(f"pi_convention must be one of {PI_CONVENTIONS}")
    return out


def a_vector(p: NetworkProfile, k: int, g: np.ndarray, pi_convention: str = "per_step") -> np.ndarray:
    """``g_k Pi_{k,2} + g_{k+1} Pi_{k,3} + ... + g_{k-2} Pi_{k,N} + g_{k-1}``.

    `g` is the (N, M) stack of driving vectors.
    """
    N = p.N
    a = g[(k - 1) % N].copy()
    for j in range(N - 1):
        a = a + g[(k + j) % N] @ pi_kl(p, k, j + 2, pi_convention)
    return a


@dataclass(frozen=True)
class TheoryContext:
    """Deterministic matrices of the analysis for one profile."""

    U: np.ndarray
    lam: np.ndarray
    J: np.ndarray
    Fbar: np.ndarray
    mean_cycle: np.ndarray
    C_inf: np.ndarray
    g: np.ndarray
    Pi: np.ndarray  # Pi[k, l-1] = Pi_{k,l}
    a: np.ndarray
    gamma: float
    pi_convention: str
    cross_term: str


def theory_context(p: NetworkProfile, pi_convention: str = "per_step", cross_term: str = "exact") -> TheoryContext:
    C = steady_state_C(p)
    N = p.N
    g = np.stack([g_vector(p, k, C[k - 1], cross_term) for k in range(N)])
    Pi = np.stack([np.stack([pi_kl(p, k, l, pi_convention) for l in range(1, N + 1)]) for k in range(N)])
    a = np.stack([a_vector(p, k, g, pi_convention) for k in range(N)])
    return TheoryContext(
        U=np.stack([p.eig(k).U for k in range(N)]),
        lam=np.stack([p.eig(k).lam for k in range(N)]),
        J=np.stack([_J(p, k) for k in range(N)]),
        Fbar=np.stack([fbar(p.mu[k], p.eig(k).lam, p.gamma) for k in range(N)]),
        mean_cycle=mean_cycle_matrix(p),
        C_inf=C,
        g=g,
        Pi=Pi,
        a=a,
        gamma=p.gamma,
        pi_convention=pi_convention,
        cross_term=cross_term,
    )


@dataclass(frozen=True)
class SteadyState:
    """Per-node steady-state metrics in natural units."""

    msd: np.ndarray
    emse: np.ndarray
    mse: np.ndarray


@dataclass(frozen=True)
class MSStability:
    node_factor: np.ndarray  # s_k * rho(F_k)
    stable: bool
    cycle_rho: np.ndarray  # rho(Pi_{k,1}) per node


def ms_stability(p: NetworkProfile, pi_convention: str = "per_step") -> MSStability:
    s = p.s
    factor = np.array([s[k] * spectral_radius(fbar(p.mu[k], p.eig(k).lam, p.gamma)) for k in range(p.N)])
    cycle = np.array([spectral_radius(pi_kl(p, k, 1, pi_convention)) for k in range(p.N)])
    return MSStability(factor, bool(np.all(factor < 1)), cycle)


def theoretical_metrics(p: NetworkProfile, pi_convention: str = "per_step", cross_term: str = "exact",
                        context: TheoryContext | None = None) -> SteadyState:
    """Steady-state MSD, EMSE and MSE at every node.

    Raises
    ------
    StabilityError
        If the mean recursion is unstable or ``rho(Pi_{k,1})`` reaches 1 at
        some node (the error names it, 1-based).
    """
    if not shares_eigenbasis(p):
        warnings.warn(
            "regressor covariances do not share an eigenbasis; the diagonal closed form is "
            "approximate here, exact_steady_state() is not",
            stacklevel=2,
        )
    ctx = context or theory_context(p, pi_convention, cross_term)
    N, M = p.N, p.M
    msd, emse = np.empty(N), np.empty(N)
    for k in range(N):
        Pi1 = ctx.Pi[k, 0]
        rho = spectral_radius(Pi1)
        if rho >= 1 - INSTABILITY_MARGIN:
            raise StabilityError(f"node {k + 1}: rho(Pi_k1) = {rho:.6g} >= 1, not mean-square stable", node=k + 1)
        # Row vector a (I - Pi)^{-1} is the transpose of (I - Pi)^{-T} a^T.
        weights = np.linalg.solve((np.eye(M) - Pi1).T, ctx.a[k])
        msd[k] = weights.sum()
        emse[k] = weights @ ctx.lam[k]
    mse = emse + p.sigma_v2
    return SteadyState(msd, emse, mse)


@dataclass(frozen=True)
class TransientCurves:
    """Predicted ``E|w_{k-1,i}|^2`` (msd) and its R_k-weighted form (emse), shape (N, T)."""

    msd: np.ndarray
    emse: np.ndarray


def transient_recursion(p: NetworkProfile, T: int, cross_term: str = "exact") -> TransientCurves:
    """Iterate the diagonal weighted-variance recursion from zero initialisation.

    The state is the diagonal of ``E[wb wb*]`` in the eigenbasis of the
    node about to update, together with the exact mean-recursion matrices
    ``C_{k-1,i}`` that feed the time-varying driving term.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    N, M = p.N, p.M
    m, s = p.m, p.s
    U0 = p.eig(0).U
    var = np.abs(U0.conj().T @ p.w_o) ** 2
    C = np.eye(M, dtype=p.R.dtype)
    F = [fbar(p.mu[k], p.eig(k).lam, p.gamma) for k in range(N)]
    msd = np.empty((N, T))
    emse = np.empty((N, T))
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(T):
            for k in range(N):
                msd[k, i] = var.sum()
                emse[k, i] = var @ p.eig(k).lam
                g = g_vector(p, k, C, cross_term)
                var = s[k] * F[k] @ var + g
                J = _J(p, k)
                C = m[k] * J @ C + (1 - m[k]) * J
    return TransientCurves(msd, emse)


def _node_second_moment(p: NetworkProfile, k: int, mean: np.ndarray, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact map of (E[w~], E[w~ w~*]) through node k under Gaussian data.

    Linear in P for any square input, Hermitian or not, which
    :func:`exact_steady_state` relies on.
    """
    m, s = p.m[k], p.s[k]
    mu, R, w = p.mu[k], p.R[k], p.w_o
    ww = np.outer(w, w.conj())
    cross = np.outer(mean, w.conj())
    Z = s * P + (1 - 2 * m + s) * ww + p.Q[k] + (m - s) * (cross + cross.conj().T)
    RZ = R @ Z
    P_new = (Z - mu * (RZ + Z @ R) + mu**2 * (R * np.trace(RZ) + p.gamma * RZ @ R)
             + mu**2 * p.sigma_v2[k] * R)
    mean_new = _J(p, k) @ (m * mean + (1 - m) * w)
    return mean_new, P_new


def covariance_recursion(p: NetworkProfile, T: int) -> TransientCurves:
    """Learning curves from the full second-moment recursion.

    Tracks the complete matrix ``E[w~ w~*]`` in original coordinates, so it
    needs neither a shared eigenbasis across nodes nor any diagonal
    truncation.  Exact under Gaussian regressors; used as an independent
    check of the diagonal analysis.
    """
    N = p.N
    mean = p.w_o.copy()
    P = np.outer(p.w_o, p.w_o.conj())
    msd = np.empty((N, T))
    emse = np.empty((N, T))
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(T):
            for k in range(N):
                msd[k, i] = np.real(np.trace(P))
                emse[k, i] = np.real(np.trace(p.R[k] @ P))
                mean, P = _node_second_moment(p, k, mean, P)
                P = (P + P.conj().T) / 2
    return TransientCurves(msd, emse)


def exact_steady_state(p: NetworkProfile) -> SteadyState:
    """Steady state of :func:`covariance_recursion` by solving the cycle map.

    The cycle map of ``E[w~ w~*]`` is affine once the mean is at its fixed
    point; its linear part is recovered column by column from unit inputs.
    """
    means = steady_state_C(p) @ p.w_o  # mean after node k
    M = p.M
    dtype = p.R.dtype

    def cycle(P):
        for k in range(p.N):
            _, P = _node_second_moment(p, k, means[k - 1], P)
        return P

    offset = cycle(np.zeros((M, M), dtype=dtype))
    L = np.empty((M * M, M * M), dtype=dtype)
    for idx in range(M * M):
        E = np.zeros(M * M, dtype=dtype)
        E[idx] = 1
        L[:, idx] = (cycle(E.reshape(M, M)) - offset).ravel()
    if spectral_radius(L) >= 1 - INSTABILITY_MARGIN:
        raise StabilityError("second-moment cycle map is not contractive")
    P = np.linalg.solve(np.eye(M * M) - L, offset.ravel()).reshape(M, M)
    P = (P + P.conj().T) / 2
    msd, emse = np.empty(p.N), np.empty(p.N)
    for k in range(p.N):
        msd[k] = np.real(np.trace(P))
        emse[k] = np.real(np.trace(p.R[k] @ P))
        _, P = _node_second_moment(p, k, means[k - 1], P)
    return SteadyState(msd, emse, emse + p.sigma_v2)

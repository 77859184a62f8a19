"""Theory-versus-simulation comparison and independent scalar checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import simulation as sim
from . import theory as th
from .errors import StabilityError, ValidationError
from .network import NetworkProfile, shares_eigenbasis

METRICS = ("msd", "emse", "mse")
DEFAULT_TOL_DB = 1.0


def to_db(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 10 * np.log10(np.asarray(x, dtype=float))


@dataclass
class MetricsReport:
    """Side-by-side steady-state metrics for every node.

    Either side may be ``None`` (theory-only or simulation-only runs, or an
    unstable profile); the deltas and the pass flag are then ``None`` as well.
    """

    theory: th.SteadyState | None
    sim: th.SteadyState | None
    tol_db: float = DEFAULT_TOL_DB
    bias_theory: np.ndarray | None = None
    bias_sim: np.ndarray | None = None
    stability: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    nodes: int | None = None  # needed only when neither side is available

    @property
    def N(self) -> int:
        side = self.theory or self.sim
        if side is None:
            if self.nodes is None:
                raise ValidationError("report has no metrics and no node count")
            return self.nodes
        return len(side.msd)

    def db(self, side: str, metric: str):
        values = getattr(self, side)
        return None if values is None else to_db(getattr(values, metric))

    @property
    def deltas(self) -> dict | None:
        if self.theory is None or self.sim is None:
            return None
        return {m: np.abs(self.db("theory", m) - self.db("sim", m)) for m in METRICS}

    @property
    def passed(self) -> bool | None:
        d = self.deltas
        if d is None:
            return None
        return bool(all(np.all(d[m] <= self.tol_db) for m in METRICS))

    def bias_norm(self, side: str):
        b = self.bias_theory if side == "theory" else self.bias_sim
        return None if b is None else np.linalg.norm(b, axis=1)

    def to_dict(self) -> dict:
        def arr(x):
            if x is None:
                return None
            x = np.asarray(x)
            if np.iscomplexobj(x):
                return {"re": x.real.tolist(), "im": x.imag.tolist()}
            return x.tolist()

        out = {"nodes": self.N, "tolerance_db": self.tol_db, "pass": self.passed}
        for side in ("theory", "sim"):
            values = getattr(self, side)
            out[side] = None if values is None else {
                m: {"natural": arr(getattr(values, m)), "db": arr(self.db(side, m))} for m in METRICS
            }
        deltas = self.deltas
        out["delta_db"] = None if deltas is None else {m: arr(v) for m, v in deltas.items()}
        out["bias"] = {
            "theory": arr(self.bias_theory),
            "sim": arr(self.bias_sim),
            "theory_norm": arr(self.bias_norm("theory")),
            "sim_norm": arr(self.bias_norm("sim")),
        }
        out["stability"] = self.stability
        out.update(self.extra)
        out["provenance"] = self.provenance
        return out


def compare(theory: th.SteadyState | None, simulated: th.SteadyState | None, tol_db: float = DEFAULT_TOL_DB,
            **kwargs) -> MetricsReport:
    """Build a report; the pass flag requires every per-node dB gap <= `tol_db`."""
    if theory is not None and simulated is not None:
        if len(theory.msd) != len(simulated.msd):
            raise ValidationError(f"theory has {len(theory.msd)} nodes, simulation {len(simulated.msd)}")
    return MetricsReport(theory, simulated, tol_db, **kwargs)


def sim_steady_state(res: sim.EnsembleResult, tail: int | None = None) -> th.SteadyState:
    return th.SteadyState(*sim.steady_state_from_curves(res, tail))


def stability_summary(p: NetworkProfile, pi_convention: str = "per_step") -> dict:
    mean = th.mean_stability(p)
    ms = th.ms_stability(p, pi_convention)
    return {
        "mean_rho": mean.rho,
        "mean_stable": bool(mean.stable),
        "max_node_factor": float(ms.node_factor.max()),
        "node_factor_stable": ms.stable,
        "cycle_rho": ms.cycle_rho.tolist(),
        "cycle_stable": bool(np.all(ms.cycle_rho < 1 - th.INSTABILITY_MARGIN)),
        "shared_eigenbasis": shares_eigenbasis(p),
    }


@dataclass(frozen=True)
class OracleResult:
    """Time-averaged steady state of one long run, with batch-means errors."""

    msd: np.ndarray
    emse: np.ndarray
    mse: np.ndarray
    stderr: dict
    iterations: int
    burn_in: int


def burn_in_cycles(p: NetworkProfile) -> int:
    """Ten time constants of the slower of the mean and mean-square modes."""
    rho = th.mean_stability(p).rho
    try:
        rho = max(rho, float(th.ms_stability(p).cycle_rho.max()))
    except np.linalg.LinAlgError:
        pass
    if rho >= 1:
        raise StabilityError(f"cannot burn in an unstable profile (rho = {rho:.6g})")
    if rho <= 0:
        return 100
    return max(100, math.ceil(-10 / math.log(rho)))


def scalar_oracle(p: NetworkProfile, iterations: int = 1_000_000, seed: int = 12345,
                  burn_in: int | None = None, batches: int = 100) -> OracleResult:
    """Steady-state metrics of a scalar ring from a single long trajectory.

    Independent of the closed form: it only runs the recursion and averages
    over time.  Standard errors use non-overlapping batch means.
    """
    if p.M != 1:
        raise ValidationError("the scalar oracle needs M = 1")
    if iterations % batches:
        raise ValueError("iterations must be a multiple of batches")
    N = p.N
    burn = burn_in_cycles(p) if burn_in is None else burn_in
    total = burn + iterations
    batch_len = iterations // batches
    sums = np.zeros((3, N, batches))
    rng = sim.run_stream(seed, 0)
    tf = sim._Transform(p)
    K = sim.normals_per_visit(p)
    w_o = complex(p.w_o[0]) if p.is_complex else float(p.w_o[0])
    lam = [float(r[0, 0].real) for r in p.R]
    mu = p.mu.tolist()
    w = 0 * w_o
    chunk = 50_000
    for start in range(0, total, chunk):
        n_it = min(chunk, total - start)
        Z = rng.standard_normal((n_it, N, K))
        data = []
        for k in range(N):
            u, d, h, q = tf.node(Z[:, k, :], k)
            data.append((u[:, 0].tolist(), d.tolist(), h.tolist(), q[:, 0].tolist()))
        for t in range(n_it):
            i = start + t
            keep = i >= burn
            b = (i - burn) // batch_len if keep else 0
            for k in range(N):
                u_l, d_l, h_l, q_l = data[k]
                u, d, h, q = u_l[t], d_l[t], h_l[t], q_l[t]
                if keep:
                    err_w = w_o - w
                    sq = abs(err_w) ** 2
                    e = d - u * w
                    sums[0, k, b] += sq
                    sums[1, k, b] += lam[k] * sq
                    sums[2, k, b] += abs(e) ** 2
                x = h * w + q
                w = x + mu[k] * u.conjugate() * (d - u * x)
            if abs(w) > 1e100 or w != w:
                raise StabilityError(f"scalar oracle diverged at iteration {i}")
    means = sums / batch_len
    est = means.mean(axis=2)
    err = means.std(axis=2, ddof=1) / math.sqrt(batches)
    return OracleResult(est[0], est[1], est[2], {"msd": err[0], "emse": err[1], "mse": err[2]}, iterations, burn)


def transient_match(sim_curve, theory_curve, window=None) -> np.ndarray:
    """Largest per-node |dB| gap between two (N, T) learning curves.

    `window` selects iterations (slice or index array); default is all.
    """
    a, b = np.atleast_2d(sim_curve), np.atleast_2d(theory_curve)
    if a.shape != b.shape:
        raise ValidationError(f"curve shapes differ: {a.shape} vs {b.shape}")
    if window is not None:
        a, b = a[:, window], b[:, window]
    return np.max(np.abs(to_db(a) - to_db(b)), axis=1)


def convention_experiment(p: NetworkProfile, simulated: th.SteadyState, tol_db: float = DEFAULT_TOL_DB) -> dict:
    """Theory-vs-simulation gaps under both cycle-product conventions."""
    out = {}
    for conv in th.PI_CONVENTIONS:
        theory = th.theoretical_metrics(p, pi_convention=conv)
        report = compare(theory, simulated, tol_db)
        out[conv] = {
            "max_delta_db": {m: float(report.deltas[m].max()) for m in METRICS},
            "pass": report.passed,
        }
    return out

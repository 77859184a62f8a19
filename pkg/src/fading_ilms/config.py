"""JSON experiment configuration: strict parsing and resolved dumps.

Layout::

    {
      "network": {
        "nodes": 20, "dim": 4, "w_o": [0.5, 0.5, 0.5, 0.5],
        "complex": false, "gamma": 2, "profile_seed": 2024,
        "step_size": 0.02,
        "noise_var": {"uniform": [0.001, 0.01]},
        "regressors": {"trace": {"uniform": [2, 5]}, "spread": 5, "basis": "shared"},
        "channels": {"type": "rayleigh", "mean": 0.7071, "sigma_c2": {"uniform": [1e-4, 1e-3]}},
        "channel_noise_cov": [...]                      # optional per-node M x M
      },
      "simulation": {"iterations": 2000, "runs": 100, "tail": 200, "seed": 1},
      "run": {"mode": "both", "output_dir": "out", "tolerance_db": 1.0,
              "pi_convention": "per_step", "write_curves": true}
    }

Per-node values may be a number, a list of N numbers or ``{"uniform": [lo, hi]}``
drawn from ``profile_seed``.  ``regressors`` may instead hold explicit
``{"covariances": [...]}``.  Complex matrices are written as ``{"re": ..., "im": ...}``.
Unknown keys are rejected.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channels as ch
from .errors import ConfigError, ParameterError
from .network import BASES, NetworkProfile, covariances, make_profile, validate_profile
from .simulation import SimConfig
from .theory import PI_CONVENTIONS

MODES = ("theory", "sim", "both")
BUNDLED_PAPER_CONFIG = Path(__file__).parent / "data" / "paper.json"

_TOP_KEYS = {"network", "simulation", "run"}
_NETWORK_KEYS = {
    "nodes", "dim", "w_o", "complex", "gamma", "profile_seed", "step_size", "noise_var",
    "regressors", "channels", "channel_noise_cov",
}
_REGRESSOR_KEYS = {"trace", "spread", "basis", "covariances"}
_SIM_KEYS = {"iterations", "runs", "tail", "seed"}
_RUN_KEYS = {"mode", "output_dir", "tolerance_db", "pi_convention", "gamma", "write_curves"}


@dataclass(frozen=True)
class RunSpec:
    mode: str = "both"
    config_path: str | None = None
    output_dir: str = "out"
    tolerance_db: float = 1.0
    pi_convention: str = "per_step"
    gamma: float | None = None
    write_curves: bool = True
    overrides: dict = field(default_factory=dict)


class _Errors:
    def __init__(self):
        self.items = []

    def add(self, where, msg):
        self.items.append(f"{where}: {msg}")

    def check_keys(self, obj, allowed, where):
        if not isinstance(obj, dict):
            self.add(where, "expected an object")
            return False
        for key in sorted(set(obj) - allowed):
            self.add(f"{where}.{key}", "unknown key")
        return True


def _matrix(value, where, errors):
    if isinstance(value, dict):
        if set(value) != {"re", "im"}:
            errors.add(where, "complex matrices need exactly 're' and 'im'")
            return None
        return np.asarray(value["re"], dtype=float) + 1j * np.asarray(value["im"], dtype=float)
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        errors.add(where, "not a numeric array")
        return None


def _per_node(value, N, rng, where, errors):
    if isinstance(value, dict):
        if set(value) != {"uniform"} or len(value["uniform"]) != 2:
            errors.add(where, "expected {'uniform': [lo, hi]}")
            return None
        lo, hi = value["uniform"]
        if not (isinstance(lo, (int, float)) and isinstance(hi, (int, float)) and lo <= hi):
            errors.add(where, "uniform bounds must be numbers with lo <= hi")
            return None
        return rng.uniform(lo, hi, size=N)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.full(N, float(value))
    if isinstance(value, list) and len(value) == N and all(isinstance(v, (int, float)) for v in value):
        return np.asarray(value, dtype=float)
    errors.add(where, f"expected a number, a list of {N} numbers or a uniform range")
    return None


def _resolve_network(net, errors) -> NetworkProfile | None:
    if not errors.check_keys(net, _NETWORK_KEYS, "network"):
        return None
    for key in ("nodes", "dim", "w_o", "step_size", "noise_var", "regressors", "channels"):
        if key not in net:
            errors.add(f"network.{key}", "missing")
    if errors.items:
        return None
    N, M = net["nodes"], net["dim"]
    if not (isinstance(N, int) and N >= 1):
        errors.add("network.nodes", "must be an integer >= 1")
    if not (isinstance(M, int) and M >= 1):
        errors.add("network.dim", "must be an integer >= 1")
    if errors.items:
        return None
    is_complex = bool(net.get("complex", False))
    seed = net.get("profile_seed", 0)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(5)]

    w_o = _matrix(net["w_o"], "network.w_o", errors)
    if w_o is not None and w_o.shape != (M,):
        errors.add("network.w_o", f"length {w_o.size} does not match dim={M}")
    mu = _per_node(net["step_size"], N, streams[4], "network.step_size", errors)
    sigma_v2 = _per_node(net["noise_var"], N, streams[0], "network.noise_var", errors)

    chan_spec = net["channels"]
    specs = chan_spec if isinstance(chan_spec, list) else [chan_spec] * N
    links = []
    if len(specs) != N:
        errors.add("network.channels", f"{len(specs)} entries for {N} nodes")
    else:
        c2 = None
        shared = not isinstance(chan_spec, list)
        if shared and isinstance(chan_spec, dict):
            c2 = _per_node(chan_spec.get("sigma_c2", 0.0), N, streams[1], "network.channels.sigma_c2", errors)
        for k, spec in enumerate(specs):
            where = f"network.channels[{k}]" if not shared else "network.channels"
            if not isinstance(spec, dict):
                errors.add(where, "expected an object")
                continue
            spec = dict(spec)
            if c2 is not None and spec.get("type") != "ideal":
                spec["sigma_c2"] = float(c2[k])
            elif c2 is not None:
                spec.pop("sigma_c2", None)
            try:
                links.append(ch.from_dict(spec))
            except (ParameterError, KeyError, TypeError) as exc:
                errors.add(where, f"invalid channel: {exc}")
            if shared and errors.items:
                break

    reg = net["regressors"]
    R = None
    if errors.check_keys(reg, _REGRESSOR_KEYS, "network.regressors"):
        if "covariances" in reg:
            if set(reg) != {"covariances"}:
                errors.add("network.regressors", "'covariances' excludes trace/spread/basis")
            covs = reg["covariances"]
            if isinstance(covs, list) and len(covs) == N:
                mats = [_matrix(c, f"network.regressors.covariances[{k}]", errors) for k, c in enumerate(covs)]
                if all(m is not None for m in mats):
                    R = np.stack(mats) if len({m.shape for m in mats}) == 1 else None
                    if R is None or R.shape[1:] != (M, M):
                        errors.add("network.regressors.covariances", f"expected {N} matrices of shape ({M}, {M})")
                        R = None
            else:
                errors.add("network.regressors.covariances", f"expected a list of {N} matrices")
        else:
            traces = _per_node(reg.get("trace", float(M)), N, streams[2], "network.regressors.trace", errors)
            spread = reg.get("spread", 1.0)
            basis = reg.get("basis", "shared")
            if basis not in BASES:
                errors.add("network.regressors.basis", f"must be one of {BASES}")
            elif traces is not None:
                try:
                    R = np.stack(covariances(M, traces, float(spread), basis, streams[3], is_complex))
                except (ParameterError, TypeError) as exc:
                    errors.add("network.regressors", str(exc))

    Q = None
    if "channel_noise_cov" in net:
        covs = net["channel_noise_cov"]
        if isinstance(covs, list) and len(covs) == N:
            mats = [_matrix(c, f"network.channel_noise_cov[{k}]", errors) for k, c in enumerate(covs)]
            if all(m is not None and m.shape == (M, M) for m in mats):
                Q = np.stack(mats)
            else:
                errors.add("network.channel_noise_cov", f"expected {N} matrices of shape ({M}, {M})")
        else:
            errors.add("network.channel_noise_cov", f"expected a list of {N} matrices")

    gamma = net.get("gamma")
    if gamma is not None and gamma not in (1, 2):
        errors.add("network.gamma", "must be 1 or 2")
    if errors.items:
        return None
    if is_complex:
        w_o = w_o.astype(complex)
    try:
        p = make_profile(w_o, mu, R, sigma_v2, links, Q=Q, gamma=gamma, is_complex=is_complex)
    except ParameterError as exc:
        errors.add("network", str(exc))
        return None
    for problem in validate_profile(p):
        errors.add("network", problem)
    return p


def load_config_dict(raw: dict, overrides: dict | None = None, config_path=None):
    """Resolve an already-parsed config mapping; see :func:`parse_config`."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    errors = _Errors()
    if not errors.check_keys(raw, _TOP_KEYS, "config"):
        raise ConfigError("config must be a JSON object", errors.items)
    if "network" not in raw:
        errors.add("config.network", "missing")
        raise ConfigError("; ".join(errors.items), errors.items)
    profile = _resolve_network(raw["network"], errors)

    sim_raw = raw.get("simulation", {})
    sim_cfg = None
    if errors.check_keys(sim_raw, _SIM_KEYS, "simulation"):
        values = {
            "iterations": overrides.get("iterations", sim_raw.get("iterations", 2000)),
            "runs": overrides.get("runs", sim_raw.get("runs", 100)),
            "tail": overrides.get("tail", sim_raw.get("tail", 200)),
            "master_seed": overrides.get("seed", sim_raw.get("seed", 0)),
        }
        bad = [k for k, v in values.items() if not isinstance(v, int) or isinstance(v, bool)]
        for k in bad:
            errors.add(f"simulation.{k}", "must be an integer")
        if not bad:
            try:
                sim_cfg = SimConfig(**values)
            except ParameterError as exc:
                errors.add("simulation", str(exc))

    run_raw = raw.get("run", {})
    spec = None
    if errors.check_keys(run_raw, _RUN_KEYS, "run"):
        fields = {
            "mode": overrides.get("mode", run_raw.get("mode", "both")),
            "output_dir": str(overrides.get("output_dir", run_raw.get("output_dir", "out"))),
            "tolerance_db": float(overrides.get("tolerance_db", run_raw.get("tolerance_db", 1.0))),
            "pi_convention": overrides.get("pi_convention", run_raw.get("pi_convention", "per_step")),
            "gamma": overrides.get("gamma", run_raw.get("gamma")),
            "write_curves": bool(run_raw.get("write_curves", True)),
        }
        if fields["mode"] not in MODES:
            errors.add("run.mode", f"must be one of {MODES}")
        if fields["pi_convention"] not in PI_CONVENTIONS:
            errors.add("run.pi_convention", f"must be one of {PI_CONVENTIONS}")
        if fields["gamma"] is not None and fields["gamma"] not in (1, 2):
            errors.add("run.gamma", "must be 1 or 2")
        if not fields["tolerance_db"] > 0:
            errors.add("run.tolerance_db", "must be > 0")
        spec = RunSpec(config_path=None if config_path is None else str(config_path),
                       overrides=overrides, **fields)

    if errors.items:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors.items), errors.items)
    if spec.gamma is not None:
        profile = profile.replace(gamma=float(spec.gamma))
    return profile, sim_cfg, spec


def parse_config(path, overrides: dict | None = None):
    """Read a JSON config into ``(NetworkProfile, SimConfig, RunSpec)``.

    `overrides` uses the RunSpec / SimConfig field names plus ``seed`` and
    takes precedence over the file.  Every problem found is reported in one
    :class:`ConfigError`.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return load_config_dict(raw, overrides, path)


def _dump_matrix(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"re": a.real.tolist(), "im": a.imag.tolist()}
    return a.tolist()


def resolved_config(p: NetworkProfile, sim_cfg: SimConfig, spec: RunSpec) -> dict:
    """Fully explicit config that reloads to the same profile (no random draws)."""
    network = {
        "nodes": p.N,
        "dim": p.M,
        "w_o": _dump_matrix(p.w_o),
        "complex": p.is_complex,
        "gamma": int(p.gamma),
        "step_size": p.mu.tolist(),
        "noise_var": p.sigma_v2.tolist(),
        "regressors": {"covariances": [_dump_matrix(r) for r in p.R]},
        "channels": [ch.to_dict(c) for c in p.channels],
        "channel_noise_cov": [_dump_matrix(q) for q in p.Q],
    }
    simulation = {
        "iterations": sim_cfg.iterations, "runs": sim_cfg.runs, "tail": sim_cfg.tail, "seed": sim_cfg.master_seed,
    }
    run = {
        "mode": spec.mode, "output_dir": spec.output_dir, "tolerance_db": spec.tolerance_db,
        "pi_convention": spec.pi_convention, "write_curves": spec.write_curves,
    }
    return {"network": network, "simulation": simulation, "run": run}


def config_hash(resolved: dict) -> str:
    return hashlib.sha256(json.dumps(resolved, sort_keys=True).encode()).hexdigest()

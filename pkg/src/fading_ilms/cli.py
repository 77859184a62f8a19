"""Command-line entry point: ``fading-ilms --config PATH --mode both --out DIR``.

Exit codes: 0 complete (and within tolerance), 2 comparison outside
tolerance, 3 instability in a mode that needs a stable profile, 4 bad
configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import harness as hs
from . import simulation as sm
from . import theory as th
from .config import MODES, config_hash, parse_config, resolved_config
from .errors import ConfigError, StabilityError
from .network import profile_hash

log = logging.getLogger("fading_ilms")

EXIT_OK, EXIT_TOLERANCE, EXIT_UNSTABLE, EXIT_CONFIG = 0, 2, 3, 4

STEADY_HEADER = [
    "node", "msd_theory_db", "msd_sim_db", "emse_theory_db", "emse_sim_db", "mse_theory_db", "mse_sim_db",
    "bias_norm_theory", "bias_norm_sim", "delta_msd_db", "delta_emse_db", "delta_mse_db",
]
CURVES_HEADER = ["iter", "node", "msd", "emse", "mse"]


def _num(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _clean(obj):
    # JSON has no inf/nan; write them as null.
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit_report(report: hs.MetricsReport, curves: sm.EnsembleResult | None, output_dir) -> list[Path]:
    """Write ``steady_state.csv``, ``summary.json`` and optionally ``curves.csv``.

    Missing sides of the comparison are written as empty CSV fields.
    """
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    written = []
    deltas = report.deltas or {}

    def col(side, metric, k):
        values = report.db(side, metric)
        return None if values is None else values[k]

    bias_t, bias_s = report.bias_norm("theory"), report.bias_norm("sim")
    path = out / "steady_state.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(STEADY_HEADER)
        for k in range(report.N):
            row = [k + 1]
            for metric in hs.METRICS:
                row += [_num(col("theory", metric, k)), _num(col("sim", metric, k))]
            row += [_num(None if bias_t is None else bias_t[k]), _num(None if bias_s is None else bias_s[k])]
            row += [_num(deltas[m][k]) if deltas else "" for m in hs.METRICS]
            w.writerow(row)
    written.append(path)

    path = out / "summary.json"
    path.write_text(json.dumps(_clean(report.to_dict()), indent=2, sort_keys=True) + "\n")
    written.append(path)

    if curves is not None:
        path = out / "curves.csv"
        N, T = curves.msd_curve.shape
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(CURVES_HEADER)
            for i in range(T):
                for k in range(N):
                    w.writerow([i + 1, k + 1, _num(curves.msd_curve[k, i]), _num(curves.emse_curve[k, i]),
                                _num(curves.mse_curve[k, i])])
        written.append(path)
    return written


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fading-ilms", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON experiment file ('paper' selects the bundled one)")
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("--seed", type=int, help="master seed of the simulation (unsigned 64-bit)")
    ap.add_argument("--out", dest="output_dir", help="output directory")
    ap.add_argument("--iterations", type=int)
    ap.add_argument("--runs", type=int)
    ap.add_argument("--tail", type=int)
    ap.add_argument("--tol-db", dest="tolerance_db", type=float)
    ap.add_argument("--pi-convention", choices=["per_step", "paper"])
    ap.add_argument("--gamma", type=int, choices=[1, 2])
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(profile, sim_cfg, spec) -> tuple[int, hs.MetricsReport, sm.EnsembleResult | None]:
    """Execute one configured experiment and return (exit code, report, curves)."""
    resolved = resolved_config(profile, sim_cfg, spec)
    provenance = {
        "seed": sim_cfg.master_seed,
        "config_hash": config_hash(resolved),
        "profile_hash": profile_hash(profile),
        "version": f"fading-ilms {__version__}",
        "mode": spec.mode,
        "pi_convention": spec.pi_convention,
        "gamma": profile.gamma,
    }
    stability = hs.stability_summary(profile, spec.pi_convention)
    code = EXIT_OK
    theory = bias_t = None
    extra = {}
    if spec.mode in ("theory", "both"):
        try:
            theory = th.theoretical_metrics(profile, spec.pi_convention)
            bias_t = th.theoretical_bias(profile)
        except StabilityError as exc:
            log.error("theory unavailable: %s", exc)
            stability["error"] = str(exc)
            code = EXIT_UNSTABLE
        if theory is not None:
            try:
                full = th.exact_steady_state(profile)
                extra["full_covariance_theory"] = {m: getattr(full, m).tolist() for m in hs.METRICS}
            except StabilityError:
                pass

    res = simulated = bias_s = None
    if spec.mode in ("sim", "both"):
        log.info("simulating %d runs x %d iterations", sim_cfg.runs, sim_cfg.iterations)
        res = sm.run_ensemble(profile, sim_cfg)
        simulated = hs.sim_steady_state(res)
        bias_s = res.mean_weight_error
        if theory is not None:
            extra["pi_conventions"] = hs.convention_experiment(profile, simulated, spec.tolerance_db)
            gammas = {}
            for gamma in (1.0, 2.0):
                alt = th.theoretical_metrics(profile.replace(gamma=gamma), spec.pi_convention)
                rep = hs.compare(alt, simulated, spec.tolerance_db)
                gammas[str(int(gamma))] = {m: float(rep.deltas[m].max()) for m in hs.METRICS}
            extra["gamma_experiment"] = gammas

    report = hs.compare(theory, simulated, spec.tolerance_db, bias_theory=bias_t, bias_sim=bias_s,
                        stability=stability, provenance=provenance, extra=extra, nodes=profile.N)
    if code == EXIT_OK and report.passed is False:
        code = EXIT_TOLERANCE
    return code, report, res


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {k: getattr(args, k) for k in
                 ("mode", "seed", "output_dir", "iterations", "runs", "tail", "tolerance_db", "pi_convention", "gamma")}
    config_path = args.config
    if config_path == "paper":
        from .config import BUNDLED_PAPER_CONFIG
        config_path = BUNDLED_PAPER_CONFIG
    try:
        profile, sim_cfg, spec = parse_config(config_path, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, report, res = run(profile, sim_cfg, spec)
    out = Path(spec.output_dir)
    try:
        emit_report(report, res if spec.write_curves else None, out)
        resolved = resolved_config(profile, sim_cfg, spec)
        (out / "resolved_config.json").write_text(json.dumps(resolved, indent=2) + "\n")
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1
    if report.passed is not None:
        worst = {m: float(np.max(v)) for m, v in report.deltas.items()}
        print(f"{'PASS' if report.passed else 'FAIL'} max |theory - sim| dB: "
              + ", ".join(f"{m}={v:.3f}" for m, v in worst.items()))
    return code


if __name__ == "__main__":
    sys.exit(main())

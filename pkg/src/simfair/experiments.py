"""Sweeps over scenario parameters, benchmark schemes and CSV/JSON output.

Per-trial generators come from ``np.random.default_rng([seed, trial])``: the
``SeedSequence`` entropy pair keeps every trial's stream independent of the
others and of the order in which trials run. Each trial draws its channel
first, so all schemes see the same realization for a given ``(seed, trial)``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channels import build_channels
from .geometry import ScenarioConfig
from .icsi import (GdaParams, _gains, alternating_optimize_icsi, equal_power,
                   gp_power_allocation, write_trace_csv)
from .metrics import rate_report
from .oracles import exhaustive_search
from .scsi import GdParams, alternating_optimize_scsi
from .stack import TWO_PI

log = logging.getLogger(__name__)

SCHEMES = ("icsi", "scsi", "equal_gda", "gp_random", "equal_random", "exhaustive", "continuous")
SCHEME_ALIASES = {
    "benchmark:equal_power+gda": "equal_gda",
    "benchmark:gp+random": "gp_random",
    "benchmark:equal+random": "equal_random",
    "benchmark:exhaustive": "exhaustive",
    "benchmark:continuous": "continuous",
}
SWEEP_VARS = ("L", "M", "P_T_dBm", "b", "K")

CONFIG_FIELDS = tuple(ScenarioConfig().to_dict())
METRIC_FIELDS = ("min_rate", "min_rate_ci95", "rate_bound", "min_sinr",
                 "I_minmax", "I_jain", "I_gini_c", "iterations", "converged")
COLUMNS = ("sweep_var", "value", "trial", "seed", "scheme") + CONFIG_FIELDS + METRIC_FIELDS


def dbm_to_watt(dbm: float) -> float:
    return 10 ** ((dbm - 30) / 10)


def watt_to_dbm(watt: float) -> float:
    return 10 * math.log10(watt) + 30


def canonical_scheme(name: str) -> str:
    scheme = SCHEME_ALIASES.get(name, name)
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {name!r}; choose from {SCHEMES + tuple(SCHEME_ALIASES)}")
    return scheme


def apply_sweep_value(config: ScenarioConfig, sweep_var: str, value) -> ScenarioConfig:
    """Config with one swept quantity replaced (``P_T_dBm`` is given in dBm)."""
    if sweep_var == "L":
        return config.with_updates(num_layers=int(value))
    if sweep_var == "M":
        return config.with_updates(elements_per_layer=int(value))
    if sweep_var == "P_T_dBm":
        return config.with_updates(power_budget=dbm_to_watt(float(value)))
    if sweep_var == "b":
        return config.with_updates(quant_bits=int(value))
    if sweep_var == "K":
        return config.with_updates(num_users=int(value), num_bs_antennas=int(value))
    raise ValueError(f"unknown sweep variable {sweep_var!r}; choose from {SWEEP_VARS}")


@dataclass
class SweepSpec:
    mode: str
    sweep_var: str
    values: list
    trials: int = 1
    seed: int = 0
    output_path: str | None = None
    config: ScenarioConfig = field(default_factory=ScenarioConfig)
    gda: GdaParams = field(default_factory=GdaParams)
    gd: GdParams = field(default_factory=GdParams)
    json_path: str | None = None
    workers: int = 1

    def __post_init__(self):
        self.mode = canonical_scheme(self.mode)
        if self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"unknown sweep variable {self.sweep_var!r}; choose from {SWEEP_VARS}")
        if not self.values:
            raise ValueError("values must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def random_phases(rng, num_layers: int, num_elements: int, bits: int) -> np.ndarray:
    """Uniform draw from the ``2**bits`` phase levels for every element."""
    levels = rng.integers(0, 2**bits, size=(num_layers, num_elements))
    return levels * (TWO_PI / 2**bits)


def run_scheme(scheme: str, config: ScenarioConfig, rng, gda: GdaParams = GdaParams(),
               gd: GdParams = GdParams()) -> dict:
    """One trial of ``scheme``; returns the metric columns of a CSV row."""
    scheme = canonical_scheme(scheme)
    channels = build_channels(config, rng)
    H, P_T, bits = channels.H, config.power_budget, config.quant_bits
    k = config.num_users
    out = dict.fromkeys(METRIC_FIELDS, "")

    if scheme == "scsi":
        # the policy uses statistics only; the trial's draw scores it
        res = alternating_optimize_scsi(channels, P_T, bits, gd)
        rep = rate_report(_gains(res.theta.theta, channels, H), res.p)
        out.update(rate_bound=res.rate_bound, iterations=res.iterations, converged=res.converged)
    elif scheme in ("icsi", "continuous", "equal_gda"):
        res = alternating_optimize_icsi(
            channels, P_T, None if scheme == "continuous" else bits, gda,
            power="equal" if scheme == "equal_gda" else "gp")
        rep = res.report
        out.update(iterations=res.iterations, converged=res.converged)
    elif scheme in ("gp_random", "equal_random"):
        theta = random_phases(rng, config.num_layers, config.elements_per_layer, bits)
        gains = _gains(theta, channels, H)
        p = gp_power_allocation(gains, P_T)[0] if scheme == "gp_random" else equal_power(k, P_T)
        rep = rate_report(gains, p)
        out.update(iterations=0, converged=True)
    else:  # exhaustive
        p, theta, _ = exhaustive_search(channels, P_T, bits, objective="sinr", H=H)
        rep = rate_report(_gains(theta, channels, H), p)
        out.update(iterations=0, converged=True)

    out.update(min_rate=rep.min_rate, min_sinr=float(rep.sinr.min()),
               I_minmax=rep.fairness[0], I_jain=rep.fairness[1], I_gini_c=rep.fairness[2])
    return out


def _aggregate(rows: list) -> dict:
    """Mean of every numeric metric and a 95% normal interval on the min-rate."""
    agg = dict(rows[0])
    agg["trial"] = "mean"
    n = len(rows)
    for key in ("min_rate", "rate_bound", "min_sinr", "I_minmax", "I_jain", "I_gini_c", "iterations"):
        vals = [float(r[key]) for r in rows if r[key] != ""]
        agg[key] = math.fsum(vals) / len(vals) if vals else ""
    conv = [r["converged"] for r in rows]
    agg["converged"] = all(c in (True, "True") for c in conv)
    if n > 1:
        rates = [float(r["min_rate"]) for r in rows]
        mean = agg["min_rate"]
        var = math.fsum((x - mean) ** 2 for x in rates) / (n - 1)
        agg["min_rate_ci95"] = 1.96 * math.sqrt(var / n)
    else:
        agg["min_rate_ci95"] = float("nan")
    return agg


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating, np.integer)):
        return repr(value.item())
    return str(value)


def format_rows(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(row.get(c, "")) for c in COLUMNS])
    return buf.getvalue()


def run_sweep(spec: SweepSpec) -> list:
    """Run every ``(value, trial)`` of ``spec``; returns raw and aggregate rows in
    ``(value, trial)`` order and writes them when ``output_path`` is set."""
    jobs = []
    for value in spec.values:
        cfg = apply_sweep_value(spec.config, spec.sweep_var, value)
        for trial in range(spec.trials):
            jobs.append((value, trial, cfg))

    def one(job):
        value, trial, cfg = job
        rng = np.random.default_rng([spec.seed, trial])
        metrics = run_scheme(spec.mode, cfg, rng, spec.gda, spec.gd)
        log.info("%s=%s trial %d: min-rate %.4g", spec.sweep_var, value, trial, metrics["min_rate"])
        row = {"sweep_var": spec.sweep_var, "value": value, "trial": trial,
               "seed": spec.seed, "scheme": spec.mode}
        row.update(cfg.to_dict())
        row.update(metrics)
        return row

    if spec.workers > 1:
        with ThreadPoolExecutor(spec.workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    rows = []
    for i, value in enumerate(spec.values):
        chunk = results[i * spec.trials:(i + 1) * spec.trials]
        rows.extend(chunk)
        rows.append(_aggregate(chunk))

    if spec.output_path:
        Path(spec.output_path).write_text(format_rows(rows))
    if spec.json_path:
        Path(spec.json_path).write_text(json.dumps(
            [{c: _jsonable(r.get(c, "")) for c in COLUMNS} for r in rows], indent=1))
    return rows


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def read_rows(path) -> list:
    """Rows of a sweep CSV as dicts of strings."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_convergence(mode: str, config: ScenarioConfig, seed: int = 0, output_path=None,
                    gda: GdaParams = GdaParams(), gd: GdParams = GdParams(),
                    inner_path=None) -> list:
    """Outer-iteration objective trace of one run.

    ``icsi`` traces the balanced minimum SINR (should not decrease); ``scsi``
    traces ``zeta`` (should not increase). Writes ``iteration,objective`` when
    ``output_path`` is set and the per-GDA-step log to ``inner_path``.
    """
    rng = np.random.default_rng([seed, 0])
    channels = build_channels(config, rng)
    mode = canonical_scheme(mode)
    if mode == "icsi":
        res = alternating_optimize_icsi(channels, config.power_budget, config.quant_bits, gda)
        if inner_path:
            write_trace_csv(res, inner_path)
    elif mode == "scsi":
        res = alternating_optimize_scsi(channels, config.power_budget, config.quant_bits, gd)
    else:
        raise ValueError("convergence traces exist for icsi and scsi only")
    if output_path:
        with open(output_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "objective"])
            for i, v in enumerate(res.trace, start=1):
                w.writerow([i, repr(float(v))])
    return list(res.trace)


def trace_is_monotone(trace, increasing: bool, tol: float = 1e-8) -> bool:
    """Relative monotonicity audit of an objective trace."""
    t = np.asarray(trace, dtype=float)
    diffs = np.diff(t) if increasing else -np.diff(t)
    return bool(np.all(diffs >= -tol * np.abs(t[:-1])))

"""Acceptance criteria, one test per criterion.

Each test emits a single ``[ACnn] PASS|FAIL`` line on the terminal. Run the
module directly (``python tests/test_acceptance.py``) to get the same lines
without pytest. Tolerances are fixed constants below; none is tuned to the
outcome.

Trial ``t`` of every Monte Carlo batch draws from ``default_rng([0, t])``,
so all schemes and all configurations share channel seeds.
"""

from __future__ import annotations

import functools
import time

import numpy as np
import pytest

from simfair.channels import build_channels
from simfair.experiments import dbm_to_watt, random_phases, trace_is_monotone
from simfair.geometry import ScenarioConfig
from simfair.icsi import (_gains, alternating_optimize_icsi, equal_power, gp_power_allocation)
from simfair.metrics import rate_report
from simfair.oracles import exhaustive_search, mc_average_min_rate
from simfair.scsi import alternating_optimize_scsi
from simfair.stack import quantize_phase
from simfair.verification import (check_cascade, check_closed_form_power, check_exp_e1,
                                  check_power_control, check_projection, check_weighted_sinr_gradient,
                                  check_zeta_gradient)

TRIALS = 200
MONO_SEEDS = 100
MONO_TOL = 1e-8
I_MAX = 500
GRAD_TOL = 1e-5
GRAD_SECONDS = 10.0
PROJ_TOL = 1e-6
POWER_TOL = 1e-6
KKT_TOL = 1e-9
BOUND_PT_DBM = (10, 0, -10, -20, -30)
BOUND_MC_TRIALS = 1000
BOUND_LOW_SNR_RATIO = 1.2
BOUND_SECONDS = 300.0
GAIN_OVER_BASELINE = 10.0
BENCH_SECONDS = 1800.0
QUANT_BITS = (1, 2, 4, 8)
QUANT_GAP = 0.5
FAIRNESS_FLOOR = 0.95
PARITY_RATIO = 0.9
PARITY_SEEDS = 20
PARITY_SECONDS = 120.0
CASCADE_TOL = 1e-10
E1_TOL = 1e-8

DEFAULT = ScenarioConfig()  # M=36, L=4, N=K=4, P_T=10 dBm


def _emit(n: int, passed: bool, detail: str) -> str:
    line = f"[AC{n:02d}] {'PASS' if passed else 'FAIL'}  {detail}"
    print(line, flush=True)
    return line


@pytest.fixture
def emit(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def _write(n, passed, detail):
        line = _emit(n, passed, detail)
        if reporter is not None:
            reporter.write_line("\n" + line)
    return _write


# ------------------------------------------------------------- shared batches

@functools.lru_cache(maxsize=None)
def icsi_batch(cfg: ScenarioConfig, trials: int = TRIALS) -> dict:
    """Proposed scheme on ``trials`` channel draws, plus the quantization sweep."""
    t0 = time.perf_counter()
    out = {"rate": [], "rate_cont": [], "fair": [], "fair_cont": [], "trace": [],
           "converged": [], "iterations": [], "inner_max": [],
           "rate_b": {b: [] for b in QUANT_BITS}}
    for trial in range(trials):
        rng = np.random.default_rng([0, trial])
        ch = build_channels(cfg, rng)
        rep = alternating_optimize_icsi(ch, cfg.power_budget, cfg.quant_bits)
        out["rate"].append(rep.report.min_rate)
        out["rate_cont"].append(rep.report_continuous.min_rate)
        out["fair"].append(rep.report.fairness)
        out["fair_cont"].append(rep.report_continuous.fairness)
        out["trace"].append(rep.trace)
        out["converged"].append(rep.converged)
        out["iterations"].append(rep.iterations)
        out["inner_max"].append(max((len(t) - 1 for t in rep.inner_traces), default=0))
        for b in QUANT_BITS:
            theta_b = quantize_phase(rep.theta_continuous, b)
            out["rate_b"][b].append(rate_report(_gains(theta_b, ch, ch.H), rep.p).min_rate)
    out["seconds"] = time.perf_counter() - t0
    return out


@functools.lru_cache(maxsize=None)
def benchmark_batch(scheme: str, cfg: ScenarioConfig, trials: int = TRIALS) -> dict:
    t0 = time.perf_counter()
    rates, fair = [], []
    for trial in range(trials):
        rng = np.random.default_rng([0, trial])
        ch = build_channels(cfg, rng)
        P_T, k = cfg.power_budget, cfg.num_users
        if scheme == "equal_gda":
            rep = alternating_optimize_icsi(ch, P_T, cfg.quant_bits, power="equal").report
        else:
            theta = random_phases(rng, cfg.num_layers, cfg.elements_per_layer, cfg.quant_bits)
            gains = _gains(theta, ch, ch.H)
            p = gp_power_allocation(gains, P_T)[0] if scheme == "gp_random" else equal_power(k, P_T)
            rep = rate_report(gains, p)
        rates.append(rep.min_rate)
        fair.append(rep.fairness)
    return {"rate": rates, "fair": fair, "seconds": time.perf_counter() - t0}


# ------------------------------------------------------------- criteria

def criterion_1():
    r = check_weighted_sinr_gradient(instances=20, limit=GRAD_TOL)
    ok = r.passed and r.seconds < GRAD_SECONDS
    return ok, f"weighted-SINR gradient vs FD on 20 instances: worst rel-l2 {r.worst:.2e} " \
               f"(<= {GRAD_TOL:.0e}), {r.seconds:.1f} s (< {GRAD_SECONDS:.0f} s)"


def criterion_2():
    r = check_zeta_gradient(instances=20, limit=GRAD_TOL)
    ok = r.passed and r.seconds < GRAD_SECONDS
    return ok, f"zeta gradient vs FD on 20 instances: worst rel-l2 {r.worst:.2e} " \
               f"(<= {GRAD_TOL:.0e}), {r.seconds:.1f} s (< {GRAD_SECONDS:.0f} s)"


def criterion_3():
    r = check_projection(samples=10_000, limit=PROJ_TOL, eps_proj=1e-8)
    return r.passed, f"projection vs sort oracle on 1e4 vectors (K<=16): max dev {r.worst:.2e} (<= {PROJ_TOL:.0e})"


def criterion_4():
    r = check_power_control(instances=100, limit=POWER_TOL)
    return r.passed, f"bisection vs fixed-point on 100 gain sets (K=4): worst |dt|/t or SINR spread " \
                     f"{r.worst:.2e} (<= {POWER_TOL:.0e})"


def criterion_5():
    r = check_closed_form_power(instances=20, kkt_limit=KKT_TOL, grid_steps=143)
    return r.passed, f"closed-form split on 20 instances: KKT residual {r.worst:.2e} (<= {KKT_TOL:.0e}), " \
                     f"10011-point grid agrees within one step"


def criterion_6():
    t0 = time.perf_counter()
    base = ScenarioConfig(num_bs_antennas=2, num_users=2, elements_per_layer=4, num_layers=2)
    ratios, dominated = [], []
    for dbm in BOUND_PT_DBM:
        cfg = base.with_updates(power_budget=dbm_to_watt(dbm))
        ch = build_channels(cfg)
        rep = alternating_optimize_scsi(ch, cfg.power_budget, bits=3)
        mean, half = mc_average_min_rate(rep.theta.theta, rep.p, ch, BOUND_MC_TRIALS,
                                         np.random.default_rng(6))
        # no violation of the bound beyond the 95% interval of the estimate
        dominated.append(mean - half <= rep.rate_bound)
        ratios.append(rep.rate_bound / mean)
    seconds = time.perf_counter() - t0
    # ratios are listed from the highest to the lowest power
    shrinking = all(a > b for a, b in zip(ratios, ratios[1:]))
    ok = all(dominated) and shrinking and ratios[-1] <= BOUND_LOW_SNR_RATIO and seconds < BOUND_SECONDS
    desc = ", ".join(f"{d:+d} dBm {r:.3f}" for d, r in zip(BOUND_PT_DBM, ratios))
    return ok, f"bound/MC ratio {desc}; MC-CI below bound everywhere: {all(dominated)}; " \
               f"shrinks as power drops: {shrinking}; {seconds:.0f} s"


def _mean(x):
    return float(np.mean(x))


def criterion_7():
    t0 = time.perf_counter()
    proposed = icsi_batch(DEFAULT)
    baseline = benchmark_batch("equal_random", DEFAULT)
    gain = _mean(proposed["rate"]) / _mean(baseline["rate"])

    sweeps = {
        "L": [DEFAULT.with_updates(num_layers=v) for v in (1, 2, 4)],
        "M": [DEFAULT.with_updates(elements_per_layer=v) for v in (16, 36)],
        "P_T": [DEFAULT.with_updates(power_budget=dbm_to_watt(v)) for v in (0, 10, 20)],
    }
    trend_ok, parts = True, []
    for name, cfgs in sweeps.items():
        means = [_mean(icsi_batch(c)["rate"]) for c in cfgs]
        inc = all(b > a for a, b in zip(means, means[1:]))
        trend_ok &= inc
        parts.append(f"{name}: " + "/".join(f"{m:.3f}" for m in means) + ("" if inc else " (not increasing)"))
    seconds = time.perf_counter() - t0
    ok = gain >= GAIN_OVER_BASELINE and trend_ok and seconds < BENCH_SECONDS
    return ok, f"proposed {_mean(proposed['rate']):.3f} vs equal+random {_mean(baseline['rate']):.3f} " \
               f"bits/s/Hz = {gain:.1f}x (>= {GAIN_OVER_BASELINE:.0f}x); " + "; ".join(parts) + \
               f"; {seconds:.0f} s"


def criterion_8():
    batch = icsi_batch(DEFAULT)
    cont = _mean(batch["rate_cont"])
    loss = {b: cont - _mean(batch["rate_b"][b]) for b in QUANT_BITS}
    dec = all(loss[a] > loss[b] for a, b in zip(QUANT_BITS, QUANT_BITS[1:]))
    ok = loss[8] <= QUANT_GAP and dec
    return ok, "mean loss vs continuous " + ", ".join(f"b={b}: {loss[b]:.3f}" for b in QUANT_BITS) + \
               f" (b=8 <= {QUANT_GAP}; strictly decreasing: {dec})"


def criterion_9():
    proposed = icsi_batch(DEFAULT)
    fair = np.mean(proposed["fair"], axis=0)
    floor_ok = bool(np.all(fair >= FAIRNESS_FLOOR))
    jain = {"equal_gda": np.mean([f[1] for f in benchmark_batch("equal_gda", DEFAULT)["fair"]]),
            "gp_random": np.mean([f[1] for f in benchmark_batch("gp_random", DEFAULT)["fair"]]),
            "equal_random": np.mean([f[1] for f in benchmark_batch("equal_random", DEFAULT)["fair"]]),
            "continuous": np.mean([f[1] for f in proposed["fair_cont"]])}
    # exhaustive search over 2^(8*144) phase patterns is out of reach at this size
    lower = {k: bool(v < fair[1]) for k, v in jain.items()}
    ok = floor_ok and all(lower.values())
    return ok, f"proposed (minmax, Jain, 1-Gini) = ({fair[0]:.4f}, {fair[1]:.6f}, {fair[2]:.4f}) " \
               f"(>= {FAIRNESS_FLOOR}); benchmark Jain " + \
               ", ".join(f"{k} {v:.6f}{'' if lower[k] else ' (not lower)'}" for k, v in jain.items())


def criterion_10():
    t0 = time.perf_counter()
    ratios = []
    for seed in range(PARITY_SEEDS):
        rng = np.random.default_rng([10, seed])
        cfg = ScenarioConfig(num_bs_antennas=2, num_users=2, elements_per_layer=2, num_layers=2,
                             quant_bits=1, power_budget=dbm_to_watt(rng.uniform(-30, 10)),
                             ue_spacing=rng.uniform(2, 20), bs_ue_distance=rng.uniform(5, 20))
        ch = build_channels(cfg)
        ours = alternating_optimize_scsi(ch, cfg.power_budget, bits=1).rate_bound
        _, _, best = exhaustive_search(ch, cfg.power_budget, 1, objective="bound")
        ratios.append(ours / best)
    seconds = time.perf_counter() - t0
    ok = min(ratios) >= PARITY_RATIO and seconds < PARITY_SECONDS
    return ok, f"stat-CSI bound / exhaustive optimum over {PARITY_SEEDS} seeds: min {min(ratios):.4f}, " \
               f"mean {np.mean(ratios):.4f} (>= {PARITY_RATIO}); {seconds:.0f} s"


def criterion_11():
    batch = icsi_batch(DEFAULT)
    traces = batch["trace"][:MONO_SEEDS]
    icsi_mono = sum(trace_is_monotone(t, True, MONO_TOL) for t in traces)
    icsi_conv = sum(batch["converged"][:MONO_SEEDS])
    icsi_cap = max(batch["inner_max"][:MONO_SEEDS]) <= I_MAX

    scsi_mono = scsi_conv = 0
    scsi_cap = True
    for seed in range(MONO_SEEDS):
        rng = np.random.default_rng([11, seed])
        cfg = DEFAULT.with_updates(power_budget=dbm_to_watt(rng.uniform(-30, 20)),
                                   ue_spacing=rng.uniform(2, 20), bs_ue_distance=rng.uniform(5, 20))
        rep = alternating_optimize_scsi(build_channels(cfg), cfg.power_budget, bits=3)
        scsi_mono += trace_is_monotone(rep.trace, False, MONO_TOL)
        scsi_conv += rep.converged
        scsi_cap &= max(len(t) - 1 for t in rep.inner_traces) <= I_MAX if rep.inner_traces else True
    ok = (icsi_mono == scsi_mono == icsi_conv == scsi_conv == MONO_SEEDS) and icsi_cap and scsi_cap
    return ok, f"ICSI monotone {icsi_mono}/{MONO_SEEDS}, converged {icsi_conv}/{MONO_SEEDS}; " \
               f"SCSI monotone {scsi_mono}/{MONO_SEEDS}, converged {scsi_conv}/{MONO_SEEDS}; " \
               f"inner runs within {I_MAX}: {icsi_cap and scsi_cap}"


def criterion_12():
    c = check_cascade(stacks=50, limit=CASCADE_TOL)
    e = check_exp_e1(limit=E1_TOL)
    return c.passed and e.passed, f"cascade identity worst {c.worst:.2e} (<= {CASCADE_TOL:.0e}); " \
                                  f"exp_e1 vs quadrature worst {e.worst:.2e} (<= {E1_TOL:.0e})"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


@pytest.mark.parametrize("n", range(1, 13), ids=lambda n: f"AC{n:02d}")
def test_criterion(n, emit):
    ok, detail = CRITERIA[n - 1]()
    emit(n, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    for i, crit in enumerate(CRITERIA, start=1):
        _emit(i, *crit())

"""Oracle suites: each check compares a production routine with an independent
reference on seeded random instances and reports the worst deviation."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .channels import build_channels
from .geometry import ScenarioConfig
from .icsi import _gains, gp_power_allocation, grad_theta_lemma1, project_simplex
from .metrics import LinkGains, sinr
from .oracles import (finite_diff_gradient, fixed_point_power_oracle, simplex_grid,
                      simplex_projection_sort)
from .scsi import (ZetaContext, beam_gains, exp_e1, grad_theta_lemma2, power_allocation_scsi,
                   zeta)
from .stack import build_cascade

E1_POINTS = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    limit: float
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: worst {self.worst:.3e} (limit {self.limit:.0e}, {self.seconds:.2f} s)"


def random_instance(rng, M: int = 6, L: int = 2, K: int = 3, power_budget: float = 1e-2):
    """Channels with a sampled ``H``, random phases and random powers on the budget."""
    cfg = ScenarioConfig(elements_per_layer=M, num_layers=L, num_users=K, num_bs_antennas=K,
                         power_budget=power_budget)
    channels = build_channels(cfg, rng)
    theta = rng.uniform(0, 2 * np.pi, (L, M))
    p = rng.dirichlet(np.ones(K)) * power_budget
    return channels, theta, p


def rel_l2(a, b) -> float:
    return float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / np.linalg.norm(np.ravel(b)))


def check_weighted_sinr_gradient(instances: int = 20, seed: int = 1, limit: float = 1e-5):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        channels, theta, p = random_instance(rng)
        lam = rng.dirichlet(np.ones(p.size))
        H = channels.H
        analytic = grad_theta_lemma1(build_cascade(theta, channels.W_inter), H, channels.W1,
                                     p, lam, channels.noise_power)
        numeric = finite_diff_gradient(lambda th: float(lam @ sinr(_gains(th, channels, H), p)), theta)
        worst = max(worst, rel_l2(analytic, numeric))
    return CheckResult("weighted-SINR phase gradient vs finite differences", worst <= limit,
                       worst, limit, time.perf_counter() - t0)


def check_zeta_gradient(instances: int = 20, seed: int = 2, limit: float = 1e-5):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        channels, theta, p = random_instance(rng)
        ctx = ZetaContext.from_channels(channels)
        analytic = grad_theta_lemma2(ctx, build_cascade(theta, channels.W_inter), p)
        numeric = finite_diff_gradient(lambda th: zeta(ctx, th, p), theta)
        worst = max(worst, rel_l2(analytic, numeric))
    return CheckResult("zeta phase gradient vs finite differences", worst <= limit,
                       worst, limit, time.perf_counter() - t0)


def check_projection(samples: int = 10_000, seed: int = 3, limit: float = 1e-6,
                     eps_proj: float = 1e-8):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        k = int(rng.integers(1, 17))
        v = rng.normal(0, rng.choice([0.1, 1.0, 10.0]), k)
        y = project_simplex(v, eps_proj).lam
        worst = max(worst, float(np.max(np.abs(y - simplex_projection_sort(v)))))
    return CheckResult("simplex projection vs sort-and-threshold", worst <= limit,
                       worst, limit, time.perf_counter() - t0)


def random_link_gains(rng, k: int = 4, noise: float = 1e-12) -> LinkGains:
    """Direct gains above cross gains by a random margin, spread over decades."""
    scale = 10 ** rng.uniform(-12, -8, k)
    S = rng.uniform(0, 1, (k, k)) * scale[:, None] * 10 ** rng.uniform(-2, 0)
    np.fill_diagonal(S, scale * rng.uniform(1, 10, k))
    return LinkGains(S, noise)


def check_power_control(instances: int = 100, seed: int = 4, limit: float = 1e-6):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        gains = random_link_gains(rng)
        P_T = 10 ** rng.uniform(-5, -1)
        p, t = gp_power_allocation(gains, P_T)
        _, t_ref = fixed_point_power_oracle(gains.S, gains.noise, P_T)
        g = sinr(gains, p)
        worst = max(worst, abs(t - t_ref) / t_ref, float((g.max() - g.min()) / g.min()))
    return CheckResult("max-min power control vs fixed-point iteration", worst <= limit,
                       worst, limit, time.perf_counter() - t0)


def kkt_residual(q, betas, p) -> float:
    """Relative spread of ``c_k / p_k^2`` across users; zero at a stationary point
    of ``sum_k c_k / p_k`` on the budget hyperplane."""
    c = 1 / (np.asarray(betas) * np.asarray(q))
    marg = c / np.asarray(p) ** 2
    return float((marg.max() - marg.min()) / marg.mean())


def check_closed_form_power(instances: int = 20, seed: int = 5, kkt_limit: float = 1e-9,
                            grid_steps: int = 143):
    """Stationarity of the closed-form split and agreement with a simplex grid.

    With K=3 and 143 steps the grid holds 10011 points; the grid optimum may
    only beat the closed form by rounding, and must lie within one grid step.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_kkt, ok = 0.0, True
    grid = simplex_grid(3, grid_steps)
    for _ in range(instances):
        channels, theta, _ = random_instance(rng, K=3)
        ctx = ZetaContext.from_channels(channels)
        q = beam_gains(ctx, theta)
        P_T = 10 ** rng.uniform(-4, -1)
        p = power_allocation_scsi(q, ctx.betas, P_T)
        worst_kkt = max(worst_kkt, kkt_residual(q, ctx.betas, p))
        values = np.sum(1 / (ctx.betas * q * grid * P_T), axis=1)
        best = int(np.argmin(values))
        z = zeta(ctx, theta, p)
        ok &= z <= values[best] * (1 + 1e-12)
        ok &= float(np.max(np.abs(grid[best] - p / P_T))) <= 1 / grid_steps
    return CheckResult("closed-form power split: KKT residual and grid search",
                       bool(ok) and worst_kkt <= kkt_limit, worst_kkt, kkt_limit,
                       time.perf_counter() - t0)


def check_cascade(stacks: int = 50, seed: int = 6, limit: float = 1e-10):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(stacks):
        L, M = int(rng.integers(1, 7)), int(rng.integers(1, 17))
        W = [rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M)) for _ in range(L - 1)]
        cas = build_cascade(rng.uniform(0, 2 * np.pi, (L, M)), W)
        for layer in range(1, L + 1):
            err = np.linalg.norm(cas.reconstruct(layer) - cas.G) / np.linalg.norm(cas.G)
            worst = max(worst, float(err))
    return CheckResult("cascade prefix/suffix identity", worst <= limit, worst, limit,
                       time.perf_counter() - t0)


def exp_e1_quadrature(x: float) -> float:
    """``exp(x) E1(x) = int_0^inf exp(-u) / (x + u) du`` by adaptive quadrature."""
    from scipy.integrate import quad

    val, _ = quad(lambda u: math.exp(-u) / (x + u), 0, math.inf, epsabs=0, epsrel=1e-13, limit=200)
    return val


def check_exp_e1(limit: float = 1e-8):
    t0 = time.perf_counter()
    worst = max(abs(exp_e1(x) - exp_e1_quadrature(x)) / exp_e1_quadrature(x) for x in E1_POINTS)
    return CheckResult("exp(x) E1(x) vs quadrature", worst <= limit, worst, limit,
                       time.perf_counter() - t0)


SUITES = {
    "grad-sinr": check_weighted_sinr_gradient,
    "grad-zeta": check_zeta_gradient,
    "projection": check_projection,
    "power": check_power_control,
    "closed-form": check_closed_form_power,
    "cascade": check_cascade,
    "e1": check_exp_e1,
}


def run_all(names=None) -> list:
    return [SUITES[n]() for n in (names or SUITES)]

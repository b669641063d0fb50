"""Max-min average rate under statistical CSI.

The average minimum rate is bounded by replacing every SINR with its SNR,
which makes the per-user gains independent exponentials; the minimum is then
exponential with rate ``sigma^2 * zeta`` and

    E[log2(1 + min_k snr_k)] = log2(e) * exp(zeta sigma^2) * E1(zeta sigma^2),
    zeta(theta, p) = sum_k 1 / (beta_k p_k q_k),  q_k = w_k^H G^H R G w_k.

The bound is decreasing in ``zeta``, so both policies minimize ``zeta``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .icsi import OptReport
from .stack import BeamformerCascade, PhaseProfile, beamformed_columns, build_cascade

log = logging.getLogger(__name__)

EULER_GAMMA = 0.57721566490153286061
LOG2_E = 1 / math.log(2)


@dataclass(frozen=True)
class ZetaContext:
    eigvals: np.ndarray
    eigvecs: np.ndarray
    W1: np.ndarray
    betas: np.ndarray
    W_inter: list
    noise_power: float

    @classmethod
    def from_channels(cls, channels: ChannelSet) -> "ZetaContext":
        return cls(channels.eigvals, channels.eigvecs, channels.W1, channels.betas,
                   channels.W_inter, channels.noise_power)


@dataclass(frozen=True)
class GdParams:
    kappa: float = 0.8
    nu: float = 0.3
    iota0: float = 1.0
    max_iter: int = 500
    conv_tol: float = 1e-4
    min_step: float = 1e-300
    warm_step: bool = False  # True: start backtracking at min(iota0, step_prev / kappa)
    grad_tol: float = 1e-12  # stop once max |grad| <= grad_tol * zeta (round-off level)

    def __post_init__(self):
        if not 0 < self.kappa < 1 or not 0 < self.nu < 1:
            raise ValueError("kappa and nu must lie in (0, 1)")
        if not self.iota0 > 0:
            raise ValueError("iota0 must be positive")


@dataclass
class GdResult:
    theta: np.ndarray
    trace: list
    iterations: int
    converged: bool


def beam_gains(ctx: ZetaContext, theta) -> np.ndarray:
    """``q_k = sum_i rho_i |u_i^H G w_k|^2`` for every user."""
    Y = ctx.eigvecs.conj().T @ beamformed_columns(theta, ctx.W_inter, ctx.W1)
    return ctx.eigvals @ (Y.real**2 + Y.imag**2)


def zeta(ctx: ZetaContext, theta, p, tol: float = 0.0) -> float:
    q = beam_gains(ctx, theta)
    if np.any(q <= tol):
        raise ValueError("degenerate beam: a user receives no average power")
    return float(np.sum(1 / (ctx.betas * np.asarray(p, dtype=float) * q)))


def grad_theta_lemma2(ctx: ZetaContext, cascade: BeamformerCascade, p) -> np.ndarray:
    """Analytic ``d zeta / d theta`` (L x M) via the eigen-decomposition of ``R``."""
    p = np.asarray(p, dtype=float)
    GW = cascade.G @ ctx.W1
    Y = ctx.eigvecs.conj().T @ GW  # Y[i, k] = u_i^H G w_k
    q = ctx.eigvals @ (Y.real**2 + Y.imag**2)
    if np.any(q <= 0):
        raise ValueError("degenerate beam: a user receives no average power")
    Z = (ctx.eigvecs * ctx.eigvals) @ Y  # sum_i rho_i u_i u_i^H G w_k
    weight = -1 / (ctx.betas * p * q**2)

    n_layers, m = cascade.theta.shape
    grad = np.empty((n_layers, m))
    for idx in range(n_layers):
        U = cascade.A[idx] @ ctx.W1  # U[m, k] = (a_m)^H w_k
        V = cascade.B[idx].conj().T @ Z  # V[m, k] = (b_m)^H sum_i ...
        c = 2 * np.imag(np.exp(-1j * cascade.theta[idx])[:, None] * U.conj() * V)
        grad[idx] = c @ weight
    return grad


def power_allocation_scsi(q, betas, power_budget: float) -> np.ndarray:
    """Minimizer of ``sum_k c_k / p_k`` on ``sum(p) = P_T`` with ``c_k = 1 / (beta_k q_k)``:
    ``p_k`` proportional to ``sqrt(c_k)``."""
    q = np.asarray(q, dtype=float)
    betas = np.asarray(betas, dtype=float)
    if np.any(q <= 0) or np.any(betas <= 0):
        raise ValueError("gains must be positive")
    root = np.sqrt(1 / (betas * q))
    return power_budget * root / root.sum()


def _exp_e1_scalar(x: float) -> float:
    if x <= 1.0:
        # E1(x) = -gamma - ln x - sum_{n>=1} (-x)^n / (n n!)
        total, term, n = 0.0, 1.0, 0
        while True:
            n += 1
            term *= -x / n
            add = term / n
            total += add
            if abs(add) <= 1e-17 * abs(total) or n > 200:
                break
        return math.exp(x) * (-EULER_GAMMA - math.log(x) - total)
    # continued fraction 1/(x+1- 1/(x+3- 4/(x+5- ...))), modified Lentz
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def exp_e1(x):
    """``exp(x) * E1(x)`` for ``x > 0`` without forming either factor separately
    at large ``x``. Accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("exp_e1 needs finite x > 0")
    if arr.ndim == 0:
        return _exp_e1_scalar(float(arr))
    return np.vectorize(_exp_e1_scalar, otypes=[float])(arr)


def rate_upper_bound(zeta_value, noise_power: float):
    """Bound on the average minimum rate in bits/s/Hz."""
    return LOG2_E * exp_e1(np.asarray(zeta_value, dtype=float) * noise_power)


def snr_cdf_tilde(z, q_k: float, beta_k: float, p_k: float, noise_power: float):
    """CDF of the SNR of one user at ``z``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be non-negative")
    return -np.expm1(-noise_power * z / (beta_k * p_k * q_k))


def gd_beamforming_scsi(ctx: ZetaContext, p, params: GdParams = GdParams(),
                        theta0=None) -> GdResult:
    """Armijo gradient descent on ``zeta`` over the phases, powers fixed."""
    p = np.asarray(p, dtype=float)
    theta = (np.zeros((len(ctx.W_inter) + 1, ctx.W1.shape[0])) if theta0 is None
             else np.array(theta0, dtype=float))
    z = zeta(ctx, theta, p)
    trace = [z]
    converged = False
    step = params.iota0
    it = 0
    for it in range(1, params.max_iter + 1):
        grad = grad_theta_lemma2(ctx, build_cascade(theta, ctx.W_inter), p)
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError(f"non-finite phase gradient at GD iteration {it}")
        if np.max(np.abs(grad)) <= params.grad_tol * z:
            converged = True
            break
        slope = float(np.sum(grad * grad))
        step = min(params.iota0, step / params.kappa) if params.warm_step and it > 1 else params.iota0
        while True:
            cand = theta - step * grad
            z_c = zeta(ctx, cand, p)
            if z_c <= z - params.nu * step * slope:
                break
            step *= params.kappa
            if step < params.min_step:
                cand, z_c = theta, z
                break
        theta = cand
        trace.append(z_c)
        done = abs(z - z_c) <= params.conv_tol * abs(z)
        z = z_c
        if done:
            converged = True
            break
    return GdResult(theta, trace, it, converged)


def alternating_optimize_scsi(channels: ChannelSet, power_budget: float, bits: int | None = 3,
                              params: GdParams = GdParams(), max_outer: int = 50,
                              conv_tol: float = 1e-4) -> OptReport:
    """Alternate the closed-form power split and phase descent from ``theta = 0``.

    The outer trace holds ``zeta`` after every power step. The reported
    ``zeta`` and rate bound use the phases quantized to ``bits``.
    """
    ctx = ZetaContext.from_channels(channels)
    theta = np.zeros((channels.num_layers, channels.num_elements))
    trace, inner = [], []
    converged = False
    it = 0
    for it in range(1, max_outer + 1):
        p = power_allocation_scsi(beam_gains(ctx, theta), ctx.betas, power_budget)
        z = zeta(ctx, theta, p)
        if trace and abs(trace[-1] - z) <= conv_tol * abs(trace[-1]):
            trace.append(z)
            converged = True
            break
        trace.append(z)
        res = gd_beamforming_scsi(ctx, p, params, theta0=theta)
        inner.append(res.trace)
        log.debug("outer %d: zeta=%.6g, GD %d iterations", it, z, res.iterations)
        theta = res.theta

    profile = PhaseProfile(theta.copy()) if bits is None else PhaseProfile(theta).quantize(bits)
    z_final = zeta(ctx, profile.theta, p)
    return OptReport(profile, theta, p, trace, inner, it, converged,
                     zeta=z_final, rate_bound=float(rate_upper_bound(z_final, ctx.noise_power)))

"""Max-min SINR under instantaneous CSI.

Power control for fixed phases is a GP solved by bisection on the common SINR
target; phases for fixed power come from a two-time-scale gradient
descent-ascent on ``f(lam, theta) = sum_k lam_k gamma_k`` with ``lam`` on the
probability simplex.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSet
from .metrics import LinkGains, RateReport, link_gains, rate_report, sinr
from .stack import (BeamformerCascade, PhaseProfile, build_cascade,
                    compose_beamformer)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GdaParams:
    kappa: float = 0.8  # backtracking shrink
    nu: float = 0.3  # Armijo slope
    tau: float = 10.0  # descent/ascent step ratio
    eps_proj: float = 1e-4
    max_iter: int = 500
    mu0: float = 1.0
    conv_tol: float = 1e-4
    min_step: float = 1e-30
    warm_step: bool = False  # True: start backtracking at min(mu0, mu_prev / kappa)

    def __post_init__(self):
        if not 0 < self.kappa < 1 or not 0 < self.nu < 1:
            raise ValueError("kappa and nu must lie in (0, 1)")
        if not self.tau > 0 or not self.eps_proj > 0 or not self.mu0 > 0:
            raise ValueError("tau, eps_proj and mu0 must be positive")


@dataclass(frozen=True)
class FairnessWeights:
    lam: np.ndarray

    def __post_init__(self):
        if np.any(self.lam < 0) or abs(self.lam.sum() - 1) > 1e-9:
            raise ValueError("weights must lie on the probability simplex")


@dataclass
class GdaResult:
    theta: np.ndarray
    trace: list  # f(lam, theta) after every iteration, starting point first
    records: list  # (iteration, f, mu, eps) per iteration
    lam: np.ndarray
    iterations: int
    converged: bool
    min_sinr: float


@dataclass
class OptReport:
    """Outcome of one alternating optimization run."""

    theta: PhaseProfile
    theta_continuous: np.ndarray
    p: np.ndarray
    trace: list  # outer objective per iteration
    inner_traces: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    report: RateReport | None = None
    report_continuous: RateReport | None = None
    zeta: float | None = None
    rate_bound: float | None = None
    records: list = field(default_factory=list)


# ---------------------------------------------------------------- power control

def _balance_powers(S: np.ndarray, noise: float, t: float):
    d = np.diag(S)
    F = S - np.diag(d)
    try:
        return np.linalg.solve(np.diag(d) - t * F, np.full(d.size, t * noise))
    except np.linalg.LinAlgError:
        return None


def gp_power_allocation(gains: LinkGains, power_budget: float, rtol: float = 1e-13):
    """Balanced max-min SINR powers for fixed link gains.

    Bisects on the common target ``t``; a target is feasible when the linear
    balance system ``s_kk p_k = t (sum_{j != k} s_kj p_j + sigma^2)`` has a
    non-negative solution within the budget. Returns ``(p, t)`` with
    ``sum(p) == power_budget``.
    """
    S = gains.S
    d = np.diag(S)
    if np.any(d <= 0):
        raise ValueError("every user needs a positive direct gain")
    noise = gains.noise

    def feasible(t):
        p = _balance_powers(S, noise, t)
        return p is not None and np.all(p >= 0) and p.sum() <= power_budget

    lo = 0.0
    hi = power_budget / (noise * np.sum(1 / d))  # interference-free bound
    if feasible(hi):
        lo = hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    p = _balance_powers(S, noise, lo) if lo > 0 else np.ones(d.size)
    p = power_budget * p / p.sum()
    return p, float(sinr(gains, p).min())


# ---------------------------------------------------------------- simplex step

def project_simplex(v, eps_proj: float = 1e-4, max_iter: int = 200) -> FairnessWeights:
    """Euclidean projection onto the probability simplex.

    Solves the KKT system by bisection on the equality multiplier ``eta``;
    ``g(eta) = sum_k max(2 v_k - eta, 0) - 2`` is non-increasing and
    changes sign on ``[2 (sum(v) - 1) / K, 2 max(v)]``.
    """
    v = np.asarray(v, dtype=float)
    k = v.size
    lo = 2 * (v.sum() - 1) / k
    hi = 2 * v.max()
    eta = 0.5 * (lo + hi)
    for _ in range(max_iter):
        eta = 0.5 * (lo + hi)
        g = np.maximum(2 * v - eta, 0).sum() - 2
        if abs(g) <= eps_proj or hi - lo <= 1e-16 * max(1.0, abs(eta)):
            break
        if g > 0:
            lo = eta
        else:
            hi = eta
    xi = np.maximum(eta - 2 * v, 0)
    y = v + (xi - eta) / 2
    # recompute eta exactly on the detected support so that sum(y) == 1
    support = y > 0
    for _ in range(k):
        if not support.any():
            support = v == v.max()
        eta = 2 * (v[support].sum() - 1) / support.sum()
        y = np.maximum(v - eta / 2, 0)
        if np.array_equal(y > 0, support):
            break
        support = y > 0
    return FairnessWeights(y)


# ---------------------------------------------------------------- gradients

def weighted_objective(lam, gains: LinkGains, p) -> float:
    return float(np.dot(lam, sinr(gains, p)))


def grad_lambda(gains: LinkGains, p) -> np.ndarray:
    """Partial derivatives of ``f`` w.r.t. the weights: the SINR vector."""
    return sinr(gains, p)


def grad_theta_lemma1(cascade: BeamformerCascade, H, W1, p, lam, noise: float) -> np.ndarray:
    """Analytic ``df/dtheta`` (L x M) of the weighted SINR sum."""
    p = np.asarray(p, dtype=float)
    lam = np.asarray(lam, dtype=float)
    C = H.conj().T @ cascade.G @ W1  # c[k, j] = h_k^H G w_j
    S = np.abs(C) ** 2
    signal = np.diag(S) * p
    interf = S @ p - signal
    omega = 1 / (interf + noise)
    gamma = signal * omega

    # coef[k, j] multiplies delta_{m,k,j}
    coef = -(lam * omega * gamma)[:, None] * p[None, :]
    np.fill_diagonal(coef, lam * omega * p)
    CW = coef * C

    n_layers, m = cascade.theta.shape
    grad = np.empty((n_layers, m))
    for idx in range(n_layers):
        U = cascade.A[idx] @ W1  # U[m, j] = (a_m)^H w_j
        V = cascade.B[idx].conj().T @ H  # V[m, k] = (b_m)^H h_k
        X = U.conj() @ CW.T  # X[m, k] = sum_j coef[k, j] c[k, j] conj(U[m, j])
        total = np.sum(V * X, axis=1)
        grad[idx] = 2 * np.imag(np.exp(-1j * cascade.theta[idx]) * total)
    return grad


# ---------------------------------------------------------------- GDA

def _gains(theta, channels: ChannelSet, H):
    G = compose_beamformer(theta, channels.W_inter)
    return link_gains(H, G, channels.W1, channels.noise_power)


def _sinr_batch(thetas, channels: ChannelSet, Hh, p):
    """SINR vectors for a stack of phase profiles ``(B, L, M)``; ``Hh = H^H``."""
    n_b, n_l, m = thetas.shape
    k = channels.W1.shape[1]
    phases = np.exp(1j * thetas).transpose(1, 2, 0)[..., None]  # (L, M, B, 1)
    X = phases[0] * channels.W1[:, None, :]  # (M, B, N), one GEMM per layer below
    for ell in range(1, n_l):
        X = phases[ell] * (channels.W_inter[ell - 1] @ X.reshape(m, -1)).reshape(m, n_b, k)
    C = (Hh @ X.reshape(m, -1)).reshape(-1, n_b, k).transpose(1, 0, 2)  # (B, K, N)
    S = (C.real**2 + C.imag**2) * p
    signal = np.diagonal(S, axis1=1, axis2=2)
    return signal / (S.sum(axis=2) - signal + channels.noise_power)


BACKTRACK_BLOCK = 32  # step sizes tried per batched evaluation


def _armijo_ascent(theta, grad, mu, f0, slope, lam, channels, Hh, p, params):
    """First step ``mu * kappa**i`` meeting the Armijo condition.

    Candidates are scored a block at a time; the accepted step is the one a
    one-by-one backtracking search would return. When the step falls below
    ``min_step`` the phases stay put and ``gamma`` is returned as ``None``.
    """
    while mu >= params.min_step:
        # running product, bit-identical to repeated ``mu *= kappa``
        mus = np.multiply.accumulate(np.r_[mu, np.full(BACKTRACK_BLOCK - 1, params.kappa)])
        mus = mus[mus >= params.min_step] if mus[-1] < params.min_step else mus
        gammas = _sinr_batch(theta + mus[:, None, None] * grad, channels, Hh, p)
        f = gammas @ lam
        ok = np.flatnonzero(f >= f0 + params.nu * mus * slope)
        if ok.size:
            i = int(ok[0])
            return theta + mus[i] * grad, gammas[i], float(f[i]), float(mus[i])
        mu = mus[-1] * params.kappa
    return theta, None, f0, mu


def gda_beamforming(channels: ChannelSet, H, p, params: GdaParams = GdaParams(),
                    theta0=None) -> GdaResult:
    """Two-time-scale projected GDA over ``(lam, theta)`` for fixed powers.

    Every iteration takes a projected descent step on ``lam`` with step
    ``eps``, then an Armijo-backtracked ascent step on ``theta`` starting from
    ``mu0``; afterwards ``eps = tau * mu``. The returned phases are the iterate
    with the largest minimum SINR seen, the start included.
    """
    W1, noise = channels.W1, channels.noise_power
    Hh = H.conj().T
    p = np.asarray(p, dtype=float)
    k = p.size
    theta = (np.zeros((channels.num_layers, channels.num_elements)) if theta0 is None
             else np.array(theta0, dtype=float))
    lam = np.full(k, 1 / k)
    eps = mu = params.mu0

    cascade = build_cascade(theta, channels.W_inter)
    gamma = sinr(link_gains(H, cascade.G, W1, noise), p)
    best_theta, best_min = theta.copy(), gamma.min()
    f_prev = float(lam @ gamma)
    trace, records = [f_prev], []
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        lam = project_simplex(lam - eps * gamma, params.eps_proj).lam
        grad = grad_theta_lemma1(cascade, H, W1, p, lam, noise)
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError(f"non-finite phase gradient at GDA iteration {it}")
        f0 = float(lam @ gamma)
        slope = float(np.sum(grad * grad))

        mu = min(params.mu0, mu / params.kappa) if params.warm_step and it > 1 else params.mu0
        theta, gamma_c, f_c, mu = _armijo_ascent(theta, grad, mu, f0, slope, lam, channels,
                                                  Hh, p, params)
        gamma = gamma if gamma_c is None else gamma_c
        eps = params.tau * mu
        cascade = build_cascade(theta, channels.W_inter)

        if gamma.min() > best_min:
            best_theta, best_min = theta.copy(), gamma.min()
        trace.append(f_c)
        records.append((it, f_c, mu, eps))
        if abs(f_c - f_prev) <= params.conv_tol * abs(f_prev):
            converged = True
            break
        f_prev = f_c
    return GdaResult(best_theta, trace, records, lam, it, converged, float(best_min))


# ---------------------------------------------------------------- alternation

def equal_power(num_users: int, power_budget: float) -> np.ndarray:
    return np.full(num_users, power_budget / num_users)


def alternating_optimize_icsi(channels: ChannelSet, power_budget: float, bits: int | None = 8,
                              params: GdaParams = GdaParams(), H=None, power: str = "gp",
                              max_outer: int = 50, conv_tol: float = 1e-4) -> OptReport:
    """Alternate power control and GDA beamforming from ``theta = 0``.

    ``power`` is ``"gp"`` (bisection max-min) or ``"equal"``. The outer trace
    holds the minimum SINR after each power step. Phases are quantized to
    ``bits`` at the end (``None`` keeps them continuous) and the final report
    is recomputed with the quantized phases and the last powers.
    """
    H = channels.H if H is None else H
    if H is None:
        raise ValueError("instantaneous CSI needs a sampled channel H")
    k = H.shape[1]
    theta = np.zeros((channels.num_layers, channels.num_elements))
    trace, inner, records = [], [], []
    converged = False
    p = equal_power(k, power_budget)
    it = 0
    for it in range(1, max_outer + 1):
        gains = _gains(theta, channels, H)
        if power == "gp":
            p, t = gp_power_allocation(gains, power_budget)
        elif power == "equal":
            t = float(sinr(gains, p).min())
        else:
            raise ValueError(f"unknown power scheme {power!r}")
        if trace and abs(t - trace[-1]) <= conv_tol * abs(trace[-1]):
            trace.append(t)
            converged = True
            break
        trace.append(t)
        res = gda_beamforming(channels, H, p, params, theta0=theta)
        inner.append(res.trace)
        records.extend((it,) + r for r in res.records)
        log.debug("outer %d: t=%.6g, GDA %d iterations", it, t, res.iterations)
        theta = res.theta

    report_c = rate_report(_gains(theta, channels, H), p)
    profile = PhaseProfile(theta.copy()) if bits is None else PhaseProfile(theta).quantize(bits)
    report = report_c if bits is None else rate_report(_gains(profile.theta, channels, H), p)
    return OptReport(profile, theta, p, trace, inner, it, converged, report, report_c,
                     records=records)


def write_trace_csv(report: OptReport, path):
    """Per-GDA-iteration records: outer iteration, inner iteration, f, mu, eps,
    and the outer objective ``t`` of that outer iteration."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["outer", "inner", "t", "f", "mu", "eps"])
        for outer, inner, f, mu, eps in report.records:
            w.writerow([outer, inner, repr(report.trace[outer - 1]), repr(f), repr(mu), repr(eps)])

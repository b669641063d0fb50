"""Independent reference computations used to check the optimizers.

Nothing here shares code paths with the analytic gradients, the bisection
projection or the balanced power control it is meant to check.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .channels import ChannelSet

SEARCH_CAP = 10**7


def finite_diff_gradient(f, x, h: float = 1e-6) -> np.ndarray:
    """Central differences of scalar ``f`` at every coordinate of ``x``."""
    if not 1e-8 <= h <= 1e-4:
        raise ValueError("step must lie in [1e-8, 1e-4]")
    x = np.array(x, dtype=float)
    grad = np.empty_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f(x)
        flat[i] = orig - h
        down = f(x)
        flat[i] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise FloatingPointError(f"non-finite evaluation at coordinate {i}")
        gflat[i] = (up - down) / (2 * h)
    return grad


def simplex_projection_sort(v) -> np.ndarray:
    """Sort-and-threshold projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - (css - 1) / idx > 0)[0][-1]
    shift = (css[rho] - 1) / (rho + 1)
    return np.maximum(v - shift, 0)


def direct_sinr(H, theta, p, channels: ChannelSet) -> np.ndarray:
    """Per-user SINR by explicit inner products over the naive matrix chain."""
    phases = np.exp(1j * np.asarray(theta))
    G = np.diag(phases[0])
    for ell in range(1, phases.shape[0]):
        G = np.diag(phases[ell]) @ channels.W_inter[ell - 1] @ G
    k = H.shape[1]
    gam = np.empty(k)
    for u in range(k):
        amp = [abs(H[:, u].conj() @ G @ channels.W1[:, j]) ** 2 for j in range(k)]
        interf = sum(amp[j] * p[j] for j in range(k) if j != u)
        gam[u] = amp[u] * p[u] / (interf + channels.noise_power)
    return gam


def mc_average_min_rate(theta, p, channels: ChannelSet, trials: int = 1000,
                        rng: np.random.Generator | None = None, fixed_H=None):
    """Monte Carlo ``E[log2(1 + min_k SINR_k)]`` over fading draws.

    Returns ``(mean, half_width)`` of a normal-approximation 95% interval.
    ``fixed_H`` replaces the sampler with a constant channel.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(0) if rng is None else rng
    p = np.asarray(p, dtype=float)
    phases = np.exp(1j * np.asarray(theta, dtype=float))
    GW = phases[0][:, None] * channels.W1
    for ell in range(1, phases.shape[0]):
        GW = phases[ell][:, None] * (channels.W_inter[ell - 1] @ GW)
    m, k = GW.shape[0], p.size

    if fixed_H is not None:
        Hs = np.broadcast_to(np.asarray(fixed_H), (trials, m, k))
    else:
        q = (rng.standard_normal((trials, m, k)) + 1j * rng.standard_normal((trials, m, k))) / math.sqrt(2)
        Hs = np.einsum("ab,tbk->tak", channels.R_sqrt, q) * np.sqrt(channels.betas)
    C = np.einsum("tmk,mj->tkj", Hs.conj(), GW)
    S = np.abs(C) ** 2 * p
    signal = np.einsum("tkk->tk", S)
    gamma = signal / (S.sum(axis=2) - signal + channels.noise_power)
    samples = np.log2(1 + gamma.min(axis=1))
    mean = float(samples.mean())
    half = 1.96 * float(samples.std(ddof=1)) / math.sqrt(trials) if trials > 1 else float("inf")
    return mean, half


def simplex_grid(k: int, steps: int) -> np.ndarray:
    """All compositions of ``steps`` into ``k`` positive parts, divided by ``steps``
    (lexicographic order)."""
    if k == 1:
        return np.ones((1, 1))
    rows = []
    for cut in itertools.combinations(range(1, steps), k - 1):
        edges = (0,) + cut + (steps,)
        rows.append([edges[i + 1] - edges[i] for i in range(k)])
    return np.array(rows, dtype=float) / steps


def exhaustive_search(channels: ChannelSet, power_budget: float, bits: int,
                      grid_step: float = 0.01, objective: str = "sinr", H=None):
    """Enumerate every phase pattern on the ``2**bits`` grid and every power split
    on the simplex at resolution ``grid_step * P_T``.

    ``objective`` is ``"sinr"`` (minimum SINR for ``H``) or ``"bound"`` (the
    statistical rate bound, computed here from the quadratic form with ``R``).
    Ties keep the lexicographically first ``(theta, p)``. Returns
    ``(p, theta, value)``.
    """
    n_layers, m = channels.num_layers, channels.num_elements
    k = channels.num_users
    steps = int(round(1 / grid_step))
    powers = simplex_grid(k, steps) * power_budget
    n_phase = 2 ** (bits * m * n_layers)
    if n_phase * powers.shape[0] > SEARCH_CAP:
        raise ValueError(f"search space {n_phase * powers.shape[0]} exceeds {SEARCH_CAP}")
    if objective == "sinr":
        H = channels.H if H is None else H
        if H is None:
            raise ValueError("min-SINR search needs a channel H")
    elif objective != "bound":
        raise ValueError(f"unknown objective {objective!r}")

    from scipy.special import exp1  # reference E1, independent of scsi.exp_e1

    levels = 2 * np.pi * np.arange(2**bits) / 2**bits
    best = (None, None, -np.inf)
    for combo in itertools.product(range(2**bits), repeat=m * n_layers):
        theta = levels[list(combo)].reshape(n_layers, m)
        phases = np.exp(1j * theta)
        G = np.diag(phases[0])
        for ell in range(1, n_layers):
            G = np.diag(phases[ell]) @ channels.W_inter[ell - 1] @ G
        GW = G @ channels.W1
        if objective == "sinr":
            amp = np.abs(H.conj().T @ GW) ** 2  # amp[u, j]
            sig = np.diag(amp)[None, :] * powers
            interf = powers @ amp.T - sig
            values = (sig / (interf + channels.noise_power)).min(axis=1)
        else:
            q = np.real(np.einsum("mk,mn,nk->k", GW.conj(), channels.R_ris, GW))
            z = np.sum(1 / (channels.betas * q * powers), axis=1) * channels.noise_power
            values = np.where(z < 700, np.exp(np.minimum(z, 700)) * exp1(z), 1 / z) / math.log(2)
        idx = int(np.argmax(values))
        if best[0] is None or values[idx] > best[2] * (1 + 1e-12):
            best = (powers[idx].copy(), theta, float(values[idx]))
    return best


def fixed_point_power_oracle(S, noise: float, power_budget: float, tol: float = 1e-14,
                             max_iter: int = 10_000):
    """Max-min SINR powers by normalized interference-function iteration.

    ``p <- P_T * I(p) / sum(I(p))`` with ``I_k(p) = (sum_{j != k} s_kj p_j + sigma^2) / s_kk``;
    returns ``(p, t)``.
    """
    S = np.asarray(S, dtype=float)
    k = S.shape[0]
    d = np.diag(S)
    p = np.full(k, power_budget / k)
    for _ in range(max_iter):
        need = (S @ p - d * p + noise) / d
        new = power_budget * need / need.sum()
        if np.max(np.abs(new - p)) <= tol * power_budget:
            p = new
            break
        p = new
    else:
        raise RuntimeError("fixed-point power iteration did not converge")
    need = (S @ p - d * p + noise) / d
    return p, float(np.min(p / need))

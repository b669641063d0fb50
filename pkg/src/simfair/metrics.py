"""SINR, rates and fairness indices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinkGains:
    """``S[k, j] = |h_k^H G w_j|^2`` together with the receiver noise power."""

    S: np.ndarray
    noise: float

    @property
    def num_users(self) -> int:
        return self.S.shape[0]


@dataclass(frozen=True)
class RateReport:
    sinr: np.ndarray
    rates: np.ndarray
    min_rate: float
    fairness: tuple


def link_gains(H, G, W1, noise: float) -> LinkGains:
    H, G, W1 = np.asarray(H), np.asarray(G), np.asarray(W1)
    m = G.shape[0]
    if G.shape != (m, m) or H.shape[0] != m or W1.shape[0] != m:
        raise ValueError(f"inconsistent shapes H{H.shape} G{G.shape} W1{W1.shape}")
    if H.shape[1] != W1.shape[1]:
        raise ValueError("one BS antenna per user is assumed (N must equal K)")
    if not noise > 0:
        raise ValueError("noise power must be positive")
    C = H.conj().T @ G @ W1
    return LinkGains(np.abs(C) ** 2, float(noise))


def sinr(gains: LinkGains, p) -> np.ndarray:
    """``gamma_k = s_kk p_k / (sum_{j != k} s_kj p_j + sigma^2)``."""
    p = np.asarray(p, dtype=float)
    S = gains.S
    signal = np.diag(S) * p
    interference = S @ p - signal
    return signal / (interference + gains.noise)


def rates_from_sinr(gamma) -> np.ndarray:
    return np.log2(1 + np.asarray(gamma, dtype=float))


def fairness_indices(rates) -> tuple[float, float, float]:
    """``(min/max, Jain, 1 - Gini)``; each equals 1 for perfectly equal rates."""
    r = np.asarray(rates, dtype=float)
    if np.any(r < 0):
        raise ValueError("rates must be non-negative")
    if not np.any(r > 0):
        raise ValueError("fairness is undefined for all-zero rates")
    k = r.size
    minmax = r.min() / r.max()
    jain = r.sum() ** 2 / (k * np.sum(r**2))
    gini = np.abs(r[:, None] - r[None, :]).sum() / (2 * k**2 * r.mean())
    return float(minmax), float(jain), float(1 - gini)


def rate_report(gains: LinkGains, p) -> RateReport:
    gamma = sinr(gains, p)
    rates = rates_from_sinr(gamma)
    fair = fairness_indices(rates) if np.any(rates > 0) else (0.0, 0.0, 0.0)
    return RateReport(gamma, rates, float(rates.min()), fair)

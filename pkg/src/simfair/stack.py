"""Phase profiles, the wave-based beamformer cascade and phase quantization.

Layers are 1-based in the public API. ``W_inter[i]`` holds ``W^(i+2)``, the
matrix from layer ``i+1`` to layer ``i+2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

TWO_PI = 2 * np.pi


def normalize_phase(theta):
    """Wrap angles into ``[0, 2 pi)``."""
    out = np.mod(theta, TWO_PI)
    # mod can return 2*pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)


def quantize_phase(theta, bits: int):
    """Round to the nearest of the ``2**bits`` uniform levels, wrapped modulo 2 pi."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    step = TWO_PI / 2**bits
    levels = np.floor(np.asarray(theta, dtype=float) / step + 0.5)
    return normalize_phase(step * np.mod(levels, 2**bits))


@dataclass
class PhaseProfile:
    theta: np.ndarray  # (L, M)
    quantized: bool = False

    @classmethod
    def zeros(cls, num_layers: int, num_elements: int) -> "PhaseProfile":
        return cls(np.zeros((num_layers, num_elements)))

    def normalized(self) -> np.ndarray:
        return normalize_phase(self.theta)

    def quantize(self, bits: int) -> "PhaseProfile":
        return PhaseProfile(quantize_phase(self.theta, bits), quantized=True)

    def save_text(self, path):
        np.savetxt(Path(path), self.normalized(), fmt="%.17g")

    @classmethod
    def load_text(cls, path, quantized: bool = False) -> "PhaseProfile":
        return cls(np.atleast_2d(np.loadtxt(Path(path), dtype=float)), quantized)


def _check(theta, W_inter):
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if theta.shape[0] != len(W_inter) + 1:
        raise ValueError(f"{theta.shape[0]} phase rows for {len(W_inter) + 1} layers")
    m = theta.shape[1]
    for w in W_inter:
        if w.shape != (m, m):
            raise ValueError(f"inter-layer matrix of shape {w.shape}, expected {(m, m)}")
    return theta


def compose_beamformer(theta, W_inter) -> np.ndarray:
    """``G = Theta_L W^(L) ... Theta_2 W^(2) Theta_1``."""
    theta = _check(theta, W_inter)
    phases = np.exp(1j * theta)
    G = np.diag(phases[0])
    for ell in range(1, theta.shape[0]):
        G = phases[ell][:, None] * (W_inter[ell - 1] @ G)
    return G


def beamformed_columns(theta, W_inter, W1) -> np.ndarray:
    """``G @ W1`` without forming ``G``; cheaper when ``W1`` has few columns."""
    phases = np.exp(1j * np.asarray(theta, dtype=float))
    X = phases[0][:, None] * W1
    for ell in range(1, phases.shape[0]):
        X = phases[ell][:, None] * (W_inter[ell - 1] @ X)
    return X


@dataclass(frozen=True)
class BeamformerCascade:
    """``G`` with prefix products ``A`` and suffix products ``B`` for every layer,
    so that ``B[l] @ diag(exp(j theta_l)) @ A[l] == G`` (0-based list index)."""

    theta: np.ndarray
    G: np.ndarray
    A: list
    B: list

    def reconstruct(self, layer: int) -> np.ndarray:
        idx = layer - 1
        return (self.B[idx] * np.exp(1j * self.theta[idx])) @ self.A[idx]


def build_cascade(theta, W_inter) -> BeamformerCascade:
    """All prefix/suffix products in O(L M^3)."""
    theta = _check(theta, W_inter)
    n_layers, m = theta.shape
    phases = np.exp(1j * theta)
    eye = np.eye(m, dtype=complex)

    A = [eye]
    for ell in range(1, n_layers):
        A.append(W_inter[ell - 1] @ (phases[ell - 1][:, None] * A[-1]))
    B = [eye]
    for ell in range(n_layers - 2, -1, -1):
        B.append((B[-1] * phases[ell + 1]) @ W_inter[ell])
    B.reverse()
    G = phases[-1][:, None] * A[-1]
    return BeamformerCascade(theta, G, A, B)


def partial_products(theta, W_inter, layer: int):
    """``(A_layer, B_layer)`` for a 1-based layer index."""
    theta = _check(theta, W_inter)
    if not 1 <= layer <= theta.shape[0]:
        raise ValueError(f"layer {layer} out of range")
    cas = build_cascade(theta, W_inter)
    return cas.A[layer - 1], cas.B[layer - 1]

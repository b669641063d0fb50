"""Deterministic SIM propagation matrices, RIS correlation and UE fading.

The diffraction coefficient between two elements separated by ``d`` is

    w = (d_x d_y s / d^2) (1 / (2 pi d) - j / lambda) exp(j 2 pi d / lambda)

with ``s`` the axial spacing of the two planes involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import Layout, ScenarioConfig, build_layout, pairwise_distances, ue_sim_distances

EIG_CLAMP = 1e-12


def rs_coefficient(dist, wavelength, dx, dy, spacing):
    """Rayleigh-Sommerfeld coupling coefficient for distance(s) ``dist``."""
    dist = np.asarray(dist, dtype=float)
    amp = dx * dy * spacing / dist**2
    return amp * (1 / (2 * np.pi * dist) - 1j / wavelength) * np.exp(2j * np.pi * dist / wavelength)


def interlayer_matrix(layout: Layout, config: ScenarioConfig, layer: int) -> np.ndarray:
    """``W^(layer)``: layer-1 elements (columns) to ``layer`` elements (rows), 1-based."""
    n_layers = layout.layer_positions.shape[0]
    if not 2 <= layer <= n_layers:
        raise ValueError(f"layer must lie in [2, {n_layers}], got {layer}")
    d = pairwise_distances(layout.layer_positions[layer - 1], layout.layer_positions[layer - 2])
    return rs_coefficient(d, config.wavelength, config.element_size_x,
                          config.element_size_y, layout.layer_spacing)


def bs_to_layer1_matrix(layout: Layout, config: ScenarioConfig) -> np.ndarray:
    """``W^(1)`` (M x N), with the BS antenna gain applied as an amplitude factor."""
    d = pairwise_distances(layout.layer_positions[0], layout.bs_positions)
    w = rs_coefficient(d, config.wavelength, config.element_size_x,
                       config.element_size_y, layout.bs_to_layer1)
    return np.sqrt(config.bs_antenna_gain) * w


def ris_correlation(layout: Layout, wavelength: float) -> np.ndarray:
    """Spatial correlation of one layer, ``sinc(2 d / lambda)`` over in-plane distances."""
    xy = layout.layer_positions[0, :, :2]
    d = pairwise_distances(xy, xy)
    return np.sinc(2 * d / wavelength).astype(complex)


def path_loss(config: ScenarioConfig, k: int) -> float:
    """Large-scale gain of UE ``k`` (1-based)."""
    if not 1 <= k <= config.num_users:
        raise ValueError(f"user index {k} out of range")
    d = ue_sim_distances(config)[k - 1]
    if d < config.ref_distance:
        raise ValueError(f"UE {k} is closer than the reference distance")
    return config.pathloss_ref * (d / config.ref_distance) ** (-config.pathloss_exponent)


def path_losses(config: ScenarioConfig) -> np.ndarray:
    return np.array([path_loss(config, k) for k in range(1, config.num_users + 1)])


def psd_sqrt(R: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Hermitian square root ``S`` with ``S S^H = R``; negative eigenvalues clamp to 0."""
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError("square matrix expected")
    scale = max(1.0, np.abs(R).max())
    if np.abs(R - R.conj().T).max() > tol * scale:
        raise ValueError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh((R + R.conj().T) / 2)
    vals = np.where(vals < EIG_CLAMP, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def sample_ue_channels(R_sqrt: np.ndarray, betas, rng: np.random.Generator) -> np.ndarray:
    """Draw ``H`` (M x K); column k is ``sqrt(beta_k) R^{1/2} q_k``, ``q_k ~ CN(0, I)``."""
    betas = np.asarray(betas, dtype=float)
    m, k = R_sqrt.shape[0], betas.size
    q = (rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))) / np.sqrt(2)
    return (R_sqrt @ q) * np.sqrt(betas)


@dataclass
class ChannelSet:
    W1: np.ndarray
    W_inter: list
    R_ris: np.ndarray
    R_sqrt: np.ndarray
    betas: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    noise_power: float
    H: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def num_elements(self) -> int:
        return self.W1.shape[0]

    @property
    def num_layers(self) -> int:
        return len(self.W_inter) + 1

    @property
    def num_users(self) -> int:
        return self.betas.size

    def with_H(self, H) -> "ChannelSet":
        return replace(self, H=H)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return sample_ue_channels(self.R_sqrt, self.betas, rng)

    def save(self, path):
        """Write an ``.npz`` archive; complex entries are stored as little-endian
        pairs of float64 in row-major order."""
        arrays = {
            "W1": self.W1, "R_ris": self.R_ris, "R_sqrt": self.R_sqrt,
            "betas": self.betas, "eigvals": self.eigvals, "eigvecs": self.eigvecs,
            "noise_power": np.array(self.noise_power),
            "W_inter": np.array(self.W_inter).reshape(-1, *self.R_ris.shape),
        }
        if self.H is not None:
            arrays["H"] = self.H
        arrays.update({f"extra_{k}": np.asarray(v) for k, v in self.extra.items()})
        out = {}
        for key, arr in arrays.items():
            arr = np.asarray(arr, order="C")
            out[key] = arr.astype("<c16" if np.iscomplexobj(arr) else "<f8")
        np.savez(Path(path), **out)

    @classmethod
    def load(cls, path) -> "ChannelSet":
        with np.load(Path(path)) as data:
            W_inter = [np.array(w) for w in data["W_inter"]]
            extra = {k[len("extra_"):]: np.array(data[k]) for k in data.files if k.startswith("extra_")}
            return cls(
                W1=np.array(data["W1"]), W_inter=W_inter, R_ris=np.array(data["R_ris"]),
                R_sqrt=np.array(data["R_sqrt"]), betas=np.array(data["betas"]),
                eigvals=np.array(data["eigvals"]), eigvecs=np.array(data["eigvecs"]),
                noise_power=float(data["noise_power"]),
                H=np.array(data["H"]) if "H" in data.files else None, extra=extra,
            )


def build_channels(config: ScenarioConfig, rng: np.random.Generator | None = None) -> ChannelSet:
    """Assemble every deterministic matrix of ``config``; draws ``H`` when ``rng`` is given."""
    layout = build_layout(config)
    W1 = bs_to_layer1_matrix(layout, config)
    W_inter = [interlayer_matrix(layout, config, ell) for ell in range(2, config.num_layers + 1)]
    R = ris_correlation(layout, config.wavelength)
    vals, vecs = np.linalg.eigh(R)
    vals = np.where(vals < EIG_CLAMP, 0.0, vals)
    R_sqrt = (vecs * np.sqrt(vals)) @ vecs.conj().T
    betas = path_losses(config)
    chans = ChannelSet(W1, W_inter, R, R_sqrt, betas, vals, vecs, config.noise_power)
    if rng is not None:
        chans.H = chans.sample(rng)
    return chans

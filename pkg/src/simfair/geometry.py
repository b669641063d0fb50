"""Scenario constants and 3-D placement of BS antennas, SIM elements and UEs."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical constants of one SIM-assisted downlink scenario.

    All quantities are SI (Hz, meters, watts, linear gains). Lengths left at
    ``None`` are filled from the wavelength: element size ``lambda/2`` and
    SIM thickness ``5*lambda``.
    """

    carrier_frequency: float = 28e9
    num_bs_antennas: int = 4
    num_users: int = 4
    elements_per_layer: int = 36
    num_layers: int = 4
    element_size_x: float | None = None
    element_size_y: float | None = None
    sim_thickness: float | None = None
    bs_ue_distance: float = 10.0
    ue_spacing: float = 10.0
    pathloss_ref: float = 1e-3  # -30 dB
    pathloss_exponent: float = 3.5
    ref_distance: float = 1.0
    noise_power: float = 1e-12  # -90 dBm
    power_budget: float = 1e-2  # 10 dBm
    bs_antenna_gain: float = 10 ** 0.5  # 5 dBi, linear power gain
    quant_bits: int = 8
    rng_seed: int = 0

    def __post_init__(self):
        lam = self.wavelength
        if self.element_size_x is None:
            object.__setattr__(self, "element_size_x", lam / 2)
        if self.element_size_y is None:
            object.__setattr__(self, "element_size_y", lam / 2)
        if self.sim_thickness is None:
            object.__setattr__(self, "sim_thickness", 5 * lam)
        self.validate()

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def layer_spacing(self) -> float:
        return self.sim_thickness / self.num_layers

    def validate(self):
        if not self.carrier_frequency > 0:
            raise ValueError("carrier_frequency must be positive")
        for name in ("num_bs_antennas", "num_users", "elements_per_layer", "num_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.num_bs_antennas != self.num_users:
            raise ValueError("one BS antenna per user is assumed (N must equal K)")
        for name in ("element_size_x", "element_size_y", "sim_thickness",
                     "bs_ue_distance", "ref_distance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.ue_spacing < 0:
            raise ValueError("ue_spacing must be non-negative")
        if not (self.power_budget > 0 and self.noise_power > 0):
            raise ValueError("power_budget and noise_power must be positive")
        if self.pathloss_ref <= 0 or self.bs_antenna_gain <= 0:
            raise ValueError("gains must be positive")
        if self.quant_bits < 1:
            raise ValueError("quant_bits must be >= 1")

    def with_updates(self, **changes) -> "ScenarioConfig":
        """Copy with ``changes`` applied; lengths derived from lambda are re-derived
        unless given explicitly."""
        base = self.to_dict()
        if "carrier_frequency" in changes:
            for key in ("element_size_x", "element_size_y", "sim_thickness"):
                base[key] = None
        base.update(changes)
        return ScenarioConfig(**base)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        """Load from a JSON file of key/value pairs (a ``scenario`` sub-table is
        also accepted). Missing keys keep their defaults."""
        data = json.loads(Path(path).read_text())
        if "scenario" in data:
            data = data["scenario"]
        return cls.from_dict(data)


@dataclass(frozen=True)
class Layout:
    bs_positions: np.ndarray  # (N, 3)
    layer_positions: np.ndarray  # (L, M, 3), layer 1 first
    ue_positions: np.ndarray  # (K, 3)
    layer_spacing: float
    bs_to_layer1: float


def grid_shape(m: int) -> tuple[int, int]:
    """Rows x columns of the element grid; square when ``m`` is a perfect square,
    otherwise the most square factorization."""
    if m < 1:
        raise ValueError("need at least one element per layer")
    rows = math.isqrt(m)
    while m % rows:
        rows -= 1
    return rows, m // rows


def _planar_grid(m: int, dx: float, dy: float) -> np.ndarray:
    rows, cols = grid_shape(m)
    x = (np.arange(cols) - (cols - 1) / 2) * dx
    y = (np.arange(rows) - (rows - 1) / 2) * dy
    yy, xx = np.meshgrid(y, x, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def build_layout(config: ScenarioConfig) -> Layout:
    """Place every node of the scenario.

    The BS array lies on the x-axis with half-wavelength pitch, centred at the
    origin. Layer ``l`` (1-based) sits at ``z = l * T_SIM / L`` and carries a
    centred grid with pitch ``(d_x, d_y)``. UE ``k`` sits at
    ``(0, d_UE * (k - 1), d_BS)``.
    """
    config.validate()
    lam = config.wavelength
    n, k = config.num_bs_antennas, config.num_users
    m, n_layers = config.elements_per_layer, config.num_layers
    spacing = config.layer_spacing

    bs = np.zeros((n, 3))
    bs[:, 0] = (np.arange(n) - (n - 1) / 2) * lam / 2

    xy = _planar_grid(m, config.element_size_x, config.element_size_y)
    layers = np.zeros((n_layers, m, 3))
    for idx in range(n_layers):
        layers[idx, :, :2] = xy
        layers[idx, :, 2] = (idx + 1) * spacing

    ues = np.zeros((k, 3))
    ues[:, 1] = config.ue_spacing * np.arange(k)
    ues[:, 2] = config.bs_ue_distance

    return Layout(bs, layers, ues, layer_spacing=spacing, bs_to_layer1=spacing)


def pairwise_distances(a, b) -> np.ndarray:
    """Euclidean distance matrix, entry ``(i, j) = |a_i - b_j|``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def ue_sim_distances(config: ScenarioConfig) -> np.ndarray:
    """Distance from the SIM (last-layer centre) to each UE."""
    k = np.arange(config.num_users)
    return np.hypot(config.bs_ue_distance - config.sim_thickness, config.ue_spacing * k)


__all__ = [
    "SPEED_OF_LIGHT", "ScenarioConfig", "Layout", "build_layout",
    "pairwise_distances", "ue_sim_distances", "grid_shape",
]

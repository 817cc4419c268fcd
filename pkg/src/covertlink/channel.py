"""UPA steering vectors, Rician fading, combiners and CSI-error model.

Steering vectors follow the Kronecker convention
``index = i_x * m_z + i_z`` (numpy ``kron`` of the x-axis signature with
the z-axis signature).  The two array types use different phase-argument
pairs on purpose: the satellite z-argument is cos(theta) sin(phi) while
the Earth-station z-argument is sin(theta) sin(phi), exactly as the
underlying model states them per array.

Random sampling takes explicit counter-based generators so trials can be
partitioned across workers without correlation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ArrayConfig:
    m_x: int
    m_z: int
    spacing_over_lambda: float = 0.5

    def __post_init__(self):
        if self.m_x < 1 or self.m_z < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.spacing_over_lambda <= 0.0:
            raise ValueError("element spacing must be positive")

    @property
    def size(self) -> int:
        return self.m_x * self.m_z


@dataclass(frozen=True)
class RicianModel:
    """Rician fading description: K factor plus the deterministic LoS matrix."""

    k_factor: float
    los_matrix: np.ndarray

    def __post_init__(self):
        if self.k_factor < 0.0:
            raise ValueError("Rician K factor must be nonnegative")
        mags = np.abs(np.asarray(self.los_matrix))
        if np.any(np.abs(mags - 1.0) > 1e-10):
            raise ValueError("LoS matrix entries must have unit modulus")


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    draw_id: str = ""


@dataclass(frozen=True)
class CsiErrorBound:
    """Frobenius-ball radii of the channel estimation errors."""

    delta_b: float = 0.0
    delta_w: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.delta_b < 0.0 or any(d < 0.0 for d in self.delta_w):
            raise ValueError("error radii must be nonnegative")


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Independent counter-based generator for a (seed, path...) key."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def spatial_signature(n: int, x: float, spacing_over_lambda: float) -> np.ndarray:
    """Length-n linear-array signature [1, e^{-j 2 pi s x}, ..., e^{-j 2 pi (n-1) s x}]."""
    if abs(x) > 1.0:
        raise ValueError(f"direction cosine out of range: {x}")
    k = np.arange(n)
    return np.exp(-2j * np.pi * spacing_over_lambda * k * x)


def satellite_steering(cfg: ArrayConfig, theta: float, phi: float) -> np.ndarray:
    """Satellite UPA steering vector, arguments sin(theta) and cos(theta) sin(phi)."""
    ax = spatial_signature(cfg.m_x, np.sin(theta), cfg.spacing_over_lambda)
    az = spatial_signature(cfg.m_z, np.cos(theta) * np.sin(phi), cfg.spacing_over_lambda)
    return np.kron(ax, az)


def earth_station_steering(cfg: ArrayConfig, theta: float, phi: float) -> np.ndarray:
    """Earth-station UPA steering vector, arguments sin(theta) and sin(theta) sin(phi)."""
    ax = spatial_signature(cfg.m_x, np.sin(theta), cfg.spacing_over_lambda)
    az = spatial_signature(cfg.m_z, np.sin(theta) * np.sin(phi), cfg.spacing_over_lambda)
    return np.kron(ax, az)


def los_matrix(g_rx: np.ndarray, d_tx: np.ndarray) -> np.ndarray:
    """Rank-one LoS channel g d^H from receive/transmit steering vectors."""
    return np.outer(g_rx, d_tx.conj())


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly symmetric complex Gaussian, zero mean, unit variance per entry."""
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) * np.sqrt(0.5)


def sample_channel(model: RicianModel, rng: np.random.Generator, draw_id: str = "") -> ChannelRealization:
    """One Rician draw H = sqrt(K/(K+1)) Hbar + sqrt(1/(K+1)) Htilde."""
    k = model.k_factor
    hbar = np.asarray(model.los_matrix)
    htilde = complex_normal(rng, hbar.shape)
    h = np.sqrt(k / (k + 1.0)) * hbar + np.sqrt(1.0 / (k + 1.0)) * htilde
    return ChannelRealization(h=h, draw_id=draw_id)


def los_egc_vector(g_rx: np.ndarray) -> np.ndarray:
    """LoS equal-gain combiner g / sqrt(M); requires unit-modulus entries."""
    m = g_rx.shape[0]
    if abs(np.linalg.norm(g_rx) ** 2 - m) > 1e-6 * m:
        raise ValueError("combiner input must be a steering vector with |g|^2 = M")
    return g_rx / np.sqrt(m)


def perturb_channel(
    h_true: np.ndarray,
    bound: float,
    rng: np.random.Generator | None = None,
    boundary: bool = False,
) -> np.ndarray:
    """Channel plus a random error inside (or on) the Frobenius ball of radius ``bound``.

    With ``boundary=True`` the error norm equals ``bound`` exactly, which
    is the worst-case sample used by the robustness audits.
    """
    if bound < 0.0:
        raise ValueError("error bound must be nonnegative")
    if bound == 0.0:
        return np.array(h_true, copy=True)
    if rng is None:
        rng = np.random.default_rng()
    delta = complex_normal(rng, np.asarray(h_true).shape)
    norm = np.linalg.norm(delta)
    if norm == 0.0:
        return np.array(h_true, copy=True)
    if boundary:
        radius = bound
    else:
        # uniform in the ball: radius^d uniform for d complex dimensions
        d = 2 * np.asarray(h_true).size
        radius = bound * rng.uniform() ** (1.0 / d)
    return h_true + delta * (radius / norm)


def dump_channel(path, realization: ChannelRealization, m_sat: int, m_a: int, k_factor: float, seed: int) -> None:
    """Write a realization as CSV: one header line, then interleaved re/im rows."""
    h = np.asarray(realization.h)
    with open(path, "w") as fh:
        fh.write(f"# m_sat={m_sat} m_a={m_a} k={k_factor} seed={seed} draw_id={realization.draw_id}\n")
        for row in h:
            fh.write(",".join(f"{z.real:.17g},{z.imag:.17g}" for z in row) + "\n")


def load_channel(path) -> tuple[ChannelRealization, dict]:
    """Read a realization written by :func:`dump_channel`."""
    with open(path) as fh:
        header = fh.readline().strip().lstrip("# ")
        meta = {}
        for item in header.split():
            key, val = item.split("=", 1)
            meta[key] = val
        rows = []
        for line in fh:
            vals = [float(v) for v in line.strip().split(",")]
            rows.append([complex(re, im) for re, im in zip(vals[::2], vals[1::2])])
    h = np.array(rows, dtype=complex)
    if h.shape != (int(meta["m_sat"]), int(meta["m_a"])):
        raise ValueError(f"shape mismatch: header says {meta}, data is {h.shape}")
    return ChannelRealization(h=h, draw_id=meta.get("draw_id", "")), meta

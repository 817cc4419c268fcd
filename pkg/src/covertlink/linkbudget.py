"""Deterministic per-link gains: antenna patterns and free-space loss.

Both antenna patterns are piecewise in the off-boresight angle.  Each
boundary angle belongs to the branch listed first, i.e. intervals are
closed on the left as printed in the underlying ITU-style masks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class EarthStationPattern:
    """Earth-station gain mask: flat peak, 25 log10 roll-off, -10 dBi floor."""

    g_max_dbi: float
    theta0_deg: float  # minimum off-axis angle

    def __post_init__(self):
        if not 0.0 < self.theta0_deg < 48.0:
            raise ValueError("theta0 must lie in (0, 48) degrees")


@dataclass(frozen=True)
class SatellitePattern:
    """Satellite gain mask: quadratic main lobe, side-lobe shelf, roll-off, back lobe."""

    g_max_dbi: float
    phi_3db_deg: float  # one-half the 3 dB beamwidth
    alpha: float
    beta: float
    l_s_db: float  # near-in side-lobe level, negative
    l_f_dbi: float  # far-out side-lobe level

    def __post_init__(self):
        if self.phi_3db_deg <= 0.0:
            raise ValueError("phi_3db must be positive")
        if not 0.0 < self.alpha <= self.beta:
            raise ValueError("need 0 < alpha <= beta")
        if self.l_s_db >= 0.0:
            raise ValueError("near-in side-lobe level must be negative")


@dataclass(frozen=True)
class LinkBudget:
    """Deterministic link quantities in linear units."""

    f_path: float  # free-space loss, power ratio
    g_tx: float  # transmitter gain toward receiver, linear
    g_rx: float  # receiver gain toward transmitter, linear
    distance: float  # meters

    def __post_init__(self):
        if min(self.f_path, self.g_tx, self.g_rx, self.distance) <= 0.0:
            raise ValueError("link budget entries must be positive")
        if self.f_path > 1.0:
            raise ValueError("free-space loss cannot exceed unity")


def earth_station_gain_dbi(pattern: EarthStationPattern, theta_deg: float) -> float:
    """Earth-station gain (dBi) at off-boresight angle ``theta_deg``."""
    if not 0.0 <= theta_deg <= 180.0:
        raise ValueError(f"angle out of range: {theta_deg}")
    if theta_deg < pattern.theta0_deg:
        return pattern.g_max_dbi
    if theta_deg <= 48.0:
        return pattern.g_max_dbi - 25.0 * math.log10(theta_deg)
    return -10.0


def satellite_gain_dbi(pattern: SatellitePattern, phi_deg: float) -> float:
    """Satellite receive gain (dBi) at off-boresight angle ``phi_deg``."""
    if not 0.0 <= phi_deg <= 180.0:
        raise ValueError(f"angle out of range: {phi_deg}")
    ratio = phi_deg / pattern.phi_3db_deg
    if ratio < pattern.alpha:
        return pattern.g_max_dbi - 3.0 * ratio * ratio
    if ratio <= pattern.beta:
        return pattern.g_max_dbi + pattern.l_s_db
    if phi_deg <= 90.0:
        return pattern.g_max_dbi + pattern.l_s_db - 25.0 * math.log10(ratio)
    return pattern.l_f_dbi


def free_space_loss(distance: float, wavelength: float) -> float:
    """Free-space power loss (lambda / 4 pi d)^2."""
    if distance <= 0.0 or wavelength <= 0.0:
        raise ValueError("distance and wavelength must be positive")
    return (wavelength / (4.0 * math.pi * distance)) ** 2


def wavelength_from_frequency(freq_hz: float) -> float:
    if freq_hz <= 0.0:
        raise ValueError("frequency must be positive")
    return SPEED_OF_LIGHT / freq_hz


def dbi_to_linear(x_dbi: float) -> float:
    return 10.0 ** (x_dbi / 10.0)


def linear_to_dbi(x: float) -> float:
    if x <= 0.0:
        raise ValueError("linear gain must be positive")
    return 10.0 * math.log10(x)


def build_link_budget(
    es_pattern: EarthStationPattern,
    sat_pattern: SatellitePattern,
    tx_position,
    tx_boresight,
    rx_position,
    rx_boresight,
    wavelength: float,
) -> LinkBudget:
    """Compose gains and path loss for an Earth-station -> satellite link."""
    import numpy as np

    from .geometry import off_boresight_angle

    tx_position = np.asarray(tx_position, dtype=float)
    rx_position = np.asarray(rx_position, dtype=float)
    u_up = rx_position - tx_position
    distance = float(np.linalg.norm(u_up))
    theta = off_boresight_angle(tx_boresight, u_up)
    phi = off_boresight_angle(rx_boresight, -u_up)
    return LinkBudget(
        f_path=free_space_loss(distance, wavelength),
        g_tx=dbi_to_linear(earth_station_gain_dbi(es_pattern, theta)),
        g_rx=dbi_to_linear(satellite_gain_dbi(sat_pattern, phi)),
        distance=distance,
    )

"""Earth-centered geometry for the uplink scenario.

Positions live in a Cartesian frame with the Earth's center at the
origin and the equator in the x-y plane.  The Earth station sits on a
sphere of radius ``d_a``; the GEO satellites share the equatorial circle
of radius ``d_sat = d_a + h``.  Each node carries a boresight unit
vector; a deterministic local array frame is attached to it so steering
angles are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Z_AXIS = np.array([0.0, 0.0, 1.0])
X_AXIS = np.array([1.0, 0.0, 0.0])

_PARALLEL_TOL = 1e-8


@dataclass(frozen=True)
class NodeGeometry:
    """Position (meters, Earth-centered) and boresight unit vector."""

    position: np.ndarray
    boresight: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boresight, dtype=float)
        if abs(np.linalg.norm(b) - 1.0) > 1e-12:
            raise ValueError("boresight must be unit norm")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "boresight", b)


@dataclass(frozen=True)
class UpaFrame:
    """Right-handed orthonormal array frame; axis_y is the boresight.

    Array elements lie in the local x-z plane.
    """

    origin: np.ndarray
    axis_x: np.ndarray
    axis_y: np.ndarray
    axis_z: np.ndarray


def earth_station_position(latitude_deg: float, longitude_deg: float, d_a: float) -> np.ndarray:
    """Earth-station position on the sphere of radius ``d_a`` (meters)."""
    if not -90.0 <= latitude_deg <= 90.0:
        raise ValueError(f"latitude out of range: {latitude_deg}")
    if not -180.0 <= longitude_deg <= 180.0:
        raise ValueError(f"longitude out of range: {longitude_deg}")
    if d_a <= 0.0:
        raise ValueError("d_a must be positive")
    lat = math.radians(latitude_deg)
    lon = math.radians(longitude_deg)
    return d_a * np.array(
        [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
    )


def geo_satellite_position(longitude_deg: float, d_sat: float) -> np.ndarray:
    """Equatorial GEO position at the given longitude, radius ``d_sat`` (meters)."""
    if d_sat <= 0.0:
        raise ValueError("d_sat must be positive")
    lon = math.radians(longitude_deg)
    return d_sat * np.array([math.cos(lon), math.sin(lon), 0.0])


def off_boresight_angle(boresight: np.ndarray, target_dir: np.ndarray) -> float:
    """Angle in degrees between a boresight and a target direction, in [0, 180]."""
    b = np.asarray(boresight, dtype=float)
    u = np.asarray(target_dir, dtype=float)
    if np.linalg.norm(b) == 0.0 or np.linalg.norm(u) == 0.0:
        raise ValueError("zero vector has no direction")
    # atan2 form is well conditioned near 0 and 180 degrees, unlike acos
    return math.degrees(math.atan2(np.linalg.norm(np.cross(b, u)), float(np.dot(b, u))))


def _perpendicular_seed(u: np.ndarray) -> np.ndarray:
    """Unit vector perpendicular to u, built from a fixed reference axis."""
    e = Z_AXIS
    v = e - np.dot(e, u) * u
    if np.linalg.norm(v) < _PARALLEL_TOL:
        e = X_AXIS
        v = e - np.dot(e, u) * u
    return v / np.linalg.norm(v)


def orientation_candidates(u_ab: np.ndarray, cone_angle_deg: float, n_grid: int) -> list[np.ndarray]:
    """Boresight candidates on the cone at ``cone_angle_deg`` around ``u_ab``.

    The candidates are Rodrigues rotations of a seed cone vector about
    the axis ``u_ab``, swept uniformly over [0, 2*pi).  Every candidate
    keeps the same off-boresight angle to ``u_ab``.
    """
    u = np.asarray(u_ab, dtype=float)
    nu = np.linalg.norm(u)
    if nu == 0.0:
        raise ValueError("u_ab must be nonzero")
    if n_grid < 1:
        raise ValueError("n_grid must be >= 1")
    if not 0.0 < cone_angle_deg < 90.0:
        raise ValueError("cone angle must lie in (0, 90) degrees")
    u = u / nu
    v_perp = _perpendicular_seed(u)
    ang = math.radians(cone_angle_deg)
    v = math.cos(ang) * u + math.sin(ang) * v_perp

    out = []
    for k in range(n_grid):
        theta = 2.0 * math.pi * k / n_grid
        o = (
            v * math.cos(theta)
            + np.cross(u, v) * math.sin(theta)
            + u * np.dot(u, v) * (1.0 - math.cos(theta))
        )
        out.append(o / np.linalg.norm(o))
    return out


def upa_frame(node: NodeGeometry) -> UpaFrame:
    """Deterministic right-handed frame with axis_y along the boresight.

    axis_x = normalize(boresight x e) with e = [0, 0, 1], falling back to
    e = [1, 0, 0] when the boresight is (anti)parallel to e.
    """
    b = node.boresight
    e = Z_AXIS
    ax = np.cross(b, e)
    if np.linalg.norm(ax) < _PARALLEL_TOL:
        e = X_AXIS
        ax = np.cross(b, e)
    ax = ax / np.linalg.norm(ax)
    az = np.cross(ax, b)
    az = az / np.linalg.norm(az)
    return UpaFrame(origin=node.position, axis_x=ax, axis_y=b, axis_z=az)


def aoa_aod_angles(frame: UpaFrame, target: np.ndarray) -> tuple[float, float]:
    """Vertical/horizontal angle pair (theta, phi) of a target in the frame.

    theta = arcsin of the axis_x component of the unit direction,
    phi   = atan2(axis_z component, axis_y component).
    The direction reconstructs as
    sin(theta) * axis_x + cos(theta)cos(phi) * axis_y + cos(theta)sin(phi) * axis_z.
    """
    d = np.asarray(target, dtype=float) - frame.origin
    n = np.linalg.norm(d)
    if n == 0.0:
        raise ValueError("target coincides with the frame origin")
    d = d / n
    rx = float(np.dot(d, frame.axis_x))
    ry = float(np.dot(d, frame.axis_y))
    rz = float(np.dot(d, frame.axis_z))
    theta = math.asin(min(1.0, max(-1.0, rx)))
    phi = math.atan2(rz, ry)
    return theta, phi


def direction_from_angles(frame: UpaFrame, theta: float, phi: float) -> np.ndarray:
    """Unit direction in world coordinates for a (theta, phi) pair."""
    return (
        math.sin(theta) * frame.axis_x
        + math.cos(theta) * math.cos(phi) * frame.axis_y
        + math.cos(theta) * math.sin(phi) * frame.axis_z
    )

"""System description and derived per-link quantities.

``Scenario`` holds the raw configuration (defaults follow the standard
Ku-band GEO setup: 18 GHz carrier, 8x8 Earth-station array, 4x4
satellite arrays, -90 dBm nominal noise, rho = 1.5, K = 7, transmitter
at the sub-satellite point of a receiver at 90 degrees longitude with
four co-orbital wardens at 88-92 degrees).

``build_geometry`` derives node positions, array frames, steering
vectors, LoS matrices, combiners and noise models.  Array frames are
anchored to the default boresights; re-pointing the Earth-station
antenna during orientation optimization changes only the gain-envelope
terms, not the array phase response, so channel matrices stay fixed
while link budgets take the boresight as a parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (
    ArrayConfig,
    ChannelRealization,
    RicianModel,
    earth_station_steering,
    los_egc_vector,
    los_matrix,
    rng_stream,
    sample_channel,
    satellite_steering,
)
from .covert_analysis import CovertSpec, NoiseUncertainty
from .geometry import (
    NodeGeometry,
    aoa_aod_angles,
    earth_station_position,
    geo_satellite_position,
    upa_frame,
)
from .linkbudget import (
    EarthStationPattern,
    LinkBudget,
    SatellitePattern,
    build_link_budget,
    wavelength_from_frequency,
)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watts_to_dbm(watts: float) -> float:
    if watts <= 0.0:
        raise ValueError("power must be positive")
    return 10.0 * math.log10(watts * 1000.0)


@dataclass(frozen=True)
class Scenario:
    freq_hz: float = 18e9
    es_pattern: EarthStationPattern = EarthStationPattern(g_max_dbi=32.0, theta0_deg=1.0)
    sat_pattern: SatellitePattern = SatellitePattern(
        g_max_dbi=32.0, phi_3db_deg=0.4, alpha=1.5, beta=2.5, l_s_db=-6.75, l_f_dbi=0.0
    )
    alice_array: ArrayConfig = ArrayConfig(8, 8, 0.5)
    sat_array: ArrayConfig = ArrayConfig(4, 4, 0.5)
    p_max_w: float = dbm_to_watts(50.0)
    noise_nominal_w: float = dbm_to_watts(-90.0)
    rho: float = 1.5
    k_factor: float = 7.0
    covert: CovertSpec = CovertSpec(epsilon_w=0.01, epsilon_b=0.01)
    d_a_m: float = 6378e3
    altitude_m: float = 36000e3
    alice_lat_deg: float = 0.0
    alice_lon_deg: float = 90.0
    bob_lon_deg: float = 90.0
    warden_lons_deg: tuple = (92.0, 91.0, 89.0, 88.0)
    seed: int = 0

    @property
    def d_sat_m(self) -> float:
        return self.d_a_m + self.altitude_m

    @property
    def wavelength_m(self) -> float:
        return wavelength_from_frequency(self.freq_hz)

    def with_overrides(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


@dataclass
class ScenarioGeometry:
    """Derived geometry, channels and noise models for one scenario."""

    scenario: Scenario
    alice: NodeGeometry
    bob: NodeGeometry
    wardens: list[NodeGeometry]
    los_bob: np.ndarray
    los_wardens: list[np.ndarray]
    combiner_bob: np.ndarray
    combiner_wardens: list[np.ndarray]
    noise_bob: NoiseUncertainty = field(init=False)
    noise_warden: NoiseUncertainty = field(init=False)

    def __post_init__(self):
        sc = self.scenario
        self.noise_bob = NoiseUncertainty(sc.noise_nominal_w, sc.rho)
        self.noise_warden = NoiseUncertainty(sc.noise_nominal_w, sc.rho)

    @property
    def n_wardens(self) -> int:
        return len(self.wardens)

    @property
    def u_alice_bob(self) -> np.ndarray:
        return _unit(self.bob.position - self.alice.position)

    def link_bob(self, boresight: np.ndarray | None = None) -> LinkBudget:
        return self._link(self.bob, boresight)

    def link_warden(self, j: int, boresight: np.ndarray | None = None) -> LinkBudget:
        return self._link(self.wardens[j], boresight)

    def _link(self, node: NodeGeometry, boresight) -> LinkBudget:
        sc = self.scenario
        bs = self.alice.boresight if boresight is None else np.asarray(boresight, dtype=float)
        return build_link_budget(
            sc.es_pattern,
            sc.sat_pattern,
            self.alice.position,
            bs,
            node.position,
            node.boresight,
            sc.wavelength_m,
        )

    def bob_channel_model(self) -> RicianModel:
        return RicianModel(k_factor=self.scenario.k_factor, los_matrix=self.los_bob)

    def warden_channel_model(self, j: int) -> RicianModel:
        return RicianModel(k_factor=self.scenario.k_factor, los_matrix=self.los_wardens[j])

    def sample_bob_channel(self, trial: int = 0) -> ChannelRealization:
        rng = rng_stream(self.scenario.seed, 0, trial)
        return sample_channel(self.bob_channel_model(), rng, draw_id=f"bob/{trial}")


def _los_for(sc: Scenario, alice: NodeGeometry, sat: NodeGeometry) -> tuple[np.ndarray, np.ndarray]:
    """LoS matrix and satellite-side steering vector for one uplink."""
    frame_a = upa_frame(alice)
    frame_s = upa_frame(sat)
    theta_a, phi_a = aoa_aod_angles(frame_a, sat.position)
    theta_s, phi_s = aoa_aod_angles(frame_s, alice.position)
    d_vec = earth_station_steering(sc.alice_array, theta_a, phi_a)
    g_vec = satellite_steering(sc.sat_array, theta_s, phi_s)
    return los_matrix(g_vec, d_vec), g_vec


def build_geometry(sc: Scenario) -> ScenarioGeometry:
    """Node placement, default pointing, steering and combiner construction."""
    q_a = earth_station_position(sc.alice_lat_deg, sc.alice_lon_deg, sc.d_a_m)
    q_b = geo_satellite_position(sc.bob_lon_deg, sc.d_sat_m)
    alice = NodeGeometry(position=q_a, boresight=_unit(q_b - q_a))
    bob = NodeGeometry(position=q_b, boresight=_unit(q_a - q_b))
    wardens = [
        NodeGeometry(position=q_w, boresight=_unit(q_a - q_w))
        for q_w in (geo_satellite_position(lon, sc.d_sat_m) for lon in sc.warden_lons_deg)
    ]

    los_b, g_b = _los_for(sc, alice, bob)
    los_w, comb_w = [], []
    for node in wardens:
        los_j, g_j = _los_for(sc, alice, node)
        los_w.append(los_j)
        comb_w.append(los_egc_vector(g_j))

    return ScenarioGeometry(
        scenario=sc,
        alice=alice,
        bob=bob,
        wardens=wardens,
        los_bob=los_b,
        los_wardens=los_w,
        combiner_bob=los_egc_vector(g_b),
        combiner_wardens=comb_w,
    )

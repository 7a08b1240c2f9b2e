//! Circular-orbit propagation, relay Doppler measurement and slant geometry.
//!
//! Positions live in an Earth-centred frame with the x axis through the
//! prime meridian and z through the north pole. The Earth is a sphere and
//! does not rotate, so this frame doubles as the inertial one.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::{asin, atan2, clamp_unit, cos, sin, to_radians, Vec3};
use crate::scenario::{ScenarioConfig, EARTH_RADIUS_M, SPEED_OF_LIGHT_MPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitElement {
    pub plane_index: usize,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    /// Argument of latitude at `t = 0`.
    pub phase_deg: f64,
    pub altitude_m: f64,
    /// Orbital speed `v_0`.
    pub ground_speed_mps: f64,
}

impl OrbitElement {
    pub fn radius_m(&self) -> f64 {
        EARTH_RADIUS_M + self.altitude_m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteState {
    pub sat_id: usize,
    pub position: Vec3,
    pub velocity: Vec3,
    pub slot_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopplerMeasurement {
    pub sat_id: usize,
    pub slot_index: usize,
    pub shift_hz: f64,
    pub cos_alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlantGeometry {
    pub distance_m: f64,
    /// Angle between the nadir and the satellite→ground direction.
    pub off_axis_rad: f64,
    /// Signed steering angle in the along-track/nadir plane.
    pub aod_rad: f64,
    /// False when the ground point sits at or below the horizon.
    pub visible: bool,
}

/// Point on the spherical Earth at the given altitude.
pub fn geodetic_to_ecef(lat_deg: f64, lon_deg: f64, altitude_m: f64) -> Vec3 {
    let (lat, lon) = (to_radians(lat_deg), to_radians(lon_deg));
    let r = EARTH_RADIUS_M + altitude_m;
    Vec3::new(r * cos(lat) * cos(lon), r * cos(lat) * sin(lon), r * sin(lat))
}

/// State after `slot * slot_duration_s` seconds of uniform circular motion.
pub fn propagate(element: &OrbitElement, sat_id: usize, slot: usize, slot_duration_s: f64) -> SatelliteState {
    let r = element.radius_m();
    let v0 = element.ground_speed_mps;
    let t = slot as f64 * slot_duration_s;
    let u = to_radians(element.phase_deg) + v0 * t / r;
    let (raan, inc) = (to_radians(element.raan_deg), to_radians(element.inclination_deg));
    let (so, co) = (sin(raan), cos(raan));
    let (si, ci) = (sin(inc), cos(inc));
    let (su, cu) = (sin(u), cos(u));
    let position = Vec3::new(co * cu - so * su * ci, so * cu + co * su * ci, su * si) * r;
    let velocity = Vec3::new(-co * su - so * cu * ci, -so * su + co * cu * ci, cu * si) * v0;
    SatelliteState { sat_id, position, velocity, slot_index: slot }
}

pub fn relay_position(config: &ScenarioConfig) -> Vec3 {
    geodetic_to_ecef(0.0, config.relay_lon_deg, config.relay_altitude_m)
}

/// Doppler shift of the satellite→relay link from the satellite's motion.
pub fn doppler_shift(state: &SatelliteState, relay: Vec3, carrier_hz: f64) -> DopplerMeasurement {
    let los = (relay - state.position).normalized();
    let v0 = state.velocity.norm();
    let cos_alpha = clamp_unit(state.velocity.normalized().dot(los));
    DopplerMeasurement {
        sat_id: state.sat_id,
        slot_index: state.slot_index,
        shift_hz: carrier_hz * v0 * cos_alpha / SPEED_OF_LIGHT_MPS,
        cos_alpha,
    }
}

/// Upper bound on any Doppler shift at speed `v0`.
pub fn max_doppler_hz(carrier_hz: f64, v0: f64) -> f64 {
    carrier_hz * v0 / SPEED_OF_LIGHT_MPS
}

pub fn slant_geometry(state: &SatelliteState, lat_deg: f64, lon_deg: f64) -> SlantGeometry {
    let ground = geodetic_to_ecef(lat_deg, lon_deg, 0.0);
    let to_ground = ground - state.position;
    let distance_m = to_ground.norm();
    let nadir = (-state.position).normalized();
    let dir = to_ground.normalized();
    let off_axis_rad = nadir.angle_to(to_ground);
    // along-track axis with the nadir component removed
    let v = state.velocity;
    let along = (v - nadir * v.dot(nadir)).normalized();
    let aod_rad = atan2(dir.dot(along), dir.dot(nadir));
    let elevation = asin(clamp_unit(ground.normalized().dot(-dir)));
    SlantGeometry { distance_m, off_axis_rad, aod_rad, visible: elevation > 0.0 }
}

/// Orbit elements for the whole constellation plus the propagation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub elements: Vec<OrbitElement>,
    pub slot_duration_s: f64,
}

impl Constellation {
    /// Satellites are dealt round-robin onto the planes. Each plane's
    /// ascending node sits inside the region's longitude span and the
    /// satellites of a plane are phased a few degrees apart so that all of
    /// them cross the region around the middle of the horizon.
    pub fn layout<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Self {
        let c = &config.constellation;
        let m = config.num_satellites;
        let planes = c.planes.min(m).max(1);
        let [lon0, lon1] = config.region_lon_deg;
        let [lat0, lat1] = config.region_lat_deg;
        let r = EARTH_RADIUS_M + config.leo_altitude_m;
        let jitter = c.layout_jitter_deg;
        let draw = |rng: &mut R| if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };

        let t_mid = 0.5 * (config.horizon_slots().saturating_sub(1)) as f64 * c.slot_duration_s;
        let mid_arc_deg = crate::math::to_degrees(config.leo_speed_mps * t_mid / r);
        // argument of latitude of the region's central parallel
        let inc = to_radians(c.inclination_deg);
        let lat_mid = to_radians(0.5 * (lat0 + lat1));
        let u_mid_deg = crate::math::to_degrees(asin(clamp_unit(sin(lat_mid) / sin(inc).max(1e-9))));

        let per_plane: Vec<usize> = (0..planes).map(|p| (m + planes - 1 - p) / planes).collect();
        let mut raans = Vec::with_capacity(planes);
        for p in 0..planes {
            let base = if c.raan_deg.is_empty() {
                lon0 + (p as f64 + 0.5) * (lon1 - lon0) / planes as f64
            } else {
                c.raan_deg[p]
            };
            raans.push(base + draw(rng));
        }
        let mut elements = Vec::with_capacity(m);
        let mut seen = alloc::vec![0usize; planes];
        for sat in 0..m {
            let p = sat % planes;
            let j = seen[p];
            seen[p] += 1;
            let offset = (j as f64 - 0.5 * (per_plane[p] as f64 - 1.0)) * c.in_plane_spacing_deg;
            elements.push(OrbitElement {
                plane_index: p,
                inclination_deg: c.inclination_deg,
                raan_deg: raans[p],
                phase_deg: u_mid_deg - mid_arc_deg + offset + draw(rng),
                altitude_m: config.leo_altitude_m,
                ground_speed_mps: config.leo_speed_mps,
            });
        }
        Self { elements, slot_duration_s: c.slot_duration_s }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn states(&self, slot: usize) -> Vec<SatelliteState> {
        self.elements
            .iter()
            .enumerate()
            .map(|(id, e)| propagate(e, id, slot, self.slot_duration_s))
            .collect()
    }
}

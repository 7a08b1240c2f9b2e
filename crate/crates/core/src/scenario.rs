//! Scenario description: configuration with validated defaults, unit
//! conversions, the cell grid and user generation.
//!
//! All quantities are stored in SI units. Decibel values only appear as
//! configuration inputs and are converted once through the helpers below.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::{log10, powf};

pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

pub fn dbw_to_watts(dbw: f64) -> f64 {
    powf(10.0, dbw / 10.0)
}

pub fn watts_to_dbw(watts: f64) -> f64 {
    10.0 * log10(watts)
}

pub fn dbi_to_linear(dbi: f64) -> f64 {
    powf(10.0, dbi / 10.0)
}

pub fn linear_to_dbi(gain: f64) -> f64 {
    10.0 * log10(gain)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

/// Which form of the Bessel transmit pattern to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternModel {
    /// `G_max |2 J1(u)/u|^2`, continuous at boresight.
    #[default]
    Normalized,
    /// `G_max |4 J1(u)/u|^2` off boresight (peaks at `4 G_max` as `u -> 0`).
    Literal,
}

/// Direction of residual intra-cell interference in the SINR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeOrder {
    /// User `i` (descending gain order) is interfered by users `j < i`;
    /// `j > i` contributes only through the imperfect-SIC factor.
    #[default]
    AsPrinted,
    /// Mirror image: interference from `j > i`, residual from `j < i`.
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntParams {
    /// Exponent on route weights.
    pub s1: f64,
    /// Exponent on pheromone concentration.
    pub s2: f64,
    /// Evaporation ratio, `0 < tau < 1`.
    pub tau: f64,
    /// Number of complete plans sampled per iteration.
    pub colony_size: usize,
    pub max_pheromone: f64,
    pub max_iters: usize,
}

impl Default for AntParams {
    fn default() -> Self {
        Self { s1: 1.0, s2: 2.0, tau: 0.2, colony_size: 12, max_pheromone: 10.0, max_iters: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Relative objective change that stops the monotonic solver.
    pub tol: f64,
    pub max_iters: usize,
    /// Max relative per-user rate change that ends the outer loop.
    pub outer_tol: f64,
    pub outer_max_iters: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { tol: 1e-6, max_iters: 100, outer_tol: 1e-4, outer_max_iters: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstellationParams {
    pub planes: usize,
    pub inclination_deg: f64,
    /// Right ascension of each plane's ascending node. Empty spreads the
    /// planes evenly across the region's longitude span.
    pub raan_deg: Vec<f64>,
    /// Along-track spacing between satellites sharing a plane.
    pub in_plane_spacing_deg: f64,
    /// Uniform jitter (±) applied per trial to RAAN and phase.
    pub layout_jitter_deg: f64,
    pub slot_duration_s: f64,
    /// Planning horizon; `None` uses `ceil(K / M)`.
    pub horizon_slots: Option<usize>,
}

impl Default for ConstellationParams {
    fn default() -> Self {
        Self {
            planes: 3,
            inclination_deg: 87.0,
            raan_deg: Vec::new(),
            in_plane_spacing_deg: 2.0,
            layout_jitter_deg: 0.3,
            slot_duration_s: 10.0,
            horizon_slots: None,
        }
    }
}

/// Full experiment description. Absent keys in a config file take these
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub region_lon_deg: [f64; 2],
    pub region_lat_deg: [f64; 2],
    pub num_satellites: usize,
    pub num_cells: usize,
    /// Rows of the cell grid; `None` picks the most square factorization.
    pub grid_rows: Option<usize>,
    pub users_per_cell: usize,
    pub num_antennas: usize,
    pub antenna_spacing_m: f64,
    pub aperture_radius_m: f64,
    pub rx_gain_dbi: f64,
    pub max_tx_gain_dbi: f64,
    pub noise_power_dbw: f64,
    pub sat_power_dbw: f64,
    pub power_headroom_factor: f64,
    pub min_rate_bps: f64,
    pub demand_range_bps: [f64; 2],
    pub leo_altitude_m: f64,
    pub leo_speed_mps: f64,
    pub relay_lon_deg: f64,
    pub relay_altitude_m: f64,
    #[serde(alias = "ipSIC_factor")]
    pub ipsic_factor: f64,
    pub rain_atten_db_per_km: f64,
    pub rain_atten_ref_db: f64,
    pub pattern: PatternModel,
    pub decode_order: DecodeOrder,
    pub doppler_threshold_hz: f64,
    pub constellation: ConstellationParams,
    pub ant_params: AntParams,
    pub solver_params: SolverParams,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 11.7e9,
            bandwidth_hz: 500e6,
            region_lon_deg: [100.0, 105.0],
            region_lat_deg: [-1.5, 1.5],
            num_satellites: 6,
            num_cells: 64,
            grid_rows: None,
            users_per_cell: 4,
            num_antennas: 8,
            antenna_spacing_m: 0.5,
            aperture_radius_m: 1.75,
            rx_gain_dbi: 35.7,
            max_tx_gain_dbi: 64.9,
            noise_power_dbw: -136.0,
            sat_power_dbw: 25.0,
            power_headroom_factor: 1.05,
            min_rate_bps: 5e6,
            demand_range_bps: [300e6, 1300e6],
            leo_altitude_m: 1_200_000.0,
            leo_speed_mps: 7_900.0,
            relay_lon_deg: 103.0,
            relay_altitude_m: 36_000_000.0,
            ipsic_factor: 0.0,
            rain_atten_db_per_km: 0.01,
            rain_atten_ref_db: 0.0,
            pattern: PatternModel::Normalized,
            decode_order: DecodeOrder::AsPrinted,
            doppler_threshold_hz: 250e3,
            constellation: ConstellationParams::default(),
            ant_params: AntParams::default(),
            solver_params: SolverParams::default(),
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Check every invariant; the first violation is reported by field name.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive: [(&'static str, f64); 14] = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("antenna_spacing_m", self.antenna_spacing_m),
            ("aperture_radius_m", self.aperture_radius_m),
            ("min_rate_bps", self.min_rate_bps),
            ("leo_altitude_m", self.leo_altitude_m),
            ("leo_speed_mps", self.leo_speed_mps),
            ("relay_altitude_m", self.relay_altitude_m),
            ("doppler_threshold_hz", self.doppler_threshold_hz),
            ("constellation.slot_duration_s", self.constellation.slot_duration_s),
            ("ant_params.max_pheromone", self.ant_params.max_pheromone),
            ("solver_params.tol", self.solver_params.tol),
            ("solver_params.outer_tol", self.solver_params.outer_tol),
            ("demand_range_bps", self.demand_range_bps[0]),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be finite and > 0, got {v}")));
            }
        }
        let finite: [(&'static str, f64); 6] = [
            ("rx_gain_dbi", self.rx_gain_dbi),
            ("max_tx_gain_dbi", self.max_tx_gain_dbi),
            ("noise_power_dbw", self.noise_power_dbw),
            ("sat_power_dbw", self.sat_power_dbw),
            ("relay_lon_deg", self.relay_lon_deg),
            ("constellation.inclination_deg", self.constellation.inclination_deg),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        let counts: [(&'static str, usize); 8] = [
            ("num_satellites", self.num_satellites),
            ("num_cells", self.num_cells),
            ("users_per_cell", self.users_per_cell),
            ("num_antennas", self.num_antennas),
            ("constellation.planes", self.constellation.planes),
            ("ant_params.colony_size", self.ant_params.colony_size),
            ("ant_params.max_iters", self.ant_params.max_iters),
            ("solver_params.max_iters", self.solver_params.max_iters),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        if self.solver_params.outer_max_iters == 0 {
            return Err(invalid("solver_params.outer_max_iters", "must be at least 1"));
        }
        let [lo, hi] = self.demand_range_bps;
        if !(hi.is_finite() && lo <= hi) {
            return Err(invalid("demand_range_bps", format!("must be ordered, got [{lo}, {hi}]")));
        }
        if lo < self.min_rate_bps {
            return Err(invalid("demand_range_bps", "lower bound is below min_rate_bps"));
        }
        for (field, [a, b]) in [("region_lon_deg", self.region_lon_deg), ("region_lat_deg", self.region_lat_deg)] {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(invalid(field, format!("must be an increasing pair, got [{a}, {b}]")));
            }
        }
        if self.region_lat_deg[0] < -90.0 || self.region_lat_deg[1] > 90.0 {
            return Err(invalid("region_lat_deg", "latitudes must lie in [-90, 90]"));
        }
        if !(0.0..=1.0).contains(&self.ipsic_factor) {
            return Err(invalid("ipsic_factor (κ)", "must satisfy 0 ≤ κ ≤ 1"));
        }
        let tau = self.ant_params.tau;
        if !(tau > 0.0 && tau < 1.0) {
            return Err(invalid("ant_params.tau (τ)", format!("must satisfy 0 < τ < 1, got {tau}")));
        }
        for (field, v) in [("ant_params.s1", self.ant_params.s1), ("ant_params.s2", self.ant_params.s2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(field, "must be finite and ≥ 0"));
            }
        }
        if !(self.power_headroom_factor.is_finite() && self.power_headroom_factor >= 1.0) {
            return Err(invalid("power_headroom_factor", "must be ≥ 1"));
        }
        if !(self.rain_atten_db_per_km >= 0.0 && self.rain_atten_ref_db >= 0.0) {
            return Err(invalid("rain_atten_db_per_km", "attenuation terms must be ≥ 0"));
        }
        if !(self.constellation.layout_jitter_deg >= 0.0 && self.constellation.in_plane_spacing_deg >= 0.0) {
            return Err(invalid("constellation.layout_jitter_deg", "must be ≥ 0"));
        }
        if !self.constellation.raan_deg.is_empty() && self.constellation.raan_deg.len() != self.constellation.planes {
            return Err(invalid("constellation.raan_deg", "needs one entry per plane"));
        }
        if self.constellation.horizon_slots == Some(0) {
            return Err(invalid("constellation.horizon_slots", "must be at least 1"));
        }
        self.grid_dims()?;
        Ok(())
    }

    /// `(rows, cols)` of the cell grid, rows along latitude.
    pub fn grid_dims(&self) -> Result<(usize, usize), ConfigError> {
        let k = self.num_cells;
        if k == 0 {
            return Err(invalid("num_cells", "must be at least 1"));
        }
        match self.grid_rows {
            Some(r) if r == 0 || k % r != 0 => {
                Err(invalid("grid_rows", format!("{k} cells cannot form a grid with {r} rows")))
            }
            Some(r) => Ok((r, k / r)),
            None => {
                let mut rows = 1;
                let mut r = 1;
                while r * r <= k {
                    if k % r == 0 {
                        rows = r;
                    }
                    r += 1;
                }
                Ok((rows, k / rows))
            }
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_MPS / self.carrier_frequency_hz
    }

    pub fn noise_w(&self) -> f64 {
        dbw_to_watts(self.noise_power_dbw)
    }

    pub fn sat_power_w(&self) -> f64 {
        dbw_to_watts(self.sat_power_dbw)
    }

    /// Number of slots needed to visit every cell once with `M` satellites.
    pub fn horizon_slots(&self) -> usize {
        self.constellation
            .horizon_slots
            .unwrap_or_else(|| self.num_cells.div_ceil(self.num_satellites))
    }

    /// Demands drawn around `mean_bps` with ±10 % jitter.
    pub fn with_mean_demand(mut self, mean_bps: f64) -> Self {
        self.demand_range_bps = [0.9 * mean_bps, 1.1 * mean_bps];
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellBounds {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl CellBounds {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub cell_id: usize,
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
    pub bounds: CellBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub user_id: usize,
    pub cell_id: usize,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub demand_bps: f64,
}

/// Regular lat/lon tiling of the region, row-major from the north-west
/// corner.
pub fn build_cells(config: &ScenarioConfig) -> Result<Vec<Cell>, ConfigError> {
    let (rows, cols) = config.grid_dims()?;
    let [lon0, lon1] = config.region_lon_deg;
    let [lat0, lat1] = config.region_lat_deg;
    let dlon = (lon1 - lon0) / cols as f64;
    let dlat = (lat1 - lat0) / rows as f64;
    let mut cells = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        // explicit edges so neighbouring bounds match bit for bit
        let lat_max = if r == 0 { lat1 } else { lat1 - r as f64 * dlat };
        let lat_min = if r + 1 == rows { lat0 } else { lat1 - (r + 1) as f64 * dlat };
        for c in 0..cols {
            let lon_min = if c == 0 { lon0 } else { lon0 + c as f64 * dlon };
            let lon_max = if c + 1 == cols { lon1 } else { lon0 + (c + 1) as f64 * dlon };
            cells.push(Cell {
                cell_id: r * cols + c,
                center_lat_deg: 0.5 * (lat_min + lat_max),
                center_lon_deg: 0.5 * (lon_min + lon_max),
                bounds: CellBounds { lat_min, lat_max, lon_min, lon_max },
            });
        }
    }
    Ok(cells)
}

/// `N` users per cell, uniform positions, i.i.d. uniform demands.
pub fn spawn_users<R: Rng + ?Sized>(cells: &[Cell], config: &ScenarioConfig, rng: &mut R) -> Vec<User> {
    let [d_lo, d_hi] = config.demand_range_bps;
    let mut users = Vec::with_capacity(cells.len() * config.users_per_cell);
    for cell in cells {
        let b = cell.bounds;
        for _ in 0..config.users_per_cell {
            let lat_deg = rng.gen_range(b.lat_min..=b.lat_max);
            let lon_deg = rng.gen_range(b.lon_min..=b.lon_max);
            let demand_bps = if d_hi > d_lo { rng.gen_range(d_lo..=d_hi) } else { d_lo };
            users.push(User { user_id: users.len(), cell_id: cell.cell_id, lat_deg, lon_deg, demand_bps });
        }
    }
    users
}

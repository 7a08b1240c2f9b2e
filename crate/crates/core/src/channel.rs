//! Per-user channel vectors: free-space loss, rain attenuation, the Bessel
//! transmit pattern and a uniform linear array response.

use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::SlantGeometry;
use crate::math::{bessel_j1, norm_sq, powf, sin, sqrt, PI};
use crate::scenario::{dbi_to_linear, PatternModel, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("user {user_id} is below the horizon of the serving satellite")]
    NotVisible { user_id: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub wavelength_m: f64,
    pub rx_gain_linear: f64,
    pub max_tx_gain_linear: f64,
    pub aperture_radius_m: f64,
    pub antenna_spacing_m: f64,
    pub num_antennas: usize,
    pub rain_atten_db_per_km: f64,
    pub rain_atten_ref_db: f64,
    /// Slant distance at which the attenuation equals the reference value.
    pub rain_ref_distance_m: f64,
    pub pattern: PatternModel,
}

impl RadioParams {
    pub fn from_config(config: &ScenarioConfig) -> Self {
        Self {
            wavelength_m: config.wavelength_m(),
            rx_gain_linear: dbi_to_linear(config.rx_gain_dbi),
            max_tx_gain_linear: dbi_to_linear(config.max_tx_gain_dbi),
            aperture_radius_m: config.aperture_radius_m,
            antenna_spacing_m: config.antenna_spacing_m,
            num_antennas: config.num_antennas,
            rain_atten_db_per_km: config.rain_atten_db_per_km,
            rain_atten_ref_db: config.rain_atten_ref_db,
            rain_ref_distance_m: config.leo_altitude_m,
            pattern: config.pattern,
        }
    }

    /// Amplitude factor of the rain attenuation at slant distance `d`.
    pub fn rain_amplitude(&self, distance_m: f64) -> f64 {
        let excess_km = (distance_m - self.rain_ref_distance_m).max(0.0) / 1000.0;
        let db = self.rain_atten_ref_db + self.rain_atten_db_per_km * excess_km;
        powf(10.0, -db / 20.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVector {
    pub user_id: usize,
    pub h: Vec<Complex64>,
    pub gain: f64,
    pub slot_index: usize,
}

impl ChannelVector {
    pub fn new(user_id: usize, h: Vec<Complex64>, slot_index: usize) -> Self {
        let gain = norm_sq(&h);
        Self { user_id, h, gain, slot_index }
    }
}

/// Channels of one cell in one slot. `columns` keep user order; `order`
/// lists column indices by descending gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    pub cell_id: usize,
    pub slot_index: usize,
    pub columns: Vec<ChannelVector>,
    pub order: Vec<usize>,
}

impl ChannelMatrix {
    pub fn new(cell_id: usize, slot_index: usize, columns: Vec<ChannelVector>) -> Self {
        let order = order_users(&columns);
        Self { cell_id, slot_index, columns, order }
    }

    /// Columns rearranged into descending-gain order.
    pub fn ordered(&self) -> Vec<&ChannelVector> {
        self.order.iter().map(|&i| &self.columns[i]).collect()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Unit-norm response of an `L`-element line array toward `theta`.
pub fn array_response(theta_rad: f64, num_antennas: usize, spacing_m: f64, wavelength_m: f64) -> Vec<Complex64> {
    let scale = 1.0 / sqrt(num_antennas as f64);
    let k = 2.0 * PI * spacing_m / wavelength_m * sin(theta_rad);
    (0..num_antennas)
        .map(|l| Complex64::from_polar(scale, -(l as f64) * k))
        .collect()
}

/// Bessel aperture pattern in linear units.
pub fn transmit_gain(phi_rad: f64, params: &RadioParams) -> f64 {
    let u = 2.0 * PI * params.aperture_radius_m * sin(phi_rad) / params.wavelength_m;
    if u.abs() < 1e-12 {
        return params.max_tx_gain_linear;
    }
    let factor = match params.pattern {
        PatternModel::Normalized => 2.0,
        PatternModel::Literal => 4.0,
    };
    let x = factor * bessel_j1(u) / u;
    params.max_tx_gain_linear * x * x
}

/// Free-space amplitude factor `λ / (4 π d)`.
pub fn free_space_amplitude(distance_m: f64, wavelength_m: f64) -> f64 {
    wavelength_m / (4.0 * PI * distance_m)
}

pub fn user_channel(
    user_id: usize,
    geometry: &SlantGeometry,
    params: &RadioParams,
    slot: usize,
) -> Result<ChannelVector, ChannelError> {
    if !geometry.visible {
        return Err(ChannelError::NotVisible { user_id });
    }
    let amp = params.rain_amplitude(geometry.distance_m)
        * sqrt(params.rx_gain_linear)
        * free_space_amplitude(geometry.distance_m, params.wavelength_m)
        * sqrt(transmit_gain(geometry.off_axis_rad, params));
    let h = array_response(geometry.aod_rad, params.num_antennas, params.antenna_spacing_m, params.wavelength_m)
        .into_iter()
        .map(|a| a * amp)
        .collect();
    Ok(ChannelVector::new(user_id, h, slot))
}

/// Indices sorted by descending gain; ties keep ascending user id.
pub fn order_users(channels: &[ChannelVector]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..channels.len()).collect();
    idx.sort_by(|&a, &b| {
        channels[b]
            .gain
            .total_cmp(&channels[a].gain)
            .then(channels[a].user_id.cmp(&channels[b].user_id))
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::log10;
    use alloc::vec;
    use proptest::prelude::*;

    fn params() -> RadioParams {
        RadioParams::from_config(&ScenarioConfig::default())
    }

    fn geom(d: f64, phi: f64, theta: f64) -> SlantGeometry {
        SlantGeometry { distance_m: d, off_axis_rad: phi, aod_rad: theta, visible: true }
    }

    #[test]
    fn boresight_array_response() {
        let a = array_response(0.0, 8, 0.5, 0.0256);
        for z in &a {
            assert!((z.re - 0.353_553_390_593_273_8).abs() < 1e-15 && z.im == 0.0);
        }
    }

    proptest! {
        #[test]
        fn array_response_unit_norm_and_conjugate(theta in -1.5f64..1.5, l in 1usize..17) {
            let a = array_response(theta, l, 0.5, 0.0256);
            prop_assert!((norm_sq(&a) - 1.0).abs() < 1e-12);
            let b = array_response(-theta, l, 0.5, 0.0256);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.conj() - y).norm() < 1e-12);
            }
        }

        #[test]
        fn gain_never_exceeds_peak(phi in 0.0f64..core::f64::consts::FRAC_PI_2) {
            let p = params();
            prop_assert!(transmit_gain(phi, &p) <= p.max_tx_gain_linear * (1.0 + 1e-12));
        }

        #[test]
        fn gain_decreases_with_distance(d in 1.2e6f64..3.0e6, dd in 1.0f64..1e5, phi in 0.0f64..0.3, th in -0.5f64..0.5) {
            let p = params();
            let near = user_channel(0, &geom(d, phi, th), &p, 0).unwrap();
            let far = user_channel(0, &geom(d + dd, phi, th), &p, 0).unwrap();
            prop_assert!(far.gain < near.gain);
        }

        #[test]
        fn order_is_argsort(gains in proptest::collection::vec(0.0f64..10.0, 1..12)) {
            let chans: Vec<_> = gains.iter().enumerate().map(|(i, &g)| ChannelVector { user_id: i, h: vec![], gain: g, slot_index: 0 }).collect();
            let order = order_users(&chans);
            // brute force: count strictly larger gains plus earlier equal ones
            for (pos, &i) in order.iter().enumerate() {
                let rank = gains.iter().enumerate().filter(|&(j, &g)| g > gains[i] || (g == gains[i] && j < i)).count();
                prop_assert_eq!(rank, pos);
            }
        }
    }

    #[test]
    fn peak_gain_and_first_null() {
        let p = params();
        assert!((transmit_gain(0.0, &p) - 3.090_295_432_513_592e6).abs() < 1e-3);
        // u = 3.8317 → sin φ = u λ / (2 π a)
        let u0 = 3.831_705_970_207_512;
        let phi = libm::asin(u0 * p.wavelength_m / (2.0 * PI * p.aperture_radius_m));
        assert!(transmit_gain(phi, &p) < 1e-9 * p.max_tx_gain_linear);
        let tiny = transmit_gain(1e-9, &p);
        assert!((tiny / p.max_tx_gain_linear - 1.0).abs() < 1e-9);
    }

    #[test]
    fn literal_pattern_quadruples_off_boresight() {
        let mut p = params();
        let n = transmit_gain(0.001, &p);
        p.pattern = PatternModel::Literal;
        assert!((transmit_gain(0.001, &p) / n - 4.0).abs() < 1e-9);
    }

    #[test]
    fn free_space_loss_at_altitude() {
        let lambda = 299_792_458.0 / 11.7e9;
        let nu = free_space_amplitude(1.2e6, lambda);
        assert!((nu / 1.699e-9 - 1.0).abs() < 1e-3);
        assert!((-20.0 * log10(nu) - 175.40).abs() < 0.01);
    }

    #[test]
    fn nadir_gain_term_by_term() {
        let p = params();
        let ch = user_channel(3, &geom(1.2e6, 0.0, 0.0), &p, 2).unwrap();
        let lambda = 299_792_458.0 / 11.7e9;
        let nu = lambda / (4.0 * PI * 1.2e6);
        let oracle = libm::pow(10.0, 3.57) * libm::pow(10.0, 6.49) * nu * nu;
        assert!((ch.gain / oracle - 1.0).abs() < 1e-12);
        assert_eq!((ch.user_id, ch.slot_index, ch.h.len()), (3, 2, 8));
    }

    #[test]
    fn rain_disabled_is_free_space() {
        let mut p = params();
        p.rain_atten_db_per_km = 0.0;
        let ch = user_channel(0, &geom(2.0e6, 0.0, 0.2), &p, 0).unwrap();
        let nu = free_space_amplitude(2.0e6, p.wavelength_m);
        assert!((ch.gain / (p.rx_gain_linear * p.max_tx_gain_linear * nu * nu) - 1.0).abs() < 1e-12);
        // with the default slope 800 km of excess distance costs 8 dB
        let with_rain = user_channel(0, &geom(2.0e6, 0.0, 0.2), &params(), 0).unwrap();
        assert!((10.0 * log10(ch.gain / with_rain.gain) - 8.0).abs() < 1e-9);
    }

    #[test]
    fn rx_gain_homogeneity() {
        let mut p = params();
        let a = user_channel(0, &geom(1.5e6, 0.01, 0.1), &p, 0).unwrap();
        p.rx_gain_linear *= 2.0;
        let b = user_channel(0, &geom(1.5e6, 0.01, 0.1), &p, 0).unwrap();
        assert!((b.gain / a.gain - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invisible_geometry_rejected() {
        let g = SlantGeometry { visible: false, ..geom(4e6, 1.0, 0.0) };
        assert_eq!(user_channel(7, &g, &params(), 0), Err(ChannelError::NotVisible { user_id: 7 }));
    }

    #[test]
    fn order_examples() {
        let mk = |g: &[f64]| -> Vec<ChannelVector> {
            g.iter().enumerate().map(|(i, &x)| ChannelVector { user_id: i, h: vec![], gain: x, slot_index: 0 }).collect()
        };
        assert_eq!(order_users(&mk(&[4.0, 1.0, 9.0])), [2, 0, 1]);
        assert_eq!(order_users(&mk(&[1.0; 4])), [0, 1, 2, 3]);
    }
}

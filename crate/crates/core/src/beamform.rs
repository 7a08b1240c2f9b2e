//! Beamforming vectors: per-user matched beams, the shared spot beam and the
//! polarization color partitions used without beamforming.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::math::{inner, norm_sq, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeamMode {
    PerUser,
    Spot,
    Color,
}

/// Beams of one cell, in the column order of its [`ChannelMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamMatrix {
    pub cell_id: usize,
    pub mode: BeamMode,
    /// Unit-norm steering direction per user (zero for a zero channel).
    pub directions: Vec<Vec<Complex64>>,
    /// `w_i = sqrt(p_i) v_i`.
    pub w: Vec<Vec<Complex64>>,
}

impl BeamMatrix {
    pub fn from_directions(cell_id: usize, mode: BeamMode, directions: Vec<Vec<Complex64>>, powers: &[f64]) -> Self {
        let w = directions
            .iter()
            .zip(powers)
            .map(|(v, &p)| scale(v, sqrt(p.max(0.0))))
            .collect();
        Self { cell_id, mode, directions, w }
    }

    /// Same directions with new powers.
    pub fn with_powers(&self, powers: &[f64]) -> Self {
        Self::from_directions(self.cell_id, self.mode, self.directions.clone(), powers)
    }
}

/// Result of [`svd_beamformer`]; `zero_channel` flags a degenerate input.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub w: Vec<Complex64>,
    pub zero_channel: bool,
}

fn scale(v: &[Complex64], k: f64) -> Vec<Complex64> {
    v.iter().map(|z| z * k).collect()
}

/// Principal right singular direction of the rank-one `h^H h`, i.e. `h/‖h‖`.
pub fn matched_direction(h: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = sqrt(norm_sq(h));
    if n > 0.0 && n.is_finite() {
        Some(scale(h, 1.0 / n))
    } else {
        None
    }
}

pub fn svd_beamformer(h: &[Complex64], p: f64) -> Beam {
    match matched_direction(h) {
        Some(v) => Beam { w: scale(&v, sqrt(p.max(0.0))), zero_channel: false },
        None => Beam { w: vec![Complex64::new(0.0, 0.0); h.len()], zero_channel: true },
    }
}

pub fn per_user_beams(channels: &ChannelMatrix, powers: &[f64]) -> BeamMatrix {
    let dirs = channels
        .columns
        .iter()
        .map(|c| matched_direction(&c.h).unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); c.h.len()]))
        .collect();
    BeamMatrix::from_directions(channels.cell_id, BeamMode::PerUser, dirs, powers)
}

const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_MAX: usize = 500;

/// Unit vector maximizing `Σ_i weight_i |h_i^H v|²`: the principal
/// eigenvector of `Σ_i weight_i h_i h_i^H`, found by power iteration.
pub fn principal_direction(hs: &[&[Complex64]], weights: &[f64]) -> Vec<Complex64> {
    let l = hs.first().map_or(0, |h| h.len());
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); l];
        for (h, &wt) in hs.iter().zip(weights) {
            let c = inner(h, x) * wt;
            for (yk, hk) in y.iter_mut().zip(h.iter()) {
                *yk += hk * c;
            }
        }
        y
    };
    // start from the heaviest user's direction plus a uniform component so
    // the start is never orthogonal to the dominant eigenvector
    let heaviest = (0..hs.len())
        .max_by(|&a, &b| (weights[a] * norm_sq(hs[a])).total_cmp(&(weights[b] * norm_sq(hs[b]))))
        .unwrap_or(0);
    let mut x: Vec<Complex64> = match hs.get(heaviest).and_then(|h| matched_direction(h)) {
        Some(v) => v.iter().map(|z| z + 1e-3 / sqrt(l as f64)).collect(),
        None => vec![Complex64::new(1.0 / sqrt(l as f64), 0.0); l],
    };
    x = matched_direction(&x).unwrap_or(x);
    for _ in 0..POWER_ITER_MAX {
        let y = apply(&x);
        let Some(next) = matched_direction(&y) else { break };
        // align the global phase before measuring the step
        let ph = inner(&next, &x);
        let rot = if ph.norm() > 0.0 { ph / ph.norm() } else { Complex64::new(1.0, 0.0) };
        let aligned: Vec<Complex64> = next.iter().map(|z| z * rot).collect();
        let step: f64 = aligned.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum();
        x = aligned;
        if sqrt(step) < POWER_ITER_TOL {
            break;
        }
    }
    x
}

/// One shared direction for the whole cell. Weighted by the current powers;
/// all-zero powers fall back to equal weights.
pub fn spot_beam(channels: &ChannelMatrix, powers: &[f64]) -> BeamMatrix {
    let hs: Vec<&[Complex64]> = channels.columns.iter().map(|c| c.h.as_slice()).collect();
    let total: f64 = powers.iter().sum();
    let weights: Vec<f64> = if total > 0.0 { powers.to_vec() } else { vec![1.0; hs.len()] };
    let v = principal_direction(&hs, &weights);
    let dirs = vec![v; hs.len()];
    BeamMatrix::from_directions(channels.cell_id, BeamMode::Spot, dirs, powers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorMode {
    #[serde(rename = "2c")]
    TwoColor,
    #[serde(rename = "4c")]
    FourColor,
}

impl ColorMode {
    pub fn colors(self) -> usize {
        match self {
            ColorMode::TwoColor => 2,
            ColorMode::FourColor => 4,
        }
    }

    pub fn bandwidth_factor(self) -> f64 {
        match self {
            ColorMode::TwoColor => 1.0,
            ColorMode::FourColor => 0.5,
        }
    }
}

/// Color per column, dealt round-robin along `gain_order`, plus the
/// bandwidth factor of the mode.
pub fn color_partition(gain_order: &[usize], mode: ColorMode) -> (Vec<usize>, f64) {
    let mut colors = vec![0; gain_order.len()];
    for (rank, &col) in gain_order.iter().enumerate() {
        colors[col] = rank % mode.colors();
    }
    (colors, mode.bandwidth_factor())
}

/// Without beamforming every user is fed from the first array element.
pub fn single_element_beams(channels: &ChannelMatrix, powers: &[f64]) -> BeamMatrix {
    let l = channels.columns.first().map_or(0, |c| c.h.len());
    let mut e0 = vec![Complex64::new(0.0, 0.0); l];
    if l > 0 {
        e0[0] = Complex64::new(1.0, 0.0);
    }
    BeamMatrix::from_directions(channels.cell_id, BeamMode::Color, vec![e0; channels.len()], powers)
}

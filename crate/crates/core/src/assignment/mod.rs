//! Satellite–cell assignment plans over the planning horizon.
//!
//! Two planners are provided: slot-by-slot Doppler-threshold matching
//! ([`doppler_match`], [`doppler_plan`]) and the ant-colony search in
//! [`ant`].

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::constellation::{doppler_shift, relay_position, slant_geometry, Constellation, DopplerMeasurement};
use crate::scenario::{Cell, ScenarioConfig};

pub mod ant;

pub use ant::{ant_colony_plan, transition_probability, update_pheromone, AntColonyOutcome, AntInput, PheromoneTable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssignmentError {
    #[error("cell {cell} is assigned twice in slot {slot}")]
    DuplicateInSlot { slot: usize, cell: usize },
    #[error("cell {cell} is covered {count} times over the horizon")]
    Coverage { cell: usize, count: usize },
    #[error("cell id {cell} is out of range")]
    UnknownCell { cell: usize },
    #[error("{cells} cells cannot be covered by {sats} satellites in {horizon} slots")]
    HorizonTooShort { cells: usize, sats: usize, horizon: usize },
    #[error("no candidate cells")]
    NoCandidates,
}

/// `entries[slot][sat]` is the cell served, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub horizon: usize,
    pub num_satellites: usize,
    pub entries: Vec<Vec<Option<usize>>>,
}

impl AssignmentPlan {
    pub fn empty(horizon: usize, num_satellites: usize) -> Self {
        Self { horizon, num_satellites, entries: vec![vec![None; num_satellites]; horizon] }
    }

    pub fn get(&self, sat: usize, slot: usize) -> Option<usize> {
        self.entries.get(slot).and_then(|row| row.get(sat).copied().flatten())
    }

    pub fn set(&mut self, sat: usize, slot: usize, cell: Option<usize>) {
        self.entries[slot][sat] = cell;
    }

    /// Binary indicator: satellite `sat` serves `cell` in `slot`.
    pub fn mu(&self, sat: usize, slot: usize, cell: usize) -> bool {
        self.get(sat, slot) == Some(cell)
    }

    /// `(slot, sat, cell)` for every assigned entry, slot-major.
    pub fn assignments(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(t, row)| row.iter().enumerate().filter_map(move |(m, c)| c.map(|c| (t, m, c))))
    }

    /// Per-slot distinctness and exactly-once coverage of `0..num_cells`.
    pub fn validate(&self, num_cells: usize) -> Result<(), AssignmentError> {
        let mut count = vec![0usize; num_cells];
        for (t, row) in self.entries.iter().enumerate() {
            let mut seen = vec![false; num_cells];
            for &cell in row.iter().flatten() {
                if cell >= num_cells {
                    return Err(AssignmentError::UnknownCell { cell });
                }
                if seen[cell] {
                    return Err(AssignmentError::DuplicateInSlot { slot: t, cell });
                }
                seen[cell] = true;
                count[cell] += 1;
            }
        }
        match count.iter().position(|&c| c != 1) {
            Some(cell) => Err(AssignmentError::Coverage { cell, count: count[cell] }),
            None => Ok(()),
        }
    }
}

/// One slot of Doppler-threshold matching.
///
/// `shifts[m]` and `preferences[m]` belong to satellite `m`; `remaining`
/// flags the cells still to be covered. Satellites within the threshold pick
/// in ascending `|f'|` (ties by id), so whenever two of them want the same
/// cell the one with the larger shift moves on to its next choice.
/// Satellites over the threshold then take leftovers in id order.
pub fn doppler_match(
    shifts: &[DopplerMeasurement],
    threshold_hz: f64,
    remaining: &[bool],
    preferences: &[Vec<usize>],
) -> Vec<Option<usize>> {
    let m = shifts.len();
    let mut free = remaining.to_vec();
    let mut out = vec![None; m];
    let mut passing: Vec<usize> = (0..m).filter(|&s| shifts[s].shift_hz.abs() <= threshold_hz).collect();
    passing.sort_by(|&a, &b| shifts[a].shift_hz.abs().total_cmp(&shifts[b].shift_hz.abs()).then(a.cmp(&b)));
    let failing = (0..m).filter(|&s| shifts[s].shift_hz.abs() > threshold_hz);
    for s in passing.into_iter().chain(failing) {
        let pick = preferences[s]
            .iter()
            .copied()
            .find(|&c| free.get(c).copied().unwrap_or(false))
            .or_else(|| free.iter().position(|&f| f));
        if let Some(c) = pick {
            free[c] = false;
            out[s] = Some(c);
        }
    }
    out
}

/// Remaining cells ranked by slant distance from each satellite.
pub fn distance_preferences(constellation: &Constellation, cells: &[Cell], slot: usize, remaining: &[bool]) -> Vec<Vec<usize>> {
    constellation
        .states(slot)
        .iter()
        .map(|s| {
            let mut ranked: Vec<(f64, usize)> = cells
                .iter()
                .filter(|c| remaining[c.cell_id])
                .map(|c| (slant_geometry(s, c.center_lat_deg, c.center_lon_deg).distance_m, c.cell_id))
                .collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            ranked.into_iter().map(|(_, c)| c).collect()
        })
        .collect()
}

pub fn doppler_measurements(config: &ScenarioConfig, constellation: &Constellation, slot: usize) -> Vec<DopplerMeasurement> {
    let relay = relay_position(config);
    constellation
        .states(slot)
        .iter()
        .map(|s| doppler_shift(s, relay, config.carrier_frequency_hz))
        .collect()
}

/// Slot-by-slot Doppler matching over the whole horizon.
pub fn doppler_plan(config: &ScenarioConfig, constellation: &Constellation, cells: &[Cell]) -> Result<AssignmentPlan, AssignmentError> {
    let horizon = config.horizon_slots();
    let m = constellation.len();
    if horizon * m < cells.len() {
        return Err(AssignmentError::HorizonTooShort { cells: cells.len(), sats: m, horizon });
    }
    let mut plan = AssignmentPlan::empty(horizon, m);
    let mut remaining = vec![true; cells.len()];
    for t in 0..horizon {
        if !remaining.iter().any(|&r| r) {
            break;
        }
        let shifts = doppler_measurements(config, constellation, t);
        let prefs = distance_preferences(constellation, cells, t, &remaining);
        for (sat, cell) in doppler_match(&shifts, config.doppler_threshold_hz, &remaining, &prefs).into_iter().enumerate() {
            if let Some(c) = cell {
                remaining[c] = false;
                plan.set(sat, t, Some(c));
            }
        }
    }
    Ok(plan)
}

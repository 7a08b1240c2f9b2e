//! CSV dumps and the standalone solver instance file.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use relay_noma_core::assignment::{doppler_measurements, AssignmentPlan};
use relay_noma_core::channel::RadioParams;
use relay_noma_core::constellation::slant_geometry;
use relay_noma_core::engine::{Scenario, SolutionReport};
use relay_noma_core::math::{norm_sq, to_degrees};
use relay_noma_core::power::{CellInstance, InstanceParams, PowerAllocation};
use relay_noma_core::scenario::{linear_to_dbi, DecodeOrder};
use serde::{Deserialize, Serialize};

/// Create `path` (and missing parent directories) for writing.
pub fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

#[derive(Debug, Serialize)]
struct EphemerisRow {
    slot: usize,
    sat_id: usize,
    x: f64,
    y: f64,
    z: f64,
    vx: f64,
    vy: f64,
    vz: f64,
}

pub fn write_ephemeris<W: Write>(scenario: &Scenario, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in 0..scenario.config.horizon_slots() {
        for s in scenario.constellation.states(t) {
            w.serialize(EphemerisRow {
                slot: t,
                sat_id: s.sat_id,
                x: s.position.x,
                y: s.position.y,
                z: s.position.z,
                vx: s.velocity.x,
                vy: s.velocity.y,
                vz: s.velocity.z,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ChannelRow {
    slot: usize,
    sat_id: usize,
    cell_id: usize,
    user_id: usize,
    gain_db: f64,
    aod_deg: f64,
    offaxis_deg: f64,
    distance_km: f64,
}

/// Channels of every user from every satellite over the horizon. Users
/// below a satellite's horizon are skipped.
pub fn write_channels<W: Write>(scenario: &Scenario, out: W) -> Result<()> {
    let radio = RadioParams::from_config(&scenario.config);
    let mut w = csv::Writer::from_writer(out);
    for t in 0..scenario.config.horizon_slots() {
        for s in scenario.constellation.states(t) {
            for cell in 0..scenario.cells.len() {
                let m = scenario.cell_channels(&radio, &s, cell);
                for col in &m.columns {
                    let u = &scenario.users[col.user_id];
                    let g = slant_geometry(&s, u.lat_deg, u.lon_deg);
                    if !g.visible {
                        continue;
                    }
                    w.serialize(ChannelRow {
                        slot: t,
                        sat_id: s.sat_id,
                        cell_id: cell,
                        user_id: col.user_id,
                        gain_db: linear_to_dbi(col.gain),
                        aod_deg: to_degrees(g.aod_rad),
                        offaxis_deg: to_degrees(g.off_axis_rad),
                        distance_km: g.distance_m / 1e3,
                    })?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanRow {
    slot: usize,
    sat_id: usize,
    cell_id: usize,
    doppler_khz: f64,
}

pub fn write_plan<W: Write>(scenario: &Scenario, plan: &AssignmentPlan, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in 0..plan.horizon {
        let shifts = doppler_measurements(&scenario.config, &scenario.constellation, t);
        for (sat, shift) in shifts.iter().enumerate() {
            if let Some(cell) = plan.get(sat, t) {
                w.serialize(PlanRow { slot: t, sat_id: sat, cell_id: cell, doppler_khz: shift.shift_hz / 1e3 })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a plan dump back. The Doppler column is informational.
pub fn read_plan<R: Read>(input: R, horizon: usize, num_satellites: usize) -> Result<AssignmentPlan> {
    let mut plan = AssignmentPlan::empty(horizon, num_satellites);
    for (line, row) in csv::Reader::from_reader(input).deserialize::<PlanRow>().enumerate() {
        let row = row.with_context(|| format!("plan row {}", line + 1))?;
        if row.slot >= horizon || row.sat_id >= num_satellites {
            bail!("plan row {}: slot {} / satellite {} outside the scenario", line + 1, row.slot, row.sat_id);
        }
        if plan.get(row.sat_id, row.slot).is_some() {
            bail!("plan row {}: satellite {} assigned twice in slot {}", line + 1, row.sat_id, row.slot);
        }
        plan.set(row.sat_id, row.slot, Some(row.cell_id));
    }
    Ok(plan)
}

pub fn read_plan_file(path: &Path, horizon: usize, num_satellites: usize) -> Result<AssignmentPlan> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_plan(f, horizon, num_satellites).with_context(|| format!("reading {}", path.display()))
}

#[derive(Debug, Serialize)]
struct SolutionRow {
    slot: usize,
    cell: usize,
    sat: usize,
    user: usize,
    demand_bps: f64,
    rate_bps: f64,
    power_w: f64,
    beam_norm_sq: f64,
    infeasible: bool,
}

pub fn write_solution<W: Write>(report: &SolutionReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in &report.cells {
        for k in 0..c.user_ids.len() {
            w.serialize(SolutionRow {
                slot: c.slot,
                cell: c.cell_id,
                sat: c.sat_id,
                user: c.user_ids[k],
                demand_bps: c.demands_bps[k],
                rate_bps: c.rates_bps[k],
                power_w: c.powers_w[k],
                beam_norm_sq: norm_sq(&c.beams.w[k]),
                infeasible: !c.feasible,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Standalone power-allocation problem: all users share one beam, so the
/// effective gain `g_i` is the whole channel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub gains: Vec<f64>,
    pub demands_bps: Vec<f64>,
    pub noise_w: f64,
    pub bandwidth_hz: f64,
    pub budget_w: f64,
    pub r_min_bps: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub decode_order: DecodeOrder,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        let f: Self = toml::from_str(text)?;
        if f.gains.len() != f.demands_bps.len() {
            bail!("{} gains but {} demands", f.gains.len(), f.demands_bps.len());
        }
        if f.gains.iter().any(|g| !(*g >= 0.0)) {
            bail!("gains must be nonnegative");
        }
        Ok(f)
    }

    /// Decode-ordered instance; `order` maps back to file positions.
    pub fn instance(&self) -> CellInstance {
        let mut order: Vec<usize> = (0..self.gains.len()).collect();
        order.sort_by(|&a, &b| self.gains[b].total_cmp(&self.gains[a]).then(a.cmp(&b)));
        let g: Vec<f64> = order.iter().map(|&i| self.gains[i]).collect();
        let d: Vec<f64> = order.iter().map(|&i| self.demands_bps[i]).collect();
        let params = InstanceParams {
            bandwidth_hz: self.bandwidth_hz,
            noise_w: self.noise_w,
            p_budget_w: self.budget_w,
            r_min_bps: self.r_min_bps,
            kappa: self.kappa,
            decode_order: self.decode_order,
        };
        let mut inst = CellInstance::common_beam(&g, &d, params);
        inst.order = order;
        inst
    }
}

#[derive(Debug, Serialize)]
struct AllocationRow {
    user_id: usize,
    p_w: f64,
    rate_bps: f64,
}

/// Allocation in file order.
pub fn write_allocation<W: Write>(inst: &CellInstance, alloc: &PowerAllocation, out: W) -> Result<()> {
    let p = inst.to_columns(&alloc.p);
    let r = inst.to_columns(&alloc.rates);
    let mut w = csv::Writer::from_writer(out);
    for (user_id, (p_w, rate_bps)) in p.into_iter().zip(r).enumerate() {
        w.serialize(AllocationRow { user_id, p_w, rate_bps })?;
    }
    w.flush()?;
    Ok(())
}

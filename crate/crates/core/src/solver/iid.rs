//! Minimum mean time to absorption over i.i.d. channels.
//!
//! With GOOD probability `λ`, the two one-slot options at a transient state
//! `(b, m)` cost
//!
//! ```text
//! receive:  1 + λ·k*(b-1, R1) + (1-λ)·k*(b-1, m+R0)
//! harvest:  1/λ + k*(b+e, m)
//! ```
//!
//! where harvesting repeats until a GOOD slot arrives. Two families of states
//! have closed forms and seed the recursion:
//!
//! * full information, `b < E_d`: only harvesting helps, and the receiver needs
//!   `i = ceil((E_d - b)/e)` GOOD slots, so `k* = i/λ`;
//! * `b ≥ E_d + j` with `j` grid units missing: receiving every slot is
//!   optimal and `k* = Σ_{i=1}^{j} (1-λ)^{i-1}`.
//!
//! The remaining states are filled with the information level descending from
//! `R1 - R0` and, within a level, the battery descending from `E_d + j - 1`.
//! Every lookup then hits an entry that is already final.

use std::io::Write;

use crate::error::{config, Error, Result};
use crate::model::{Action, ChannelModel, InfoGrid, SystemParams};

use super::{fmt_opt, geometric_partial_sum, harvests_needed, ActionTimes, Decision, Entry};

/// Mean time to absorption from `(battery, R1)` when only energy is missing.
/// Zero once `battery ≥ E_d`.
pub fn recharge_time(battery: usize, params: &SystemParams) -> Result<f64> {
    let lambda = iid_lambda(params)?;
    let i = harvests_needed(battery, params.decode_energy, params.harvest_energy);
    if i == 0 {
        return Ok(0.0);
    }
    if lambda <= 0.0 {
        return Err(Error::InfeasibleChannel(
            "no GOOD slot ever arrives to harvest energy".into(),
        ));
    }
    Ok(i as f64 / lambda)
}

/// Mean time to absorption from a state with surplus energy (`b ≥ E_d + j`)
/// and `missing_units` grid units of information still missing.
pub fn energy_rich_time(missing_units: usize, lambda: f64) -> f64 {
    geometric_partial_sum(missing_units, lambda)
}

/// Optimal decisions and mean times for every materialized state.
#[derive(Debug, Clone)]
pub struct DecisionTable {
    params: SystemParams,
    lambda: f64,
    grid: InfoGrid,
    b_max: usize,
    entries: Vec<Entry>,
}

impl DecisionTable {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn grid(&self) -> &InfoGrid {
        &self.grid
    }

    /// Largest battery level stored; larger levels share its row.
    pub fn b_max(&self) -> usize {
        self.b_max
    }

    fn index(&self, battery: usize, level: usize) -> usize {
        battery.min(self.b_max) * (self.grid.n_units() + 1) + level
    }

    fn check_level(&self, battery: usize, level: usize) -> Result<()> {
        if level > self.grid.n_units() {
            return Err(Error::OutOfRange { battery, level });
        }
        Ok(())
    }

    pub fn entry(&self, battery: usize, level: usize) -> Result<&Entry> {
        self.check_level(battery, level)?;
        Ok(&self.entries[self.index(battery, level)])
    }

    /// Minimum mean time to absorption from `(battery, level)`.
    pub fn k_star(&self, battery: usize, level: usize) -> Result<f64> {
        Ok(self.entry(battery, level)?.k_star)
    }

    pub fn decision(&self, battery: usize, level: usize) -> Result<Option<Decision>> {
        Ok(self.entry(battery, level)?.decision)
    }

    /// Action to take, `None` once absorbed.
    pub fn action(&self, battery: usize, level: usize) -> Result<Option<Action>> {
        Ok(self.decision(battery, level)?.map(Decision::action))
    }

    /// Re-evaluates both one-slot options at `(battery, level)` from the
    /// solved continuation values.
    pub fn action_times(&self, battery: usize, level: usize) -> Result<ActionTimes> {
        if battery < 1 || battery > self.b_max || level >= self.grid.n_units() {
            return Err(Error::OutOfRange { battery, level });
        }
        let lambda = self.lambda;
        let full = self.grid.full();
        let k = |b: usize, l: usize| self.entries[self.index(b, l)].k_star;
        let e = self.params.harvest_energy as usize;
        Ok(ActionTimes {
            receive: 1.0
                + lambda * k(battery - 1, full)
                + (1.0 - lambda) * k(battery - 1, self.grid.advance(level)),
            harvest: 1.0 / lambda + k(battery + e, level),
        })
    }

    /// Rows `(b, m_bits, entry)` in battery-major order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, &Entry)> + '_ {
        let width = self.grid.n_units() + 1;
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, entry)| (i / width, self.grid.level(i % width), entry))
    }

    /// CSV with columns `b, m_bits, k_star, k_id, k_eh, rho_star`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "m_bits", "k_star", "k_id", "k_eh", "rho_star"])?;
        for (b, m, entry) in self.rows() {
            w.write_record([
                b.to_string(),
                m.to_string(),
                entry.k_star.to_string(),
                fmt_opt(entry.k_receive),
                fmt_opt(entry.k_harvest),
                entry.decision.map(|d| d.label()).unwrap_or("").to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn iid_lambda(params: &SystemParams) -> Result<f64> {
    match params.channel {
        ChannelModel::Iid { good } => Ok(good),
        ChannelModel::Correlated { .. } => Err(config("expected an i.i.d. channel")),
    }
}

/// Solves for the optimal no-split policy over an i.i.d. channel.
pub fn solve(params: &SystemParams) -> Result<DecisionTable> {
    params.validate()?;
    let lambda = iid_lambda(params)?;
    if lambda <= 0.0 {
        return Err(Error::InfeasibleChannel(
            "λ = 0: the battery can never be charged".into(),
        ));
    }
    let grid = params.info_grid();
    let n = grid.n_units();
    let ed = params.decode_energy as usize;
    let e = params.harvest_energy as usize;
    let b_max = ed + n;
    let width = n + 1;
    let mut slots: Vec<Option<Entry>> = vec![None; (b_max + 1) * width];
    let at = |b: usize, l: usize| b.min(b_max) * width + l;

    for b in 0..=b_max {
        slots[at(b, n)] = Some(if b >= ed {
            Entry::ABSORBED
        } else {
            Entry::forced_harvest(recharge_time(b, params)?)
        });
    }
    for j in 1..=n {
        let k = energy_rich_time(j, lambda);
        for b in ed + j..=b_max {
            slots[at(b, n - j)] = Some(Entry {
                k_star: k,
                k_receive: Some(k),
                k_harvest: None,
                decision: Some(Decision::Receive),
            });
        }
    }

    let lookup = |slots: &[Option<Entry>], b: usize, l: usize| -> f64 {
        slots[at(b, l)]
            .unwrap_or_else(|| panic!("state (b={b}, level={l}) read before it was solved"))
            .k_star
    };

    for level in (0..n).rev() {
        let j = n - level;
        for b in (0..ed + j).rev() {
            let harvest = 1.0 / lambda + lookup(&slots, b + e, level);
            let entry = if b == 0 {
                Entry::forced_harvest(harvest)
            } else {
                let receive = 1.0
                    + lambda * lookup(&slots, b - 1, n)
                    + (1.0 - lambda) * lookup(&slots, b - 1, grid.advance(level));
                Entry::choose(receive, harvest)
            };
            slots[at(b, level)] = Some(entry);
        }
    }

    // harvest option at the surplus-energy states, for reporting
    for j in 1..=n {
        for b in ed + j..=b_max {
            let harvest = 1.0 / lambda + lookup(&slots, b + e, n - j);
            if let Some(entry) = slots[at(b, n - j)].as_mut() {
                entry.k_harvest = Some(harvest);
            }
        }
    }

    let entries = slots
        .into_iter()
        .map(|s| s.expect("every state is solved"))
        .collect();
    Ok(DecisionTable {
        params: params.clone(),
        lambda,
        grid,
        b_max,
        entries,
    })
}

//! Minimum mean time to absorption over a Gilbert–Elliott channel.
//!
//! The state gains the previous slot's channel flag `G`, since it predicts
//! the next slot: GOOD follows with probability `λ_G`. The one-slot options
//! are
//!
//! ```text
//! receive, G:   1 + λ_G·k*(b-1, R1, 1) + (1-λ_G)·k*(b-1, m+R0, 0)
//! harvest, G=0: 1/λ0 + k*(b+e, m, 1)
//! harvest, G=1: 1 + λ1·k*(b+e, m, 1) + (1-λ1)·k*(b, m, 0)
//! ```
//!
//! A failed harvest at `G = 1` lands in `(b, m, 0)`, so each state solves its
//! `G = 0` slice first and the `G = 1` slice reads the finished value.

use std::io::Write;

use crate::channel::steady_state;
use crate::error::{config, Error, Result};
use crate::model::{Action, ChannelModel, ChannelState, InfoGrid, SystemParams};

use super::{fmt_opt, geometric_partial_sum, harvests_needed, ActionTimes, Decision, Entry};

#[derive(Debug, Clone, Copy)]
struct Transitions {
    from_bad: f64,
    from_good: f64,
}

impl Transitions {
    fn of(params: &SystemParams) -> Result<Self> {
        match params.channel {
            ChannelModel::Correlated {
                from_bad,
                from_good,
            } => Ok(Transitions {
                from_bad,
                from_good,
            }),
            ChannelModel::Iid { .. } => Err(config("expected a correlated channel")),
        }
    }

    fn good_after(&self, prev: ChannelState) -> f64 {
        match prev {
            ChannelState::Bad => self.from_bad,
            ChannelState::Good => self.from_good,
        }
    }

    /// Mean slots until the next GOOD slot, counted from a GOOD slot.
    fn good_return_time(&self) -> f64 {
        (1.0 + self.from_bad - self.from_good) / self.from_bad
    }
}

fn infeasible() -> Error {
    Error::InfeasibleChannel("λ0 = 0: an empty battery in the BAD state never recharges".into())
}

/// Mean time to absorption from `(battery, R1, prev)` when only energy is
/// missing. Zero once `battery ≥ E_d`.
pub fn recharge_time(battery: usize, prev: ChannelState, params: &SystemParams) -> Result<f64> {
    let tr = Transitions::of(params)?;
    let i = harvests_needed(battery, params.decode_energy, params.harvest_energy);
    if i == 0 {
        return Ok(0.0);
    }
    if tr.from_bad <= 0.0 {
        return Err(infeasible());
    }
    let cycle = tr.good_return_time();
    Ok(match prev {
        ChannelState::Good => i as f64 * cycle,
        ChannelState::Bad => 1.0 / tr.from_bad + (i - 1) as f64 * cycle,
    })
}

/// Mean time to absorption with surplus energy (`b ≥ E_d + j`) and
/// `missing_units` grid units of information missing.
pub fn energy_rich_time(missing_units: usize, prev: ChannelState, params: &SystemParams) -> Result<f64> {
    let tr = Transitions::of(params)?;
    let j = missing_units;
    Ok(match prev {
        ChannelState::Bad => geometric_partial_sum(j, tr.from_bad),
        ChannelState::Good if j <= 1 => j as f64,
        ChannelState::Good => 1.0 + (1.0 - tr.from_good) * geometric_partial_sum(j - 1, tr.from_bad),
    })
}

/// Optimal decisions and mean times over `(b, m, G)`.
#[derive(Debug, Clone)]
pub struct CorrelatedTable {
    params: SystemParams,
    transitions: (f64, f64),
    grid: InfoGrid,
    b_max: usize,
    entries: Vec<Entry>,
}

impl CorrelatedTable {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn grid(&self) -> &InfoGrid {
        &self.grid
    }

    pub fn b_max(&self) -> usize {
        self.b_max
    }

    fn index(&self, battery: usize, level: usize, prev: ChannelState) -> usize {
        (battery.min(self.b_max) * (self.grid.n_units() + 1) + level) * 2 + prev.index()
    }

    pub fn entry(&self, battery: usize, level: usize, prev: ChannelState) -> Result<&Entry> {
        if level > self.grid.n_units() {
            return Err(Error::OutOfRange { battery, level });
        }
        Ok(&self.entries[self.index(battery, level, prev)])
    }

    pub fn k_star(&self, battery: usize, level: usize, prev: ChannelState) -> Result<f64> {
        Ok(self.entry(battery, level, prev)?.k_star)
    }

    pub fn decision(&self, battery: usize, level: usize, prev: ChannelState) -> Result<Option<Decision>> {
        Ok(self.entry(battery, level, prev)?.decision)
    }

    pub fn action(&self, battery: usize, level: usize, prev: ChannelState) -> Result<Option<Action>> {
        Ok(self.decision(battery, level, prev)?.map(Decision::action))
    }

    /// Mean time averaged over the stationary law of the previous channel
    /// state.
    pub fn steady_state_k(&self, battery: usize, level: usize) -> Result<f64> {
        let (phi_bad, phi_good) = steady_state(self.transitions.0, self.transitions.1)?;
        Ok(phi_bad * self.k_star(battery, level, ChannelState::Bad)?
            + phi_good * self.k_star(battery, level, ChannelState::Good)?)
    }

    /// Re-evaluates both one-slot options from the solved continuation values.
    pub fn action_times(&self, battery: usize, level: usize, prev: ChannelState) -> Result<ActionTimes> {
        if battery < 1 || battery > self.b_max || level >= self.grid.n_units() {
            return Err(Error::OutOfRange { battery, level });
        }
        let (from_bad, from_good) = self.transitions;
        let k = |b: usize, l: usize, g: ChannelState| self.entries[self.index(b, l, g)].k_star;
        let e = self.params.harvest_energy as usize;
        let p = match prev {
            ChannelState::Bad => from_bad,
            ChannelState::Good => from_good,
        };
        let receive = 1.0
            + p * k(battery - 1, self.grid.full(), ChannelState::Good)
            + (1.0 - p) * k(battery - 1, self.grid.advance(level), ChannelState::Bad);
        let harvest = match prev {
            ChannelState::Bad => 1.0 / from_bad + k(battery + e, level, ChannelState::Good),
            ChannelState::Good => {
                1.0 + from_good * k(battery + e, level, ChannelState::Good)
                    + (1.0 - from_good) * k(battery, level, ChannelState::Bad)
            }
        };
        Ok(ActionTimes { receive, harvest })
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, ChannelState, &Entry)> + '_ {
        let width = self.grid.n_units() + 1;
        self.entries.iter().enumerate().map(move |(i, entry)| {
            let state = i / 2;
            (
                state / width,
                self.grid.level(state % width),
                ChannelState::ALL[i % 2],
                entry,
            )
        })
    }

    /// CSV with columns `b, m_bits, G, k_star, k_id, k_eh, rho_star`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "m_bits", "G", "k_star", "k_id", "k_eh", "rho_star"])?;
        for (b, m, g, entry) in self.rows() {
            w.write_record([
                b.to_string(),
                m.to_string(),
                g.index().to_string(),
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

/// Solves for the optimal no-split policy over a correlated channel.
pub fn solve(params: &SystemParams) -> Result<CorrelatedTable> {
    params.validate()?;
    let tr = Transitions::of(params)?;
    if tr.from_bad <= 0.0 {
        return Err(infeasible());
    }
    let grid = params.info_grid();
    let n = grid.n_units();
    let ed = params.decode_energy as usize;
    let e = params.harvest_energy as usize;
    let b_max = ed + n;
    let width = n + 1;
    let mut slots: Vec<Option<Entry>> = vec![None; (b_max + 1) * width * 2];
    let at = |b: usize, l: usize, g: ChannelState| (b.min(b_max) * width + l) * 2 + g.index();

    for b in 0..=b_max {
        for g in ChannelState::ALL {
            slots[at(b, n, g)] = Some(if b >= ed {
                Entry::ABSORBED
            } else {
                Entry::forced_harvest(recharge_time(b, g, params)?)
            });
        }
    }
    for j in 1..=n {
        for g in ChannelState::ALL {
            let k = energy_rich_time(j, g, params)?;
            for b in ed + j..=b_max {
                slots[at(b, n - j, g)] = Some(Entry {
                    k_star: k,
                    k_receive: Some(k),
                    k_harvest: None,
                    decision: Some(Decision::Receive),
                });
            }
        }
    }

    let lookup = |slots: &[Option<Entry>], b: usize, l: usize, g: ChannelState| -> f64 {
        slots[at(b, l, g)]
            .unwrap_or_else(|| panic!("state (b={b}, level={l}, G={}) read before it was solved", g.index()))
            .k_star
    };
    let harvest_time = |slots: &[Option<Entry>], b: usize, l: usize, g: ChannelState| -> f64 {
        match g {
            ChannelState::Bad => 1.0 / tr.from_bad + lookup(slots, b + e, l, ChannelState::Good),
            ChannelState::Good => {
                1.0 + tr.from_good * lookup(slots, b + e, l, ChannelState::Good)
                    + (1.0 - tr.from_good) * lookup(slots, b, l, ChannelState::Bad)
            }
        }
    };

    for level in (0..n).rev() {
        let j = n - level;
        for b in (0..ed + j).rev() {
            // BAD first: the GOOD-slice harvest option reads k*(b, m, 0)
            for g in ChannelState::ALL {
                let harvest = harvest_time(&slots, b, level, g);
                let entry = if b == 0 {
                    Entry::forced_harvest(harvest)
                } else {
                    let p = tr.good_after(g);
                    let receive = 1.0
                        + p * lookup(&slots, b - 1, n, ChannelState::Good)
                        + (1.0 - p) * lookup(&slots, b - 1, grid.advance(level), ChannelState::Bad);
                    Entry::choose(receive, harvest)
                };
                slots[at(b, level, g)] = Some(entry);
            }
        }
    }

    for j in 1..=n {
        for b in ed + j..=b_max {
            for g in ChannelState::ALL {
                let harvest = harvest_time(&slots, b, n - j, g);
                if let Some(entry) = slots[at(b, n - j, g)].as_mut() {
                    entry.k_harvest = Some(harvest);
                }
            }
        }
    }

    let entries = slots
        .into_iter()
        .map(|s| s.expect("every state is solved"))
        .collect();
    Ok(CorrelatedTable {
        params: params.clone(),
        transitions: (tr.from_bad, tr.from_good),
        grid,
        b_max,
        entries,
    })
}

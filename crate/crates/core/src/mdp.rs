//! Discounted value iteration over a discretised `(battery, information)`
//! space with power-split actions `ρ ∈ [0, 1]`.
//!
//! Each slot costs one unit of reward until absorption, so `-V` is the
//! expected discounted number of slots. The solver is a consistency check on
//! the exact absorbing-chain tables: restricting the action set to `{0, 1}`
//! should not change the values on the integer lattice.
//!
//! Next states that fall between grid points snap down in both coordinates,
//! so the discretisation never credits energy or information the receiver
//! does not hold.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{config, Error, Result};
use crate::model::{split_rates, ChannelModel, ChannelState, InfoGrid, SystemParams, STATE_EPS};
use crate::solver::{CorrelatedTable, DecisionTable};

/// Value-iteration settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpConfig {
    pub beta: f64,
    /// Strictly increasing split ratios; must contain 0 and 1.
    pub rho_grid: Vec<f64>,
    pub battery_step: f64,
    /// Largest battery level represented; `None` uses `E_d + e + n_units`.
    pub battery_cap: Option<f64>,
    /// Information step; `None` uses `R0`, which puts every grid point on the
    /// information lattice of the no-split chain.
    pub info_step: Option<f64>,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for MdpConfig {
    fn default() -> Self {
        MdpConfig {
            beta: 0.99,
            rho_grid: uniform_rho_grid(101),
            battery_step: 1.0,
            battery_cap: None,
            info_step: None,
            tol: 1e-8,
            max_sweeps: 100_000,
        }
    }
}

/// `points` evenly spaced split ratios from 0 to 1.
pub fn uniform_rho_grid(points: usize) -> Vec<f64> {
    let last = points.max(2) - 1;
    (0..=last).map(|i| i as f64 / last as f64).collect()
}

impl MdpConfig {
    pub fn with_rho_grid(&self, rho_grid: Vec<f64>) -> Self {
        MdpConfig {
            rho_grid,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(config(format!("discount factor {} outside [0, 1)", self.beta)));
        }
        if !(self.tol > 0.0) {
            return Err(config("tolerance must be positive"));
        }
        let rho = &self.rho_grid;
        if rho.first() != Some(&0.0) || rho.last() != Some(&1.0) {
            return Err(config("split grid must start at 0 and end at 1"));
        }
        if rho.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config("split grid must be strictly increasing"));
        }
        if !(self.battery_step > 0.0) || self.info_step.is_some_and(|s| !(s > 0.0)) {
            return Err(config("grid steps must be positive"));
        }
        Ok(())
    }
}

/// Discretised state space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    pub batteries: Vec<f64>,
    /// Information points, ending exactly at `R1`.
    pub infos: Vec<f64>,
}

impl StateGrid {
    fn new(params: &SystemParams, cfg: &MdpConfig) -> Self {
        let cap = cfg.battery_cap.unwrap_or_else(|| {
            f64::from(params.decode_energy + params.harvest_energy) + params.info_grid().n_units() as f64
        });
        let count = ((cap + STATE_EPS) / cfg.battery_step).floor() as usize;
        let batteries = (0..=count).map(|i| i as f64 * cfg.battery_step).collect();
        let step = cfg.info_step.unwrap_or(params.rate_bad);
        let r1 = params.rate_good;
        let mut infos: Vec<f64> = (0..)
            .map(|i| i as f64 * step)
            .take_while(|m| *m < r1 - STATE_EPS * r1.max(1.0))
            .collect();
        infos.push(r1);
        StateGrid { batteries, infos }
    }

    pub fn len(&self) -> usize {
        self.batteries.len() * self.infos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, b: usize, m: usize) -> usize {
        b * self.infos.len() + m
    }

    fn snap_battery(&self, battery: f64, step: f64) -> usize {
        (((battery + STATE_EPS) / step).floor() as usize).min(self.batteries.len() - 1)
    }

    fn snap_info(&self, info: f64) -> usize {
        // infos is sorted; take the last point not above `info`
        self.infos.partition_point(|&m| m <= info + STATE_EPS * info.max(1.0)) - 1
    }
}

/// Result of [`value_iteration`].
#[derive(Debug, Clone)]
pub struct MdpSolution {
    pub grid: StateGrid,
    /// `values[b * infos.len() + m]`.
    pub values: Vec<f64>,
    /// Maximising split ratio; `None` at absorbing states.
    pub policy: Vec<Option<f64>>,
    /// Sup-norm change of every sweep.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl MdpSolution {
    pub fn value(&self, battery: usize, info: usize) -> f64 {
        self.values[self.grid.index(battery, info)]
    }

    pub fn rho(&self, battery: usize, info: usize) -> Option<f64> {
        self.policy[self.grid.index(battery, info)]
    }

    /// Value at an arbitrary state, snapped down onto the grid.
    pub fn value_at(&self, battery: f64, info: f64, battery_step: f64) -> f64 {
        self.value(self.grid.snap_battery(battery, battery_step), self.grid.snap_info(info))
    }

    /// `Err(NoConvergence)` when the sweep budget ran out first.
    pub fn check_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NoConvergence {
                residual: self.residuals.last().copied().unwrap_or(f64::INFINITY),
                sweeps: self.residuals.len(),
            })
        }
    }

    /// CSV with columns `b,m,V,rho`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "m", "V", "rho"])?;
        for (bi, b) in self.grid.batteries.iter().enumerate() {
            for (mi, m) in self.grid.infos.iter().enumerate() {
                let rho = self.rho(bi, mi).map(|r| r.to_string()).unwrap_or_default();
                w.write_record([b.to_string(), m.to_string(), self.value(bi, mi).to_string(), rho])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Successor indices `(good, bad)` of one action.
type Successors = (usize, usize);

fn is_absorbing(battery: f64, info: f64, params: &SystemParams) -> bool {
    battery >= f64::from(params.decode_energy) - STATE_EPS && info >= params.rate_good - STATE_EPS * params.rate_good.max(1.0)
}

/// Returns `true` when `a` should replace the incumbent `b` as the argmax of
/// equal value: `ρ ∈ {0, 1}` first, then the smaller ratio.
fn preferred(a: f64, b: f64) -> bool {
    let edge = |r: f64| r == 0.0 || r == 1.0;
    match (edge(a), edge(b)) {
        (true, false) => true,
        (false, true) => false,
        _ => a < b,
    }
}

const ARGMAX_TIE: f64 = 1e-12;

/// Discounted value iteration on an i.i.d. channel.
///
/// Running out of sweeps is not an error here; inspect
/// [`MdpSolution::converged`] or call [`MdpSolution::check_converged`].
pub fn value_iteration(params: &SystemParams, cfg: &MdpConfig) -> Result<MdpSolution> {
    params.validate()?;
    cfg.validate()?;
    let lambda = match params.channel {
        ChannelModel::Iid { good } => good,
        ChannelModel::Correlated { .. } => {
            return Err(config("value iteration supports i.i.d. channels only"))
        }
    };
    let grid = StateGrid::new(params, cfg);
    let e = f64::from(params.harvest_energy);
    let rates: Vec<(f64, f64)> = cfg.rho_grid.iter().map(|&r| split_rates(r, params)).collect();

    // For each state, the feasible actions and their successors.
    let mut actions: Vec<Vec<(f64, Successors)>> = Vec::with_capacity(grid.len());
    for &b in &grid.batteries {
        for &m in &grid.infos {
            if is_absorbing(b, m, params) {
                actions.push(Vec::new());
                continue;
            }
            let mut here = Vec::new();
            for (&rho, &(low, high)) in cfg.rho_grid.iter().zip(&rates) {
                let spend = if rho < 1.0 { 1.0 } else { 0.0 };
                if b < spend - STATE_EPS {
                    continue;
                }
                let good = grid.index(
                    grid.snap_battery(b - spend + rho * e, cfg.battery_step),
                    grid.snap_info((m + high).min(params.rate_good)),
                );
                let bad = grid.index(
                    grid.snap_battery(b - spend, cfg.battery_step),
                    grid.snap_info((m + low).min(params.rate_good)),
                );
                here.push((rho, (good, bad)));
            }
            actions.push(here);
        }
    }

    let best = |values: &[f64], acts: &[(f64, Successors)]| -> (f64, Option<f64>) {
        let mut best: Option<(f64, f64)> = None;
        for &(rho, (good, bad)) in acts {
            let q = -1.0 + cfg.beta * (lambda * values[good] + (1.0 - lambda) * values[bad]);
            best = match best {
                None => Some((q, rho)),
                Some((bq, _)) if q > bq + ARGMAX_TIE => Some((q, rho)),
                Some((bq, br)) if q >= bq - ARGMAX_TIE && preferred(rho, br) => Some((q.max(bq), rho)),
                keep => keep,
            };
        }
        match best {
            Some((q, rho)) => (q, Some(rho)),
            None => (0.0, None),
        }
    };

    let mut values = vec![0.0; grid.len()];
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_sweeps {
        let next: Vec<f64> = actions.par_iter().map(|acts| best(&values, acts).0).collect();
        let residual = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        residuals.push(residual);
        if residual <= cfg.tol {
            converged = true;
            break;
        }
    }
    let policy = actions.iter().map(|acts| best(&values, acts).1).collect();
    Ok(MdpSolution {
        grid,
        values,
        policy,
        residuals,
        converged,
    })
}

/// Largest improvement of the full split grid over the no-split actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoSplitGap {
    /// Over grid states with integer battery and information on the
    /// no-split information lattice.
    pub lattice: f64,
    /// Over every grid state.
    pub all_states: f64,
}

/// Solves with `cfg.rho_grid` and with `{0, 1}` and compares the values.
pub fn no_split_gap(params: &SystemParams, cfg: &MdpConfig) -> Result<NoSplitGap> {
    let full = value_iteration(params, cfg)?;
    full.check_converged()?;
    let binary = value_iteration(params, &cfg.with_rho_grid(vec![0.0, 1.0]))?;
    binary.check_converged()?;
    let lattice = params.info_grid();
    let mut gap = NoSplitGap {
        lattice: 0.0,
        all_states: 0.0,
    };
    for (bi, &b) in full.grid.batteries.iter().enumerate() {
        for (mi, &m) in full.grid.infos.iter().enumerate() {
            let d = full.value(bi, mi) - binary.value(bi, mi);
            gap.all_states = gap.all_states.max(d);
            if (b - b.round()).abs() < STATE_EPS && lattice.index_of(m).is_some() {
                gap.lattice = gap.lattice.max(d);
            }
        }
    }
    Ok(gap)
}

/// One-step comparison of a split action against receiving outright, both
/// followed by the optimal no-split policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCheck {
    /// Mean time when splitting with `ρ` for one slot.
    pub split: f64,
    /// Mean time when receiving (`ρ = 0`) for one slot.
    pub receive: f64,
    /// Optimal no-split mean time of the state.
    pub k_star: f64,
}

impl SplitCheck {
    /// Splitting is no better than receiving.
    pub fn receive_dominates(&self) -> bool {
        self.split >= self.receive
    }
}

/// Lattice landing point of a split slot: the battery floors to an integer
/// and the information snaps down to the grid.
fn split_landing(
    battery: usize,
    level: usize,
    rho: f64,
    good: bool,
    grid: &InfoGrid,
    params: &SystemParams,
) -> (usize, usize) {
    let (low, high) = split_rates(rho, params);
    let e = f64::from(params.harvest_energy);
    let harvested = if good { rho * e } else { 0.0 };
    let b = ((battery - 1) as f64 + harvested + STATE_EPS).floor() as usize;
    let info = grid.level(level) + if good { high } else { low };
    let l = if info >= params.rate_good - STATE_EPS * params.rate_good.max(1.0) {
        grid.full()
    } else {
        (((info + STATE_EPS) / params.rate_bad).floor() as usize).min(grid.full())
    };
    (b, l)
}

fn check_split_args(battery: usize, level: usize, rho: f64, grid: &InfoGrid) -> Result<()> {
    if battery < 1 || level >= grid.full() {
        return Err(Error::OutOfRange { battery, level });
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(config(format!("split ratio {rho} outside [0, 1]")));
    }
    Ok(())
}

/// Split check on an i.i.d. table at a state with `b ≥ 1` and `m < R1`.
pub fn split_check(table: &DecisionTable, battery: usize, level: usize, rho: f64) -> Result<SplitCheck> {
    let params = table.params();
    let grid = table.grid();
    check_split_args(battery, level, rho, grid)?;
    let lambda = params.channel.good_probability(None)?;
    let (bg, lg) = split_landing(battery, level, rho, true, grid, params);
    let (bb, lb) = split_landing(battery, level, rho, false, grid, params);
    let split = 1.0 + lambda * table.k_star(bg, lg)? + (1.0 - lambda) * table.k_star(bb, lb)?;
    Ok(SplitCheck {
        split,
        receive: table.action_times(battery, level)?.receive,
        k_star: table.k_star(battery, level)?,
    })
}

/// Split check on a correlated table, given the previous channel state.
pub fn split_check_correlated(
    table: &CorrelatedTable,
    battery: usize,
    level: usize,
    prev: ChannelState,
    rho: f64,
) -> Result<SplitCheck> {
    let params = table.params();
    let grid = table.grid();
    check_split_args(battery, level, rho, grid)?;
    let p = params.channel.good_probability(Some(prev))?;
    let (bg, lg) = split_landing(battery, level, rho, true, grid, params);
    let (bb, lb) = split_landing(battery, level, rho, false, grid, params);
    let split = 1.0
        + p * table.k_star(bg, lg, ChannelState::Good)?
        + (1.0 - p) * table.k_star(bb, lb, ChannelState::Bad)?;
    Ok(SplitCheck {
        split,
        receive: table.action_times(battery, level, prev)?.receive,
        k_star: table.k_star(battery, level, prev)?,
    })
}

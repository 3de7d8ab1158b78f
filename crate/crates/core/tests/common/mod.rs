//! Independent closed forms and recursions shared by the integration suites.
#![allow(dead_code)]

use swipt_harq::model::{ChannelModel, ChannelState, SystemParams};
use swipt_harq::simulate::oracle_k;
use swipt_harq::solver::{correlated, iid};

/// Relative error, with absolute error below 1.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn units(ed: u32, e: u32, b: usize) -> usize {
    (ed as usize).saturating_sub(b).div_ceil(e as usize)
}

/// Which closed-form family a state belongs to, for error reporting.
#[derive(Debug, Default, Clone, Copy)]
pub struct FormErrors {
    /// Full information, battery short: `ceil((E_d - b)/e)` GOOD harvests.
    pub recharge: f64,
    /// Surplus energy, `j` units missing: truncated geometric sum.
    pub energy_rich: f64,
    /// Every transient state: one-step optimality recursion.
    pub recursion: f64,
}

impl FormErrors {
    pub fn max(&self) -> f64 {
        self.recharge.max(self.energy_rich).max(self.recursion)
    }

    pub fn merge(&mut self, other: FormErrors) {
        self.recharge = self.recharge.max(other.recharge);
        self.energy_rich = self.energy_rich.max(other.energy_rich);
        self.recursion = self.recursion.max(other.recursion);
    }
}

pub fn iid_form_errors(p: &SystemParams) -> FormErrors {
    let lambda = match p.channel {
        ChannelModel::Iid { good } => good,
        _ => panic!("i.i.d. channel expected"),
    };
    let (ed, e) = (p.decode_energy, p.harvest_energy);
    let t = iid::solve(p).unwrap();
    let full = t.grid().full();
    let k = |b: usize, l: usize| t.k_star(b, l).unwrap();
    let mut err = FormErrors::default();
    for b in 0..=t.b_max() {
        err.recharge = err.recharge.max(rel(k(b, full), units(ed, e, b) as f64 / lambda));
    }
    for j in 1..=t.grid().n_units() {
        let want = (1.0 - (1.0 - lambda).powi(j as i32)) / lambda;
        for b in ed as usize + j..=t.b_max() {
            err.energy_rich = err.energy_rich.max(rel(k(b, full - j), want));
        }
    }
    for level in 0..full {
        for b in 0..=t.b_max() {
            let harvest = 1.0 / lambda + k(b + e as usize, level);
            let want = if b == 0 {
                harvest
            } else {
                let receive = 1.0 + lambda * k(b - 1, full) + (1.0 - lambda) * k(b - 1, t.grid().advance(level));
                receive.min(harvest)
            };
            err.recursion = err.recursion.max(rel(k(b, level), want));
        }
    }
    err
}

pub fn correlated_form_errors(p: &SystemParams) -> FormErrors {
    let (l0, l1) = match p.channel {
        ChannelModel::Correlated { from_bad, from_good } => (from_bad, from_good),
        _ => panic!("correlated channel expected"),
    };
    let (ed, e) = (p.decode_energy, p.harvest_energy);
    let t = correlated::solve(p).unwrap();
    let full = t.grid().full();
    let (g, bd) = (ChannelState::Good, ChannelState::Bad);
    let k = |b: usize, l: usize, s: ChannelState| t.k_star(b, l, s).unwrap();
    let good_to_good = 1.0 + (1.0 - l1) / l0;
    let mut err = FormErrors::default();
    for b in 0..=t.b_max() {
        let i = units(ed, e, b) as f64;
        let from_bad = if i == 0.0 { 0.0 } else { 1.0 / l0 + (i - 1.0) * good_to_good };
        err.recharge = err
            .recharge
            .max(rel(k(b, full, g), i * good_to_good))
            .max(rel(k(b, full, bd), from_bad));
    }
    for j in 1..=t.grid().n_units() {
        let bad = (1.0 - (1.0 - l0).powi(j as i32)) / l0;
        let good = 1.0 + (1.0 - l1) * (1.0 - (1.0 - l0).powi(j as i32 - 1)) / l0;
        for b in ed as usize + j..=t.b_max() {
            err.energy_rich = err
                .energy_rich
                .max(rel(k(b, full - j, bd), bad))
                .max(rel(k(b, full - j, g), good));
        }
    }
    for level in 0..full {
        for b in 0..=t.b_max() {
            for (prev, pg) in [(bd, l0), (g, l1)] {
                let harvest = match prev {
                    ChannelState::Bad => 1.0 / l0 + k(b + e as usize, level, g),
                    ChannelState::Good => 1.0 + l1 * k(b + e as usize, level, g) + (1.0 - l1) * k(b, level, bd),
                };
                let want = if b == 0 {
                    harvest
                } else {
                    let receive = 1.0 + pg * k(b - 1, full, g) + (1.0 - pg) * k(b - 1, t.grid().advance(level), bd);
                    receive.min(harvest)
                };
                err.recursion = err.recursion.max(rel(k(b, level, prev), want));
            }
        }
    }
    err
}

/// `(E_d, e, R0, R1)` with `E_d ≤ 3`, `e ≤ 2` and at most three information units.
pub fn small_shapes() -> Vec<(u32, u32, f64, f64)> {
    let mut out = Vec::new();
    for ed in 1..=3 {
        for e in 1..=2 {
            for (r0, r1) in [(1.0, 1.0), (1.0, 2.0), (1.0, 3.0), (1.5, 3.0), (2.0, 5.0)] {
                out.push((ed, e, r0, r1));
            }
        }
    }
    out
}

pub const SMALL_IID_RATES: [f64; 5] = [0.1, 0.35, 0.5, 0.8, 1.0];
pub const SMALL_CORRELATED_RATES: [(f64, f64); 5] = [(0.2, 0.7), (0.7, 0.2), (0.5, 0.5), (1.0, 0.9), (0.3, 0.0)];

/// Largest relative difference between the dense chain solve and the table
/// over every reachable transient state, plus the stationary start for
/// correlated channels.
pub fn oracle_error(p: &SystemParams) -> f64 {
    let mut worst = 0.0f64;
    if p.channel.is_correlated() {
        let table = correlated::solve(p).unwrap();
        let sol = oracle_k(p, &table).unwrap();
        for (&(b, l, prev), &k) in sol.states() {
            worst = worst.max(rel(k, table.k_star(b, l, prev.unwrap()).unwrap()));
        }
        worst = worst.max(rel(sol.start_k().unwrap(), table.steady_state_k(0, 0).unwrap()));
    } else {
        let table = iid::solve(p).unwrap();
        let sol = oracle_k(p, &table).unwrap();
        for (&(b, l, _), &k) in sol.states() {
            worst = worst.max(rel(k, table.k_star(b, l).unwrap()));
        }
    }
    worst
}

/// Largest absolute difference between the correlated table at `λ0 = λ1 = λ`
/// and the i.i.d. table, over every state and both channel flags.
pub fn degeneration_error(p: &SystemParams) -> f64 {
    let lambda = p.channel.good_probability(None).unwrap();
    let a = iid::solve(p).unwrap();
    let c = correlated::solve(&p.with_channel(ChannelModel::Correlated { from_bad: lambda, from_good: lambda })).unwrap();
    let mut worst = 0.0f64;
    for b in 0..=a.b_max() {
        for l in 0..=a.grid().full() {
            for s in ChannelState::ALL {
                worst = worst.max((a.k_star(b, l).unwrap() - c.k_star(b, l, s).unwrap()).abs());
            }
        }
    }
    worst
}

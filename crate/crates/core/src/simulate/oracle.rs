//! Exact mean times to absorption by direct linear algebra.
//!
//! For a fixed decision rule the receiver is an absorbing Markov chain. The
//! oracle enumerates every transient lattice state reachable from the empty
//! receiver, builds the transient block `Q` of the transition matrix and solves
//! `(I - Q) k = 1` with a dense LU factorisation. It shares no code with the
//! recursive solvers, so it serves as an independent check on them and as the
//! exact value for baselines that have no closed form.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::channel::steady_state;
use crate::error::{config, Error, Result};
use crate::model::{ChannelModel, ChannelState, SystemParams};
use crate::policies::Policy;
use crate::solver::{CorrelatedTable, Decision, DecisionTable};

/// Refuse systems larger than this many transient states.
pub const MAX_STATES: usize = 4096;

/// A stationary HARQ decision rule on the `(battery, level, prev)` lattice.
pub trait LatticeRule {
    /// Probability of harvesting in the coming slot at a transient state.
    fn harvest_probability(&self, battery: usize, level: usize, prev: Option<ChannelState>) -> Result<f64>;
}

fn from_decision(decision: Option<Decision>, battery: usize, level: usize) -> Result<f64> {
    match decision {
        Some(Decision::Harvest) => Ok(1.0),
        Some(Decision::Receive | Decision::Tie) => Ok(0.0),
        None => Err(Error::OutOfRange { battery, level }),
    }
}

impl LatticeRule for DecisionTable {
    fn harvest_probability(&self, battery: usize, level: usize, _prev: Option<ChannelState>) -> Result<f64> {
        from_decision(self.decision(battery, level)?, battery, level)
    }
}

impl LatticeRule for CorrelatedTable {
    fn harvest_probability(&self, battery: usize, level: usize, prev: Option<ChannelState>) -> Result<f64> {
        let prev = prev.ok_or(Error::MissingChannelState)?;
        from_decision(self.decision(battery, level, prev)?, battery, level)
    }
}

impl LatticeRule for (&Policy, &SystemParams) {
    fn harvest_probability(&self, battery: usize, level: usize, prev: Option<ChannelState>) -> Result<f64> {
        self.0
            .harvest_probability(battery, level, prev, self.1)?
            .ok_or_else(|| config(format!("{} has no lattice rule at ({battery}, {level})", self.0)))
    }
}

/// Lattice state `(battery, level, prev)`; `prev` is `None` on i.i.d. channels.
pub type LatticeState = (usize, usize, Option<ChannelState>);

/// Exact mean times to absorption of every reachable transient state.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    channel: ChannelModel,
    times: HashMap<LatticeState, f64>,
    absorbing: fn(&LatticeState, &SystemParams) -> bool,
    params: SystemParams,
}

impl OracleSolution {
    /// Mean time from a state: zero when absorbing, `None` when the state was
    /// not reached from the start states.
    pub fn k(&self, battery: usize, level: usize, prev: Option<ChannelState>) -> Option<f64> {
        let prev = if self.channel.is_correlated() { prev } else { None };
        let state = (battery, level, prev);
        if (self.absorbing)(&state, &self.params) {
            return Some(0.0);
        }
        self.times.get(&state).copied()
    }

    /// Mean time from the empty receiver; correlated channels average over the
    /// stationary law of the previous slot.
    pub fn start_k(&self) -> Result<f64> {
        let missing = || config("start state was not solved");
        match self.channel {
            ChannelModel::Iid { .. } => self.k(0, 0, None).ok_or_else(missing),
            ChannelModel::Correlated {
                from_bad,
                from_good,
            } => {
                let (phi_bad, phi_good) = steady_state(from_bad, from_good)?;
                let bad = self.k(0, 0, Some(ChannelState::Bad)).ok_or_else(missing)?;
                let good = self.k(0, 0, Some(ChannelState::Good)).ok_or_else(missing)?;
                Ok(phi_bad * bad + phi_good * good)
            }
        }
    }

    /// Number of transient states in the system.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = (&LatticeState, &f64)> {
        self.times.iter()
    }
}

fn start_states(params: &SystemParams) -> Vec<LatticeState> {
    match params.channel {
        ChannelModel::Iid { .. } => vec![(0, 0, None)],
        ChannelModel::Correlated { .. } => ChannelState::ALL.iter().map(|&g| (0, 0, Some(g))).collect(),
    }
}

fn prev_after(params: &SystemParams, g: ChannelState) -> Option<ChannelState> {
    params.channel.is_correlated().then_some(g)
}

/// Breadth-first enumeration of the transient states reachable from the empty
/// receiver, followed by one dense solve.
fn solve_chain<F>(params: &SystemParams, absorbing: fn(&LatticeState, &SystemParams) -> bool, successors: F) -> Result<OracleSolution>
where
    F: Fn(&LatticeState) -> Result<Vec<(LatticeState, f64)>>,
{
    params.validate()?;
    let mut index: HashMap<LatticeState, usize> = HashMap::new();
    let mut order = Vec::new();
    let mut rows: Vec<Vec<(LatticeState, f64)>> = Vec::new();
    let mut queue: VecDeque<LatticeState> = start_states(params).into();
    for s in &queue {
        index.insert(*s, order.len());
        order.push(*s);
    }
    while let Some(state) = queue.pop_front() {
        let next = successors(&state)?;
        for (succ, p) in &next {
            if *p > 0.0 && !absorbing(succ, params) && !index.contains_key(succ) {
                if order.len() >= MAX_STATES {
                    return Err(config(format!("more than {MAX_STATES} transient states")));
                }
                index.insert(*succ, order.len());
                order.push(*succ);
                queue.push_back(*succ);
            }
        }
        rows.push(next);
    }
    // rows were pushed in BFS order, which matches `order`
    let n = order.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (i, next) in rows.iter().enumerate() {
        for (succ, p) in next {
            if let Some(&j) = index.get(succ) {
                a[(i, j)] -= p;
            }
        }
    }
    let lu = a.clone().lu();
    let k = lu
        .solve(&DVector::from_element(n, 1.0))
        .ok_or_else(|| Error::SingularSystem(format!("{n} transient states")))?;
    let residual = (&a * &k - DVector::from_element(n, 1.0)).amax();
    if !k.iter().all(|x| x.is_finite() && *x >= 1.0 - 1e-9) || residual > 1e-6 * k.amax().max(1.0) {
        return Err(Error::SingularSystem(format!(
            "ill-conditioned system over {n} states (residual {residual:e})"
        )));
    }
    Ok(OracleSolution {
        channel: params.channel,
        times: order.into_iter().zip(k.iter().copied()).collect(),
        absorbing,
        params: params.clone(),
    })
}

fn harq_absorbing(state: &LatticeState, params: &SystemParams) -> bool {
    state.0 >= params.decode_energy as usize && state.1 >= params.info_grid().full()
}

fn never_absorbing(_: &LatticeState, _: &SystemParams) -> bool {
    false
}

/// Exact mean times to absorption of a HARQ decision rule.
pub fn oracle_k<R: LatticeRule + ?Sized>(params: &SystemParams, rule: &R) -> Result<OracleSolution> {
    let grid = params.info_grid();
    let e = params.harvest_energy as usize;
    solve_chain(params, harq_absorbing, |&(b, l, prev)| {
        let p_good = params.channel.good_probability(prev)?;
        let q = rule.harvest_probability(b, l, prev)?;
        if !(0.0..=1.0).contains(&q) {
            return Err(config(format!("harvest probability {q} at ({b}, {l})")));
        }
        if q < 1.0 && b == 0 {
            return Err(Error::InsufficientEnergy { battery: 0.0 });
        }
        let good = prev_after(params, ChannelState::Good);
        let bad = prev_after(params, ChannelState::Bad);
        let mut out = Vec::with_capacity(4);
        if q > 0.0 {
            out.push(((b + e, l, good), q * p_good));
            out.push(((b, l, bad), q * (1.0 - p_good)));
        }
        if q < 1.0 {
            out.push(((b - 1, grid.full(), good), (1.0 - q) * p_good));
            out.push(((b - 1, grid.advance(l), bad), (1.0 - q) * (1.0 - p_good)));
        }
        Ok(out)
    })
}

/// Exact mean slots until a simple ARQ receiver decodes. States carry level 0
/// and a successful decode leaves the chain.
pub fn simple_arq_oracle(params: &SystemParams) -> Result<OracleSolution> {
    let threshold = params.decode_energy as usize + 1;
    let e = params.harvest_energy as usize;
    solve_chain(params, never_absorbing, |&(b, _, prev)| {
        let p_good = params.channel.good_probability(prev)?;
        let good = prev_after(params, ChannelState::Good);
        let bad = prev_after(params, ChannelState::Bad);
        Ok(if b >= threshold {
            // a GOOD slot decodes and leaves the transient set
            vec![((b - 1, 0, bad), 1.0 - p_good)]
        } else {
            vec![((b + e, 0, good), p_good), ((b, 0, bad), 1.0 - p_good)]
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver;

    fn iid(ed: u32, e: u32, r0: f64, r1: f64, lambda: f64) -> SystemParams {
        SystemParams::new(ed, e, r0, r1, ChannelModel::Iid { good: lambda }).unwrap()
    }

    #[test]
    fn single_unit_system_by_hand() {
        // E_d = 1, R1 = R0: charge, receive (draining the battery), recharge.
        let p = iid(1, 1, 1.0, 1.0, 0.25);
        let sol = oracle_k(&p, &(&Policy::BatteryFirst, &p)).unwrap();
        assert!((sol.start_k().unwrap() - (4.0 + 1.0 + 4.0)).abs() < 1e-12);
        assert_eq!(sol.k(1, 1, None), Some(0.0));
    }

    #[test]
    fn matches_iid_table() {
        for (r0, lambda) in [(1.0, 0.5), (2.5, 0.3), (5.0, 0.9)] {
            let p = iid(5, 1, r0, 10.0, lambda);
            let table = solver::iid::solve(&p).unwrap();
            let sol = oracle_k(&p, &table).unwrap();
            for (&(b, l, _), k) in sol.states() {
                assert!((k - table.k_star(b, l).unwrap()).abs() < 1e-9, "({b},{l})");
            }
        }
    }

    #[test]
    fn simple_arq_closed_form() {
        // E_d = 1, e = 1: k0 = 1/λ + k1, k1 = 1/λ + k2, k2 = 1 + (1-λ) k1.
        let p = iid(1, 1, 1.0, 1.0, 0.5);
        let sol = simple_arq_oracle(&p).unwrap();
        assert!((sol.k(1, 0, None).unwrap() - 6.0).abs() < 1e-12);
        assert!((sol.start_k().unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn dead_channel_is_singular() {
        let p = iid(2, 1, 1.0, 2.0, 0.0);
        assert!(matches!(
            oracle_k(&p, &(&Policy::InformationFirst, &p)),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn arq_is_not_a_lattice_rule() {
        let p = iid(2, 1, 1.0, 2.0, 0.5);
        assert!(oracle_k(&p, &(&Policy::SimpleArq, &p)).is_err());
    }
}

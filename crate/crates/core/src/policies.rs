//! Decision rules: the solved optimal tables, the no-split baselines and the
//! simple ARQ protocol.
//!
//! Every HARQ rule harvests when the battery is empty or the message is
//! already complete, and receives once the battery exceeds `E_d`. The rules
//! differ only on the remaining states (`1 ≤ b ≤ E_d`, `m < R1`):
//!
//! | policy        | interior choice                       |
//! |---------------|---------------------------------------|
//! | battery-first | harvest while `b < E_d`, then receive |
//! | info-first    | receive                               |
//! | coin toss     | fair coin                             |
//! | Bernoulli(p)  | harvest with probability `p`          |
//!
//! Simple ARQ keeps no partial information: it charges to `E_d + 1` units and
//! then attempts to decode, which succeeds only in a GOOD slot.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{config, Error, Result};
use crate::model::{is_absorbing, ChannelState, ReceiverState, SystemParams, STATE_EPS};
use crate::solver::{CorrelatedTable, Decision, DecisionTable};

/// A solved optimal table of either channel model.
#[derive(Debug, Clone)]
pub enum OptimalTable {
    Iid(Arc<DecisionTable>),
    Correlated(Arc<CorrelatedTable>),
}

impl OptimalTable {
    pub fn solve(params: &SystemParams) -> Result<Self> {
        Ok(if params.channel.is_correlated() {
            OptimalTable::Correlated(Arc::new(crate::solver::correlated::solve(params)?))
        } else {
            OptimalTable::Iid(Arc::new(crate::solver::iid::solve(params)?))
        })
    }

    /// Mean time from an empty receiver, averaged over the stationary channel
    /// law in the correlated case.
    pub fn start_k(&self) -> Result<f64> {
        match self {
            OptimalTable::Iid(t) => t.k_star(0, 0),
            OptimalTable::Correlated(t) => t.steady_state_k(0, 0),
        }
    }

    fn decision(&self, battery: usize, level: usize, prev: Option<ChannelState>) -> Result<Option<Decision>> {
        match self {
            OptimalTable::Iid(t) => t.decision(battery, level),
            OptimalTable::Correlated(t) => t.decision(battery, level, prev.ok_or(Error::MissingChannelState)?),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Policy {
    Optimal(OptimalTable),
    BatteryFirst,
    InformationFirst,
    CoinToss,
    Bernoulli { p: f64 },
    SimpleArq,
}

/// What the receiver does in the coming slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyAction {
    Harvest,
    Receive,
    /// Simple ARQ only: sample the slot and try to decode it on its own.
    AttemptDecode,
}

impl Policy {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Policy::Bernoulli { p })
        } else {
            Err(config(format!("Bernoulli probability {p} outside [0, 1]")))
        }
    }

    /// Parses `optimal`, `bf`, `if`, `ct`, `bernoulli:<p>` or `arq`. The
    /// optimal table is solved for `params`.
    pub fn parse(name: &str, params: &SystemParams) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "optimal" | "opt" => Ok(Policy::Optimal(OptimalTable::solve(params)?)),
            "bf" | "battery-first" => Ok(Policy::BatteryFirst),
            "if" | "information-first" | "info-first" => Ok(Policy::InformationFirst),
            "ct" | "coin-toss" => Ok(Policy::CoinToss),
            "arq" | "simple-arq" => Ok(Policy::SimpleArq),
            other => match other.split_once(':') {
                Some(("bernoulli", p)) => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| config(format!("bad Bernoulli probability in {name:?}")))?;
                    Policy::bernoulli(p)
                }
                _ => Err(config(format!("unknown policy {name:?}"))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            Policy::Optimal(_) => "optimal".into(),
            Policy::BatteryFirst => "BF".into(),
            Policy::InformationFirst => "IF".into(),
            Policy::CoinToss => "CT".into(),
            Policy::Bernoulli { p } => format!("Bernoulli({p})"),
            Policy::SimpleArq => "SimpleARQ".into(),
        }
    }

    pub fn is_harq(&self) -> bool {
        !matches!(self, Policy::SimpleArq)
    }

    /// Probability of harvesting at a lattice state, for HARQ rules.
    ///
    /// Returns `None` at absorbing states and for simple ARQ, which does not
    /// act on the information lattice.
    pub fn harvest_probability(
        &self,
        battery: usize,
        level: usize,
        prev: Option<ChannelState>,
        params: &SystemParams,
    ) -> Result<Option<f64>> {
        let ed = params.decode_energy as usize;
        let full = params.info_grid().full();
        if battery >= ed && level >= full {
            return Ok(None);
        }
        if battery < 1 || level >= full {
            return Ok(Some(1.0));
        }
        if battery > ed {
            return Ok(Some(0.0));
        }
        let p = match self {
            Policy::Optimal(table) => match table.decision(battery, level, prev)? {
                Some(Decision::Harvest) => 1.0,
                Some(_) => 0.0,
                None => return Ok(None),
            },
            Policy::BatteryFirst => {
                if battery < ed {
                    1.0
                } else {
                    0.0
                }
            }
            Policy::InformationFirst => 0.0,
            Policy::CoinToss => 0.5,
            Policy::Bernoulli { p } => *p,
            Policy::SimpleArq => return Ok(None),
        };
        Ok(Some(p))
    }

    /// Chooses the next slot's action at a non-absorbing state.
    pub fn decide<R: Rng + ?Sized>(
        &self,
        state: &ReceiverState,
        params: &SystemParams,
        rng: &mut R,
    ) -> Result<PolicyAction> {
        if let Policy::SimpleArq = self {
            let threshold = params.decode_energy_f64() + 1.0;
            return Ok(if state.battery >= threshold - STATE_EPS {
                PolicyAction::AttemptDecode
            } else {
                PolicyAction::Harvest
            });
        }
        if is_absorbing(state, params) {
            return Err(Error::AbsorbingStart);
        }
        let battery = lattice_battery(state.battery)?;
        let level = params
            .info_grid()
            .index_of(state.info)
            .ok_or_else(|| config(format!("information {} is not on the grid", state.info)))?;
        let p = self
            .harvest_probability(battery, level, state.prev, params)?
            .ok_or(Error::AbsorbingStart)?;
        let harvest = if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            rng.random::<f64>() < p
        };
        Ok(if harvest {
            PolicyAction::Harvest
        } else {
            PolicyAction::Receive
        })
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn lattice_battery(battery: f64) -> Result<usize> {
    let rounded = battery.round();
    if battery < -STATE_EPS || (battery - rounded).abs() > STATE_EPS {
        return Err(config(format!("battery {battery} is not an integer level")));
    }
    Ok(rounded as usize)
}

/// Result of a simple ARQ decoding attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArqOutcome {
    Success,
    /// The packet was dropped; the receiver keeps the remaining energy.
    Drop(ReceiverState),
}

/// One simple ARQ attempt: sampling costs one unit and decoding succeeds iff
/// the slot is GOOD. Energy above `E_d + 1` is retained after a drop.
pub fn simple_arq_attempt(
    state: ReceiverState,
    channel: ChannelState,
    params: &SystemParams,
) -> Result<ArqOutcome> {
    if state.battery < params.decode_energy_f64() + 1.0 - STATE_EPS {
        return Err(Error::InsufficientEnergy {
            battery: state.battery,
        });
    }
    if channel.is_good() {
        return Ok(ArqOutcome::Success);
    }
    let prev = if params.channel.is_correlated() {
        Some(channel)
    } else {
        state.prev
    };
    Ok(ArqOutcome::Drop(ReceiverState {
        battery: state.battery - 1.0,
        info: 0.0,
        prev,
    }))
}

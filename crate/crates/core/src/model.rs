//! Link parameters, receiver state and the per-slot dynamics.
//!
//! Each slot the receiver picks a power-splitting ratio `ρ ∈ [0, 1]` before it
//! learns the channel state. A fraction `ρ` of the received power goes to the
//! energy harvester and `1 - ρ` to the information decoder:
//!
//! * the battery gains `ρ·e` units in a GOOD slot, nothing in a BAD one, and
//!   pays one unit whenever the transceiver runs (`ρ ≠ 1`);
//! * the accumulated mutual information grows by `R_H(ρ)` (GOOD) or `R_L(ρ)`
//!   (BAD) and saturates at the encoding rate `R1`.
//!
//! The chain is absorbed once the battery holds `E_d` units and the
//! information reached `R1`.

use crate::error::{config, Error, Result};

/// Tolerance used when comparing continuous state components.
pub(crate) const STATE_EPS: f64 = 1e-9;

/// Channel state of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelState {
    Bad,
    Good,
}

impl ChannelState {
    pub const ALL: [ChannelState; 2] = [ChannelState::Bad, ChannelState::Good];

    pub fn is_good(self) -> bool {
        self == ChannelState::Good
    }

    /// `0` for BAD, `1` for GOOD.
    pub fn index(self) -> usize {
        match self {
            ChannelState::Bad => 0,
            ChannelState::Good => 1,
        }
    }

    pub fn from_good(good: bool) -> Self {
        if good {
            ChannelState::Good
        } else {
            ChannelState::Bad
        }
    }
}

/// Statistics of the two-state channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// Independent slots, GOOD with probability `good`.
    Iid { good: f64 },
    /// Two-state Markov (Gilbert–Elliott) channel with
    /// `Pr[G_t = 1 | G_{t-1} = 0] = from_bad` and
    /// `Pr[G_t = 1 | G_{t-1} = 1] = from_good`.
    Correlated { from_bad: f64, from_good: f64 },
}

impl ChannelModel {
    pub fn is_correlated(&self) -> bool {
        matches!(self, ChannelModel::Correlated { .. })
    }

    /// Probability that the next slot is GOOD given the previous state.
    ///
    /// The previous state is ignored for i.i.d. channels and required for
    /// correlated ones.
    pub fn good_probability(&self, prev: Option<ChannelState>) -> Result<f64> {
        match (*self, prev) {
            (ChannelModel::Iid { good }, _) => Ok(good),
            (ChannelModel::Correlated { from_bad, .. }, Some(ChannelState::Bad)) => Ok(from_bad),
            (ChannelModel::Correlated { from_good, .. }, Some(ChannelState::Good)) => Ok(from_good),
            (ChannelModel::Correlated { .. }, None) => Err(Error::MissingChannelState),
        }
    }

    fn validate(&self) -> Result<()> {
        let probs: &[(&str, f64)] = match self {
            ChannelModel::Iid { good } => &[("λ", *good)],
            ChannelModel::Correlated {
                from_bad,
                from_good,
            } => &[("λ0", *from_bad), ("λ1", *from_good)],
        };
        for (name, p) in probs {
            if !(0.0..=1.0).contains(p) {
                return Err(config(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }
}

/// Noise-normalized transmit power and the channel power gains of the two
/// states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub power: f64,
    pub gain_bad: f64,
    pub gain_good: f64,
}

impl LinkBudget {
    /// Shannon rates `(R0, R1)` of the BAD and GOOD states.
    pub fn rates(&self) -> (f64, f64) {
        (
            (1.0 + self.power * self.gain_bad).log2(),
            (1.0 + self.power * self.gain_good).log2(),
        )
    }
}

/// Physical constants of the link.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// `E_d`: energy units needed for a decoding attempt.
    pub decode_energy: u32,
    /// `e`: energy units harvested in a GOOD slot at `ρ = 1`.
    pub harvest_energy: u32,
    /// `R0`: bits per slot in the BAD state.
    pub rate_bad: f64,
    /// `R1`: bits per slot in the GOOD state, also the encoding rate.
    pub rate_good: f64,
    pub channel: ChannelModel,
}

impl SystemParams {
    pub fn new(
        decode_energy: u32,
        harvest_energy: u32,
        rate_bad: f64,
        rate_good: f64,
        channel: ChannelModel,
    ) -> Result<Self> {
        let params = SystemParams {
            decode_energy,
            harvest_energy,
            rate_bad,
            rate_good,
            channel,
        };
        params.validate()?;
        Ok(params)
    }

    /// Derives `R0` and `R1` from a link budget. When `explicit_rates` is
    /// given it must agree with the derived rates to within `1e-12`.
    pub fn from_link_budget(
        decode_energy: u32,
        harvest_energy: u32,
        budget: LinkBudget,
        channel: ChannelModel,
        explicit_rates: Option<(f64, f64)>,
    ) -> Result<Self> {
        if !(budget.power > 0.0 && budget.gain_bad > 0.0 && budget.gain_good > 0.0) {
            return Err(config("transmit power and channel gains must be positive"));
        }
        let (rate_bad, rate_good) = budget.rates();
        if let Some((r0, r1)) = explicit_rates {
            if (r0 - rate_bad).abs() > 1e-12 || (r1 - rate_good).abs() > 1e-12 {
                return Err(config(format!(
                    "explicit rates ({r0}, {r1}) disagree with the link budget ({rate_bad}, {rate_good})"
                )));
            }
        }
        Self::new(decode_energy, harvest_energy, rate_bad, rate_good, channel)
    }

    pub fn validate(&self) -> Result<()> {
        if self.decode_energy < 1 {
            return Err(config("E_d must be at least 1"));
        }
        if self.harvest_energy < 1 {
            return Err(config("e must be at least 1"));
        }
        if !(self.rate_bad.is_finite() && self.rate_bad > 0.0) {
            return Err(config(format!("R0 = {} must be positive", self.rate_bad)));
        }
        if !(self.rate_good.is_finite() && self.rate_good >= self.rate_bad) {
            return Err(config(format!(
                "R1 = {} must be at least R0 = {}",
                self.rate_good, self.rate_bad
            )));
        }
        self.channel.validate()
    }

    pub fn with_channel(&self, channel: ChannelModel) -> Self {
        SystemParams {
            channel,
            ..self.clone()
        }
    }

    pub fn info_grid(&self) -> InfoGrid {
        InfoGrid::new(self.rate_bad, self.rate_good)
    }

    pub(crate) fn decode_energy_f64(&self) -> f64 {
        f64::from(self.decode_energy)
    }

    pub(crate) fn harvest_energy_f64(&self) -> f64 {
        f64::from(self.harvest_energy)
    }
}

/// Information levels reachable under no-split operation:
/// `0, R0, 2·R0, …` capped at `R1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoGrid {
    rate_bad: f64,
    rate_good: f64,
    n_units: usize,
}

impl InfoGrid {
    pub fn new(rate_bad: f64, rate_good: f64) -> Self {
        let n_units = ((rate_good / rate_bad) - STATE_EPS).ceil().max(1.0) as usize;
        InfoGrid {
            rate_bad,
            rate_good,
            n_units,
        }
    }

    /// Number of BAD-slot receptions needed for a full message.
    pub fn n_units(&self) -> usize {
        self.n_units
    }

    /// Index of the full-information level.
    pub fn full(&self) -> usize {
        self.n_units
    }

    pub fn level(&self, index: usize) -> f64 {
        if index >= self.n_units {
            self.rate_good
        } else {
            index as f64 * self.rate_bad
        }
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..=self.n_units).map(|i| self.level(i)).collect()
    }

    /// Level index after one BAD-slot reception.
    pub fn advance(&self, index: usize) -> usize {
        (index + 1).min(self.n_units)
    }

    /// Index of the level equal to `info`, if `info` is on the grid.
    pub fn index_of(&self, info: f64) -> Option<usize> {
        let tol = STATE_EPS * self.rate_good.max(1.0);
        if (info - self.rate_good).abs() <= tol {
            return Some(self.n_units);
        }
        let idx = (info / self.rate_bad).round();
        if idx < 0.0 || idx >= self.n_units as f64 {
            return None;
        }
        let idx = idx as usize;
        ((self.level(idx) - info).abs() <= tol).then_some(idx)
    }
}

/// Battery level, accumulated information and (correlated channels only)
/// the previous slot's channel state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverState {
    pub battery: f64,
    pub info: f64,
    pub prev: Option<ChannelState>,
}

impl ReceiverState {
    pub fn new(battery: f64, info: f64) -> Self {
        ReceiverState {
            battery,
            info,
            prev: None,
        }
    }

    pub fn with_prev(self, prev: ChannelState) -> Self {
        ReceiverState {
            prev: Some(prev),
            ..self
        }
    }
}

/// A power-splitting ratio `ρ ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Action(f64);

impl Action {
    /// `ρ = 0`: everything to the information decoder.
    pub const RECEIVE: Action = Action(0.0);
    /// `ρ = 1`: everything to the energy harvester.
    pub const HARVEST: Action = Action(1.0);

    pub fn split(rho: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&rho) {
            Ok(Action(rho))
        } else {
            Err(config(format!("split ratio {rho} outside [0, 1]")))
        }
    }

    pub fn rho(self) -> f64 {
        self.0
    }

    pub fn is_harvest(self) -> bool {
        self.0 == 1.0
    }
}

/// Information rates `(R_L(ρ), R_H(ρ))` obtained in a BAD and a GOOD slot when
/// a fraction `ρ` of the power is harvested.
pub fn split_rates(rho: f64, params: &SystemParams) -> (f64, f64) {
    let rate = |full: f64| (rho + (1.0 - rho) * full.exp2()).log2();
    (rate(params.rate_bad), rate(params.rate_good))
}

/// One slot of receiver dynamics for a given channel outcome.
pub fn step(
    state: ReceiverState,
    action: Action,
    channel: ChannelState,
    params: &SystemParams,
) -> Result<ReceiverState> {
    let rho = action.rho();
    let powered = !action.is_harvest();
    if powered && state.battery < 1.0 - STATE_EPS {
        return Err(Error::InsufficientEnergy {
            battery: state.battery,
        });
    }
    let (rate_low, rate_high) = split_rates(rho, params);
    let (harvested, gained) = if channel.is_good() {
        (rho * params.harvest_energy_f64(), rate_high)
    } else {
        (0.0, rate_low)
    };
    let battery = (state.battery + harvested - if powered { 1.0 } else { 0.0 }).max(0.0);
    let info = (state.info + gained).min(params.rate_good);
    let prev = if params.channel.is_correlated() {
        Some(channel)
    } else {
        state.prev
    };
    Ok(ReceiverState {
        battery,
        info,
        prev,
    })
}

/// Whether the receiver holds enough energy and information to decode.
pub fn is_absorbing(state: &ReceiverState, params: &SystemParams) -> bool {
    state.battery >= params.decode_energy_f64() - STATE_EPS
        && state.info >= params.rate_good - STATE_EPS * params.rate_good.max(1.0)
}

/// Successor distribution of one slot: the GOOD outcome first, then BAD.
/// Coinciding outcomes are merged into a single entry.
pub fn transition_kernel(
    state: ReceiverState,
    action: Action,
    params: &SystemParams,
) -> Result<Vec<(ReceiverState, f64)>> {
    let p_good = params.channel.good_probability(state.prev)?;
    let good = step(state, action, ChannelState::Good, params)?;
    let bad = step(state, action, ChannelState::Bad, params)?;
    if good == bad {
        Ok(vec![(good, 1.0)])
    } else {
        Ok(vec![(good, p_good), (bad, 1.0 - p_good)])
    }
}

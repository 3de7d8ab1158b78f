//! Channel-state generators for the i.i.d. and Gilbert–Elliott models.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ChannelModel, ChannelState};

/// A channel process with its current (most recent) state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProcess {
    model: ChannelModel,
    current: ChannelState,
}

impl ChannelProcess {
    pub fn new(model: ChannelModel, current: ChannelState) -> Self {
        ChannelProcess { model, current }
    }

    /// Starts the process from its stationary distribution. For i.i.d.
    /// channels that is simply one draw.
    pub fn stationary<R: Rng + ?Sized>(model: ChannelModel, rng: &mut R) -> Result<Self> {
        let p_good = match model {
            ChannelModel::Iid { good } => good,
            ChannelModel::Correlated {
                from_bad,
                from_good,
            } => steady_state(from_bad, from_good)?.1,
        };
        let current = ChannelState::from_good(rng.random::<f64>() < p_good);
        Ok(ChannelProcess { model, current })
    }

    pub fn current(&self) -> ChannelState {
        self.current
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    /// Draws the next slot's state and makes it current.
    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> ChannelState {
        let p_good = match self.model {
            ChannelModel::Iid { good } => good,
            ChannelModel::Correlated {
                from_bad,
                from_good,
            } => match self.current {
                ChannelState::Bad => from_bad,
                ChannelState::Good => from_good,
            },
        };
        self.current = ChannelState::from_good(rng.random::<f64>() < p_good);
        self.current
    }
}

/// Stationary distribution `(φ0, φ1)` of the two-state chain with
/// `Pr[G=1 | G'=0] = from_bad` and `Pr[G=1 | G'=1] = from_good`.
///
/// Reducible chains (`λ0 = 0, λ1 = 1`) have no unique stationary law and the
/// alternating chain (`λ0 = 1, λ1 = 0`) is periodic; both are rejected.
pub fn steady_state(from_bad: f64, from_good: f64) -> Result<(f64, f64)> {
    let degenerate = |reason| Error::DegenerateChain {
        from_bad,
        from_good,
        reason,
    };
    if !(0.0..=1.0).contains(&from_bad) || !(0.0..=1.0).contains(&from_good) {
        return Err(degenerate("transition probabilities outside [0, 1]"));
    }
    if from_bad == 0.0 && from_good == 1.0 {
        return Err(degenerate("both states are absorbing"));
    }
    if from_bad == 1.0 && from_good == 0.0 {
        return Err(degenerate("the chain alternates deterministically"));
    }
    let bad = (1.0 - from_good) / (1.0 + from_bad - from_good);
    Ok((bad, 1.0 - bad))
}

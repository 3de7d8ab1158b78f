//! Exact minimum mean time to absorption for no-split policies.
//!
//! Both solvers fill a finite table over battery levels `0..=E_d + n` and the
//! information grid, where `n = ceil(R1 / R0)`. Past `E_d + j` units of energy
//! (with `j` grid units still missing) the mean time no longer depends on the
//! battery, so lookups above the table clamp to its last row.

pub mod correlated;
pub mod iid;

use std::fmt;

use crate::model::Action;

pub use correlated::CorrelatedTable;
pub use iid::DecisionTable;

/// Relative tolerance under which the two actions are considered equally good.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Optimal no-split decision of a transient state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    /// `ρ = 1`.
    Harvest,
    /// `ρ = 0`.
    Receive,
    /// Both actions achieve the minimum; acted on as [`Decision::Receive`].
    Tie,
}

impl Decision {
    pub fn action(self) -> Action {
        match self {
            Decision::Harvest => Action::HARVEST,
            Decision::Receive | Decision::Tie => Action::RECEIVE,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Decision::Harvest => "EH",
            Decision::Receive => "ID",
            Decision::Tie => "TIE",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Mean times to absorption of the two one-slot deviations from the optimal
/// policy at a state: receive now (`ρ = 0`) or harvest now (`ρ = 1`), then
/// follow the optimal policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionTimes {
    pub receive: f64,
    pub harvest: f64,
}

/// One solved state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub k_star: f64,
    /// `None` where receiving is not an option (empty battery, full
    /// information, absorbed).
    pub k_receive: Option<f64>,
    pub k_harvest: Option<f64>,
    /// `None` for absorbing states.
    pub decision: Option<Decision>,
}

impl Entry {
    pub(crate) const ABSORBED: Entry = Entry {
        k_star: 0.0,
        k_receive: None,
        k_harvest: None,
        decision: None,
    };

    pub(crate) fn forced_harvest(k: f64) -> Self {
        Entry {
            k_star: k,
            k_receive: None,
            k_harvest: Some(k),
            decision: Some(Decision::Harvest),
        }
    }

    pub(crate) fn choose(receive: f64, harvest: f64) -> Self {
        let k_star = receive.min(harvest);
        let decision = if (receive - harvest).abs() <= TIE_TOLERANCE * k_star.max(1.0) {
            Decision::Tie
        } else if receive < harvest {
            Decision::Receive
        } else {
            Decision::Harvest
        };
        Entry {
            k_star,
            k_receive: Some(receive),
            k_harvest: Some(harvest),
            decision: Some(decision),
        }
    }
}

/// `Σ_{i=1}^{j} (1-p)^{i-1}`: expected slots to collect `j` missing grid units
/// when every slot is spent receiving and a GOOD slot (probability `p`)
/// completes the message at once.
pub fn geometric_partial_sum(j: usize, p: f64) -> f64 {
    let q = 1.0 - p;
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..j {
        sum += term;
        term *= q;
    }
    sum
}

/// Number of GOOD harvesting slots needed to lift `battery` to `decode_energy`.
pub(crate) fn harvests_needed(battery: usize, decode_energy: u32, harvest_energy: u32) -> usize {
    let missing = (decode_energy as usize).saturating_sub(battery);
    missing.div_ceil(harvest_energy as usize)
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_sums() {
        assert_eq!(geometric_partial_sum(1, 0.3), 1.0);
        assert_eq!(geometric_partial_sum(2, 0.5), 1.5);
        assert_eq!(geometric_partial_sum(3, 0.0), 3.0);
        assert_eq!(geometric_partial_sum(0, 0.5), 0.0);
    }

    #[test]
    fn harvest_counts() {
        assert_eq!(harvests_needed(4, 5, 1), 1);
        assert_eq!(harvests_needed(0, 5, 2), 3);
        assert_eq!(harvests_needed(0, 5, 5), 1);
        assert_eq!(harvests_needed(7, 5, 2), 0);
    }

    #[test]
    fn tie_detection() {
        assert_eq!(Entry::choose(3.0, 3.0 + 1e-12).decision, Some(Decision::Tie));
        assert_eq!(Entry::choose(2.0, 3.0).decision, Some(Decision::Receive));
        assert_eq!(Entry::choose(3.0, 2.0).decision, Some(Decision::Harvest));
        assert_eq!(Decision::Tie.action(), Action::RECEIVE);
    }
}

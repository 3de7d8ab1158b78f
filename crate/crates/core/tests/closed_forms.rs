//! Solver tables against closed forms and one-step recursions written out
//! independently in `common`.

mod common;

use proptest::prelude::*;
use swipt_harq::model::{ChannelModel, ChannelState, SystemParams};
use swipt_harq::solver::correlated;

const TOL: f64 = 1e-12;

/// `(E_d, e, R0, n_units)`.
fn shape() -> impl Strategy<Value = (u32, u32, f64, usize)> {
    (1u32..=8, 1u32..=4, prop::sample::select(vec![0.5, 1.0, 1.5, 2.0, 3.0]), 1usize..=6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn iid_matches_closed_forms((ed, e, r0, n) in shape(), lambda in 0.05f64..=1.0, ragged in any::<bool>()) {
        // a ragged R1 leaves a short last information unit
        let r1 = if ragged { r0 * (n as f64 - 0.5).max(1.0) } else { r0 * n as f64 };
        let p = SystemParams::new(ed, e, r0, r1, ChannelModel::Iid { good: lambda }).unwrap();
        let err = common::iid_form_errors(&p);
        prop_assert!(err.max() <= TOL, "{p:?}: {err:?}");
    }

    #[test]
    fn correlated_matches_closed_forms((ed, e, r0, n) in shape(), l0 in 0.05f64..=1.0, l1 in 0.0f64..=1.0) {
        prop_assume!(!(l0 == 1.0 && l1 == 0.0));
        let p = SystemParams::new(ed, e, r0, r0 * n as f64, ChannelModel::Correlated { from_bad: l0, from_good: l1 }).unwrap();
        let err = common::correlated_form_errors(&p);
        prop_assert!(err.max() <= TOL, "{p:?}: {err:?}");
    }

    #[test]
    fn equal_rates_degenerate_to_iid((ed, e, r0, n) in shape(), lambda in 0.05f64..=1.0) {
        let p = SystemParams::new(ed, e, r0, r0 * n as f64, ChannelModel::Iid { good: lambda }).unwrap();
        prop_assert!(common::degeneration_error(&p) <= TOL);
    }
}

#[test]
fn steady_state_start_averages_channel_states() {
    let p = SystemParams::new(5, 1, 3.0, 10.0, ChannelModel::Correlated { from_bad: 0.7, from_good: 0.2 }).unwrap();
    let t = correlated::solve(&p).unwrap();
    // stationary GOOD share solves φ1 = φ0·λ0 + φ1·λ1
    let phi1 = 0.7 / (1.0 + 0.7 - 0.2);
    let want = (1.0 - phi1) * t.k_star(0, 0, ChannelState::Bad).unwrap() + phi1 * t.k_star(0, 0, ChannelState::Good).unwrap();
    assert!(common::rel(t.steady_state_k(0, 0).unwrap(), want) <= TOL);
}

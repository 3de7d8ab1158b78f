//! Dense absorbing-chain solves against the recursive solvers.

mod common;

use swipt_harq::model::{ChannelModel, SystemParams};
use swipt_harq::policies::Policy;
use swipt_harq::simulate::{oracle_k, simple_arq_oracle};
use swipt_harq::solver::iid;
use swipt_harq::Error;

const TOL: f64 = 1e-9;

#[test]
fn iid_table_equals_chain_solve() {
    for (ed, e, r0, r1) in common::small_shapes() {
        for lambda in common::SMALL_IID_RATES {
            let p = SystemParams::new(ed, e, r0, r1, ChannelModel::Iid { good: lambda }).unwrap();
            assert!(p.info_grid().n_units() <= 3);
            let err = common::oracle_error(&p);
            assert!(err <= TOL, "{p:?}: {err}");
        }
    }
}

#[test]
fn correlated_table_equals_chain_solve() {
    for (ed, e, r0, r1) in common::small_shapes() {
        for (l0, l1) in common::SMALL_CORRELATED_RATES {
            let p = SystemParams::new(ed, e, r0, r1, ChannelModel::Correlated { from_bad: l0, from_good: l1 }).unwrap();
            let err = common::oracle_error(&p);
            assert!(err <= TOL, "{p:?}: {err}");
        }
    }
}

#[test]
fn baselines_are_never_better_than_optimal() {
    for (ed, e, r0, r1) in common::small_shapes() {
        let p = SystemParams::new(ed, e, r0, r1, ChannelModel::Iid { good: 0.4 }).unwrap();
        let best = iid::solve(&p).unwrap().k_star(0, 0).unwrap();
        for name in ["bf", "if", "ct", "bernoulli:0.3"] {
            let policy = Policy::parse(name, &p).unwrap();
            let k = oracle_k(&p, &(&policy, &p)).unwrap().start_k().unwrap();
            assert!(k >= best - TOL * best, "{name} {p:?}: {k} < {best}");
        }
    }
}

#[test]
fn simple_arq_small_instance() {
    // Harvest to two units, then attempt: success needs a GOOD slot, a BAD
    // one costs a unit and forces one more harvest.
    let p = SystemParams::new(1, 1, 1.0, 1.0, ChannelModel::Iid { good: 0.5 }).unwrap();
    let sol = simple_arq_oracle(&p).unwrap();
    assert!((sol.start_k().unwrap() - 8.0).abs() < 1e-12);
    assert!((sol.k(1, 0, None).unwrap() - 6.0).abs() < 1e-12);
}

#[test]
fn unreachable_absorption_is_reported() {
    let p = SystemParams::new(2, 1, 1.0, 2.0, ChannelModel::Iid { good: 0.0 }).unwrap();
    let policy = Policy::BatteryFirst;
    assert!(matches!(oracle_k(&p, &(&policy, &p)), Err(Error::SingularSystem(_))));
}

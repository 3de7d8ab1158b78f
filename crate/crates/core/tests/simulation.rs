//! Monte Carlo estimator: determinism, error scaling and agreement with the
//! exact values.

use rayon::ThreadPoolBuilder;
use swipt_harq::model::{ChannelModel, ReceiverState, SystemParams};
use swipt_harq::policies::Policy;
use swipt_harq::simulate::{estimate, oracle_k, simple_arq_oracle, SimConfig};
use swipt_harq::solver::{correlated, iid};

fn table1(r0: f64) -> SystemParams {
    SystemParams::new(5, 1, r0, 10.0, ChannelModel::Iid { good: 0.5 }).unwrap()
}

#[test]
fn identical_across_thread_counts() {
    let p = SystemParams::new(5, 1, 3.0, 10.0, ChannelModel::Correlated { from_bad: 0.7, from_good: 0.2 }).unwrap();
    let policy = Policy::parse("ct", &p).unwrap();
    let cfg = SimConfig::new(20_000, 42);
    let run = |threads| {
        ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate(&policy, &p, &cfg).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
    assert_ne!(one, estimate(&policy, &p, &SimConfig::new(20_000, 43)).unwrap());
}

#[test]
fn standard_error_shrinks_as_inverse_root() {
    let p = table1(2.0);
    let policy = Policy::BatteryFirst;
    let small = estimate(&policy, &p, &SimConfig::new(10_000, 1)).unwrap();
    let large = estimate(&policy, &p, &SimConfig::new(160_000, 2)).unwrap();
    let ratio = small.stderr / large.stderr;
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    assert!(large.ci95.0 < large.mean && large.mean < large.ci95.1);
}

#[test]
fn optimal_policy_matches_table_value() {
    let p = table1(1.0);
    let k = iid::solve(&p).unwrap().k_star(0, 0).unwrap();
    let policy = Policy::parse("optimal", &p).unwrap();
    let r = estimate(&policy, &p, &SimConfig::new(200_000, 3)).unwrap();
    assert!(r.agrees_with(k, 4.0), "{} ± {} vs {k}", r.mean, r.stderr);
    assert_eq!(r.censored, 0);
}

#[test]
fn simple_arq_matches_chain_solve() {
    let p = SystemParams::new(10, 1, 5.0, 10.0, ChannelModel::Iid { good: 0.3 }).unwrap();
    let exact = simple_arq_oracle(&p).unwrap().start_k().unwrap();
    // published simulated value for this configuration is 47.7832
    assert!((exact - 47.7832).abs() / exact < 2e-3);
    let r = estimate(&Policy::SimpleArq, &p, &SimConfig::new(100_000, 4)).unwrap();
    assert!(r.agrees_with(exact, 4.0), "{} ± {} vs {exact}", r.mean, r.stderr);
}

#[test]
fn bernoulli_harvesting_is_worse_than_optimal_on_correlated_channel() {
    let p = SystemParams::new(5, 1, 3.0, 10.0, ChannelModel::Correlated { from_bad: 0.7, from_good: 0.2 }).unwrap();
    let optimal = correlated::solve(&p).unwrap().steady_state_k(0, 0).unwrap();
    let policy = Policy::bernoulli(0.1).unwrap();
    let exact = oracle_k(&p, &(&policy, &p)).unwrap().start_k().unwrap();
    assert!(exact > optimal);
    let r = estimate(&policy, &p, &SimConfig::new(50_000, 5)).unwrap();
    assert!(r.agrees_with(exact, 4.0));
    assert!(r.mean - 4.0 * r.stderr > optimal);
}

#[test]
fn custom_start_state() {
    let p = table1(1.0);
    let table = iid::solve(&p).unwrap();
    let cfg = SimConfig {
        initial: ReceiverState::new(3.0, 4.0),
        ..SimConfig::new(100_000, 6)
    };
    let r = estimate(&Policy::parse("optimal", &p).unwrap(), &p, &cfg).unwrap();
    assert!(r.agrees_with(table.k_star(3, 4).unwrap(), 4.0));
}

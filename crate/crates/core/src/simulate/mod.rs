//! Monte Carlo episode engine.
//!
//! Episode `i` of a run draws all of its randomness from a ChaCha8 stream
//! keyed by `(master_seed, i)`, and per-episode results are aggregated as
//! exact integer sums. Estimates are therefore bit-identical for a given seed
//! and episode count whatever the number of worker threads.

pub mod oracle;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::ChannelProcess;
use crate::error::{config, Error, Result};
use crate::model::{is_absorbing, step, Action, ChannelModel, ChannelState, ReceiverState, SystemParams};
use crate::policies::{simple_arq_attempt, ArqOutcome, Policy, PolicyAction};

pub use oracle::{oracle_k, simple_arq_oracle, LatticeRule, OracleSolution};

/// Default number of episodes per estimate.
pub const DEFAULT_EPISODES: u64 = 1_000_000;
/// Default per-episode slot cap.
pub const DEFAULT_SLOT_CAP: u64 = 1_000_000_000;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;
const CHUNK: u64 = 2048;

/// Random stream of one episode.
pub fn episode_rng(master_seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(episode);
    rng
}

/// Runs one episode from `initial` and returns the number of slots until the
/// message is decoded.
///
/// For correlated channels `initial.prev` fixes the channel state preceding
/// the first slot; when it is `None` that state is drawn from the stationary
/// distribution.
pub fn run_episode<R: Rng + ?Sized>(
    policy: &Policy,
    params: &SystemParams,
    rng: &mut R,
    initial: ReceiverState,
    slot_cap: u64,
) -> Result<u64> {
    if policy.is_harq() && is_absorbing(&initial, params) {
        return Err(Error::AbsorbingStart);
    }
    let mut state = initial;
    let mut channel = match (params.channel, initial.prev) {
        (ChannelModel::Iid { .. }, _) => {
            state.prev = None;
            ChannelProcess::new(params.channel, ChannelState::Bad)
        }
        (ChannelModel::Correlated { .. }, Some(prev)) => ChannelProcess::new(params.channel, prev),
        (ChannelModel::Correlated { .. }, None) => {
            let process = ChannelProcess::stationary(params.channel, rng)?;
            state.prev = Some(process.current());
            process
        }
    };
    for slot in 1..=slot_cap {
        let action = policy.decide(&state, params, rng)?;
        let g = channel.next(rng);
        state = match action {
            PolicyAction::Harvest => step(state, Action::HARVEST, g, params)?,
            PolicyAction::Receive => step(state, Action::RECEIVE, g, params)?,
            PolicyAction::AttemptDecode => match simple_arq_attempt(state, g, params)? {
                ArqOutcome::Success => return Ok(slot),
                ArqOutcome::Drop(next) => next,
            },
        };
        if policy.is_harq() && is_absorbing(&state, params) {
            return Ok(slot);
        }
    }
    Err(Error::EpisodeCap { cap: slot_cap })
}

/// Monte Carlo run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub episodes: u64,
    pub master_seed: u64,
    pub slot_cap: u64,
    pub initial: ReceiverState,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            episodes: DEFAULT_EPISODES,
            master_seed: 0,
            slot_cap: DEFAULT_SLOT_CAP,
            initial: ReceiverState::new(0.0, 0.0),
        }
    }
}

impl SimConfig {
    pub fn new(episodes: u64, master_seed: u64) -> Self {
        SimConfig {
            episodes,
            master_seed,
            ..SimConfig::default()
        }
    }
}

/// Sample statistics of slots-until-decode.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub policy: String,
    pub mean: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    /// Completed (uncensored) episodes.
    pub episodes: u64,
    /// Episodes stopped by the slot cap, excluded from the statistics.
    pub censored: u64,
    pub master_seed: u64,
}

impl EstimateReport {
    /// Whether `value` lies within `sigmas` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= sigmas * self.stderr
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    count: u64,
    sum: u128,
    sum_sq: u128,
    censored: u64,
}

impl Tally {
    fn merge(self, other: Tally) -> Tally {
        Tally {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            censored: self.censored + other.censored,
        }
    }
}

/// Estimates the mean number of slots until decoding.
pub fn estimate(policy: &Policy, params: &SystemParams, cfg: &SimConfig) -> Result<EstimateReport> {
    params.validate()?;
    if cfg.episodes < 2 {
        return Err(config("at least two episodes are needed for an estimate"));
    }
    let chunks = cfg.episodes.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut tally = Tally::default();
            let end = ((chunk + 1) * CHUNK).min(cfg.episodes);
            for episode in chunk * CHUNK..end {
                let mut rng = episode_rng(cfg.master_seed, episode);
                match run_episode(policy, params, &mut rng, cfg.initial, cfg.slot_cap) {
                    Ok(slots) => {
                        let s = u128::from(slots);
                        tally.count += 1;
                        tally.sum += s;
                        tally.sum_sq += s * s;
                    }
                    Err(Error::EpisodeCap { .. }) => tally.censored += 1,
                    Err(err) => return Err(err),
                }
            }
            Ok(tally)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    if tally.count < 2 {
        return Err(Error::EpisodeCap { cap: cfg.slot_cap });
    }
    let n = tally.count as f64;
    let mean = tally.sum as f64 / n;
    // exact integer numerator of the unbiased variance
    let spread = u128::from(tally.count) * tally.sum_sq - tally.sum * tally.sum;
    let variance = spread as f64 / (n * (n - 1.0));
    let stderr = (variance / n).sqrt();
    Ok(EstimateReport {
        policy: policy.name(),
        mean,
        stderr,
        ci95: (mean - Z95 * stderr, mean + Z95 * stderr),
        episodes: tally.count,
        censored: tally.censored,
        master_seed: cfg.master_seed,
    })
}

/// Column names of [`write_reports_csv`].
pub const REPORT_COLUMNS: [&str; 13] = [
    "policy", "E_d", "e", "R0", "R1", "channel", "lambda0", "lambda1", "mean", "stderr", "episodes",
    "censored", "seed",
];

/// One CSV row per report, with the link parameters alongside.
pub fn write_reports_csv<W: Write>(out: W, rows: &[(SystemParams, EstimateReport)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for (params, report) in rows {
        let (kind, l0, l1) = match params.channel {
            ChannelModel::Iid { good } => ("iid", good, good),
            ChannelModel::Correlated {
                from_bad,
                from_good,
            } => ("corr", from_bad, from_good),
        };
        w.write_record([
            report.policy.clone(),
            params.decode_energy.to_string(),
            params.harvest_energy.to_string(),
            params.rate_bad.to_string(),
            params.rate_good.to_string(),
            kind.to_string(),
            l0.to_string(),
            l1.to_string(),
            report.mean.to_string(),
            report.stderr.to_string(),
            report.episodes.to_string(),
            report.censored.to_string(),
            report.master_seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iid(ed: u32, e: u32, r0: f64, r1: f64, lambda: f64) -> SystemParams {
        SystemParams::new(ed, e, r0, r1, ChannelModel::Iid { good: lambda }).unwrap()
    }

    #[test]
    fn deterministic_walk() {
        let p = iid(1, 1, 1.0, 1.0, 1.0);
        for i in 0..50 {
            let mut rng = episode_rng(9, i);
            let slots = run_episode(&Policy::BatteryFirst, &p, &mut rng, ReceiverState::new(0.0, 0.0), 100).unwrap();
            assert_eq!(slots, 3);
        }
    }

    #[test]
    fn dead_channel_hits_cap() {
        let p = iid(2, 1, 1.0, 2.0, 0.0);
        let mut rng = episode_rng(0, 0);
        let err = run_episode(&Policy::InformationFirst, &p, &mut rng, ReceiverState::new(0.0, 0.0), 10_000);
        assert_eq!(err, Err(Error::EpisodeCap { cap: 10_000 }));

        let cfg = SimConfig {
            slot_cap: 1000,
            ..SimConfig::new(10, 1)
        };
        assert!(matches!(
            estimate(&Policy::InformationFirst, &p, &cfg),
            Err(Error::EpisodeCap { .. })
        ));
    }

    #[test]
    fn absorbing_start_rejected() {
        let p = iid(2, 1, 1.0, 2.0, 0.5);
        let mut rng = episode_rng(0, 0);
        assert_eq!(
            run_episode(&Policy::CoinToss, &p, &mut rng, ReceiverState::new(2.0, 2.0), 100),
            Err(Error::AbsorbingStart)
        );
    }

    #[test]
    fn needs_two_episodes() {
        let p = iid(2, 1, 1.0, 2.0, 0.5);
        assert!(matches!(
            estimate(&Policy::CoinToss, &p, &SimConfig::new(1, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn same_seed_same_report() {
        let p = iid(3, 1, 1.0, 3.0, 0.4);
        let cfg = SimConfig::new(5_000, 42);
        let a = estimate(&Policy::CoinToss, &p, &cfg).unwrap();
        let b = estimate(&Policy::CoinToss, &p, &cfg).unwrap();
        assert_eq!(a, b);
        let c = estimate(&Policy::CoinToss, &p, &SimConfig::new(5_000, 43)).unwrap();
        assert_ne!(a.mean, c.mean);
        assert!(a.ci95.0 < a.mean && a.mean < a.ci95.1);
    }

    #[test]
    fn report_csv() {
        let p = iid(3, 1, 1.0, 3.0, 0.4);
        let r = estimate(&Policy::BatteryFirst, &p, &SimConfig::new(100, 1)).unwrap();
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, &[(p, r)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("policy,E_d,e,R0,R1,channel,lambda0,lambda1,mean,stderr,episodes,censored,seed\nBF,3,1,1,3,iid,0.4,0.4,"));
    }
}

//! The published table and figure experiments: parameter sweeps, exact and
//! Monte Carlo evaluation of each policy, and the checks a reproduction must
//! pass.

use std::fmt;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{config, Result};
use crate::model::{ChannelModel, SystemParams};
use crate::policies::{OptimalTable, Policy};
use crate::simulate::{estimate, oracle_k, simple_arq_oracle, EstimateReport, SimConfig, DEFAULT_SLOT_CAP};

/// Published optimal mean times vs `R0` (`R1 = 10`, `e = 1`, `E_d = 5`,
/// `λ = 0.5`).
pub const TABLE1_OPTIMAL: [f64; 9] = [15.9941, 15.8125, 15.6250, 15.2500, 14.5, 14.5, 14.5, 14.5, 14.5];
/// Published optimal mean times vs `λ` (`R1 = 10`, `R0 = 5`, `e = 2`,
/// `E_d = 5`).
pub const TABLE2_OPTIMAL: [f64; 9] = [40.9, 20.8, 14.0333, 10.6, 8.5, 7.0667, 6.0143, 5.2, 4.5444];
/// Published optimal mean times vs `e` (`R1 = 10`, `R0 = 5`, `λ = 0.3`,
/// `E_d = 10`).
pub const TABLE3_OPTIMAL: [f64; 9] = [40.7, 21.7, 15.0333, 11.7, 11.7, 8.3667, 8.3667, 8.3667, 8.3667];

/// Published simple ARQ simulation means of the three tables.
pub const TABLE1_ARQ: [f64; 9] = [15.9992, 15.9992, 15.9992, 16.0006, 16.0007, 15.9995, 15.9996, 16.0008, 16.0011];
pub const TABLE2_ARQ: [f64; 9] = [87.3286, 31.1145, 17.9077, 12.3428, 9.3310, 7.4591, 6.1846, 5.2607, 4.5568];
pub const TABLE3_ARQ: [f64; 9] = [47.7832, 26.5340, 19.1515, 15.4839, 14.0076, 11.8479, 10.8730, 10.4191, 10.2021];

/// Tolerance on published four-decimal values.
pub const PUBLISHED_TOLERANCE: f64 = 5e-4;
/// Monte Carlo agreement threshold in standard errors.
pub const SIGMAS: f64 = 4.0;
/// Randomized baseline of the figure experiments.
pub const FIGURE_BERNOULLI_P: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Table1,
    Table2,
    Table3,
    Fig3,
    Fig4,
    Fig5,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::Table1,
        ExperimentId::Table2,
        ExperimentId::Table3,
        ExperimentId::Fig3,
        ExperimentId::Fig4,
        ExperimentId::Fig5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Table1 => "table1",
            ExperimentId::Table2 => "table2",
            ExperimentId::Table3 => "table3",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Fig4 => "fig4",
            ExperimentId::Fig5 => "fig5",
        }
    }

    pub fn is_figure(self) -> bool {
        matches!(self, ExperimentId::Fig3 | ExperimentId::Fig4 | ExperimentId::Fig5)
    }

    /// Policies evaluated by the experiment.
    pub fn policy_names(self) -> Vec<String> {
        let mut names: Vec<String> = ["optimal", "bf", "if", "ct"].iter().map(|s| s.to_string()).collect();
        if self.is_figure() {
            names.push(format!("bernoulli:{FIGURE_BERNOULLI_P}"));
        }
        names.push("arq".into());
        names
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| config(format!("unknown experiment {s:?}")))
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub x: f64,
    pub params: SystemParams,
}

/// A one-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// File stem, e.g. `table1` or `fig3a`.
    pub key: String,
    pub title: String,
    /// Swept parameter, as used in column headers (`R0`, `lambda`, ...).
    pub x_name: String,
    pub columns: Vec<Column>,
    /// Published optimal values, where the experiment is a table.
    pub published_optimal: Option<Vec<f64>>,
    pub published_arq: Option<Vec<f64>>,
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    DecodeEnergy,
    HarvestEnergy,
    RateBad,
    RateGood,
    Lambda,
    Lambda0,
    Lambda1,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::DecodeEnergy => "Ed",
            SweepParam::HarvestEnergy => "e",
            SweepParam::RateBad => "R0",
            SweepParam::RateGood => "R1",
            SweepParam::Lambda => "lambda",
            SweepParam::Lambda0 => "lambda0",
            SweepParam::Lambda1 => "lambda1",
        }
    }

    /// Copy of `base` with this parameter set to `x`.
    pub fn apply(self, base: &SystemParams, x: f64) -> Result<SystemParams> {
        let mut p = base.clone();
        let whole = |x: f64| -> Result<u32> {
            if x >= 0.0 && x.fract() == 0.0 && x <= f64::from(u32::MAX) {
                Ok(x as u32)
            } else {
                Err(config(format!("{} must be a whole number, got {x}", self.name())))
            }
        };
        match self {
            SweepParam::DecodeEnergy => p.decode_energy = whole(x)?,
            SweepParam::HarvestEnergy => p.harvest_energy = whole(x)?,
            SweepParam::RateBad => p.rate_bad = x,
            SweepParam::RateGood => p.rate_good = x,
            SweepParam::Lambda => match &mut p.channel {
                ChannelModel::Iid { good } => *good = x,
                ChannelModel::Correlated { .. } => {
                    return Err(config("lambda applies to i.i.d. channels; sweep lambda0 or lambda1"))
                }
            },
            SweepParam::Lambda0 | SweepParam::Lambda1 => match &mut p.channel {
                ChannelModel::Correlated { from_bad, from_good } => {
                    if self == SweepParam::Lambda0 {
                        *from_bad = x;
                    } else {
                        *from_good = x;
                    }
                }
                ChannelModel::Iid { .. } => {
                    return Err(config("lambda0/lambda1 apply to correlated channels"))
                }
            },
        }
        p.validate()?;
        Ok(p)
    }
}

impl FromStr for SweepParam {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "ed" | "e_d" => SweepParam::DecodeEnergy,
            "e" => SweepParam::HarvestEnergy,
            "r0" => SweepParam::RateBad,
            "r1" => SweepParam::RateGood,
            "lambda" => SweepParam::Lambda,
            "lambda0" => SweepParam::Lambda0,
            "lambda1" => SweepParam::Lambda1,
            other => return Err(config(format!("cannot sweep {other:?}"))),
        })
    }
}

impl Sweep {
    pub fn new(key: &str, title: &str, param: SweepParam, base: &SystemParams, xs: &[f64]) -> Result<Self> {
        let columns = xs
            .iter()
            .map(|&x| Ok(Column { x, params: param.apply(base, x)? }))
            .collect::<Result<_>>()?;
        Ok(Sweep {
            key: key.into(),
            title: title.into(),
            x_name: param.name().into(),
            columns,
            published_optimal: None,
            published_arq: None,
        })
    }
}

fn one_to_nine() -> Vec<f64> {
    (1..=9).map(f64::from).collect()
}

fn tenths() -> Vec<f64> {
    (1..=9).map(|i| f64::from(i) / 10.0).collect()
}

fn params(ed: u32, e: u32, r0: f64, r1: f64, channel: ChannelModel) -> SystemParams {
    SystemParams {
        decode_energy: ed,
        harvest_energy: e,
        rate_bad: r0,
        rate_good: r1,
        channel,
    }
}

const NEGATIVE: ChannelModel = ChannelModel::Correlated {
    from_bad: 0.7,
    from_good: 0.2,
};
const POSITIVE: ChannelModel = ChannelModel::Correlated {
    from_bad: 0.2,
    from_good: 0.7,
};

/// The sweeps making up an experiment; figures have a negatively correlated
/// panel `a` and a positively correlated panel `b`.
pub fn sweeps(id: ExperimentId) -> Vec<Sweep> {
    let iid = |lambda| ChannelModel::Iid { good: lambda };
    let build = |key: &str, title: &str, param, base: SystemParams, xs: Vec<f64>| {
        Sweep::new(key, title, param, &base, &xs).expect("built-in sweeps are valid")
    };
    let table = |mut s: Sweep, optimal: [f64; 9], arq: [f64; 9]| {
        s.published_optimal = Some(optimal.to_vec());
        s.published_arq = Some(arq.to_vec());
        vec![s]
    };
    match id {
        ExperimentId::Table1 => table(
            build("table1", "R1 = 10, e = 1, E_d = 5, λ = 0.5 vs R0", SweepParam::RateBad, params(5, 1, 1.0, 10.0, iid(0.5)), one_to_nine()),
            TABLE1_OPTIMAL,
            TABLE1_ARQ,
        ),
        ExperimentId::Table2 => table(
            build("table2", "R1 = 10, R0 = 5, e = 2, E_d = 5 vs λ", SweepParam::Lambda, params(5, 2, 5.0, 10.0, iid(0.5)), tenths()),
            TABLE2_OPTIMAL,
            TABLE2_ARQ,
        ),
        ExperimentId::Table3 => table(
            build("table3", "R1 = 10, R0 = 5, λ = 0.3, E_d = 10 vs e", SweepParam::HarvestEnergy, params(10, 1, 5.0, 10.0, iid(0.3)), one_to_nine()),
            TABLE3_OPTIMAL,
            TABLE3_ARQ,
        ),
        ExperimentId::Fig3 => vec![
            build("fig3a", "λ0 = 0.7, λ1 = 0.2; R1 = 10, e = 1, E_d = 5", SweepParam::RateBad, params(5, 1, 1.0, 10.0, NEGATIVE), one_to_nine()),
            build("fig3b", "λ0 = 0.2, λ1 = 0.7; R1 = 10, e = 1, E_d = 5", SweepParam::RateBad, params(5, 1, 1.0, 10.0, POSITIVE), one_to_nine()),
        ],
        ExperimentId::Fig4 => vec![
            build("fig4a", "λ1 = 0.2; R1 = 10, R0 = 3, e = 1, E_d = 5", SweepParam::Lambda0, params(5, 1, 3.0, 10.0, NEGATIVE), tenths()),
            build("fig4b", "λ0 = 0.2; R1 = 10, R0 = 3, e = 1, E_d = 5", SweepParam::Lambda1, params(5, 1, 3.0, 10.0, POSITIVE), tenths()),
        ],
        ExperimentId::Fig5 => vec![
            build("fig5a", "λ0 = 0.7, λ1 = 0.2; R1 = 10, R0 = 5, E_d = 10", SweepParam::HarvestEnergy, params(10, 1, 5.0, 10.0, NEGATIVE), one_to_nine()),
            build("fig5b", "λ0 = 0.2, λ1 = 0.7; R1 = 10, R0 = 5, E_d = 10", SweepParam::HarvestEnergy, params(10, 1, 5.0, 10.0, POSITIVE), one_to_nine()),
        ],
    }
}

/// Monte Carlo budget of an experiment run. Zero episodes skips simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub episodes: u64,
    pub seed: u64,
    pub slot_cap: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            episodes: crate::simulate::DEFAULT_EPISODES,
            seed: 0,
            slot_cap: DEFAULT_SLOT_CAP,
        }
    }
}

/// Seed of the `index`-th estimate of a run, so that every estimate draws
/// from its own streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

/// One policy at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyResult {
    pub policy: String,
    /// Exact mean from an empty receiver (stationary start on correlated
    /// channels).
    pub exact: f64,
    pub mc: Option<EstimateReport>,
}

/// Exact value of a policy from the empty receiver.
pub fn exact_mean(policy: &Policy, params: &SystemParams) -> Result<f64> {
    match policy {
        Policy::Optimal(table) => table.start_k(),
        Policy::SimpleArq => simple_arq_oracle(params)?.start_k(),
        other => oracle_k(params, &(other, params))?.start_k(),
    }
}

/// Evaluates each named policy at one parameter point.
pub fn evaluate_point(
    params: &SystemParams,
    policy_names: &[String],
    run: &RunConfig,
    seed_base: u64,
) -> Result<Vec<PolicyResult>> {
    let mut optimal: Option<OptimalTable> = None;
    policy_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let policy = if name.eq_ignore_ascii_case("optimal") {
                let table = match &optimal {
                    Some(t) => t.clone(),
                    None => OptimalTable::solve(params)?,
                };
                optimal = Some(table.clone());
                Policy::Optimal(table)
            } else {
                Policy::parse(name, params)?
            };
            let exact = exact_mean(&policy, params)?;
            let mc = if run.episodes > 0 {
                let cfg = SimConfig {
                    slot_cap: run.slot_cap,
                    ..SimConfig::new(run.episodes, derive_seed(run.seed, seed_base + i as u64))
                };
                Some(estimate(&policy, params, &cfg)?)
            } else {
                None
            };
            Ok(PolicyResult {
                policy: policy.name(),
                exact,
                mc,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub sweep: Sweep,
    /// Policy names as evaluated, in column order.
    pub policies: Vec<String>,
    /// `points[column][policy]`.
    pub points: Vec<Vec<PolicyResult>>,
    /// Optimal mean from the empty receiver at each column.
    pub optimal_analytical: Vec<f64>,
}

impl SweepResult {
    /// Results of one policy across the sweep.
    pub fn series(&self, policy: &str) -> Vec<&PolicyResult> {
        self.points
            .iter()
            .filter_map(|col| col.iter().find(|r| r.policy == policy))
            .collect()
    }

    pub fn optimal(&self) -> Vec<f64> {
        self.optimal_analytical.clone()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.sweep.columns.iter().map(|c| c.x).collect()
    }
}

pub fn run_sweep(sweep: &Sweep, policy_names: &[String], run: &RunConfig, seed_base: u64) -> Result<SweepResult> {
    let stride = policy_names.len() as u64;
    let points = sweep
        .columns
        .iter()
        .enumerate()
        .map(|(i, col)| evaluate_point(&col.params, policy_names, run, seed_base + i as u64 * stride))
        .collect::<Result<Vec<_>>>()?;
    let optimal_analytical = sweep
        .columns
        .iter()
        .map(|col| OptimalTable::solve(&col.params)?.start_k())
        .collect::<Result<Vec<_>>>()?;
    let policies = points.first().map(|p| p.iter().map(|r| r.policy.clone()).collect()).unwrap_or_default();
    Ok(SweepResult {
        sweep: sweep.clone(),
        policies,
        points,
        optimal_analytical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Needs Monte Carlo estimates that were not run.
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: if passed { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    fn skipped(name: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: Status::Skipped,
            detail: "no Monte Carlo estimates".into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Published optimal values reproduced within [`PUBLISHED_TOLERANCE`].
pub fn check_published(result: &SweepResult) -> Option<Check> {
    let published = result.sweep.published_optimal.as_ref()?;
    let worst = result
        .optimal()
        .iter()
        .zip(published)
        .map(|(k, p)| (k - p).abs())
        .fold(0.0, f64::max);
    Some(Check::new(
        format!("{}: optimal analytical vs published", result.sweep.key),
        worst <= PUBLISHED_TOLERANCE,
        format!("max deviation {worst:.2e} (tolerance {PUBLISHED_TOLERANCE:.0e})"),
    ))
}

/// Named policies' Monte Carlo means agree with a reference value per column.
fn check_mc_against(
    result: &SweepResult,
    name: String,
    policies: &[&str],
    reference: impl Fn(usize) -> f64,
) -> Check {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (i, col) in result.points.iter().enumerate() {
        for r in col.iter().filter(|r| policies.contains(&r.policy.as_str())) {
            let Some(mc) = &r.mc else {
                return Check::skipped(name);
            };
            let z = (mc.mean - reference(i)).abs() / mc.stderr.max(f64::MIN_POSITIVE);
            worst = worst.max(z);
            if z > SIGMAS {
                failures.push(format!("{}@{}={}", r.policy, result.sweep.x_name, result.sweep.columns[i].x));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("largest deviation {worst:.2}σ")
    } else {
        format!("beyond {SIGMAS}σ: {}", failures.join(", "))
    };
    Check::new(name, failures.is_empty(), detail)
}

/// Checks of a table experiment.
pub fn table_checks(result: &SweepResult) -> Vec<Check> {
    let key = &result.sweep.key;
    let optimal = result.optimal();
    let mut checks: Vec<Check> = check_published(result).into_iter().collect();
    if key == "table3" {
        let plateau = |a: usize, b: usize| (optimal[a] - optimal[b]).abs() <= 1e-12;
        checks.push(Check::new(
            "table3: plateaus e = 4,5 and e = 6..9",
            plateau(3, 4) && (6..9).all(|i| plateau(5, i)),
            format!("e=4,5: {:.4} {:.4}; e=6..9: {:.4}", optimal[3], optimal[4], optimal[5]),
        ));
    }
    checks.push(check_mc_against(
        result,
        format!("{key}: optimal Monte Carlo vs analytical"),
        &["optimal"],
        |i| optimal[i],
    ));
    checks.push(check_mc_against(
        result,
        format!("{key}: BF, IF, CT Monte Carlo vs optimal analytical"),
        &["BF", "IF", "CT"],
        |i| optimal[i],
    ));
    if let Some(arq) = &result.sweep.published_arq {
        checks.push(check_mc_against(
            result,
            format!("{key}: simple ARQ Monte Carlo vs published"),
            &["SimpleARQ"],
            |i| arq[i],
        ));
    }
    checks
}

const MONOTONE_SLACK: f64 = 1e-9;

/// Optimal-vs-BF gap of every column, from exact values.
pub fn bf_gaps(result: &SweepResult) -> Vec<f64> {
    let bf = result.series("BF");
    result.optimal().iter().zip(bf).map(|(k, b)| b.exact - k).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Checks of one figure panel.
pub fn panel_checks(result: &SweepResult) -> Vec<Check> {
    let key = &result.sweep.key;
    let optimal = result.optimal();
    let mut checks = Vec::new();

    let rising: Vec<String> = optimal
        .windows(2)
        .zip(result.xs().windows(2))
        .filter(|(k, _)| k[1] > k[0] + MONOTONE_SLACK)
        .map(|(_, x)| format!("{}→{}", x[0], x[1]))
        .collect();
    checks.push(Check::new(
        format!("{key}: optimal curve non-increasing in {}", result.sweep.x_name),
        rising.is_empty(),
        if rising.is_empty() {
            format!("{:.4} → {:.4}", optimal[0], optimal[optimal.len() - 1])
        } else {
            format!("increases at {}", rising.join(", "))
        },
    ));

    let name = format!("{key}: optimal ≤ every baseline (Monte Carlo, {SIGMAS}σ)");
    let mut violations = Vec::new();
    let mut skipped = false;
    for (i, col) in result.points.iter().enumerate() {
        for r in col.iter().filter(|r| r.policy != "optimal") {
            match &r.mc {
                Some(mc) if optimal[i] > mc.mean + SIGMAS * mc.stderr => {
                    violations.push(format!("{}@{}", r.policy, result.sweep.columns[i].x))
                }
                Some(_) => {}
                None => skipped = true,
            }
        }
    }
    checks.push(if skipped {
        Check::skipped(name)
    } else {
        let detail = if violations.is_empty() {
            "holds at every point".to_string()
        } else {
            violations.join(", ")
        };
        Check::new(name, violations.is_empty(), detail)
    });
    checks.push(check_mc_against(
        result,
        format!("{key}: optimal Monte Carlo vs analytical"),
        &["optimal"],
        |i| optimal[i],
    ));
    checks
}

/// Negatively vs positively correlated panels over matched sweep grids: the
/// optimal policy's mean advantage over BF must be strictly larger under
/// negative correlation.
pub fn correlation_gap_check(negative: &SweepResult, positive: &SweepResult) -> Check {
    let neg = bf_gaps(negative);
    let pos = bf_gaps(positive);
    let (mn, mp) = (mean(&neg), mean(&pos));
    let reversed: Vec<String> = neg
        .iter()
        .zip(&pos)
        .zip(negative.xs())
        .filter(|((n, p), _)| n <= p)
        .map(|(_, x)| format!("{}={x}", negative.sweep.x_name))
        .collect();
    let mut detail = format!("mean BF gap {mn:.4} (negative) vs {mp:.4} (positive)");
    if !reversed.is_empty() {
        detail.push_str(&format!("; pointwise reversed at {}", reversed.join(", ")));
    }
    Check::new(
        format!("{}/{}: larger optimal-vs-BF gap under negative correlation", negative.sweep.key, positive.sweep.key),
        mn > mp,
        detail,
    )
}

/// A finished experiment.
#[derive(Debug, Clone)]
pub struct Report {
    pub id: ExperimentId,
    pub results: Vec<SweepResult>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.checks.iter().any(Check::failed)
    }

    /// Writes `<key>.csv` (wide, one row per policy or one row per sweep
    /// point for figures) and `<key>_long.csv` for every sweep.
    pub fn write_csv(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for result in &self.results {
            let wide = dir.join(format!("{}.csv", result.sweep.key));
            if self.id.is_figure() {
                write_plot_csv(File::create(&wide)?, result)?;
            } else {
                write_table_csv(File::create(&wide)?, result)?;
            }
            written.push(wide);
            let long = dir.join(format!("{}_long.csv", result.sweep.key));
            write_long_csv(File::create(&long)?, result)?;
            written.push(long);
        }
        Ok(written)
    }
}

/// Row label of a policy in the table layout.
pub fn row_label(policy: &str) -> &str {
    match policy {
        "optimal" => "Optimal Monte-Carlo",
        "SimpleARQ" => "Simple ARQ",
        other => other,
    }
}

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

/// Table layout: one row per policy, one column per sweep point.
pub fn write_table_csv<W: std::io::Write>(out: W, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::new()];
    header.extend(result.xs().iter().map(|x| format!("{}={x}", result.sweep.x_name)));
    w.write_record(&header)?;
    let mut row = vec!["Optimal analytical".to_string()];
    row.extend(result.optimal().into_iter().map(fmt4));
    w.write_record(&row)?;
    for (p, name) in result.policies.iter().enumerate() {
        let mut row = vec![row_label(name).to_string()];
        row.extend(
            result
                .points
                .iter()
                .map(|col| col[p].mc.as_ref().map(|mc| fmt4(mc.mean)).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Plot data: the swept value, the optimal analytical curve, then each
/// policy's Monte Carlo mean (exact value when simulation was skipped).
pub fn write_plot_csv<W: std::io::Write>(out: W, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![result.sweep.x_name.clone(), "optimal_analytical".into()];
    header.extend(result.policies.iter().cloned());
    w.write_record(&header)?;
    for ((col, points), analytical) in result.sweep.columns.iter().zip(&result.points).zip(&result.optimal_analytical) {
        let mut row = vec![col.x.to_string()];
        row.push(analytical.to_string());
        row.extend(points.iter().map(|r| r.mc.as_ref().map_or(r.exact, |mc| mc.mean).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long layout with exact values, standard errors and published values.
pub fn write_long_csv<W: std::io::Write>(out: W, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sweep", "x_name", "x", "policy", "exact", "mean", "stderr", "episodes", "censored", "seed", "published",
    ])?;
    for (i, (col, points)) in result.sweep.columns.iter().zip(&result.points).enumerate() {
        for r in points {
            let published = match r.policy.as_str() {
                "optimal" => result.sweep.published_optimal.as_ref().map(|v| v[i]),
                "SimpleARQ" => result.sweep.published_arq.as_ref().map(|v| v[i]),
                _ => None,
            };
            let mc = r.mc.as_ref();
            w.write_record([
                result.sweep.key.clone(),
                result.sweep.x_name.clone(),
                col.x.to_string(),
                r.policy.clone(),
                r.exact.to_string(),
                mc.map(|m| m.mean.to_string()).unwrap_or_default(),
                mc.map(|m| m.stderr.to_string()).unwrap_or_default(),
                mc.map(|m| m.episodes.to_string()).unwrap_or_default(),
                mc.map(|m| m.censored.to_string()).unwrap_or_default(),
                mc.map(|m| m.master_seed.to_string()).unwrap_or_default(),
                published.map(|p| p.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs an experiment and its checks.
pub fn reproduce(id: ExperimentId, run: &RunConfig) -> Result<Report> {
    let names = id.policy_names();
    let experiment_index = ExperimentId::ALL.iter().position(|&e| e == id).unwrap_or(0) as u64;
    let results = sweeps(id)
        .iter()
        .enumerate()
        .map(|(s, sweep)| run_sweep(sweep, &names, run, (experiment_index * 16 + s as u64) << 16))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    if id.is_figure() {
        for r in &results {
            checks.extend(panel_checks(r));
        }
        if id != ExperimentId::Fig4 {
            checks.push(correlation_gap_check(&results[0], &results[1]));
        }
    } else {
        for r in &results {
            checks.extend(table_checks(r));
        }
    }
    Ok(Report { id, results, checks })
}

mod args;
mod config;
mod error;
mod svg;

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use swipt_harq::experiments::{self, ExperimentId, Report, RunConfig, Status, Sweep, SweepParam, SweepResult};
use swipt_harq::model::{ChannelModel, ChannelState, SystemParams};
use swipt_harq::policies::Policy;
use swipt_harq::simulate::{estimate, write_reports_csv, SimConfig};
use swipt_harq::solver;

use crate::args::{Cli, Command, Format, OutputArgs, RunArgs};
use crate::config::{ChannelDefault, ConfigFile, Layers};
use crate::error::CliError;

const DEFAULT_POLICIES: [&str; 5] = ["optimal", "bf", "if", "ct", "arq"];

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::SolveIid { params, out } => {
            let layers = Layers::new(&file, &["solve-iid"]);
            let p = config::resolve_params(&params, &layers, ChannelDefault::Iid)?;
            if p.channel.is_correlated() {
                return Err(CliError::Config("solve-iid needs --lambda; use solve-corr for --lambda0/--lambda1".into()));
            }
            let table = solver::iid::solve(&p)?;
            write_to(out.as_deref(), |w| Ok(table.write_csv(w)?))?;
            eprintln!("k*(0,0) = {:.4}  [{}]", table.k_star(0, 0)?, describe(&p));
            Ok(())
        }
        Command::SolveCorr { params, out } => {
            let layers = Layers::new(&file, &["solve-corr"]);
            let p = config::resolve_params(&params, &layers, ChannelDefault::Correlated)?;
            let table = solver::correlated::solve(&p)?;
            write_to(out.as_deref(), |w| Ok(table.write_csv(w)?))?;
            eprintln!(
                "k*(0,0,G=0) = {:.4}  k*(0,0,G=1) = {:.4}  stationary start = {:.4}  [{}]",
                table.k_star(0, 0, ChannelState::Bad)?,
                table.k_star(0, 0, ChannelState::Good)?,
                table.steady_state_k(0, 0)?,
                describe(&p)
            );
            Ok(())
        }
        Command::Simulate {
            params,
            policy,
            run,
            out,
        } => {
            let layers = Layers::new(&file, &["simulate"]);
            let p = config::resolve_params(&params, &layers, ChannelDefault::Iid)?;
            let settings = config::resolve_run(&run, &layers)?;
            let names = config::resolve_policies(&policy, &layers, &DEFAULT_POLICIES)?;
            let mut rows = Vec::new();
            for (i, name) in names.iter().enumerate() {
                let policy = Policy::parse(name, &p)?;
                let cfg = SimConfig {
                    slot_cap: settings.slot_cap,
                    ..SimConfig::new(settings.episodes, experiments::derive_seed(settings.seed, i as u64))
                };
                let report = estimate(&policy, &p, &cfg)?;
                eprintln!(
                    "{:<16} mean {:.4} ± {:.4} ({} episodes)",
                    report.policy, report.mean, report.stderr, report.episodes
                );
                if report.censored > 0 {
                    eprintln!(
                        "warning: {} episodes of {} hit the {}-slot cap and were excluded",
                        report.censored, report.policy, settings.slot_cap
                    );
                }
                rows.push((p.clone(), report));
            }
            write_to(out.as_deref(), |w| Ok(write_reports_csv(w, &rows)?))
        }
        Command::Reproduce {
            experiment,
            run,
            output,
        } => reproduce(&file, &experiment, &run, &output),
        Command::Sweep {
            param,
            values,
            params,
            policy,
            run,
            output,
        } => {
            let layers = Layers::new(&file, &["sweep"]);
            let param: SweepParam = match param.or(layers.string("param")?) {
                Some(name) => name.parse()?,
                None => return Err(CliError::Config("sweep needs --param".into())),
            };
            let values = if values.is_empty() {
                layers.numbers("values")?.unwrap_or_default()
            } else {
                values
            };
            if values.is_empty() {
                return Err(CliError::Config("sweep needs --values".into()));
            }
            let kind = if matches!(param, SweepParam::Lambda0 | SweepParam::Lambda1) {
                ChannelDefault::Correlated
            } else {
                ChannelDefault::Iid
            };
            let base = config::resolve_params(&params, &layers, kind)?;
            let names = config::resolve_policies(&policy, &layers, &DEFAULT_POLICIES)?;
            let settings = config::resolve_run(&run, &layers)?;
            let key = format!("sweep_{}", param.name());
            let sweep = Sweep::new(&key, &describe(&base), param, &base, &values)?;
            let result = experiments::run_sweep(&sweep, &names, &run_config(&settings), 0)?;
            let dir = config::resolve_out_dir(&output, &layers)?;
            fs::create_dir_all(&dir)?;
            let mut written = vec![dir.join(format!("{key}.csv")), dir.join(format!("{key}_long.csv"))];
            experiments::write_plot_csv(File::create(&written[0])?, &result)?;
            experiments::write_long_csv(File::create(&written[1])?, &result)?;
            if config::resolve_format(&output, &layers)? == Format::Svg {
                written.push(write_chart(&dir, &result)?);
            }
            print_sweep(&result);
            report_written(&written);
            Ok(())
        }
    }
}

fn run_config(settings: &config::RunSettings) -> RunConfig {
    RunConfig {
        episodes: settings.episodes,
        seed: settings.seed,
        slot_cap: settings.slot_cap,
    }
}

fn reproduce(file: &ConfigFile, experiment: &str, run: &RunArgs, output: &OutputArgs) -> Result<(), CliError> {
    let ids: Vec<ExperimentId> = if experiment.eq_ignore_ascii_case("all") {
        ExperimentId::ALL.to_vec()
    } else {
        vec![experiment.parse()?]
    };
    let mut failed = Vec::new();
    for id in ids {
        let layers = Layers::new(file, &[id.name(), "reproduce"]);
        let settings = config::resolve_run(run, &layers)?;
        let dir = config::resolve_out_dir(output, &layers)?;
        let report = experiments::reproduce(id, &run_config(&settings))?;
        let mut written = report.write_csv(&dir)?;
        if id.is_figure() && config::resolve_format(output, &layers)? == Format::Svg {
            for result in &report.results {
                written.push(write_chart(&dir, result)?);
            }
        }
        print_report(&report);
        report_written(&written);
        failed.extend(report.checks.iter().filter(|c| c.failed()).map(|c| c.name.clone()));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Deviation(failed.join("; ")))
    }
}

fn print_report(report: &Report) {
    println!("== {}", report.id);
    for result in &report.results {
        if !report.id.is_figure() {
            print_sweep(result);
        }
    }
    for check in &report.checks {
        println!("{check}");
    }
    let skipped = report.checks.iter().filter(|c| c.status == Status::Skipped).count();
    if skipped > 0 {
        println!("({skipped} Monte Carlo checks skipped; pass --episodes to run them)");
    }
}

fn print_sweep(result: &SweepResult) {
    let xs = result.xs();
    print!("{:<22}", result.sweep.x_name);
    for x in &xs {
        print!("{x:>9}");
    }
    println!();
    print!("{:<22}", "Optimal analytical");
    for k in &result.optimal_analytical {
        print!("{k:>9.4}");
    }
    println!();
    for (p, name) in result.policies.iter().enumerate() {
        let simulated = result.points.iter().all(|col| col[p].mc.is_some());
        if simulated {
            print!("{:<22}", experiments::row_label(name));
        } else {
            print!("{:<22}", format!("{name} (exact)"));
        }
        for col in &result.points {
            let r = &col[p];
            print!("{:>9.4}", r.mc.as_ref().map_or(r.exact, |mc| mc.mean));
        }
        println!();
    }
}

fn write_chart(dir: &Path, result: &SweepResult) -> Result<PathBuf, CliError> {
    let xs = result.xs();
    let mut series = vec![svg::Series {
        name: "optimal (analytical)".into(),
        points: xs.iter().copied().zip(result.optimal_analytical.iter().copied()).collect(),
        dashed: true,
    }];
    for (p, name) in result.policies.iter().enumerate() {
        series.push(svg::Series {
            name: name.clone(),
            points: xs
                .iter()
                .zip(&result.points)
                .map(|(&x, col)| (x, col[p].mc.as_ref().map_or(col[p].exact, |mc| mc.mean)))
                .collect(),
            dashed: false,
        });
    }
    let chart = svg::line_chart(&result.sweep.title, &result.sweep.x_name, "mean slots until decoding", &series);
    let path = dir.join(format!("{}.svg", result.sweep.key));
    fs::write(&path, chart)?;
    Ok(path)
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn write_to(
    path: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match path {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            let mut f = File::create(path)?;
            body(&mut f)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)
        }
    }
}

fn describe(p: &SystemParams) -> String {
    let channel = match p.channel {
        ChannelModel::Iid { good } => format!("λ={good}"),
        ChannelModel::Correlated {
            from_bad,
            from_good,
        } => format!("λ0={from_bad}, λ1={from_good}"),
    };
    format!(
        "E_d={}, e={}, R0={}, R1={}, {channel}",
        p.decode_energy, p.harvest_energy, p.rate_bad, p.rate_good
    )
}

//! Layered settings: command-line flags, then the config file, then built-in
//! defaults.
//!
//! The config file is TOML restricted to flat sections:
//!
//! ```toml
//! [defaults]
//! Ed = 5
//! R1 = 10.0
//!
//! [simulate]
//! policy = "bf,if"
//! episodes = 200000
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use swipt_harq::model::{ChannelModel, SystemParams};
use toml::{Table, Value};

use crate::args::{Format, OutputArgs, ParamArgs, RunArgs};
use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "SWIPT_HARQ_OUT";
pub const DEFAULT_OUT_DIR: &str = "results";

const KEYS: [&str; 15] = [
    "Ed", "e", "R0", "R1", "lambda", "lambda0", "lambda1", "policy", "episodes", "seed", "slot_cap", "out",
    "format", "param", "values",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    table: Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        for (section, body) in &table {
            let Value::Table(body) = body else {
                return Err(CliError::Config(format!("top-level key {section:?} must be inside a section")));
            };
            for (key, value) in body {
                if !KEYS.contains(&key.as_str()) {
                    return Err(CliError::Config(format!("unknown key {key:?} in [{section}]")));
                }
                if value.is_table() {
                    return Err(CliError::Config(format!("[{section}] {key} must be a plain value")));
                }
            }
        }
        Ok(ConfigFile { table })
    }
}

/// Resolves keys for one command: the named sections in order, then
/// `[defaults]`.
pub struct Layers<'a> {
    file: &'a ConfigFile,
    sections: Vec<String>,
}

impl<'a> Layers<'a> {
    pub fn new(file: &'a ConfigFile, sections: &[&str]) -> Self {
        let mut sections: Vec<String> = sections.iter().map(|s| s.to_string()).collect();
        sections.push("defaults".into());
        Layers { file, sections }
    }

    fn raw(&self, key: &str) -> Option<(&str, &'a Value)> {
        self.sections.iter().find_map(|s| {
            let section = self.file.table.get(s)?.as_table()?;
            section.get(key).map(|v| (s.as_str(), v))
        })
    }

    fn bad(section: &str, key: &str, want: &str) -> CliError {
        CliError::Config(format!("[{section}] {key} must be {want}"))
    }

    pub fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::Float(x))) => Ok(Some(*x)),
            Some((_, Value::Integer(i))) => Ok(Some(*i as f64)),
            Some((s, _)) => Err(Self::bad(s, key, "a number")),
        }
    }

    pub fn uint(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((s, Value::Integer(i))) => u64::try_from(*i).map(Some).map_err(|_| Self::bad(s, key, "non-negative")),
            Some((s, _)) => Err(Self::bad(s, key, "a whole number")),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::String(v))) => Ok(Some(v.clone())),
            Some((s, _)) => Err(Self::bad(s, key, "a string")),
        }
    }

    /// A comma-separated string or an array of strings.
    pub fn list(&self, key: &str) -> Result<Option<Vec<String>>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::String(v))) => Ok(Some(v.split(',').map(|p| p.trim().to_string()).collect())),
            Some((s, Value::Array(items))) => items
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| Self::bad(s, key, "a list of strings")))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some((s, _)) => Err(Self::bad(s, key, "a list of strings")),
        }
    }

    pub fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((s, Value::Array(items))) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(Self::bad(s, key, "a list of numbers")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some((s, _)) => Err(Self::bad(s, key, "a list of numbers")),
        }
    }
}

/// Built-in link parameters: the i.i.d. setting of the `R0` table.
pub const DEFAULT_ED: u32 = 5;
pub const DEFAULT_E: u32 = 1;
pub const DEFAULT_R0: f64 = 1.0;
pub const DEFAULT_R1: f64 = 10.0;
pub const DEFAULT_LAMBDA: f64 = 0.5;

fn narrow(key: &str, v: u64) -> Result<u32, CliError> {
    u32::try_from(v).map_err(|_| CliError::Config(format!("{key} = {v} is too large")))
}

/// How the channel model is chosen when the flags leave it open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelDefault {
    Iid,
    /// Missing `lambda0`/`lambda1` fall back to `lambda`.
    Correlated,
}

pub fn resolve_params(cli: &ParamArgs, layers: &Layers, kind: ChannelDefault) -> Result<SystemParams, CliError> {
    let ed = match cli.ed {
        Some(v) => v,
        None => layers.uint("Ed")?.map(|v| narrow("Ed", v)).transpose()?.unwrap_or(DEFAULT_ED),
    };
    let e = match cli.e {
        Some(v) => v,
        None => layers.uint("e")?.map(|v| narrow("e", v)).transpose()?.unwrap_or(DEFAULT_E),
    };
    let r0 = cli.r0.map_or_else(|| layers.float("R0"), |v| Ok(Some(v)))?.unwrap_or(DEFAULT_R0);
    let r1 = cli.r1.map_or_else(|| layers.float("R1"), |v| Ok(Some(v)))?.unwrap_or(DEFAULT_R1);

    // The flags decide the channel model if they mention one, then the file.
    let from_file = (layers.float("lambda")?, layers.float("lambda0")?, layers.float("lambda1")?);
    let from_cli = (cli.lambda, cli.lambda0, cli.lambda1);
    let (lambda, lambda0, lambda1) = if from_cli != (None, None, None) { from_cli } else { from_file };
    let channel = match (lambda, lambda0, lambda1, kind) {
        (Some(_), Some(_), _, ChannelDefault::Iid) | (Some(_), _, Some(_), ChannelDefault::Iid) => {
            return Err(CliError::Config("give either --lambda or --lambda0/--lambda1, not both".into()))
        }
        (l, None, None, ChannelDefault::Iid) => ChannelModel::Iid {
            good: l.unwrap_or(DEFAULT_LAMBDA),
        },
        (_, Some(_), None, ChannelDefault::Iid) | (_, None, Some(_), ChannelDefault::Iid) => {
            return Err(CliError::Config("a correlated channel needs both --lambda0 and --lambda1".into()))
        }
        (l, l0, l1, _) => {
            let l = l.unwrap_or(DEFAULT_LAMBDA);
            ChannelModel::Correlated {
                from_bad: l0.unwrap_or(l),
                from_good: l1.unwrap_or(l),
            }
        }
    };
    Ok(SystemParams::new(ed, e, r0, r1, channel)?)
}

pub struct RunSettings {
    pub episodes: u64,
    pub seed: u64,
    pub slot_cap: u64,
}

pub fn resolve_run(cli: &RunArgs, layers: &Layers) -> Result<RunSettings, CliError> {
    Ok(RunSettings {
        episodes: cli
            .episodes
            .map_or_else(|| layers.uint("episodes"), |v| Ok(Some(v)))?
            .unwrap_or(swipt_harq::simulate::DEFAULT_EPISODES),
        seed: cli.seed.map_or_else(|| layers.uint("seed"), |v| Ok(Some(v)))?.unwrap_or(0),
        slot_cap: layers.uint("slot_cap")?.unwrap_or(swipt_harq::simulate::DEFAULT_SLOT_CAP),
    })
}

pub fn resolve_policies(cli: &[String], layers: &Layers, default: &[&str]) -> Result<Vec<String>, CliError> {
    if !cli.is_empty() {
        return Ok(cli.to_vec());
    }
    Ok(layers
        .list("policy")?
        .unwrap_or_else(|| default.iter().map(|s| s.to_string()).collect()))
}

/// Output directory from the flag, the file, the environment, or `./results`.
pub fn resolve_out_dir(cli: &OutputArgs, layers: &Layers) -> Result<PathBuf, CliError> {
    if let Some(dir) = &cli.out {
        return Ok(dir.clone());
    }
    if let Some(dir) = layers.string("out")? {
        return Ok(dir.into());
    }
    Ok(std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| DEFAULT_OUT_DIR.into()))
}

pub fn resolve_format(cli: &OutputArgs, layers: &Layers) -> Result<Format, CliError> {
    if let Some(f) = cli.format {
        return Ok(f);
    }
    match layers.string("format")?.as_deref() {
        None | Some("csv") => Ok(Format::Csv),
        Some("svg") => Ok(Format::Svg),
        Some(other) => Err(CliError::Config(format!("unknown format {other:?} (csv or svg)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(text: &str) -> ConfigFile {
        ConfigFile::parse(text).unwrap()
    }

    #[test]
    fn section_then_defaults_then_builtin() {
        let f = file("[defaults]\nEd = 3\nR0 = 2\n[simulate]\nEd = 4\n");
        let layers = Layers::new(&f, &["simulate"]);
        let p = resolve_params(&ParamArgs::default(), &layers, ChannelDefault::Iid).unwrap();
        assert_eq!((p.decode_energy, p.rate_bad, p.rate_good), (4, 2.0, DEFAULT_R1));

        let cli = ParamArgs {
            ed: Some(7),
            ..ParamArgs::default()
        };
        assert_eq!(resolve_params(&cli, &layers, ChannelDefault::Iid).unwrap().decode_energy, 7);
    }

    #[test]
    fn unknown_keys_and_bare_keys_rejected() {
        assert!(ConfigFile::parse("[defaults]\nEdd = 3\n").is_err());
        assert!(ConfigFile::parse("Ed = 3\n").is_err());
        assert!(ConfigFile::parse("[defaults]\nEd = \"x\"\n").is_ok());
        let f = file("[defaults]\nEd = \"x\"\n");
        assert!(resolve_params(&ParamArgs::default(), &Layers::new(&f, &[]), ChannelDefault::Iid).is_err());
    }

    #[test]
    fn channel_selection() {
        let f = file("[defaults]\nlambda = 0.3\n");
        let layers = Layers::new(&f, &[]);
        let iid = resolve_params(&ParamArgs::default(), &layers, ChannelDefault::Iid).unwrap();
        assert_eq!(iid.channel, ChannelModel::Iid { good: 0.3 });

        let corr = resolve_params(&ParamArgs::default(), &layers, ChannelDefault::Correlated).unwrap();
        assert_eq!(
            corr.channel,
            ChannelModel::Correlated {
                from_bad: 0.3,
                from_good: 0.3
            }
        );

        let cli = ParamArgs {
            lambda0: Some(0.7),
            lambda1: Some(0.2),
            ..ParamArgs::default()
        };
        assert!(resolve_params(&cli, &layers, ChannelDefault::Iid).unwrap().channel.is_correlated());

        let half = ParamArgs {
            lambda0: Some(0.7),
            ..ParamArgs::default()
        };
        assert!(resolve_params(&half, &layers, ChannelDefault::Iid).is_err());
    }

    #[test]
    fn policy_lists() {
        let f = file("[a]\npolicy = \"bf, if\"\n[b]\npolicy = [\"ct\"]\n");
        assert_eq!(resolve_policies(&[], &Layers::new(&f, &["a"]), &[]).unwrap(), ["bf", "if"]);
        assert_eq!(resolve_policies(&[], &Layers::new(&f, &["b"]), &[]).unwrap(), ["ct"]);
        assert_eq!(resolve_policies(&[], &Layers::new(&f, &["c"]), &["arq"]).unwrap(), ["arq"]);
    }
}

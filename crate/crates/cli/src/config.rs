//! Experiment configuration: an optional JSON file overlaid by flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use erw_core::simulator::parse_seed;
use erw_core::{MemoryParameter, MomentSet, StepDistribution};
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

/// Flags shared by every command. Any flag given here overrides the
/// corresponding key of `--config`.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// JSON config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Memory parameter in [0, 1].
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Step law as JSON, e.g. '{"kind":"bernoulli","p":0.3}'.
    #[arg(long, global = true, value_name = "JSON")]
    pub dist: Option<String>,
    /// Path length (n_max for `exact`).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub replicates: Option<u64>,
    /// Master seed, decimal or 0x-prefixed hex.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true, value_delimiter = ',', value_name = "N,N,...")]
    pub checkpoints: Option<Vec<usize>>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads for simulation (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Add closed-form comparison columns to `exact`.
    #[arg(long, global = true)]
    pub compare: bool,
    /// Alpha grid: `a,b,c` or `lo:hi:step`.
    #[arg(long, global = true, value_name = "GRID")]
    pub alphas: Option<String>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dist: Option<Value>,
    distributions: Option<Vec<Value>>,
    alpha: Option<f64>,
    alphas: Option<GridSpec>,
    #[serde(alias = "n_max")]
    n: Option<usize>,
    replicates: Option<u64>,
    checkpoints: Option<Vec<usize>>,
    master_seed: Option<SeedSpec>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    compare: Option<bool>,
    tolerances: Option<Tolerances>,
    fixtures: Option<Vec<Fixture>>,
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum SeedSpec {
    Number(u64),
    Text(String),
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

/// Acceptance thresholds used by `verify`.
#[derive(Deserialize, Clone, Debug, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub identity_abs: f64,
    pub closed_form_rel: f64,
    pub closed_form_abs: f64,
    pub oracle_abs: f64,
    pub gamma_rel: f64,
    pub reconstruction_rel: f64,
    pub continuation_z: f64,
    pub marginal_z: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity_abs: 1e-12,
            closed_form_rel: 1e-8,
            closed_form_abs: 1e-12,
            oracle_abs: 1e-12,
            gamma_rel: 1e-10,
            reconstruction_rel: 1e-10,
            continuation_z: 3.0,
            marginal_z: 4.0,
        }
    }
}

/// A moment set given literally, for checking the identity suite itself.
#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub name: String,
    pub moments: MomentSet<f64>,
}

/// The merged configuration. Commands pick their own defaults for the
/// optional fields.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub dist: StepDistribution,
    pub dist_given: bool,
    pub distributions: Vec<StepDistribution>,
    pub alpha: MemoryParameter<f64>,
    pub alphas: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub replicates: Option<u64>,
    pub checkpoints: Option<Vec<usize>>,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub compare: bool,
    pub tolerances: Tolerances,
    pub fixtures: Vec<Fixture>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_dist(value: Value) -> Result<StepDistribution, CliError> {
    StepDistribution::from_value(value).map_err(|e| config_err(e.to_string()))
}

impl ExperimentConfig {
    pub fn load(flags: &Overrides) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => read_config(path)?,
            None => ConfigFile::default(),
        };

        let dist_value = match &flags.dist {
            Some(text) => Some(
                serde_json::from_str(text)
                    .map_err(|e| config_err(format!("--dist is not valid JSON: {e}")))?,
            ),
            None => file.dist,
        };
        let dist_given = dist_value.is_some();
        let dist = match dist_value {
            Some(v) => parse_dist(v)?,
            None => StepDistribution::Rademacher,
        };
        let distributions = match file.distributions {
            Some(list) if flags.dist.is_none() => {
                list.into_iter().map(parse_dist).collect::<Result<_, _>>()?
            }
            _ if dist_given => vec![dist.clone()],
            _ => Vec::new(),
        };

        let alpha_value = flags.alpha.or(file.alpha).unwrap_or(0.75);
        let alpha = MemoryParameter::new(alpha_value).map_err(|e| config_err(e.to_string()))?;

        let alphas = match (&flags.alphas, file.alphas) {
            (Some(text), _) => Some(parse_grid(text)?),
            (None, Some(GridSpec::Text(text))) => Some(parse_grid(&text)?),
            (None, Some(GridSpec::List(list))) => Some(list),
            (None, None) => None,
        };
        if let Some(grid) = &alphas {
            if let Some(bad) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(config_err(format!(
                    "alpha grid value {bad} is outside [0, 1]"
                )));
            }
        }

        let n = flags.n.or(file.n);
        if n == Some(0) {
            return Err(config_err("n must be at least 1"));
        }
        let replicates = flags.replicates.or(file.replicates);
        if replicates == Some(0) {
            return Err(config_err("replicates must be at least 1"));
        }
        let checkpoints = flags.checkpoints.clone().or(file.checkpoints);
        if let Some(cp) = &checkpoints {
            if cp.is_empty() || cp.windows(2).any(|w| w[0] >= w[1]) || cp[0] == 0 {
                return Err(config_err(format!(
                    "checkpoints must be positive and strictly ascending: {cp:?}"
                )));
            }
        }

        let seed_text = match (flags.seed.clone(), file.master_seed) {
            (Some(text), _) | (None, Some(SeedSpec::Text(text))) => Some(text),
            (None, Some(SeedSpec::Number(v))) => Some(v.to_string()),
            (None, None) => None,
        };
        let master_seed = match seed_text {
            Some(text) => {
                parse_seed(&text).map_err(|e| config_err(format!("bad seed {text:?}: {e}")))?
            }
            None => 0,
        };
        if flags.threads == Some(0) || file.threads == Some(0) {
            return Err(config_err("threads must be at least 1"));
        }

        Ok(Self {
            dist,
            dist_given,
            distributions,
            alpha,
            alphas,
            n,
            replicates,
            checkpoints,
            master_seed,
            out: flags.out.clone().or(file.out),
            threads: flags.threads.or(file.threads),
            compare: flags.compare || file.compare.unwrap_or(false),
            tolerances: file.tolerances.unwrap_or_default(),
            fixtures: file.fixtures.unwrap_or_default(),
        })
    }

    /// Checkpoints, defaulting to the final step; validated against `n`.
    pub fn checkpoints_for(&self, n: usize) -> Result<Vec<usize>, CliError> {
        let cp = self.checkpoints.clone().unwrap_or_else(|| vec![n]);
        if *cp.last().expect("nonempty") > n {
            return Err(config_err(format!(
                "checkpoint {} exceeds n = {n}",
                cp.last().unwrap()
            )));
        }
        Ok(cp)
    }
}

fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// `0.5,0.6` or `lo:hi:step` (inclusive; values are rounded to 12 decimals
/// so `0.6:1:0.05` ends exactly at 1).
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |what: &str| config_err(format!("bad alpha grid {text:?}: {what}"));
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("{s:?} is not a number")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected lo:hi:step"));
        }
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(bad("need step > 0 and hi >= lo"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        text.split(',').map(num).collect()
    }
}

//! `limits`, `exact`, `simulate` and `sweep`. Each returns the full text to
//! be written.

use std::fmt::Write as _;

use erw_core::gamma::gamma_ratio;
use erw_core::moments::{
    closed_form, exact_moments_upto, fourth_moment_coefficient, limit_q_moments, write_exact_csv,
    LimitMoments, MixedMoment, EXACT_CSV_HEADER,
};
use erw_core::simulator::{empirical_q_moments, simulate_batch};
use erw_core::{Error, MemoryParameter, MomentSet, StepDistribution};
use serde_json::json;

use crate::{CliError, ExperimentConfig};

pub const DEFAULT_N: usize = 1000;
pub const DEFAULT_REPLICATES: u64 = 10_000;
pub const DEFAULT_SWEEP: &str = "0.6:1.0:0.05";
pub const SIMULATE_CSV_HEADER: &str = "n,p,estimate,stderr,n_replicates,exact,limit,z";
pub const SWEEP_CSV_HEADER: &str = "dist,alpha,q1,q2,q3,q4,k4,status";

/// Distance from 1/2 (and 1/4 for `k4`) below which sweep rows are skipped.
const SWEEP_GUARD: f64 = 1e-6;

pub fn limits(config: &ExperimentConfig) -> Result<String, CliError> {
    let ms: MomentSet<f64> = config.dist.moment_set();
    let q = limit_q_moments(&ms, &config.alpha)?;
    let out = json!({
        "dist": config.dist,
        "alpha": config.alpha.alpha(),
        "q1": q.q1,
        "q2": q.q2,
        "q3": q.q3,
        "q4": q.q4,
    });
    Ok(serde_json::to_string_pretty(&out).expect("limits serialize") + "\n")
}

pub fn exact(config: &ExperimentConfig) -> Result<String, CliError> {
    let n_max = config.n.unwrap_or(DEFAULT_N);
    let ms: MomentSet<f64> = config.dist.moment_set();
    let rows = exact_moments_upto(&ms, &config.alpha, n_max);
    if !config.compare {
        let mut buf = Vec::new();
        write_exact_csv(&mut buf, &rows).expect("writing to memory");
        return Ok(String::from_utf8(buf).expect("ascii csv"));
    }

    // Relative error against max(|exact|, abs/rel), so `relerr <= rel` is
    // the same test as `|diff| <= max(rel |exact|, abs)`.
    let tol = &config.tolerances;
    let floor = tol.closed_form_abs / tol.closed_form_rel;
    let k4 = fourth_moment_coefficient(&ms, &config.alpha).ok();
    let mut out = String::from(EXACT_CSV_HEADER);
    for m in MixedMoment::ALL {
        let _ = write!(out, ",{0}_closed,{0}_relerr", m.name());
    }
    out.push_str(",s4_ratio\n");
    for row in &rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.n, row.s2, row.st, row.s3, row.su, row.t2, row.s2t, row.s4
        );
        for m in MixedMoment::ALL {
            match closed_form(&ms, &config.alpha, row.n, m) {
                Ok(cf) => {
                    let exact = row.get(m);
                    let err = (cf - exact).abs() / exact.abs().max(floor);
                    let _ = write!(out, ",{cf},{err}");
                }
                Err(_) => out.push_str(",,"),
            }
        }
        match k4 {
            Some(k) => {
                let growth = gamma_ratio(row.n as f64, 4.0 * config.alpha.alpha())?;
                let _ = writeln!(out, ",{}", row.s4 / (k * growth));
            }
            None => out.push_str(",\n"),
        }
    }
    Ok(out)
}

pub fn simulate(config: &ExperimentConfig) -> Result<String, CliError> {
    let n = config.n.unwrap_or(DEFAULT_N);
    let replicates = config.replicates.unwrap_or(DEFAULT_REPLICATES);
    let checkpoints = config.checkpoints_for(n)?;
    let mp = &config.alpha;
    let alpha = mp.alpha();
    let ms: MomentSet<f64> = config.dist.moment_set();

    let acc = simulate_batch(
        &config.dist,
        mp,
        n,
        replicates,
        config.master_seed,
        &checkpoints,
    )?;
    let estimates = empirical_q_moments(&acc, mp)?;
    let rows = exact_moments_upto(&ms, mp, *checkpoints.last().expect("nonempty"));
    let limits = limit_q_moments(&ms, mp).ok();

    let mut out = String::new();
    let _ = writeln!(out, "# master_seed={}", config.master_seed);
    let _ = writeln!(
        out,
        "# dist={} alpha={alpha} n={n} replicates={replicates}",
        config.dist.to_json()
    );
    out.push_str(SIMULATE_CSV_HEADER);
    out.push('\n');
    for e in &estimates {
        let row = &rows[e.n - 1];
        let raw = match e.p {
            1 => 0.0,
            2 => row.s2,
            3 => row.s3,
            _ => row.s4,
        };
        let exact = raw / (e.n as f64).powf(e.p as f64 * alpha);
        let limit = limits.as_ref().map(|q| limit_entry(q, e.p));
        let z = z_score(e.estimate, exact, e.stderr);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            e.n,
            e.p,
            e.estimate,
            e.stderr,
            e.n_replicates,
            exact,
            opt(limit),
            opt(z)
        );
    }
    Ok(out)
}

fn limit_entry(q: &LimitMoments<f64>, p: usize) -> f64 {
    match p {
        1 => q.q1,
        2 => q.q2,
        3 => q.q3,
        _ => q.q4,
    }
}

/// `None` when the standard error is undefined; 0 for an exact match with
/// zero spread.
fn z_score(estimate: f64, exact: f64, stderr: f64) -> Option<f64> {
    if stderr.is_nan() {
        return None;
    }
    let gap = estimate - exact;
    if gap.abs() <= 1e-12 * exact.abs().max(1.0) {
        Some(0.0)
    } else {
        Some(gap / stderr)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn sweep(config: &ExperimentConfig) -> Result<String, CliError> {
    let dists = if config.distributions.is_empty() {
        vec![config.dist.clone()]
    } else {
        config.distributions.clone()
    };
    let grid = match &config.alphas {
        Some(g) => g.clone(),
        None => crate::config::parse_grid(DEFAULT_SWEEP)?,
    };
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for dist in &dists {
        let ms: MomentSet<f64> = dist.moment_set();
        let label = csv_quote(&dist.to_json());
        for &alpha in &grid {
            let mp = MemoryParameter::new(alpha)?;
            let near = |x: f64| (alpha - x).abs() < SWEEP_GUARD;
            let k4 = if near(0.25) || near(0.5) {
                None
            } else {
                fourth_moment_coefficient(&ms, &mp).ok()
            };
            let (q, status) = if near(0.5) {
                (None, "singular")
            } else {
                match limit_q_moments(&ms, &mp) {
                    Ok(q) => (Some(q), "ok"),
                    Err(Error::Singular { .. }) => (None, "singular"),
                    Err(Error::NotSuperdiffusive { .. }) => (None, "not_superdiffusive"),
                    Err(e) => return Err(e.into()),
                }
            };
            let cell = |f: fn(&LimitMoments<f64>) -> f64| opt(q.as_ref().map(f));
            let _ = writeln!(
                out,
                "{label},{alpha},{},{},{},{},{},{status}",
                cell(|q| q.q1),
                cell(|q| q.q2),
                cell(|q| q.q3),
                cell(|q| q.q4),
                opt(k4)
            );
        }
    }
    Ok(out)
}

/// RFC 4180 quoting for a field that contains commas or quotes.
fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Default law set for `verify` and multi-law commands.
pub fn reference_laws() -> Vec<StepDistribution> {
    vec![
        StepDistribution::Rademacher,
        StepDistribution::bernoulli(0.3).expect("valid"),
        StepDistribution::uniform(0.0, 1.0).expect("valid"),
    ]
}

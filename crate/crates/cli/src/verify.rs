//! Invariant suites behind `erw verify`.
//!
//! Every suite is a list of cases. A case is SKIP when its formula is
//! singular at the requested alpha; a suite fails if any case fails.

use erw_core::gamma::{
    gamma_sum_linear, gamma_sum_linear_direct, gamma_sum_weighted, gamma_sum_weighted_direct,
    iterate_recursion, solve_recursion, RecursionSpec,
};
use erw_core::moments::{
    brute_force_moments, closed_form, exact_moments_upto, fourth_moment_coefficient,
    limit_q_moments, MixedMoment,
};
use erw_core::simulator::{
    conditional_continuation_test, martingale_diagnostics, path_statistics, replicate_rng,
    simulate_path, WalkState,
};
use erw_core::{Error, MemoryParameter, MomentSet, Rational, RawMoments, Scalar, StepDistribution};
use rand::Rng;
use serde::Serialize;

use crate::commands::reference_laws;
use crate::ExperimentConfig;

#[derive(Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Serialize, Debug)]
pub struct Case {
    pub name: String,
    pub status: Status,
    /// `null` for skipped cases.
    pub worst_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Serialize, Debug)]
pub struct Suite {
    pub name: &'static str,
    pub status: Status,
    pub worst_error: Option<f64>,
    pub tolerance: f64,
    pub cases: Vec<Case>,
}

#[derive(Serialize, Debug)]
pub struct Report {
    pub status: Status,
    pub master_seed: u64,
    pub suites: Vec<Suite>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.suites
            .iter()
            .flat_map(|s| &s.cases)
            .filter(|c| c.status == Status::Fail)
            .count()
    }

    pub fn suite(&self, name: &str) -> Option<&Suite> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl Case {
    fn measured(name: impl Into<String>, worst: f64, tolerance: f64) -> Self {
        let pass = worst <= tolerance;
        Self {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            worst_error: Some(worst),
            message: None,
        }
    }

    fn skip(name: impl Into<String>, why: String) -> Self {
        Self {
            name: name.into(),
            status: Status::Skip,
            worst_error: None,
            message: Some(why),
        }
    }

    fn with_message(mut self, msg: Option<String>) -> Self {
        self.message = msg;
        self
    }
}

fn suite(name: &'static str, tolerance: f64, cases: Vec<Case>) -> Suite {
    let status = if cases.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else if !cases.is_empty() && cases.iter().all(|c| c.status == Status::Skip) {
        Status::Skip
    } else {
        Status::Pass
    };
    let worst_error =
        cases
            .iter()
            .filter_map(|c| c.worst_error)
            .fold(None, |acc: Option<f64>, e| {
                Some(match acc {
                    Some(a) if a >= e || e.is_nan() => a,
                    _ => e,
                })
            });
    Suite {
        name,
        status,
        worst_error,
        tolerance,
        cases,
    }
}

fn laws(config: &ExperimentConfig) -> Vec<StepDistribution> {
    if config.distributions.is_empty() {
        reference_laws()
    } else {
        config.distributions.clone()
    }
}

fn alphas(config: &ExperimentConfig) -> Vec<f64> {
    config
        .alphas
        .clone()
        .unwrap_or_else(|| vec![0.6, 0.75, 0.9, 1.0])
}

fn mp(alpha: f64) -> MemoryParameter<f64> {
    MemoryParameter::new(alpha).expect("alpha validated by config")
}

fn two_point() -> StepDistribution {
    StepDistribution::discrete(vec![-1.0, 2.0], vec![0.6, 0.4]).expect("valid")
}

pub fn run_all(config: &ExperimentConfig) -> Report {
    let suites = vec![
        moment_identities(config),
        recursion_vs_closed_form(config),
        brute_force_oracle(config),
        limit_moments(config),
        gamma_identities(config),
        recursion_solver(config),
        martingale_reconstruction(config),
        conditional_continuation(config),
        marginal_moments(config),
    ];
    let status = if suites.iter().any(|s| s.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    };
    Report {
        status,
        master_seed: config.master_seed,
        suites,
    }
}

fn check_moment_set(name: String, ms: &MomentSet<f64>, tol: f64) -> Case {
    let checks = ms.identity_residuals();
    let worst = checks.iter().map(|c| c.residual.abs()).fold(0.0, f64::max);
    let mut broken: Vec<String> = checks
        .iter()
        .filter(|c| c.residual.is_nan() || c.residual.abs() > tol)
        .map(|c| format!("identity `{}` off by {:e}", c.name, c.residual))
        .collect();
    broken.extend(
        ms.inequality_violations(tol)
            .into_iter()
            .map(|v| format!("inequality `{v}` violated")),
    );
    let failed = !broken.is_empty();
    let mut case = Case::measured(name, worst, tol).with_message(failed.then(|| broken.join("; ")));
    if failed {
        case.status = Status::Fail;
    }
    case
}

fn moment_identities(config: &ExperimentConfig) -> Suite {
    let tol = config.tolerances.identity_abs;
    let mut cases: Vec<Case> = laws(config)
        .iter()
        .chain([two_point()].iter())
        .map(|d| check_moment_set(d.to_json(), &d.moment_set(), tol))
        .collect();
    for f in &config.fixtures {
        cases.push(check_moment_set(
            format!("fixture {}", f.name),
            &f.moments,
            tol,
        ));
    }
    suite("moment_identities", tol, cases)
}

fn recursion_vs_closed_form(config: &ExperimentConfig) -> Suite {
    let tol = &config.tolerances;
    let floor = tol.closed_form_abs / tol.closed_form_rel;
    let n_max = config.n.unwrap_or(10_000);
    let mut cases = Vec::new();
    for d in laws(config) {
        let ms: MomentSet<f64> = d.moment_set();
        for alpha in alphas(config) {
            let name = format!("{} alpha={alpha}", d.to_json());
            let rows = exact_moments_upto(&ms, &mp(alpha), n_max);
            let mut worst = 0.0f64;
            let mut skipped = Vec::new();
            for m in MixedMoment::ALL {
                for row in &rows {
                    match closed_form(&ms, &mp(alpha), row.n, m) {
                        Ok(cf) => {
                            let exact = row.get(m);
                            worst = worst.max((cf - exact).abs() / exact.abs().max(floor));
                        }
                        Err(Error::Singular { denominator, .. }) => {
                            skipped.push(format!("{} ({denominator} vanishes)", m.name()));
                            break;
                        }
                        Err(e) => {
                            skipped.push(format!("{}: {e}", m.name()));
                            break;
                        }
                    }
                }
            }
            let note = (!skipped.is_empty()).then(|| format!("skipped {}", skipped.join(", ")));
            cases.push(if skipped.len() == MixedMoment::ALL.len() {
                Case::skip(name, note.unwrap_or_default())
            } else {
                Case::measured(name, worst, tol.closed_form_rel).with_message(note)
            });
        }
    }
    suite("recursion_vs_closed_form", tol.closed_form_rel, cases)
}

fn brute_force_oracle(config: &ExperimentConfig) -> Suite {
    let tol = config.tolerances.oracle_abs;
    let mut cases = Vec::new();
    for d in [StepDistribution::Rademacher, two_point()] {
        let ms: MomentSet<Rational> = d.moment_set();
        for alpha in [0.0, 0.3, 0.5, 0.75, 1.0] {
            // exact arithmetic: both sides use the same binary alpha
            let a = MemoryParameter::new(Rational::lit(alpha)).expect("valid");
            let rows = exact_moments_upto(&ms, &a, 6);
            let mut worst = 0.0f64;
            for row in &rows {
                let enumerated = brute_force_moments(&d, &a, row.n).expect("within size guard");
                for (x, y) in row.values().iter().zip(enumerated.values()) {
                    worst = worst.max((x.clone() - y).approx().abs());
                }
            }
            cases.push(Case::measured(
                format!("{} alpha={alpha}", d.to_json()),
                worst,
                tol,
            ));
        }
    }
    suite("brute_force_oracle", tol, cases)
}

fn limit_moments(config: &ExperimentConfig) -> Suite {
    let tol = 1e-13;
    let mut cases = Vec::new();
    for d in laws(config) {
        let ms: MomentSet<f64> = d.moment_set();
        let q = limit_q_moments(&ms, &mp(1.0)).expect("alpha = 1 is regular");
        let worst = [
            q.q1,
            q.q2 - ms.central2,
            q.q3 - ms.central3,
            q.q4 - ms.central4,
        ]
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()));
        // exact equality is required here
        let mut case = Case::measured(format!("{} alpha=1", d.to_json()), worst, 0.0);
        if worst > 0.0 {
            case.message = Some("alpha = 1 must reproduce (0, M2, M3, M4) exactly".into());
        }
        cases.push(case);
        for alpha in alphas(config).into_iter().filter(|&a| a > 0.5) {
            let name = format!("{} alpha={alpha} q4=K4", d.to_json());
            match (
                limit_q_moments(&ms, &mp(alpha)),
                fourth_moment_coefficient(&ms, &mp(alpha)),
            ) {
                (Ok(q), Ok(k4)) => {
                    let ordered = q.q2 >= 0.0 && q.q4 >= q.q2 * q.q2 * (1.0 - 1e-12);
                    let mut case = Case::measured(name, (q.q4 - k4).abs(), tol * k4.abs().max(1.0));
                    if !ordered || q.q1 != 0.0 {
                        case.status = Status::Fail;
                        case.message = Some("need q1 = 0, q2 >= 0, q4 >= q2^2".into());
                    }
                    cases.push(case);
                }
                (Err(e), _) | (_, Err(e)) => cases.push(Case::skip(name, e.to_string())),
            }
        }
    }
    let ms: MomentSet<f64> = StepDistribution::Rademacher.moment_set();
    let q = limit_q_moments(&ms, &mp(0.75)).expect("regular");
    let worst = [q.q2 - 4.0 / std::f64::consts::PI.sqrt(), q.q3, q.q4 - 9.75]
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()));
    cases.push(Case::measured(
        "rademacher alpha=0.75 reference values",
        worst,
        tol,
    ));
    suite("limit_moments", tol, cases)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn gamma_identities(config: &ExperimentConfig) -> Suite {
    let tol = config.tolerances.gamma_rel;
    let mut rng = replicate_rng(config.master_seed, 1);
    let (mut lin, mut wtd) = (0.0f64, 0.0f64);
    let mut done = 0;
    while done < 500 {
        let a: f64 = rng.random_range(0.0..4.0);
        let b: f64 = rng.random_range(0.0..4.0);
        if (b - a - 1.0).abs() < 0.05 || (b - a - 2.0).abs() < 0.05 {
            continue;
        }
        let n = rng.random_range(1..=1000usize);
        lin = lin.max(rel(
            gamma_sum_linear(a, b, n).unwrap_or(f64::NAN),
            gamma_sum_linear_direct(a, b, n),
        ));
        wtd = wtd.max(rel(
            gamma_sum_weighted(a, b, n).unwrap_or(f64::NAN),
            gamma_sum_weighted_direct(a, b, n),
        ));
        done += 1;
    }
    let nan_guard = |x: f64| if x.is_nan() { f64::INFINITY } else { x };
    suite(
        "gamma_sums",
        tol,
        vec![
            Case::measured("linear sum, 500 random cases", nan_guard(lin), tol),
            Case::measured("weighted sum, 500 random cases", nan_guard(wtd), tol),
        ],
    )
}

fn recursion_solver(config: &ExperimentConfig) -> Suite {
    let tol = config.tolerances.gamma_rel;
    let mut rng = replicate_rng(config.master_seed, 2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let beta: f64 = rng.random_range(0.05..4.0);
        let b1: f64 = rng.random_range(0.5..5.0);
        let len = rng.random_range(1..2000usize);
        let c: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..3.0)).collect();
        let spec = RecursionSpec::new(beta, b1, c).expect("beta > 0");
        let solved = solve_recursion(&spec, len + 1).unwrap_or(f64::NAN);
        let e = rel(solved, iterate_recursion(&spec, len + 1).expect("in range"));
        worst = worst.max(if e.is_nan() { f64::INFINITY } else { e });
    }
    suite(
        "recursion_solver",
        tol,
        vec![Case::measured(
            "100 random specs against direct iteration",
            worst,
            tol,
        )],
    )
}

fn martingale_reconstruction(config: &ExperimentConfig) -> Suite {
    let tol = config.tolerances.reconstruction_rel;
    let mut cases = Vec::new();
    for d in laws(config) {
        let ms: MomentSet<f64> = d.moment_set();
        for alpha in [0.0, 0.4].into_iter().chain(alphas(config)) {
            let mut worst = 0.0f64;
            let mut failure = None;
            for k in 0..10 {
                let path = simulate_path(&d, &mp(alpha), 2000, config.master_seed.wrapping_add(k));
                match martingale_diagnostics(&path, &mp(alpha), &ms) {
                    Ok(view) => worst = worst.max(view.max_rel_error),
                    Err(e) => {
                        worst = f64::INFINITY;
                        failure = Some(e.to_string());
                    }
                }
            }
            cases.push(
                Case::measured(format!("{} alpha={alpha}", d.to_json()), worst, tol)
                    .with_message(failure),
            );
        }
    }
    suite("martingale_reconstruction", tol, cases)
}

fn conditional_continuation(config: &ExperimentConfig) -> Suite {
    let tol = config.tolerances.continuation_z;
    let continuations = config.replicates.unwrap_or(100_000);
    let setups: Vec<(String, StepDistribution, f64, Vec<f64>)> = vec![
        (
            "rademacher prefix +1,+1,+1 alpha=0.6".into(),
            StepDistribution::Rademacher,
            0.6,
            vec![1.0, 1.0, 1.0],
        ),
        (
            "two-point random prefix alpha=0.75".into(),
            two_point(),
            0.75,
            simulate_path(&two_point(), &mp(0.75), 20, config.master_seed).steps,
        ),
        (
            "uniform memoryless alpha=0".into(),
            StepDistribution::uniform(0.0, 1.0).expect("valid"),
            0.0,
            vec![0.9, 0.8, 0.7],
        ),
    ];
    let mut cases = Vec::new();
    for (i, (name, d, alpha, steps)) in setups.into_iter().enumerate() {
        let prefix = WalkState::from_steps(&d, &mp(alpha), &steps);
        let seed = config.master_seed.wrapping_add(100 + i as u64);
        match conditional_continuation_test(&prefix, &d, &mp(alpha), continuations, seed) {
            Ok(r) => {
                let worst = r.z_scores().iter().fold(0.0f64, |a, z| a.max(z.abs()));
                cases.push(Case::measured(name, worst, tol));
            }
            Err(e) => cases
                .push(Case::measured(name, f64::INFINITY, tol).with_message(Some(e.to_string()))),
        }
    }
    suite("conditional_continuation", tol, cases)
}

fn marginal_moments(config: &ExperimentConfig) -> Suite {
    let tol = config.tolerances.marginal_z;
    let replicates = config.replicates.unwrap_or(10_000);
    let mut cases = Vec::new();
    for d in [StepDistribution::Rademacher, two_point()] {
        let raw: RawMoments<f64> = d.raw_moments();
        let want = [raw.m1, raw.m2, raw.m3, raw.m4];
        let samples = [1, 10, 50, 99];
        let stats = match path_statistics(
            &d,
            &mp(0.75),
            100,
            replicates,
            config.master_seed,
            100,
            &samples,
        ) {
            Ok(s) => s,
            Err(e) => {
                cases.push(
                    Case::measured(d.to_json(), f64::INFINITY, tol)
                        .with_message(Some(e.to_string())),
                );
                continue;
            }
        };
        let z = |e: &erw_core::simulator::Estimate, w: f64| e.z_score(w).abs();
        let marg = stats
            .step_moments
            .iter()
            .flat_map(|row| row.iter().zip(want).map(|(e, w)| z(e, w)))
            .fold(0.0f64, f64::max);
        cases.push(Case::measured(
            format!("{} marginal E(X_k^p), k<=100, p<=4 (z)", d.to_json()),
            marg,
            tol,
        ));
        let inc = stats
            .increments
            .iter()
            .map(|(_, e)| z(e, 0.0))
            .fold(0.0f64, f64::max);
        cases.push(Case::measured(
            format!("{} martingale increments (z)", d.to_json()),
            inc,
            tol,
        ));
        let bound = 16.0 * d.abs_moment(4);
        let ratio = stats
            .epsilon_abs
            .iter()
            .map(|e| e[1].mean / bound)
            .fold(0.0f64, f64::max);
        cases.push(Case::measured(
            format!("{} E|eps_n|^4 / (16 E|xi|^4)", d.to_json()),
            ratio,
            1.0,
        ));
    }
    suite("marginal_moments", tol, cases)
}

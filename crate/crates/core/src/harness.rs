//! Monte Carlo benchmark: bias, MSE, coverage and mean τ̂² per method over
//! a grid of simulation settings and study counts.
//!
//! Every replication draws its dataset from the stream at path
//! `(setting, m, rep)`, so all methods see the same data and the output does
//! not depend on how replications are scheduled across threads.

use serde::Serialize;

use crate::bivariate::{bd_fit, EtaRule};
use crate::classic::dl_fit;
use crate::error::{Error, Result};
use crate::likelihood::{gs_ci_from, ht_profile_ci_from, nb_ci_from, HtProfile, SkovgaardForm};
use crate::model::{check_alpha, FitResult, MetaDataset, Method};
use crate::simulation::{preset, preset_variant, simulate_meta_dataset, IpdSettings, PresetVariant};
use crate::statkit::{derive_stream, RngStream};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub settings: Vec<u32>,
    pub m_values: Vec<usize>,
    pub n_reps: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub variant: PresetVariant,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            settings: (1..=6).collect(),
            m_values: vec![10, 20, 30],
            n_reps: 1000,
            alpha: 0.05,
            master_seed: 1,
            methods: Method::ALL.to_vec(),
            variant: PresetVariant::Printed,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.settings.is_empty() || self.m_values.is_empty() || self.methods.is_empty() {
            return Err(Error::Config("settings, m and methods must be non-empty".into()));
        }
        if let Some(m) = self.m_values.iter().find(|&&m| m < 2) {
            return Err(Error::Config(format!("every m must be >= 2, got {m}")));
        }
        for &s in &self.settings {
            preset(s)?;
        }
        check_alpha(self.alpha).map_err(|e| Error::Config(e.to_string()))
    }
}

/// One method's result on one replication.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodOutcome {
    Fit {
        theta_hat: f64,
        ci_low: f64,
        ci_high: f64,
        tau2_hat: f64,
        covered: bool,
    },
    Failed(String),
}

impl MethodOutcome {
    fn from_fit(fit: Result<FitResult>, theta_true: f64) -> Self {
        match fit {
            Ok(f) if f.converged => MethodOutcome::Fit {
                theta_hat: f.theta_hat,
                ci_low: f.ci_low,
                ci_high: f.ci_high,
                tau2_hat: f.tau2_hat,
                covered: f.covers(theta_true),
            },
            Ok(_) => MethodOutcome::Failed("not converged".into()),
            Err(e) => MethodOutcome::Failed(e.to_string()),
        }
    }

    pub fn covered(&self) -> Option<bool> {
        match self {
            MethodOutcome::Fit { covered, .. } => Some(*covered),
            MethodOutcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub theta_true: f64,
    pub outcomes: Vec<(Method, MethodOutcome)>,
}

impl Replication {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|(m, _)| *m == method).map(|(_, o)| o)
    }
}

/// Fit every requested method to one dataset. The three profile-likelihood
/// methods share a single Hardy-Thompson fit.
pub fn fit_methods(
    data: &MetaDataset,
    methods: &[Method],
    alpha: f64,
    eta: &EtaRule,
) -> Vec<(Method, Result<FitResult>)> {
    let needs_ht = methods
        .iter()
        .any(|m| matches!(m, Method::HT | Method::NB | Method::GS));
    let profile = if needs_ht { Some(HtProfile::new(data)) } else { None };
    methods
        .iter()
        .map(|&method| {
            let fit = match method {
                Method::DL => dl_fit(data, alpha),
                Method::BD => bd_fit(data, alpha, eta),
                Method::HT | Method::NB | Method::GS => match profile.as_ref().expect("profile") {
                    Err(e) => Err(e.clone()),
                    Ok(p) => match method {
                        Method::HT => ht_profile_ci_from(p, alpha),
                        Method::NB => nb_ci_from(p, alpha),
                        _ => gs_ci_from(p, alpha, SkovgaardForm::default()),
                    },
                },
            };
            (method, fit)
        })
        .collect()
}

/// Simulate one dataset and fit every requested method to it.
pub fn run_replication(
    settings: &IpdSettings,
    m: usize,
    methods: &[Method],
    alpha: f64,
    rng: &mut RngStream,
) -> Result<Replication> {
    let (data, theta_true) = simulate_meta_dataset(settings, m, rng)?;
    let outcomes = fit_methods(&data, methods, alpha, &EtaRule::InverseDf)
        .into_iter()
        .map(|(method, fit)| (method, MethodOutcome::from_fit(fit, theta_true)))
        .collect();
    Ok(Replication { theta_true, outcomes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodStats {
    pub bias: f64,
    pub mse: f64,
    pub coverage: f64,
    pub mean_tau2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n_converged: usize,
    pub n_failed: usize,
    /// `None` when no replication converged.
    pub stats: Option<MethodStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceSummary {
    pub setting: u32,
    pub m: usize,
    pub n_reps: usize,
    pub methods: Vec<MethodSummary>,
}

impl PerformanceSummary {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }

    pub fn stats(&self, method: Method) -> Option<MethodStats> {
        self.method(method).and_then(|s| s.stats)
    }
}

/// Aggregate one method over replications; sums run in replication order.
pub fn summarize_method(reps: &[Replication], method: Method, theta_true: f64) -> Result<MethodStats> {
    let (mut n, mut sum, mut sum_sq, mut covered, mut sum_tau2) = (0usize, 0.0, 0.0, 0usize, 0.0);
    for rep in reps {
        if let Some(MethodOutcome::Fit {
            theta_hat,
            tau2_hat,
            covered: c,
            ..
        }) = rep.outcome(method)
        {
            n += 1;
            sum += theta_hat;
            sum_sq += (theta_hat - theta_true).powi(2);
            covered += usize::from(*c);
            sum_tau2 += tau2_hat;
        }
    }
    if n == 0 {
        return Err(Error::AllFailed(method.to_string()));
    }
    let nf = n as f64;
    Ok(MethodStats {
        bias: sum / nf - theta_true,
        mse: sum_sq / nf,
        coverage: covered as f64 / nf,
        mean_tau2: sum_tau2 / nf,
    })
}

pub fn summarize(
    setting: u32,
    m: usize,
    reps: &[Replication],
    methods: &[Method],
    theta_true: f64,
) -> PerformanceSummary {
    let methods = methods
        .iter()
        .map(|&method| {
            let n_converged = reps
                .iter()
                .filter(|r| matches!(r.outcome(method), Some(MethodOutcome::Fit { .. })))
                .count();
            MethodSummary {
                method,
                n_converged,
                n_failed: reps.len() - n_converged,
                stats: summarize_method(reps, method, theta_true).ok(),
            }
        })
        .collect();
    PerformanceSummary {
        setting,
        m,
        n_reps: reps.len(),
        methods,
    }
}

/// Run the full settings × m grid. `workers` bounds the thread pool; `None`
/// uses rayon's default.
pub fn run_benchmark(config: &BenchmarkConfig, workers: Option<usize>) -> Result<Vec<PerformanceSummary>> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut out = Vec::new();
    for &setting in &config.settings {
        let settings = preset_variant(setting, config.variant)?;
        for &m in &config.m_values {
            let reps = pool.install(|| run_cell(config, setting, &settings, m))?;
            out.push(summarize(setting, m, &reps, &config.methods, settings.theta()));
        }
    }
    Ok(out)
}

fn run_cell(config: &BenchmarkConfig, setting: u32, settings: &IpdSettings, m: usize) -> Result<Vec<Replication>> {
    use rayon::prelude::*;
    (0..config.n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = derive_stream(config.master_seed, &[setting as u64, m as u64, rep as u64]);
            run_replication(settings, m, &config.methods, config.alpha, &mut rng)
        })
        .collect()
}

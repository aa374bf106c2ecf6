//! `metapool bench`: run the Monte Carlo grid and write the result tables.

use std::path::Path;

use metapool_core::{run_benchmark, BenchmarkConfig, MethodStats, PerformanceSummary};

use crate::error::CliError;
use crate::io::{sig6, NA};

pub const TABLES: [(&str, Metric); 4] = [
    ("bias.csv", Metric::Bias),
    ("mse.csv", Metric::Mse),
    ("coverage.csv", Metric::Coverage),
    ("tau2.csv", Metric::MeanTau2),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Bias,
    Mse,
    Coverage,
    MeanTau2,
}

impl Metric {
    fn of(self, s: &MethodStats) -> f64 {
        match self {
            Metric::Bias => s.bias,
            Metric::Mse => s.mse,
            Metric::Coverage => s.coverage,
            Metric::MeanTau2 => s.mean_tau2,
        }
    }
}

pub fn bench(cfg: &BenchmarkConfig, workers: Option<usize>, out: &Path) -> Result<Vec<PerformanceSummary>, CliError> {
    if workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    let summaries = run_benchmark(cfg, workers).map_err(|e| match e {
        metapool_core::Error::Config(msg) => CliError::Config(msg),
        other => CliError::Estimation(other.to_string()),
    })?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out.display(), e))?;
    let mut files: Vec<(&str, String)> = TABLES
        .iter()
        .map(|&(name, metric)| (name, wide_table(cfg, &summaries, metric)))
        .collect();
    files.push(("coverage_long.csv", coverage_long(&summaries)));
    files.push(("diagnostics.csv", diagnostics(&summaries)));
    for (name, text) in files {
        let path = out.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(path.display(), e))?;
    }
    Ok(summaries)
}

/// Rows are settings; columns run over m and, within each m, over methods.
pub fn wide_table(cfg: &BenchmarkConfig, summaries: &[PerformanceSummary], metric: Metric) -> String {
    let mut s = String::from("setting");
    for m in &cfg.m_values {
        for method in &cfg.methods {
            s.push_str(&format!(",{method}_m{m}"));
        }
    }
    s.push('\n');
    for &setting in &cfg.settings {
        s.push_str(&setting.to_string());
        for &m in &cfg.m_values {
            let cell = summaries.iter().find(|p| p.setting == setting && p.m == m);
            for &method in &cfg.methods {
                let value = cell.and_then(|p| p.stats(method)).map(|st| sig6(metric.of(&st)));
                s.push(',');
                s.push_str(value.as_deref().unwrap_or(NA));
            }
        }
        s.push('\n');
    }
    s
}

fn coverage_long(summaries: &[PerformanceSummary]) -> String {
    let mut s = String::from("setting,m,method,coverage\n");
    for p in summaries {
        for ms in &p.methods {
            let cov = ms.stats.map_or(NA.to_string(), |st| sig6(st.coverage));
            s.push_str(&format!("{},{},{},{}\n", p.setting, p.m, ms.method, cov));
        }
    }
    s
}

fn diagnostics(summaries: &[PerformanceSummary]) -> String {
    let mut s = String::from("setting,m,method,n_reps,n_converged,n_failed\n");
    for p in summaries {
        for ms in &p.methods {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.setting, p.m, ms.method, p.n_reps, ms.n_converged, ms.n_failed
            ));
        }
    }
    s
}

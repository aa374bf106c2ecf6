//! `metapool analyze`: pool a user dataset with the selected methods.

use std::path::PathBuf;

use metapool_core::{fit_methods, EtaRule, FitResult, MetaDataset, Method};
use serde_json::json;

use crate::error::CliError;
use crate::io::{dec4, read_records, sig6, NA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Markdown,
}

#[derive(Debug, Clone)]
pub struct AnalyzeRequest {
    pub input: PathBuf,
    pub alpha: f64,
    pub methods: Vec<Method>,
    pub eta: EtaRule,
    pub format: OutputFormat,
}

#[derive(Debug, Clone)]
pub struct AnalyzeReport {
    pub alpha: f64,
    pub rows: Vec<(Method, Result<FitResult, String>)>,
}

impl AnalyzeReport {
    pub fn failures(&self) -> impl Iterator<Item = (Method, &str)> {
        self.rows
            .iter()
            .filter_map(|(m, r)| r.as_ref().err().map(|e| (*m, e.as_str())))
    }
}

/// Parse `inverse_df`, `inverse_n_minus_3:n,..`, `two_group:n0/n1,..` or
/// `custom:eta,..`.
pub fn parse_eta(text: &str) -> Result<EtaRule, CliError> {
    let bad = |msg: String| CliError::Validation(format!("--eta: {msg}"));
    let (kind, values) = match text.split_once(':') {
        Some((k, v)) => (k.trim(), Some(v)),
        None => (text.trim(), None),
    };
    let nums = |v: &str| -> Result<Vec<f64>, CliError> {
        v.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad(format!("not a number: `{x}`"))))
            .collect()
    };
    match (kind, values) {
        ("inverse_df", None) => Ok(EtaRule::InverseDf),
        ("inverse_n_minus_3", Some(v)) => Ok(EtaRule::InverseNMinus3(nums(v)?)),
        ("custom", Some(v)) => Ok(EtaRule::Custom(nums(v)?)),
        ("two_group", Some(v)) => v
            .split(',')
            .map(|pair| {
                let (a, b) = pair
                    .split_once('/')
                    .ok_or_else(|| bad(format!("expected n0/n1, got `{pair}`")))?;
                let n = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("not a number: `{s}`")));
                Ok((n(a)?, n(b)?))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(EtaRule::TwoGroup),
        _ => Err(bad(format!("unknown rule `{text}`"))),
    }
}

pub fn analyze(req: &AnalyzeRequest) -> Result<AnalyzeReport, CliError> {
    if !(req.alpha > 0.0 && req.alpha < 1.0) {
        return Err(CliError::Validation(format!("alpha must lie in (0, 1), got {}", req.alpha)));
    }
    if req.methods.is_empty() {
        return Err(CliError::Validation("no methods selected".into()));
    }
    let records = read_records(&req.input)?;
    let data = MetaDataset::new(records).map_err(|e| CliError::Validation(e.to_string()))?;
    if req.methods.contains(&Method::BD) {
        req.eta
            .etas(&data)
            .map_err(|e| CliError::Validation(format!("--eta: {e}")))?;
    }
    let rows = fit_methods(&data, &req.methods, req.alpha, &req.eta)
        .into_iter()
        .map(|(m, r)| (m, r.map_err(|e| e.to_string())))
        .collect();
    Ok(AnalyzeReport {
        alpha: req.alpha,
        rows,
    })
}

pub fn render(report: &AnalyzeReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(report),
        OutputFormat::Json => render_json(report),
        OutputFormat::Markdown => render_markdown(report),
    }
}

fn render_csv(report: &AnalyzeReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "theta", "ci_low", "ci_high", "tau2", "sigma2", "status"])
        .expect("in-memory write");
    for (method, row) in &report.rows {
        let fields = match row {
            Ok(f) => [
                method.to_string(),
                sig6(f.theta_hat),
                sig6(f.ci_low),
                sig6(f.ci_high),
                sig6(f.tau2_hat),
                f.sigma2_hat.map_or(NA.to_string(), sig6),
                "ok".to_string(),
            ],
            Err(e) => [
                method.to_string(),
                NA.into(),
                NA.into(),
                NA.into(),
                NA.into(),
                NA.into(),
                format!("error: {e}"),
            ],
        };
        w.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn render_json(report: &AnalyzeReport) -> String {
    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|(method, row)| match row {
            Ok(f) => serde_json::to_value(f).expect("serializable fit"),
            Err(e) => json!({ "method": method, "error": e }),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&json!({ "alpha": report.alpha, "results": rows }))
        .expect("serializable report");
    s.push('\n');
    s
}

fn render_markdown(report: &AnalyzeReport) -> String {
    let level = format!("{}%", (1000.0 * (1.0 - report.alpha)).round() / 10.0);
    let mut s = format!("| Method | Estimate | {level} CI | τ̂² |\n|---|---|---|---|\n");
    for (method, row) in &report.rows {
        match row {
            Ok(f) => s.push_str(&format!(
                "| {method} | {} | ({}, {}) | {} |\n",
                dec4(f.theta_hat),
                dec4(f.ci_low),
                dec4(f.ci_high),
                dec4(f.tau2_hat)
            )),
            Err(_) => s.push_str(&format!("| {method} | {NA} | {NA} | {NA} |\n")),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_rules_parse() {
        assert_eq!(parse_eta("inverse_df").unwrap(), EtaRule::InverseDf);
        assert_eq!(parse_eta("custom:0.5, 0.25").unwrap(), EtaRule::Custom(vec![0.5, 0.25]));
        assert_eq!(
            parse_eta("two_group:10/12,8/9").unwrap(),
            EtaRule::TwoGroup(vec![(10.0, 12.0), (8.0, 9.0)])
        );
        assert_eq!(parse_eta("inverse_n_minus_3:20").unwrap(), EtaRule::InverseNMinus3(vec![20.0]));
        for bad in ["inverse", "custom", "custom:a", "two_group:10"] {
            assert!(parse_eta(bad).is_err(), "{bad}");
        }
    }
}

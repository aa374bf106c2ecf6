//! Study-level data model shared by every estimator.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One study's aggregated triplet: effect size, its standard error and the
/// degrees of freedom of the squared standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub study_id: String,
    pub y: f64,
    pub se: f64,
    pub df: f64,
}

impl StudyRecord {
    pub fn new(study_id: impl Into<String>, y: f64, se: f64, df: f64) -> Self {
        Self {
            study_id: study_id.into(),
            y,
            se,
            df,
        }
    }

    /// Squared standard error.
    pub fn var(&self) -> f64 {
        self.se * self.se
    }
}

/// A validated collection of at least two studies with unique ids.
///
/// Only [`MetaDataset::new`] constructs one, so estimators can rely on
/// positive standard errors and degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    records: Vec<StudyRecord>,
}

impl MetaDataset {
    pub fn new(records: Vec<StudyRecord>) -> Result<Self> {
        validate_dataset(records)
    }

    pub fn records(&self) -> &[StudyRecord] {
        &self.records
    }

    pub fn m(&self) -> usize {
        self.records.len()
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.y)
    }

    pub fn vars(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(StudyRecord::var)
    }

    pub fn into_records(self) -> Vec<StudyRecord> {
        self.records
    }

    /// Apply `y -> scale * y + shift`, `se -> scale * se` to every study.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        let records = self
            .records
            .iter()
            .map(|r| StudyRecord::new(r.study_id.clone(), scale * r.y + shift, scale * r.se, r.df))
            .collect();
        Self::new(records)
    }
}

pub fn validate_dataset(records: Vec<StudyRecord>) -> Result<MetaDataset> {
    if records.len() < 2 {
        return Err(Error::EmptyOrSingleton { m: records.len() });
    }
    let mut seen = HashSet::with_capacity(records.len());
    for r in &records {
        if !r.y.is_finite() {
            return Err(Error::NonFiniteEffect {
                study: r.study_id.clone(),
                y: r.y,
            });
        }
        if !(r.se > 0.0) || !r.se.is_finite() {
            return Err(Error::NonPositiveSe {
                study: r.study_id.clone(),
                se: r.se,
            });
        }
        if !(r.df > 0.0) || !r.df.is_finite() {
            return Err(Error::NonPositiveDf {
                study: r.study_id.clone(),
                df: r.df,
            });
        }
        if !seen.insert(r.study_id.as_str()) {
            return Err(Error::DuplicateId {
                study: r.study_id.clone(),
            });
        }
    }
    Ok(MetaDataset { records })
}

/// The five pooling methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// DerSimonian-Laird moment estimator with a t interval.
    DL,
    /// Hardy-Thompson maximum likelihood with a profile-likelihood interval.
    HT,
    /// Bartlett-type corrected profile likelihood interval.
    NB,
    /// Skovgaard-corrected signed likelihood root interval.
    GS,
    /// Bivariate normal / chi-square likelihood.
    BD,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::DL, Method::HT, Method::NB, Method::GS, Method::BD];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::DL => "DL",
            Method::HT => "HT",
            Method::NB => "NB",
            Method::GS => "GS",
            Method::BD => "BD",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DL" => Ok(Method::DL),
            "HT" => Ok(Method::HT),
            "NB" => Ok(Method::NB),
            "GS" => Ok(Method::GS),
            "BD" => Ok(Method::BD),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Point estimate, confidence interval and variance components of one fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub method: Method,
    pub theta_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    pub tau2_hat: f64,
    /// Common within-study variance parameter, BD only.
    pub sigma2_hat: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostics: BTreeMap<String, String>,
}

impl FitResult {
    pub(crate) fn new(method: Method, theta_hat: f64, ci: (f64, f64), alpha: f64, tau2_hat: f64) -> Self {
        Self {
            method,
            theta_hat,
            ci_low: ci.0,
            ci_high: ci.1,
            alpha,
            tau2_hat,
            sigma2_hat: None,
            converged: true,
            iterations: 0,
            diagnostics: BTreeMap::new(),
        }
    }

    pub(crate) fn flag(&mut self, key: &str, value: impl ToString) {
        self.diagnostics.insert(key.to_string(), value.to_string());
    }

    /// Closed-interval coverage check.
    pub fn covers(&self, theta: f64) -> bool {
        self.ci_low <= theta && theta <= self.ci_high
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

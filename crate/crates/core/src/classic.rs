//! DerSimonian-Laird moment estimation.

use crate::error::{domain, Error, Result};
use crate::model::{check_alpha, FitResult, MetaDataset, Method};
use crate::statkit::{normal_quantile, student_t_quantile};

/// Cochran's Q and the inverse-variance weighted mean it is centred on.
pub fn cochran_q(data: &MetaDataset) -> (f64, f64) {
    let (sw, swy) = data
        .records()
        .iter()
        .fold((0.0, 0.0), |(sw, swy), r| {
            let w = 1.0 / r.var();
            (sw + w, swy + w * r.y)
        });
    let y_bar = swy / sw;
    let q = data
        .records()
        .iter()
        .map(|r| (r.y - y_bar).powi(2) / r.var())
        .sum();
    (q, y_bar)
}

/// Moment estimate of the between-study variance, truncated at zero.
pub fn dl_tau2(data: &MetaDataset) -> Result<f64> {
    let (q, _) = cochran_q(data);
    let (sw, sw2) = data.vars().fold((0.0, 0.0), |(a, b), v| {
        let w = 1.0 / v;
        (a + w, b + w * w)
    });
    let denom = sw - sw2 / sw;
    if !(denom > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    Ok(((q - (data.m() as f64 - 1.0)) / denom).max(0.0))
}

/// Options for [`dl_fit_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DlOptions {
    /// Use the normal instead of the t(m-1) quantile. Off by default.
    pub normal_quantile: bool,
}

pub fn dl_fit(data: &MetaDataset, alpha: f64) -> Result<FitResult> {
    dl_fit_with(data, alpha, DlOptions::default())
}

pub fn dl_fit_with(data: &MetaDataset, alpha: f64, opts: DlOptions) -> Result<FitResult> {
    check_alpha(alpha)?;
    let tau2 = dl_tau2(data)?;
    let (sw, swy) = data.records().iter().fold((0.0, 0.0), |(sw, swy), r| {
        let w = 1.0 / (tau2 + r.var());
        (sw + w, swy + w * r.y)
    });
    let theta = swy / sw;
    let se = (1.0 / sw).sqrt();
    if !(theta.is_finite() && se.is_finite()) {
        return Err(domain("pooled estimate overflowed; rescale the effect sizes"));
    }
    let crit = if opts.normal_quantile {
        normal_quantile(1.0 - alpha / 2.0)?
    } else {
        student_t_quantile(1.0 - alpha / 2.0, data.m() as f64 - 1.0)?
    };
    let mut fit = FitResult::new(Method::DL, theta, (theta - crit * se, theta + crit * se), alpha, tau2);
    fit.flag("se", se);
    if tau2 == 0.0 {
        fit.flag("tau2_boundary", true);
    }
    Ok(fit)
}

/// Standard error of the DL pooled estimate; used as the step scale by the
/// likelihood interval searches.
pub(crate) fn dl_se(data: &MetaDataset) -> Result<f64> {
    let tau2 = dl_tau2(data)?;
    let sw: f64 = data.vars().map(|v| 1.0 / (tau2 + v)).sum();
    Ok((1.0 / sw).sqrt())
}

//! Hardy-Thompson maximum likelihood and the three likelihood-based
//! intervals built on it: the profile likelihood ratio interval, its
//! Bartlett-type correction, and the Skovgaard-corrected signed root.
//!
//! All three share the point estimates `(θ̂, τ̂²)` that maximize
//!
//! ```text
//! l(θ, τ²) = -m/2 ln 2π - ½ Σ ln(τ² + Sᵢ²) - ½ Σ (Yᵢ - θ)² / (τ² + Sᵢ²)
//! ```
//!
//! with τ² ≥ 0. [`HtProfile`] caches that maximum so that repeated
//! evaluations of the profile statistics during an interval search do not
//! refit it.

use crate::classic::{dl_se, dl_tau2};
use crate::error::{domain, Error, Result};
use crate::model::{check_alpha, FitResult, MetaDataset, Method};
use crate::roots::{bisect_boundary, maximize_on_halfline};
use crate::statkit::{chi_square_quantile, normal_quantile};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Maximum likelihood estimates of the Hardy-Thompson model.
#[derive(Debug, Clone, PartialEq)]
pub struct HtEstimate {
    pub theta_hat: f64,
    pub tau2_hat: f64,
    pub loglik_at_max: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub fn ht_loglik(theta: f64, tau2: f64, data: &MetaDataset) -> f64 {
    let m = data.m() as f64;
    let mut acc = -0.5 * m * LN_2PI;
    for r in data.records() {
        let v = tau2 + r.var();
        acc -= 0.5 * (v.ln() + (r.y - theta).powi(2) / v);
    }
    acc
}

/// Gradient `(∂l/∂θ, ∂l/∂τ²)`.
pub fn ht_score(theta: f64, tau2: f64, data: &MetaDataset) -> (f64, f64) {
    data.records().iter().fold((0.0, 0.0), |(gt, gv), r| {
        let w = 1.0 / (tau2 + r.var());
        let e = r.y - theta;
        (gt + e * w, gv + 0.5 * (e * e * w - 1.0) * w)
    })
}

/// Hessian of `l` in `(θ, τ²)`.
pub fn observed_hessian(theta: f64, tau2: f64, data: &MetaDataset) -> [[f64; 2]; 2] {
    let (mut h11, mut h12, mut h22) = (0.0, 0.0, 0.0);
    for r in data.records() {
        let w = 1.0 / (tau2 + r.var());
        let e = r.y - theta;
        h11 -= w;
        h12 -= e * w * w;
        h22 += (0.5 - e * e * w) * w * w;
    }
    [[h11, h12], [h12, h22]]
}

/// Expected (Fisher) information in `(θ, τ²)`; it is diagonal.
pub fn expected_information(tau2: f64, data: &MetaDataset) -> [[f64; 2]; 2] {
    let (s1, s2) = data.vars().fold((0.0, 0.0), |(a, b), v| {
        let w = 1.0 / (tau2 + v);
        (a + w, b + w * w)
    });
    [[s1, 0.0], [0.0, 0.5 * s2]]
}

fn weighted_mean(tau2: f64, data: &MetaDataset) -> f64 {
    let (sw, swy) = data.records().iter().fold((0.0, 0.0), |(sw, swy), r| {
        let w = 1.0 / (tau2 + r.var());
        (sw + w, swy + w * r.y)
    });
    swy / sw
}

/// Right-hand side of the τ² likelihood equation at `(theta, tau2)`.
fn tau2_update(theta: f64, tau2: f64, data: &MetaDataset) -> f64 {
    let (num, den) = data.records().iter().fold((0.0, 0.0), |(n, d), r| {
        let w = 1.0 / (tau2 + r.var());
        let w2 = w * w;
        (n + ((r.y - theta).powi(2) - r.var()) * w2, d + w2)
    });
    num / den
}

/// Residuals of the two likelihood equations, written as `update - current`
/// so that both vanish at an interior maximum.
pub fn ht_residuals(theta: f64, tau2: f64, data: &MetaDataset) -> (f64, f64) {
    (
        weighted_mean(tau2, data) - theta,
        tau2_update(theta, tau2, data) - tau2,
    )
}

/// Maximize over τ² at fixed θ; the constrained estimate τ̂²(θ).
pub fn profile_tau2(theta: f64, data: &MetaDataset) -> Result<f64> {
    Ok(profile_tau2_at(theta, data))
}

fn profile_tau2_at(theta: f64, data: &MetaDataset) -> f64 {
    // The τ² score is negative once τ² exceeds every (Yᵢ-θ)² - Sᵢ².
    let upper = data
        .records()
        .iter()
        .map(|r| (r.y - theta).powi(2) - r.var())
        .fold(f64::NEG_INFINITY, f64::max);
    maximize_on_halfline(
        |t| ht_loglik(theta, t, data),
        |t| ht_score(theta, t, data).1,
        upper,
    )
}

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 10_000;

/// Joint maximum likelihood estimates of `(θ, τ²)`.
///
/// Iterates the two likelihood equations (τ² clamped at zero, damped when
/// the τ² steps start alternating). The fixed point is then compared with a
/// direct maximization of the concentrated likelihood `l(θ(τ²), τ²)` and the
/// higher of the two is returned.
pub fn ht_mle(data: &MetaDataset) -> Result<HtEstimate> {
    let mut tau2 = dl_tau2(data).unwrap_or(0.0);
    let mut theta = weighted_mean(tau2, data);
    let mut damping: f64 = 1.0;
    let mut last_step = 0.0_f64;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=FIXED_POINT_MAX_ITER {
        iterations = it;
        let target = tau2_update(theta, tau2, data).max(0.0);
        let step = target - tau2;
        if step * last_step < 0.0 && step.abs() > 0.5 * last_step.abs() {
            damping = (damping * 0.5).max(1.0 / 64.0);
        }
        last_step = step;
        let new_tau2 = (tau2 + damping * step).max(0.0);
        let new_theta = weighted_mean(new_tau2, data);
        let change = (new_theta - theta).abs().max((new_tau2 - tau2).abs());
        theta = new_theta;
        tau2 = new_tau2;
        if change < FIXED_POINT_TOL {
            converged = true;
            break;
        }
    }

    // Concentrated likelihood: θ is the weighted mean at every τ².
    let spread = {
        let (lo, hi) = data
            .ys()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
        (hi - lo).powi(2)
    };
    let min_var = data.vars().fold(f64::INFINITY, f64::min);
    let conc_tau2 = maximize_on_halfline(
        |t| ht_loglik(weighted_mean(t, data), t, data),
        |t| ht_score(weighted_mean(t, data), t, data).1,
        spread - min_var,
    );
    let conc_theta = weighted_mean(conc_tau2, data);
    let fp_ll = ht_loglik(theta, tau2, data);
    let conc_ll = ht_loglik(conc_theta, conc_tau2, data);
    if conc_ll > fp_ll || !converged {
        theta = conc_theta;
        tau2 = conc_tau2;
    }
    let (r_theta, r_tau2) = ht_residuals(theta, tau2, data);
    let stationary = r_theta.abs() <= 1e-6
        && (if tau2 > 0.0 {
            r_tau2.abs() <= 1e-6 * (1.0 + tau2)
        } else {
            ht_score(theta, 0.0, data).1 <= 1e-9
        });
    if !stationary {
        return Err(Error::NonConvergence {
            what: "Hardy-Thompson likelihood equations",
            iterations,
            last: format!("theta={theta}, tau2={tau2}"),
        });
    }
    Ok(HtEstimate {
        theta_hat: theta,
        tau2_hat: tau2,
        loglik_at_max: ht_loglik(theta, tau2, data),
        converged: true,
        iterations,
    })
}

/// How the Skovgaard adjustment combines the information matrices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SkovgaardForm {
    /// `|I(θ̂)|^½ |J(θ̂)|⁻¹ |S(θ)| |I₂₂(θ, τ̂²(θ))|^-½`, expected information
    /// `I` and observed Hessian `J`. The ratio `ũ / r̃` does not tend to 1 at
    /// the estimate unless `I(θ̂) = J(θ̂)`, so intervals undercover.
    ExpectedNuisance,
    /// `|J(θ̂)|^½ |I(θ̂)|⁻¹ |S(θ)| |J₂₂(θ, τ̂²(θ))|^-½`, the ordering for which
    /// `ũ / r̃ → 1` as θ → θ̂ for any dataset. When τ̂² = 0 the expected
    /// information replaces both observed terms; elsewhere it replaces an
    /// observed term that is not positive definite.
    #[default]
    ObservedNuisance,
}

/// Signed roots with `|r̃_G|` below this are treated as the estimate itself.
pub const GS_SINGULAR_ZONE: f64 = 1e-4;

/// The Hardy-Thompson fit plus the data, for repeated profile evaluations.
#[derive(Debug, Clone)]
pub struct HtProfile<'a> {
    data: &'a MetaDataset,
    mle: HtEstimate,
}

impl<'a> HtProfile<'a> {
    pub fn new(data: &'a MetaDataset) -> Result<Self> {
        Ok(Self {
            data,
            mle: ht_mle(data)?,
        })
    }

    pub fn mle(&self) -> &HtEstimate {
        &self.mle
    }

    pub fn tau2_at(&self, theta: f64) -> f64 {
        if theta == self.mle.theta_hat {
            return self.mle.tau2_hat;
        }
        profile_tau2_at(theta, self.data)
    }

    fn gap(&self, theta: f64, tau2: f64) -> f64 {
        (self.mle.loglik_at_max - ht_loglik(theta, tau2, self.data)).max(0.0)
    }

    /// Profile likelihood ratio statistic T̃(θ).
    pub fn lr_stat(&self, theta: f64) -> f64 {
        2.0 * self.gap(theta, self.tau2_at(theta))
    }

    /// Bartlett-type corrected statistic T̃(θ) / (1 + 2 C(τ̂²(θ))).
    pub fn nb_stat(&self, theta: f64) -> f64 {
        let tau2 = self.tau2_at(theta);
        2.0 * self.gap(theta, tau2) / (1.0 + 2.0 * nb_bartlett_c(tau2, self.data))
    }

    /// Signed root r̃_G(θ) = sign(θ̂ - θ) √T̃(θ).
    pub fn signed_root(&self, theta: f64) -> f64 {
        let r = self.lr_stat(theta).sqrt();
        if theta < self.mle.theta_hat {
            r
        } else if theta > self.mle.theta_hat {
            -r
        } else {
            0.0
        }
    }

    /// The Skovgaard adjustment ũ(θ).
    pub fn skovgaard_u(&self, theta: f64, form: SkovgaardForm) -> Result<f64> {
        let tau2_c = self.tau2_at(theta);
        let (theta_hat, tau2_hat) = (self.mle.theta_hat, self.mle.tau2_hat);
        let delta = theta_hat - theta;
        let (mut a1, mut a2, mut q2) = (0.0, 0.0, 0.0);
        for v in self.data.vars() {
            let w = 1.0 / (v + tau2_c);
            let w_hat = 1.0 / (v + tau2_hat);
            a1 += w;
            a2 += w * w;
            q2 -= 0.5 * (w_hat - w);
        }
        // S(θ) is upper triangular: [[a1, δ a2], [0, a2 / 2]].
        let s11 = a1;
        let s12 = delta * a2;
        let s22 = 0.5 * a2;
        let q1 = delta * a1;
        let det_s = s11 * s22;
        if det_s.abs() < 1e-12 * (s11 * s11 + s22 * s22) {
            return Err(Error::SingularMatrix("Skovgaard S(θ)"));
        }
        let first = (q1 - s12 * q2 / s22) / s11;

        let h = observed_hessian(theta_hat, tau2_hat, self.data);
        let det_j = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        let j_pd = h[0][0] < 0.0 && det_j > 1e-12 * (h[0][0] * h[1][1]).abs();
        let info = expected_information(tau2_hat, self.data);
        let det_i = info[0][0] * info[1][1];
        let i22 = expected_information(tau2_c, self.data)[1][1];

        let u = match form {
            SkovgaardForm::ExpectedNuisance => {
                if !j_pd {
                    return Err(Error::SingularMatrix("observed information at the MLE"));
                }
                first * det_i.sqrt() / det_j * det_s / i22.sqrt()
            }
            SkovgaardForm::ObservedNuisance => {
                // With τ̂² on the zero boundary the profile near θ̂ is l(θ, 0),
                // and only expected information throughout keeps ũ/r̃ → 1.
                // Elsewhere it stands in for observed quantities that are not
                // positive definite.
                let at_boundary = tau2_hat == 0.0;
                let det_j = if j_pd && !at_boundary { det_j } else { det_i };
                let j22 = -observed_hessian(theta, tau2_c, self.data)[1][1];
                let j22 = if j22 > 0.0 && !at_boundary { j22 } else { i22 };
                first * det_j.sqrt() / det_i * det_s / j22.sqrt()
            }
        };
        Ok(u)
    }

    /// Skovgaard-corrected signed root r̃_GS(θ).
    pub fn modified_root(&self, theta: f64, form: SkovgaardForm) -> Result<f64> {
        let r = self.signed_root(theta);
        if r.abs() < GS_SINGULAR_ZONE {
            return Err(Error::NearMleSingularity { r });
        }
        let u = self.skovgaard_u(theta, form)?;
        let ratio = u / r;
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(domain(format!(
                "Skovgaard adjustment has the wrong sign at θ = {theta} (u = {u}, r = {r})"
            )));
        }
        Ok(r + ratio.ln() / r)
    }
}

pub fn profile_lr_stat(theta: f64, data: &MetaDataset) -> Result<f64> {
    Ok(HtProfile::new(data)?.lr_stat(theta))
}

/// Joint likelihood ratio statistic T(θ, τ²) for the confidence region on
/// `(θ, τ²)`, calibrated against χ²₂.
pub fn joint_region_stat(theta: f64, tau2: f64, data: &MetaDataset) -> Result<f64> {
    if !(tau2 >= 0.0) {
        return Err(domain(format!("tau2 must be >= 0, got {tau2}")));
    }
    let mle = ht_mle(data)?;
    Ok((-2.0 * (ht_loglik(theta, tau2, data) - mle.loglik_at_max)).max(0.0))
}

/// Whether `(θ, τ²)` lies in the `1 - alpha` joint confidence region.
pub fn in_joint_region(theta: f64, tau2: f64, data: &MetaDataset, alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    Ok(joint_region_stat(theta, tau2, data)? < chi_square_quantile(1.0 - alpha, 2.0)?)
}

/// Bartlett-type constant
/// C(τ²) = Σ(Sᵢ²+τ²)⁻³ / [Σ(Sᵢ²+τ²)⁻¹ · Σ(Sᵢ²+τ²)⁻²].
pub fn nb_bartlett_c(tau2: f64, data: &MetaDataset) -> f64 {
    let (s1, s2, s3) = data.vars().fold((0.0, 0.0, 0.0), |(a, b, c), v| {
        let w = 1.0 / (v + tau2);
        (a + w, b + w * w, c + w * w * w)
    });
    s3 / (s1 * s2)
}

pub fn gs_signed_root(theta: f64, data: &MetaDataset) -> Result<f64> {
    Ok(HtProfile::new(data)?.signed_root(theta))
}

pub fn gs_modified_root(theta: f64, data: &MetaDataset) -> Result<f64> {
    HtProfile::new(data)?.modified_root(theta, SkovgaardForm::default())
}

/// Where the interval search ended on one side.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Endpoint {
    value: f64,
    non_monotone: bool,
}

/// Find the interval endpoint on one side of `center` for a predicate that is
/// false near `center` and true far away.
///
/// Steps outward by `step` until the predicate holds, then bisects against
/// the last point where it did not. If the very first step is already
/// outside, the step is halved back towards the centre until an inside point
/// turns up, so the endpoint found is the outermost crossing.
fn search_side(
    outside: impl Fn(f64) -> Result<bool>,
    center: f64,
    step: f64,
    side: f64,
    max_reach: f64,
    what: &'static str,
) -> Result<Endpoint> {
    let side_name = if side < 0.0 { "lower" } else { "upper" };
    let mut inside_x = center;
    let mut k = 1.0;
    let outside_x = loop {
        let x = center + side * k * step;
        if k * step > max_reach {
            return Err(Error::BracketFailure {
                what,
                side: side_name,
                threshold: f64::NAN,
            });
        }
        if outside(x)? {
            break x;
        }
        inside_x = x;
        k += 1.0;
    };
    let mut non_monotone = false;
    if inside_x == center {
        let mut h = 0.5 * step;
        loop {
            let x = center + side * h;
            if x == center || h < 1e-14 * (1.0 + center.abs()) {
                break;
            }
            if !outside(x)? {
                inside_x = x;
                break;
            }
            non_monotone = true;
            h *= 0.5;
        }
    }
    let xtol = 1e-12 * (1.0 + center.abs()).max(step);
    let outside_bool = |x: f64| outside(x).unwrap_or(true);
    Ok(Endpoint {
        value: bisect_boundary(outside_bool, inside_x, outside_x, xtol),
        non_monotone,
    })
}

fn search_step(data: &MetaDataset, theta_hat: f64) -> Result<(f64, f64)> {
    let se = dl_se(data)?;
    Ok((se.max(1e-6 * (1.0 + theta_hat.abs())), 50.0 * se))
}

fn likelihood_fit(
    method: Method,
    profile: &HtProfile<'_>,
    alpha: f64,
    low: Endpoint,
    high: Endpoint,
) -> FitResult {
    let mle = profile.mle();
    let mut fit = FitResult::new(method, mle.theta_hat, (low.value, high.value), alpha, mle.tau2_hat);
    fit.iterations = mle.iterations;
    fit.converged = mle.converged;
    if mle.tau2_hat == 0.0 {
        fit.flag("tau2_boundary", true);
    }
    if low.non_monotone || high.non_monotone {
        fit.flag("non_monotone", true);
    }
    fit
}

/// Interval from a statistic that is zero at θ̂ and compared with χ²₁.
fn chi_square_interval(
    method: Method,
    profile: &HtProfile<'_>,
    alpha: f64,
    stat: impl Fn(f64) -> f64,
    what: &'static str,
) -> Result<FitResult> {
    let threshold = chi_square_quantile(1.0 - alpha, 1.0)?;
    let theta_hat = profile.mle().theta_hat;
    let (step, reach) = search_step(profile.data, theta_hat)?;
    let outside = |x: f64| Ok(stat(x) >= threshold);
    let with_threshold = |e: Error| match e {
        Error::BracketFailure { what, side, .. } => Error::BracketFailure { what, side, threshold },
        other => other,
    };
    let low = search_side(outside, theta_hat, step, -1.0, reach, what).map_err(with_threshold)?;
    let high = search_side(outside, theta_hat, step, 1.0, reach, what).map_err(with_threshold)?;
    let mut fit = likelihood_fit(method, profile, alpha, low, high);
    fit.flag("threshold", threshold);
    Ok(fit)
}

/// Hardy-Thompson estimates with the profile likelihood ratio interval.
pub fn ht_profile_ci(data: &MetaDataset, alpha: f64) -> Result<FitResult> {
    check_alpha(alpha)?;
    let profile = HtProfile::new(data)?;
    ht_profile_ci_from(&profile, alpha)
}

pub fn ht_profile_ci_from(profile: &HtProfile<'_>, alpha: f64) -> Result<FitResult> {
    chi_square_interval(Method::HT, profile, alpha, |x| profile.lr_stat(x), "profile likelihood interval")
}

/// Hardy-Thompson estimates with the Bartlett-type corrected interval.
pub fn nb_ci(data: &MetaDataset, alpha: f64) -> Result<FitResult> {
    check_alpha(alpha)?;
    let profile = HtProfile::new(data)?;
    nb_ci_from(&profile, alpha)
}

pub fn nb_ci_from(profile: &HtProfile<'_>, alpha: f64) -> Result<FitResult> {
    chi_square_interval(Method::NB, profile, alpha, |x| profile.nb_stat(x), "Bartlett-corrected interval")
}

/// Hardy-Thompson estimates with the Skovgaard-corrected interval.
pub fn gs_ci(data: &MetaDataset, alpha: f64) -> Result<FitResult> {
    check_alpha(alpha)?;
    let profile = HtProfile::new(data)?;
    gs_ci_from(&profile, alpha, SkovgaardForm::default())
}

pub fn gs_ci_from(profile: &HtProfile<'_>, alpha: f64, form: SkovgaardForm) -> Result<FitResult> {
    let z_hi = normal_quantile(1.0 - alpha / 2.0)?;
    let z_lo = -z_hi;
    let theta_hat = profile.mle().theta_hat;
    let (step, reach) = search_step(profile.data, theta_hat)?;
    // Inside the singular zone around θ̂ the point counts as inside.
    let rgs = |x: f64| match profile.modified_root(x, form) {
        Ok(v) => Ok(Some(v)),
        Err(Error::NearMleSingularity { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    // r̃_GS should be positive below θ̂ and negative above; a wrong sign met
    // while stepping outward is reported as non-monotone.
    let reversed = std::cell::Cell::new(false);
    let what = "Skovgaard-corrected interval";
    let low = search_side(
        |x| {
            let v = rgs(x)?;
            reversed.set(reversed.get() || v.is_some_and(|v| v < 0.0));
            Ok(v.is_some_and(|v| v > z_hi))
        },
        theta_hat,
        step,
        -1.0,
        reach,
        what,
    )
    .map_err(|e| with_z(e, z_hi))?;
    let high = search_side(
        |x| {
            let v = rgs(x)?;
            reversed.set(reversed.get() || v.is_some_and(|v| v > 0.0));
            Ok(v.is_some_and(|v| v < z_lo))
        },
        theta_hat,
        step,
        1.0,
        reach,
        what,
    )
    .map_err(|e| with_z(e, z_lo))?;
    let mut fit = likelihood_fit(Method::GS, profile, alpha, low, high);
    if reversed.get() {
        fit.flag("non_monotone", true);
    }
    fit.flag("threshold", z_hi);
    Ok(fit)
}

fn with_z(e: Error, z: f64) -> Error {
    match e {
        Error::BracketFailure { what, side, .. } => Error::BracketFailure {
            what,
            side,
            threshold: z,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StudyRecord;

    fn ds(ys: &[f64], ses: &[f64]) -> MetaDataset {
        MetaDataset::new(
            ys.iter()
                .zip(ses)
                .enumerate()
                .map(|(i, (&y, &s))| StudyRecord::new(format!("s{i}"), y, s, 10.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn loglik_direct_values() {
        let d = ds(&[0.0, 0.0], &[1.0, 1.0]);
        assert!((ht_loglik(0.0, 0.0, &d) + LN_2PI).abs() < 1e-14);
        // Y = (0,2,4), S = 1, θ = 2, τ² = 5/3: V = 8/3 for every study.
        let d = ds(&[0.0, 2.0, 4.0], &[1.0; 3]);
        let v: f64 = 8.0 / 3.0;
        let want = -1.5 * LN_2PI - 1.5 * v.ln() - 0.5 * 8.0 / v;
        assert!((ht_loglik(2.0, 5.0 / 3.0, &d) - want).abs() < 1e-13);
    }

    #[test]
    fn mle_closed_form_for_equal_variances() {
        let d = ds(&[0.0, 2.0, 4.0], &[1.0; 3]);
        let est = ht_mle(&d).unwrap();
        assert!((est.theta_hat - 2.0).abs() < 1e-10);
        assert!((est.tau2_hat - 5.0 / 3.0).abs() < 1e-9);
        let (a, b) = ht_residuals(est.theta_hat, est.tau2_hat, &d);
        assert!(a.abs() < 1e-9 && b.abs() < 1e-9);
    }

    #[test]
    fn mle_constant_data_is_on_the_boundary() {
        let d = ds(&[1.25; 4], &[0.5, 1.0, 1.5, 0.7]);
        let est = ht_mle(&d).unwrap();
        assert!((est.theta_hat - 1.25).abs() < 1e-12);
        assert_eq!(est.tau2_hat, 0.0);
    }

    #[test]
    fn profile_tau2_closed_form() {
        let d = ds(&[0.0, 2.0, 4.0], &[1.0; 3]);
        assert!((profile_tau2(0.0, &d).unwrap() - 17.0 / 3.0).abs() < 1e-10);
        let est = ht_mle(&d).unwrap();
        assert!((profile_tau2(est.theta_hat, &d).unwrap() - est.tau2_hat).abs() < 1e-9);
    }

    #[test]
    fn bartlett_constant_examples() {
        let d = ds(&[0.0, 1.0, 5.0], &[0.7; 3]);
        for &t in &[0.0, 0.3, 12.0] {
            assert!((nb_bartlett_c(t, &d) - 1.0 / 3.0).abs() < 1e-14);
        }
        // S² + τ² = (1, 2).
        let d = ds(&[0.0, 1.0], &[1.0, 2f64.sqrt()]);
        assert!((nb_bartlett_c(0.0, &d) - 0.6).abs() < 1e-14);
    }

    #[test]
    fn signed_root_signs() {
        let d = ds(&[0.1, 0.9, 2.0, -0.4], &[0.3, 0.5, 0.4, 0.6]);
        let p = HtProfile::new(&d).unwrap();
        let th = p.mle().theta_hat;
        assert_eq!(p.signed_root(th), 0.0);
        assert!(p.signed_root(th - 0.5) > 0.0);
        assert!(p.signed_root(th + 0.5) < 0.0);
        assert!(matches!(
            p.modified_root(th, SkovgaardForm::ExpectedNuisance),
            Err(Error::NearMleSingularity { .. })
        ));
    }

    #[test]
    fn joint_region_threshold() {
        let d = ds(&[0.1, 0.9, 2.0, -0.4], &[0.3, 0.5, 0.4, 0.6]);
        let est = ht_mle(&d).unwrap();
        assert_eq!(joint_region_stat(est.theta_hat, est.tau2_hat, &d).unwrap(), 0.0);
        assert!(in_joint_region(est.theta_hat, est.tau2_hat, &d, 0.05).unwrap());
        assert!(joint_region_stat(est.theta_hat, est.tau2_hat + 0.1, &d).unwrap() > 0.0);
        assert!(joint_region_stat(0.0, -1.0, &d).is_err());
    }
}

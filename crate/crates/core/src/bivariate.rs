//! Bivariate normal / chi-square likelihood for `(Yᵢ, Sᵢ²)`.
//!
//! Each study contributes the marginal normal density of `Yᵢ` with variance
//! `τ² + vᵢ`, `vᵢ = σ² ηᵢ`, plus the chi-square log-density of the statistic
//! `χᵢ² = dfᵢ Sᵢ² / vᵢ`. The random study effect integrates out in closed form,
//! so no quadrature is needed. The optimizer works in `(θ, ln τ, ln σ)`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3};

use crate::classic::dl_fit;
use crate::error::{domain, Error, Result};
use crate::model::{check_alpha, FitResult, MetaDataset, Method};
use crate::optim::{bfgs, newton_polish, Minimum};
use crate::statkit::{ln_gamma_unchecked, student_t_quantile};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// How the per-study variance multipliers ηᵢ are formed.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum EtaRule {
    /// ηᵢ = 1 / dfᵢ.
    #[default]
    InverseDf,
    /// ηᵢ = 1 / (nᵢ - 3), for Fisher-z correlations.
    InverseNMinus3(Vec<f64>),
    /// ηᵢ = 1/nᵢ₀ + 1/nᵢ₁, for two-group mean differences.
    TwoGroup(Vec<(f64, f64)>),
    /// Caller-supplied ηᵢ.
    Custom(Vec<f64>),
}

impl EtaRule {
    pub fn etas(&self, data: &MetaDataset) -> Result<Vec<f64>> {
        let m = data.m();
        let check_len = |len: usize| {
            if len == m {
                Ok(())
            } else {
                Err(domain(format!("eta rule has {len} values for {m} studies")))
            }
        };
        let etas: Vec<f64> = match self {
            EtaRule::InverseDf => data.records().iter().map(|r| 1.0 / r.df).collect(),
            EtaRule::InverseNMinus3(n) => {
                check_len(n.len())?;
                n.iter().map(|&n| 1.0 / (n - 3.0)).collect()
            }
            EtaRule::TwoGroup(n) => {
                check_len(n.len())?;
                n.iter().map(|&(a, b)| 1.0 / a + 1.0 / b).collect()
            }
            EtaRule::Custom(v) => {
                check_len(v.len())?;
                v.clone()
            }
        };
        if let Some(bad) = etas.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(domain(format!("eta values must be positive, got {bad}")));
        }
        Ok(etas)
    }

    pub fn name(&self) -> &'static str {
        match self {
            EtaRule::InverseDf => "inverse_df",
            EtaRule::InverseNMinus3(_) => "inverse_n_minus_3",
            EtaRule::TwoGroup(_) => "two_group",
            EtaRule::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BdOptions {
    /// Add the Jacobian `ln(dfᵢ / vᵢ)` so each chi-square term is the density
    /// of `Sᵢ²` rather than of the statistic `χᵢ²`. Off by default.
    pub jacobian: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdEstimate {
    pub theta_hat: f64,
    pub tau2_hat: f64,
    pub sigma2_hat: f64,
    pub se_theta: f64,
    pub loglik_at_max: f64,
    pub converged: bool,
    pub iterations: usize,
    /// τ² was driven to the zero boundary.
    pub tau2_boundary: bool,
    /// The observed information was not positive definite; `se_theta` comes
    /// from the θ curvature alone.
    pub hessian_not_pd: bool,
}

/// The likelihood with its ηᵢ resolved once.
#[derive(Debug, Clone)]
pub struct BdModel<'a> {
    data: &'a MetaDataset,
    etas: Vec<f64>,
    opts: BdOptions,
    /// Per-study constant of the chi-square term that does not involve σ².
    chi_const: Vec<f64>,
}

impl<'a> BdModel<'a> {
    pub fn new(data: &'a MetaDataset, eta: &EtaRule, opts: BdOptions) -> Result<Self> {
        let etas = eta.etas(data)?;
        let chi_const = data
            .records()
            .iter()
            .map(|r| {
                let h = 0.5 * r.df;
                -h * std::f64::consts::LN_2 - ln_gamma_unchecked(h)
            })
            .collect();
        Ok(Self {
            data,
            etas,
            opts,
            chi_const,
        })
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn loglik(&self, theta: f64, tau2: f64, sigma2: f64) -> f64 {
        let mut acc = 0.0;
        for ((r, &eta), &c) in self.data.records().iter().zip(&self.etas).zip(&self.chi_const) {
            let v = sigma2 * eta;
            let total = tau2 + v;
            let e = r.y - theta;
            acc += -HALF_LN_2PI - 0.5 * total.ln() - 0.5 * e * e / total;
            let chi = r.df * r.var() / v;
            acc += c + (0.5 * r.df - 1.0) * chi.ln() - 0.5 * chi;
            if self.opts.jacobian {
                acc += (r.df / v).ln();
            }
        }
        acc
    }

    /// Gradient in `(θ, τ², σ²)`.
    pub fn gradient(&self, theta: f64, tau2: f64, sigma2: f64) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (r, &eta) in self.data.records().iter().zip(&self.etas) {
            let v = sigma2 * eta;
            let w = 1.0 / (tau2 + v);
            let e = r.y - theta;
            let dv = 0.5 * (e * e * w - 1.0) * w;
            g[0] += e * w;
            g[1] += dv;
            let chi = r.df * r.var() / v;
            g[2] += eta * dv + (chi - r.df + 2.0) / (2.0 * sigma2);
            if self.opts.jacobian {
                g[2] -= 1.0 / sigma2;
            }
        }
        g
    }

    /// Hessian in `(θ, τ², σ²)`.
    pub fn hessian(&self, theta: f64, tau2: f64, sigma2: f64) -> Matrix3<f64> {
        let mut h = Matrix3::zeros();
        for (r, &eta) in self.data.records().iter().zip(&self.etas) {
            let v = sigma2 * eta;
            let w = 1.0 / (tau2 + v);
            let e = r.y - theta;
            let d2 = (0.5 - e * e * w) * w * w;
            let dt = -e * w * w;
            h[(0, 0)] -= w;
            h[(0, 1)] += dt;
            h[(0, 2)] += eta * dt;
            h[(1, 1)] += d2;
            h[(1, 2)] += eta * d2;
            let chi = r.df * r.var() / v;
            h[(2, 2)] += eta * eta * d2 + (r.df - 2.0 - 2.0 * chi) / (2.0 * sigma2 * sigma2);
            if self.opts.jacobian {
                h[(2, 2)] += 1.0 / (sigma2 * sigma2);
            }
        }
        h[(1, 0)] = h[(0, 1)];
        h[(2, 0)] = h[(0, 2)];
        h[(2, 1)] = h[(1, 2)];
        h
    }

    /// Residuals of the three likelihood equations. The first two are the
    /// Hardy-Thompson pair with `Sᵢ²` replaced by `vᵢ`, written as
    /// `update - current`; the third is `2 ∂l/∂σ²`, which for ηᵢ = 1/dfᵢ is
    /// exactly the left minus the right side of the σ² equation.
    pub fn score_residuals(&self, theta: f64, tau2: f64, sigma2: f64) -> (f64, f64, f64) {
        let (mut sw, mut swy, mut n2, mut d2) = (0.0, 0.0, 0.0, 0.0);
        for (r, &eta) in self.data.records().iter().zip(&self.etas) {
            let v = sigma2 * eta;
            let w = 1.0 / (tau2 + v);
            sw += w;
            swy += w * r.y;
            n2 += ((r.y - theta).powi(2) - v) * w * w;
            d2 += w * w;
        }
        let g = self.gradient(theta, tau2, sigma2);
        (swy / sw - theta, n2 / d2 - tau2, 2.0 * g[2])
    }

    fn objective(&self, x: &DVector<f64>, boundary: bool) -> (f64, DVector<f64>) {
        if boundary {
            let (theta, sigma2) = (x[0], (2.0 * x[1]).exp());
            let g = self.gradient(theta, 0.0, sigma2);
            let f = -self.loglik(theta, 0.0, sigma2);
            (f, DVector::from_vec(vec![-g[0], -2.0 * sigma2 * g[2]]))
        } else {
            let (theta, tau2, sigma2) = (x[0], (2.0 * x[1]).exp(), (2.0 * x[2]).exp());
            let g = self.gradient(theta, tau2, sigma2);
            let f = -self.loglik(theta, tau2, sigma2);
            (
                f,
                DVector::from_vec(vec![-g[0], -2.0 * tau2 * g[1], -2.0 * sigma2 * g[2]]),
            )
        }
    }

    /// Hessian of the negative log-likelihood in the log-scale coordinates.
    fn objective_hessian(&self, x: &DVector<f64>, boundary: bool) -> DMatrix<f64> {
        if boundary {
            let (theta, s) = (x[0], (2.0 * x[1]).exp());
            let g = self.gradient(theta, 0.0, s);
            let h = self.hessian(theta, 0.0, s);
            let m = [
                [h[(0, 0)], 2.0 * s * h[(0, 2)]],
                [2.0 * s * h[(0, 2)], 4.0 * s * g[2] + 4.0 * s * s * h[(2, 2)]],
            ];
            DMatrix::from_fn(2, 2, |i, j| -m[i][j])
        } else {
            let (theta, p, s) = (x[0], (2.0 * x[1]).exp(), (2.0 * x[2]).exp());
            let g = self.gradient(theta, p, s);
            let h = self.hessian(theta, p, s);
            let scale = [1.0, 2.0 * p, 2.0 * s];
            let mut out = DMatrix::from_fn(3, 3, |i, j| -(scale[i] * scale[j] * h[(i, j)]));
            out[(1, 1)] -= 4.0 * p * g[1];
            out[(2, 2)] -= 4.0 * s * g[2];
            out
        }
    }

    fn minimize(&self, start: DVector<f64>, boundary: bool) -> Minimum {
        let fg = |x: &DVector<f64>| self.objective(x, boundary);
        let rough = bfgs(fg, start, 1e-7, 2_000);
        newton_polish(
            |x: &DVector<f64>| self.objective(x, boundary),
            |x: &DVector<f64>| self.objective_hessian(x, boundary),
            rough,
            1e-10,
            50,
        )
    }
}

pub fn bd_loglik(
    theta: f64,
    tau2: f64,
    sigma2: f64,
    data: &MetaDataset,
    eta: &EtaRule,
) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(tau2 >= 0.0) {
        return Err(domain(format!("tau2 must be >= 0, got {tau2}")));
    }
    Ok(BdModel::new(data, eta, BdOptions::default())?.loglik(theta, tau2, sigma2))
}

pub fn bd_score_residuals(
    theta: f64,
    tau2: f64,
    sigma2: f64,
    data: &MetaDataset,
    eta: &EtaRule,
) -> Result<(f64, f64, f64)> {
    Ok(BdModel::new(data, eta, BdOptions::default())?.score_residuals(theta, tau2, sigma2))
}

/// Lower objective wins; when both starts reach the same optimum to rounding,
/// the one with the smaller gradient is the more accurate.
fn better(a: &Minimum, b: &Minimum) -> bool {
    let tie = (a.f - b.f).abs() <= 1e-12 * a.f.abs().max(1.0);
    if tie {
        a.grad.amax() < b.grad.amax()
    } else {
        a.f < b.f
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Maximum likelihood estimates of `(θ, τ², σ²)` and the standard error of θ̂.
pub fn bd_estimate(data: &MetaDataset, eta: &EtaRule, opts: BdOptions) -> Result<BdEstimate> {
    let model = BdModel::new(data, eta, opts)?;
    let dl = dl_fit(data, 0.05)?;
    let sigma2_0 = median(
        data.records()
            .iter()
            .zip(model.etas())
            .map(|(r, e)| r.var() / e)
            .collect(),
    );
    let starts = [
        [dl.theta_hat, 0.5 * dl.tau2_hat.max(1e-4).ln(), 0.5 * sigma2_0.ln()],
        // lnτ = 0, σ = 10.
        [0.0, 0.0, 10f64.ln()],
    ];
    let mut best: Option<Minimum> = None;
    let mut iterations = 0;
    for s in starts {
        let run = model.minimize(DVector::from_row_slice(&s), false);
        iterations += run.iterations;
        if run.converged && run.f.is_finite() && best.as_ref().is_none_or(|b| better(&run, b)) {
            best = Some(run);
        }
    }
    let var_scale = median(data.vars().collect());
    let boundary_run = {
        // τ² = 0 fit, started from the interior optimum if there is one.
        let (theta0, ls0) = best
            .as_ref()
            .map(|b| (b.x[0], b.x[2]))
            .unwrap_or((dl.theta_hat, 0.5 * sigma2_0.ln()));
        model.minimize(DVector::from_row_slice(&[theta0, ls0]), true)
    };
    iterations += boundary_run.iterations;

    let interior_ok = best
        .as_ref()
        .is_some_and(|b| (2.0 * b.x[1]).exp() >= 1e-8 * var_scale);
    let use_boundary = match &best {
        None => true,
        Some(b) => !interior_ok || (boundary_run.converged && boundary_run.f < b.f),
    };

    let (theta, tau2, sigma2, f) = if use_boundary {
        if !boundary_run.converged {
            return Err(Error::NonConvergence {
                what: "bivariate likelihood maximization",
                iterations,
                last: format!("theta={}, ln_sigma={}", boundary_run.x[0], boundary_run.x[1]),
            });
        }
        (boundary_run.x[0], 0.0, (2.0 * boundary_run.x[1]).exp(), boundary_run.f)
    } else {
        let b = best.as_ref().expect("interior optimum present");
        (b.x[0], (2.0 * b.x[1]).exp(), (2.0 * b.x[2]).exp(), b.f)
    };

    let h = model.hessian(theta, tau2, sigma2);
    let mut hessian_not_pd = false;
    let se_theta = if use_boundary {
        let info = Matrix2::new(-h[(0, 0)], -h[(0, 2)], -h[(2, 0)], -h[(2, 2)]);
        match info.cholesky() {
            Some(ch) => ch.inverse()[(0, 0)].sqrt(),
            None => {
                hessian_not_pd = true;
                (-1.0 / h[(0, 0)]).sqrt()
            }
        }
    } else {
        match (-h).cholesky() {
            Some(ch) => ch.inverse()[(0, 0)].sqrt(),
            None => {
                hessian_not_pd = true;
                (-1.0 / h[(0, 0)]).sqrt()
            }
        }
    };
    Ok(BdEstimate {
        theta_hat: theta,
        tau2_hat: tau2,
        sigma2_hat: sigma2,
        se_theta,
        loglik_at_max: -f,
        converged: true,
        iterations,
        tau2_boundary: use_boundary,
        hessian_not_pd,
    })
}

pub fn bd_fit(data: &MetaDataset, alpha: f64, eta: &EtaRule) -> Result<FitResult> {
    bd_fit_with(data, alpha, eta, BdOptions::default())
}

/// Bivariate fit with the interval θ̂ ± t_{m-1, 1-α/2} SE(θ̂).
pub fn bd_fit_with(data: &MetaDataset, alpha: f64, eta: &EtaRule, opts: BdOptions) -> Result<FitResult> {
    check_alpha(alpha)?;
    let est = bd_estimate(data, eta, opts)?;
    if !(est.theta_hat.is_finite() && est.se_theta.is_finite()) {
        return Err(domain("bivariate estimate is not finite"));
    }
    let crit = student_t_quantile(1.0 - alpha / 2.0, data.m() as f64 - 1.0)?;
    let half = crit * est.se_theta;
    let mut fit = FitResult::new(
        Method::BD,
        est.theta_hat,
        (est.theta_hat - half, est.theta_hat + half),
        alpha,
        est.tau2_hat,
    );
    fit.sigma2_hat = Some(est.sigma2_hat);
    fit.iterations = est.iterations;
    fit.converged = est.converged;
    fit.flag("se", est.se_theta);
    fit.flag("eta", eta.name());
    if est.tau2_boundary {
        fit.flag("tau2_boundary", true);
    }
    if est.hessian_not_pd {
        fit.flag("hessian_not_pd", true);
    }
    if opts.jacobian {
        fit.flag("jacobian", true);
    }
    Ok(fit)
}

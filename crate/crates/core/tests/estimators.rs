use metapool_core::classic::{cochran_q, dl_fit_with, dl_tau2, DlOptions};
use metapool_core::likelihood::*;
use metapool_core::statkit::{derive_stream, student_t_quantile};
use metapool_core::{dl_fit, MetaDataset, StudyRecord};

const CHI2_1: f64 = 3.841_458_8;
const Z975: f64 = 1.959_964_0;

fn ds(ys: &[f64], ses: &[f64]) -> MetaDataset {
    let records = ys
        .iter()
        .zip(ses)
        .enumerate()
        .map(|(i, (&y, &se))| StudyRecord::new(format!("s{i}"), y, se, 12.0))
        .collect();
    MetaDataset::new(records).unwrap()
}

/// Small random datasets with visible heterogeneity.
fn random_dataset(seed: u64, m: usize) -> MetaDataset {
    let mut r = derive_stream(seed, &[99, m as u64]);
    let ses: Vec<f64> = (0..m).map(|_| 0.3 + 1.2 * r.uniform()).collect();
    let ys: Vec<f64> = ses.iter().map(|s| 1.0 + 1.5 * r.standard_normal() + s * r.standard_normal()).collect();
    ds(&ys, &ses)
}

fn close(got: f64, want: f64, tol: f64) {
    assert!((got - want).abs() <= tol, "{got} vs {want} (tol {tol})");
}

// --- DerSimonian-Laird -------------------------------------------------------

#[test]
fn cochran_q_hand_values() {
    let (q, ybar) = cochran_q(&ds(&[0.0, 1.0, 2.0], &[1.0; 3]));
    close(q, 2.0, 1e-12);
    close(ybar, 1.0, 1e-12);
    let (q, ybar) = cochran_q(&ds(&[0.0, 2.0, 4.0], &[1.0; 3]));
    close(q, 8.0, 1e-12);
    close(ybar, 2.0, 1e-12);
    close(cochran_q(&ds(&[1.5; 4], &[0.2, 1.0, 3.0, 0.7])).0, 0.0, 1e-20);
}

#[test]
fn dl_tau2_hand_values() {
    assert_eq!(dl_tau2(&ds(&[0.0, 1.0, 2.0], &[1.0; 3])).unwrap(), 0.0);
    close(dl_tau2(&ds(&[0.0, 2.0, 4.0], &[1.0; 3])).unwrap(), 3.0, 1e-12);
    assert_eq!(dl_tau2(&ds(&[-1.0; 3], &[0.5, 1.0, 2.0])).unwrap(), 0.0);
}

#[test]
fn dl_fit_hand_example() {
    let fit = dl_fit(&ds(&[0.0, 2.0, 4.0], &[1.0; 3]), 0.05).unwrap();
    close(fit.theta_hat, 2.0, 1e-10);
    close(fit.tau2_hat, 3.0, 1e-10);
    let half = 4.302_652_7 * (4.0f64 / 3.0).sqrt();
    close(fit.ci_low, 2.0 - half, 1e-6);
    close(fit.ci_high, 2.0 + half, 1e-6);
    close(fit.ci_low, -2.9683, 1e-4);

    let constant = dl_fit(&ds(&[3.0; 4], &[1.0, 2.0, 2.0, 1.0]), 0.05).unwrap();
    close(constant.theta_hat, 3.0, 1e-12);
    assert_eq!(constant.tau2_hat, 0.0);
    let se = (1.0f64 / 2.5).sqrt();
    close(constant.ci_high - 3.0, student_t_quantile(0.975, 3.0).unwrap() * se, 1e-10);

    let z = dl_fit_with(&ds(&[0.0, 2.0, 4.0], &[1.0; 3]), 0.05, DlOptions { normal_quantile: true }).unwrap();
    close(z.ci_high - 2.0, Z975 * (4.0f64 / 3.0).sqrt(), 1e-6);
}

#[test]
fn dl_rejects_bad_alpha() {
    let d = ds(&[0.0, 1.0], &[1.0, 1.0]);
    for a in [0.0, 1.0, -0.5, f64::NAN] {
        assert!(dl_fit(&d, a).is_err());
    }
}

// --- Hardy-Thompson ---------------------------------------------------------

#[test]
fn ht_loglik_direct_evaluation() {
    close(ht_loglik(0.0, 0.0, &ds(&[0.0, 0.0], &[1.0, 1.0])), -(2.0 * std::f64::consts::PI).ln(), 1e-12);
    // Independent evaluation: v = 8/3 for every study, residuals (-2, 0, 2).
    let v: f64 = 1.0 + 5.0 / 3.0;
    let want = -1.5 * (2.0 * std::f64::consts::PI).ln() - 1.5 * v.ln() - 0.5 * 8.0 / v;
    close(ht_loglik(2.0, 5.0 / 3.0, &ds(&[0.0, 2.0, 4.0], &[1.0; 3])), want, 1e-12);
}

#[test]
fn ht_mle_closed_forms() {
    let est = ht_mle(&ds(&[0.0, 2.0, 4.0], &[1.0; 3])).unwrap();
    close(est.theta_hat, 2.0, 1e-9);
    close(est.tau2_hat, 5.0 / 3.0, 1e-9);
    assert!(est.converged);

    let flat = ht_mle(&ds(&[0.7; 3], &[0.5, 1.0, 1.5])).unwrap();
    close(flat.theta_hat, 0.7, 1e-10);
    assert_eq!(flat.tau2_hat, 0.0);
}

#[test]
fn ht_residuals_vanish_at_mle() {
    for seed in 0..20 {
        let d = random_dataset(seed, 3 + (seed as usize % 8));
        let est = ht_mle(&d).unwrap();
        let (r1, r2) = ht_residuals(est.theta_hat, est.tau2_hat, &d);
        assert!(r1.abs() <= 1e-6, "seed {seed}: {r1}");
        if est.tau2_hat > 0.0 {
            assert!(r2.abs() <= 1e-6, "seed {seed}: {r2}");
        } else {
            assert!(ht_score(est.theta_hat, 0.0, &d).1 <= 1e-9);
        }
    }
}

#[test]
fn score_and_hessian_match_finite_differences() {
    for seed in 0..20u64 {
        let d = random_dataset(seed, 5);
        let mut r = derive_stream(seed, &[7]);
        let (t, v) = (3.0 * r.standard_normal(), 0.05 + 2.0 * r.uniform());
        let h = 1e-5;
        let l = |a: f64, b: f64| ht_loglik(a, b, &d);
        let (g1, g2) = ht_score(t, v, &d);
        close(g1, (l(t + h, v) - l(t - h, v)) / (2.0 * h), 1e-6 * g1.abs().max(1.0));
        close(g2, (l(t, v + h) - l(t, v - h)) / (2.0 * h), 1e-6 * g2.abs().max(1.0));

        let hs = observed_hessian(t, v, &d);
        let fd = |a: fn(f64, f64, &MetaDataset) -> (f64, f64), i: usize| {
            let pick = |p: (f64, f64)| if i == 0 { p.0 } else { p.1 };
            [
                (pick(a(t + h, v, &d)) - pick(a(t - h, v, &d))) / (2.0 * h),
                (pick(a(t, v + h, &d)) - pick(a(t, v - h, &d))) / (2.0 * h),
            ]
        };
        let rows = [fd(ht_score, 0), fd(ht_score, 1)];
        for i in 0..2 {
            for j in 0..2 {
                let tol = 1e-5 * hs[i][j].abs().max(1.0);
                close(hs[i][j], rows[i][j], tol);
            }
        }
    }
}

#[test]
fn profile_tau2_examples() {
    let d = ds(&[0.0, 2.0, 4.0], &[1.0; 3]);
    close(profile_tau2(0.0, &d).unwrap(), 17.0 / 3.0, 1e-9);
    let est = ht_mle(&d).unwrap();
    close(profile_tau2(est.theta_hat, &d).unwrap(), est.tau2_hat, 1e-8);

    // Far θ, tight Sᵢ: grid search over τ² brackets the answer.
    let tight = ds(&[0.1, -0.2, 0.3, 0.05], &[0.05, 0.1, 0.08, 0.2]);
    let theta = 6.0;
    let got = profile_tau2(theta, &tight).unwrap();
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for k in 0..=20_000 {
        let t = 60.0 * k as f64 / 20_000.0;
        let l = ht_loglik(theta, t, &tight);
        if l > best {
            best = l;
            arg = t;
        }
    }
    close(got, arg, 60.0 / 20_000.0);
    assert!(got > 30.0);
}

#[test]
fn profile_lr_shape_and_ci_endpoints() {
    for seed in 0..10 {
        let d = random_dataset(seed, 6);
        let p = HtProfile::new(&d).unwrap();
        let th = p.mle().theta_hat;
        assert_eq!(p.lr_stat(th), 0.0);
        let grid: Vec<f64> = (1..=60).map(|k| 0.1 * k as f64).collect();
        for side in [-1.0, 1.0] {
            let vals: Vec<f64> = grid.iter().map(|s| p.lr_stat(th + side * s)).collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0]), "seed {seed}");
            assert!(vals[0] > 0.0);
        }
        let fit = ht_profile_ci(&d, 0.05).unwrap();
        close(p.lr_stat(fit.ci_low), CHI2_1, 1e-6);
        close(p.lr_stat(fit.ci_high), CHI2_1, 1e-6);
        assert!(fit.ci_low < th && th < fit.ci_high);
    }
}

#[test]
fn joint_region() {
    let d = random_dataset(3, 8);
    let est = ht_mle(&d).unwrap();
    assert_eq!(joint_region_stat(est.theta_hat, est.tau2_hat, &d).unwrap(), 0.0);
    assert!(joint_region_stat(est.theta_hat, est.tau2_hat + 0.1, &d).unwrap() > 0.0);
    assert!(in_joint_region(est.theta_hat, est.tau2_hat, &d, 0.05).unwrap());
    // Walk along θ until the statistic passes the χ²₂ threshold.
    let mut t = est.theta_hat;
    while joint_region_stat(t, est.tau2_hat, &d).unwrap() < 5.991_464_5 - 0.05 {
        t += 0.001;
    }
    assert!(in_joint_region(t, est.tau2_hat, &d, 0.05).unwrap());
    while joint_region_stat(t, est.tau2_hat, &d).unwrap() < 5.991_464_5 + 0.05 {
        t += 0.001;
    }
    assert!(!in_joint_region(t, est.tau2_hat, &d, 0.05).unwrap());
    assert!(joint_region_stat(0.0, -1.0, &d).is_err());
}

#[test]
fn symmetric_data_gives_symmetric_intervals() {
    let d = ds(&[-3.0, -1.0, 0.5, 1.5, 3.0, 5.0], &[0.8; 6]);
    let c = 1.0;
    for (fit, tol) in [
        (ht_profile_ci(&d, 0.05).unwrap(), 1e-6),
        (nb_ci(&d, 0.05).unwrap(), 1e-6),
        (gs_ci(&d, 0.05).unwrap(), 1e-4),
    ] {
        close(fit.theta_hat, c, 1e-9);
        close(fit.ci_high - c, c - fit.ci_low, tol);
    }
}

// --- Noma-Bartlett ------------------------------------------------------------

#[test]
fn bartlett_constant() {
    for m in [2usize, 5, 17] {
        let d = ds(&vec![0.0; m], &vec![0.6; m]);
        for tau2 in [0.0, 0.3, 10.0] {
            close(nb_bartlett_c(tau2, &d), 1.0 / m as f64, 1e-12);
        }
    }
    close(nb_bartlett_c(0.0, &ds(&[0.0, 1.0], &[1.0, 2f64.sqrt()])), 0.6, 1e-12);
}

#[test]
fn nb_interval_contains_ht_interval() {
    for seed in 0..15 {
        let d = random_dataset(seed, 4 + seed as usize % 6);
        let p = HtProfile::new(&d).unwrap();
        let (ht, nb) = (ht_profile_ci(&d, 0.05).unwrap(), nb_ci(&d, 0.05).unwrap());
        assert!(nb.ci_low <= ht.ci_low && ht.ci_high <= nb.ci_high, "seed {seed}");
        assert_eq!(nb.theta_hat, ht.theta_hat);
        close(p.nb_stat(nb.ci_low), CHI2_1, 1e-6);
        close(p.nb_stat(nb.ci_high), CHI2_1, 1e-6);
    }
}

// --- Guolo-Skovgaard ----------------------------------------------------------

#[test]
fn signed_root_identities() {
    for seed in 0..10 {
        let d = random_dataset(seed, 7);
        let p = HtProfile::new(&d).unwrap();
        let th = p.mle().theta_hat;
        assert_eq!(p.signed_root(th), 0.0);
        for k in 0..100 {
            let t = th - 5.0 + 10.0 * (k as f64 + 0.5) / 100.0;
            let r = p.signed_root(t);
            let big_t = p.lr_stat(t);
            assert!((r * r - big_t).abs() <= 1e-10 * big_t.max(1.0));
            assert_eq!(r > 0.0, t < th);
        }
        close(gs_signed_root(th + 1.0, &d).unwrap(), p.signed_root(th + 1.0), 0.0);
    }
}

#[test]
fn gs_interval_endpoints_and_containment() {
    for seed in 0..15 {
        let d = random_dataset(seed, 4 + seed as usize % 6);
        let p = HtProfile::new(&d).unwrap();
        let fit = gs_ci(&d, 0.05).unwrap();
        assert!(fit.ci_low < fit.theta_hat && fit.theta_hat < fit.ci_high, "seed {seed}");
        for end in [fit.ci_low, fit.ci_high] {
            let r = p.modified_root(end, SkovgaardForm::default()).unwrap();
            close(r.abs(), Z975, 1e-5);
            close(gs_modified_root(end, &d).unwrap(), r, 0.0);
        }
    }
}

#[test]
fn gs_interval_contains_estimate_when_tau2_is_zero() {
    let d = ds(&[1.0, 1.0, 1.0], &[1.0, 1.0, 2.0]);
    let fit = gs_ci(&d, 0.05).unwrap();
    assert_eq!(fit.tau2_hat, 0.0);
    assert!(fit.ci_low < 1.0 && 1.0 < fit.ci_high);
    close(fit.ci_high - 1.0, 1.0 - fit.ci_low, 1e-4);
}

#[test]
fn modified_root_is_singular_only_at_the_estimate() {
    let d = random_dataset(4, 6);
    let p = HtProfile::new(&d).unwrap();
    let th = p.mle().theta_hat;
    assert!(matches!(
        p.modified_root(th, SkovgaardForm::default()),
        Err(metapool_core::Error::NearMleSingularity { .. })
    ));
    for k in 1..40 {
        let t = th + 0.1 * k as f64 - 2.0;
        if p.signed_root(t).abs() < 1e-3 {
            continue;
        }
        let r = p.modified_root(t, SkovgaardForm::default()).unwrap();
        assert_eq!(r.signum(), p.signed_root(t).signum(), "θ = {t}");
    }
}

/// Probabilists' Gauss-Hermite rule with 5 nodes, exact for polynomials of
/// degree ≤ 9; weights sum to 1.
fn gauss_hermite5() -> [(f64, f64); 5] {
    let a = (5.0 - 10f64.sqrt()).sqrt();
    let b = (5.0 + 10f64.sqrt()).sqrt();
    let he4 = |x: f64| x.powi(4) - 6.0 * x * x + 3.0;
    let w = |x: f64| 120.0 / (25.0 * he4(x).powi(2));
    [(-b, w(b)), (-a, w(a)), (0.0, w(0.0)), (a, w(a)), (b, w(b))]
}

/// ũ assembled from its covariance definitions under the fitted model:
/// S = Cov(U(θ̂, τ̂²), U(θ, τ̃²)), q = Cov(U(θ̂, τ̂²), l(θ̂, τ̂²) - l(θ, τ̃²)),
/// Î = Cov(U(θ̂, τ̂²)), with observed information by finite differences.
fn u_oracle(d: &MetaDataset, theta: f64, observed_nuisance: bool) -> f64 {
    let mle = ht_mle(d).unwrap();
    let (th, t2) = (mle.theta_hat, mle.tau2_hat);
    let tc = profile_tau2(theta, d).unwrap();
    let score = |y: f64, v: f64, a: f64, b: f64| {
        let w = 1.0 / (v + b);
        [w * (y - a), 0.5 * (w * w * (y - a).powi(2) - w)]
    };
    let ll = |y: f64, v: f64, a: f64, b: f64| -0.5 * (v + b).ln() - 0.5 * (y - a).powi(2) / (v + b);
    let (mut s, mut q, mut info) = ([[0.0; 2]; 2], [0.0; 2], [[0.0; 2]; 2]);
    for v in d.vars() {
        let sd = (v + t2).sqrt();
        let nodes = gauss_hermite5().map(|(z, w)| (th + sd * z, w));
        let mean = |f: &dyn Fn(f64) -> f64| nodes.iter().map(|&(y, w)| w * f(y)).sum::<f64>();
        for j in 0..2 {
            let uj = |y: f64| score(y, v, th, t2)[j];
            let mu_j = mean(&uj);
            for k in 0..2 {
                let uk = |y: f64| score(y, v, theta, tc)[k];
                let mu_k = mean(&uk);
                s[j][k] += mean(&|y| (uj(y) - mu_j) * (uk(y) - mu_k));
                let vk = |y: f64| score(y, v, th, t2)[k];
                info[j][k] += mean(&|y| (uj(y) - mu_j) * vk(y));
            }
            let dl = |y: f64| ll(y, v, th, t2) - ll(y, v, theta, tc);
            let mu_l = mean(&dl);
            q[j] += mean(&|y| (uj(y) - mu_j) * (dl(y) - mu_l));
        }
    }
    let det2 = |m: [[f64; 2]; 2]| m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let first = (s[1][1] * q[0] - s[0][1] * q[1]) / det2(s);

    let h = 1e-4;
    let l = |a: f64, b: f64| ht_loglik(a, b, d);
    let j11 = -(l(th + h, t2) - 2.0 * l(th, t2) + l(th - h, t2)) / (h * h);
    let j22 = -(l(th, t2 + h) - 2.0 * l(th, t2) + l(th, t2 - h)) / (h * h);
    let j12 = -(l(th + h, t2 + h) - l(th + h, t2 - h) - l(th - h, t2 + h) + l(th - h, t2 - h)) / (4.0 * h * h);
    let det_j = j11 * j22 - j12 * j12;
    if observed_nuisance {
        let jt22 = -(l(theta, tc + h) - 2.0 * l(theta, tc) + l(theta, tc - h)) / (h * h);
        first * det_j.sqrt() / det2(info) * det2(s) / jt22.sqrt()
    } else {
        let it22 = 0.5 * d.vars().map(|v| (v + tc).powi(-2)).sum::<f64>();
        first * det2(info).sqrt() / det_j * det2(s) / it22.sqrt()
    }
}

#[test]
fn skovgaard_u_matches_covariance_oracle() {
    let mut checked = 0;
    for seed in 0..40u64 {
        let m = if seed % 2 == 0 { 3 } else { 5 };
        let d = random_dataset(seed, m);
        let p = HtProfile::new(&d).unwrap();
        let (th, t2) = (p.mle().theta_hat, p.mle().tau2_hat);
        if t2 < 0.05 {
            continue;
        }
        for offset in [-1.5, -0.4, 0.3, 1.2] {
            let theta = th + offset;
            let tc = p.tau2_at(theta);
            if -observed_hessian(theta, tc, &d)[1][1] <= 0.0 || tc == 0.0 {
                continue;
            }
            for (form, observed) in [(SkovgaardForm::ObservedNuisance, true), (SkovgaardForm::ExpectedNuisance, false)] {
                let got = p.skovgaard_u(theta, form).unwrap();
                let want = u_oracle(&d, theta, observed);
                assert!(((got - want) / want).abs() < 1e-5, "seed {seed} θ {theta}: {got} vs {want}");
            }
            checked += 1;
        }
    }
    assert!(checked >= 20, "only {checked} interior cases");
}

#[test]
fn skovgaard_ratio_tends_to_one_at_the_estimate() {
    for seed in 0..10 {
        let d = random_dataset(seed, 6);
        let p = HtProfile::new(&d).unwrap();
        let th = p.mle().theta_hat;
        for eps in [1e-2, -1e-2] {
            let t = th + eps;
            let ratio = p.skovgaard_u(t, SkovgaardForm::default()).unwrap() / p.signed_root(t);
            assert!((ratio - 1.0).abs() < 0.05, "seed {seed}: {ratio}");
        }
    }
}

#[test]
fn location_equivariance_of_likelihood_methods() {
    for seed in 0..8 {
        let d = random_dataset(seed, 6);
        let c = 17.25;
        let moved = d.affine(1.0, c).unwrap();
        let (p0, p1) = (HtProfile::new(&d).unwrap(), HtProfile::new(&moved).unwrap());
        close(p1.mle().theta_hat, p0.mle().theta_hat + c, 1e-8);
        close(p1.mle().tau2_hat, p0.mle().tau2_hat, 1e-8);
        for t in [-1.0, 0.0, 2.5] {
            close(p1.lr_stat(t + c), p0.lr_stat(t), 1e-8);
            close(nb_bartlett_c(p1.tau2_at(t + c), &moved), nb_bartlett_c(p0.tau2_at(t), &d), 1e-10);
        }
        for f in [ht_profile_ci, nb_ci, gs_ci] {
            let (a, b) = (f(&d, 0.05).unwrap(), f(&moved, 0.05).unwrap());
            close(b.ci_low, a.ci_low + c, 1e-7);
            close(b.ci_high, a.ci_high + c, 1e-7);
        }
    }
}

#[test]
fn gs_reports_sign_reversal_on_irregular_profiles() {
    // m = 3 with the profile τ̃²(θ) collapsing to zero just above θ̂: the
    // correction is O(1) and r̃_GS changes sign below the estimate.
    let d = ds(&[-2.084049768017159, 0.9118211023037, 0.8965847707035937], &[1.1965617118194634, 1.0324951568085532, 0.4939669883423444]);
    let p = HtProfile::new(&d).unwrap();
    let t = p.mle().theta_hat - 1.0;
    assert!(p.signed_root(t) > 1.0);
    assert!(p.modified_root(t, SkovgaardForm::default()).unwrap() < 0.0);
    let fit = gs_ci(&d, 0.05).unwrap();
    assert_eq!(fit.diagnostics.get("non_monotone").map(String::as_str), Some("true"));

    let regular = gs_ci(&random_dataset(1, 30), 0.05).unwrap();
    assert!(!regular.diagnostics.contains_key("non_monotone"));
}

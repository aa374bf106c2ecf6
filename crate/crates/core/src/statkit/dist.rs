//! Distribution functions and quantiles for the normal, chi-square and
//! Student t families.
//!
//! Quantiles are obtained by safeguarded Newton iteration on the CDF (or the
//! survival function in the upper tail) inside a bracket that is kept valid
//! at every step, so a bad Newton step degrades to bisection.

use super::special::{ln_gamma_unchecked, reg_gamma_lower, reg_gamma_upper, reg_inc_beta};
use crate::error::{domain, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

fn check_prob(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("probability must lie in (0, 1), got {p}")))
    }
}

fn check_df(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("degrees of freedom must be positive, got {d}")))
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF, via Φ(x) = ½·Q(½, x²/2) for x < 0.
pub fn normal_cdf(x: f64) -> f64 {
    let tail = 0.5 * reg_gamma_upper(0.5, 0.5 * x * x);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Φ⁻¹(p) by Wichura's AS 241 (PPND16) rational approximations.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_prob(p)?;
    Ok(ppnd16(p))
}

fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

pub fn chi_square_pdf(x: f64, d: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = 0.5 * d;
    ((h - 1.0) * x.ln() - 0.5 * x - h * std::f64::consts::LN_2 - ln_gamma_unchecked(h)).exp()
}

pub fn chi_square_cdf(x: f64, d: f64) -> f64 {
    reg_gamma_lower(0.5 * d, 0.5 * x)
}

pub fn chi_square_sf(x: f64, d: f64) -> f64 {
    reg_gamma_upper(0.5 * d, 0.5 * x)
}

/// Quantile of the chi-square distribution; `d` may be fractional.
pub fn chi_square_quantile(p: f64, d: f64) -> Result<f64> {
    check_prob(p)?;
    check_df(d)?;
    // Wilson-Hilferty start.
    let z = ppnd16(p);
    let c = 2.0 / (9.0 * d);
    let wh = d * (1.0 - c + z * c.sqrt()).powi(3);
    let start = if wh > 0.0 { wh } else { d * p.powf(2.0 / d).max(1e-300) };
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    let f = |x: f64| {
        if upper {
            target - chi_square_sf(x, d)
        } else {
            chi_square_cdf(x, d) - target
        }
    };
    let mut hi = start.max(1e-300);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    Ok(invert_increasing(f, |x| chi_square_pdf(x, d), 0.0, hi, start))
}

pub fn student_t_pdf(t: f64, d: f64) -> f64 {
    let ln_c = ln_gamma_unchecked(0.5 * (d + 1.0))
        - ln_gamma_unchecked(0.5 * d)
        - 0.5 * (d * std::f64::consts::PI).ln();
    (ln_c - 0.5 * (d + 1.0) * (1.0 + t * t / d).ln()).exp()
}

/// Upper tail P(T > t) for t ≥ 0.
fn student_t_upper(t: f64, d: f64) -> f64 {
    0.5 * reg_inc_beta(0.5 * d, 0.5, d / (d + t * t))
}

pub fn student_t_cdf(t: f64, d: f64) -> f64 {
    if t >= 0.0 {
        1.0 - student_t_upper(t, d)
    } else {
        student_t_upper(-t, d)
    }
}

/// Quantile of Student's t with `d` (possibly fractional) degrees of freedom.
pub fn student_t_quantile(p: f64, d: f64) -> Result<f64> {
    check_prob(p)?;
    check_df(d)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    let tail = p.min(1.0 - p);
    // Solve P(T > t) = tail for t > 0.
    let f = |t: f64| tail - student_t_upper(t, d);
    let start = ppnd16(1.0 - tail).max(1e-3);
    let mut hi = start;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let t = invert_increasing(f, |t| student_t_pdf(t, d), 0.0, hi, start.min(hi));
    Ok(if p < 0.5 { -t } else { t })
}

/// Root of an increasing function `f` on `[lo, hi]` with `f(lo) ≤ 0 ≤ f(hi)`,
/// using Newton steps with derivative `df` and bisection as fallback.
fn invert_increasing(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
) -> f64 {
    let mut x = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    for _ in 0..400 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = df(x);
        let newton = x - fx / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 1e-15 * hi.abs() {
            return next;
        }
        x = next;
    }
    x
}

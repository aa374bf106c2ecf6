//! Small dense minimizers for the bivariate likelihood.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: DVector<f64>,
    pub f: f64,
    pub grad: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

/// Backtracking Armijo line search along `dir`.
fn line_search(
    fg: &impl Fn(&DVector<f64>) -> (f64, DVector<f64>),
    x: &DVector<f64>,
    f: f64,
    grad: &DVector<f64>,
    dir: &DVector<f64>,
    max_step: f64,
) -> Option<(DVector<f64>, f64, DVector<f64>)> {
    let slope = grad.dot(dir);
    if !(slope < 0.0) {
        return None;
    }
    let norm = max_abs(dir);
    let mut step = if norm > max_step { max_step / norm } else { 1.0 };
    for _ in 0..60 {
        let trial = x + dir * step;
        let (ft, gt) = fg(&trial);
        if ft.is_finite() && ft <= f + 1e-4 * step * slope {
            return Some((trial, ft, gt));
        }
        step *= 0.5;
    }
    None
}

/// BFGS on `fg`, which returns the objective and its gradient.
pub(crate) fn bfgs(
    fg: impl Fn(&DVector<f64>) -> (f64, DVector<f64>),
    x0: DVector<f64>,
    gtol: f64,
    max_iter: usize,
) -> Minimum {
    let n = x0.len();
    let (mut f, mut g) = fg(&x0);
    let mut x = x0;
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut converged = f.is_finite() && max_abs(&g) <= gtol;
    while !converged && iterations < max_iter {
        iterations += 1;
        let mut dir = -(&h_inv * &g);
        let mut step = line_search(&fg, &x, f, &g, &dir, 2.0);
        if step.is_none() {
            // Reset the curvature model and try steepest descent.
            h_inv = DMatrix::identity(n, n);
            dir = -g.clone();
            step = line_search(&fg, &x, f, &g, &dir, 2.0);
        }
        let Some((x_new, f_new, g_new)) = step else {
            break;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - &s * y.transpose() * rho;
            let right = &eye - &y * s.transpose() * rho;
            h_inv = &left * &h_inv * &right + &s * s.transpose() * rho;
        }
        let df = (f - f_new).abs();
        x = x_new;
        f = f_new;
        g = g_new;
        if max_abs(&g) <= gtol || (df <= 1e-15 * (1.0 + f.abs()) && max_abs(&s) <= 1e-12) {
            converged = max_abs(&g) <= gtol.max(1e-6);
            break;
        }
    }
    Minimum {
        x,
        f,
        grad: g,
        iterations,
        converged,
    }
}

/// Newton iterations with the exact Hessian, used to polish a BFGS solution.
/// Steps fall back to the gradient direction when the Hessian is not
/// positive definite.
pub(crate) fn newton_polish(
    fg: impl Fn(&DVector<f64>) -> (f64, DVector<f64>),
    hess: impl Fn(&DVector<f64>) -> DMatrix<f64>,
    start: Minimum,
    gtol: f64,
    max_iter: usize,
) -> Minimum {
    let Minimum {
        mut x,
        mut f,
        mut grad,
        mut iterations,
        ..
    } = start;
    for _ in 0..max_iter {
        if max_abs(&grad) <= gtol {
            break;
        }
        iterations += 1;
        let h = hess(&x);
        let (dir, pd) = match h.clone().cholesky() {
            Some(ch) => (ch.solve(&(-&grad)), true),
            None => (-grad.clone(), false),
        };
        match line_search(&fg, &x, f, &grad, &dir, 2.0) {
            Some((xn, fnew, gn)) => {
                x = xn;
                f = fnew;
                grad = gn;
            }
            // Once f changes are below rounding the Armijo test is noise;
            // a full Newton step is kept if it shrinks the gradient.
            None if pd => {
                let xn = &x + &dir;
                let (fnew, gn) = fg(&xn);
                if !(fnew.is_finite() && max_abs(&gn) < max_abs(&grad)) {
                    break;
                }
                x = xn;
                f = fnew;
                grad = gn;
            }
            None => break,
        }
    }
    // Near a large objective value the gradient can stall above an absolute
    // tolerance from rounding alone; a negligible Newton decrement also counts.
    let converged = max_abs(&grad) <= 1e-6
        || hess(&x)
            .cholesky()
            .is_some_and(|ch| grad.dot(&ch.solve(&grad)) <= 1e-12);
    Minimum {
        x,
        f,
        grad,
        iterations,
        converged,
    }
}

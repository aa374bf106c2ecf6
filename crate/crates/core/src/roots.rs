//! One-dimensional root finding and maximization helpers.

/// Brent's method on a bracket with `f(a)` and `f(b)` of opposite sign.
pub(crate) fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa.signum() != fb.signum(), "brent: root not bracketed");
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    b
}

/// Maximize `value` over `[0, upper]` given its derivative `slope`.
///
/// Scans a grid that is dense near zero for downward zero crossings of the
/// slope, polishes each with Brent, and returns the best stationary point or
/// the zero boundary.
pub(crate) fn maximize_on_halfline(
    value: impl Fn(f64) -> f64,
    slope: impl Fn(f64) -> f64,
    upper: f64,
) -> f64 {
    if !(upper > 0.0) {
        return 0.0;
    }
    const GRID: usize = 48;
    let mut best = 0.0;
    let mut best_val = if slope(0.0) <= 0.0 { value(0.0) } else { f64::NEG_INFINITY };
    let mut prev_t = 0.0;
    let mut prev_g = slope(0.0);
    for k in 1..=GRID {
        let u = k as f64 / GRID as f64;
        let t = upper * u * u;
        let g = slope(t);
        if prev_g > 0.0 && g <= 0.0 {
            let root = if g == 0.0 {
                t
            } else {
                brent(&slope, prev_t, t, 1e-15 * (1.0 + t))
            };
            let v = value(root);
            if v > best_val {
                best_val = v;
                best = root;
            }
        }
        prev_t = t;
        prev_g = g;
    }
    if prev_g > 0.0 {
        // The caller's bound was too tight; fall back to the endpoint.
        let v = value(upper);
        if v > best_val {
            best = upper;
        }
    }
    best
}

/// Locate the boundary between an "inside" point and an "outside" point of a
/// predicate by bisection, to absolute width `xtol`.
pub(crate) fn bisect_boundary(
    outside: impl Fn(f64) -> bool,
    mut inside_x: f64,
    mut outside_x: f64,
    xtol: f64,
) -> f64 {
    for _ in 0..200 {
        if (outside_x - inside_x).abs() <= xtol {
            break;
        }
        let mid = 0.5 * (inside_x + outside_x);
        if outside(mid) {
            outside_x = mid;
        } else {
            inside_x = mid;
        }
    }
    0.5 * (inside_x + outside_x)
}

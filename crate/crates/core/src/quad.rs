//! Small numerical helpers: Gauss–Legendre rules and bisection.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// 8-point Gauss–Legendre on a single interval.
pub fn gl_interval(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (x, w) = gl8();
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    r * x.iter().zip(w).map(|(&xi, &wi)| wi * f(c + r * xi)).sum::<f64>()
}

/// Integrate over `[a, b]`, splitting at every breakpoint inside the range so
/// that the integrand is smooth on each piece.
pub fn gl_piecewise(breaks: &[f64], a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut total = 0.0;
    let mut left = a;
    let start = breaks.partition_point(|&x| x <= a);
    for &x in &breaks[start..] {
        if x >= b {
            break;
        }
        total += gl_interval(left, x, &f);
        left = x;
    }
    total + gl_interval(left, b, &f)
}

/// `int_0^1 dt / (1 - x t) = -ln(1-x)/x` for `0 <= x < 1`.
pub fn log_ratio(x: f64) -> f64 {
    if x < 0.05 {
        (0..14).rev().fold(0.0, |acc, k| acc * x + 1.0 / (k + 1) as f64)
    } else {
        -(-x).ln_1p() / x
    }
}

/// Root of `f` on `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ in sign.
/// Returns `None` when they do not.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, max_iter: usize, f: impl Fn(f64) -> f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

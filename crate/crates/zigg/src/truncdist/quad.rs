//! Gauss–Legendre nodes and weights.
//!
//! Nodes are the roots of the Legendre polynomial P_n, found by Newton
//! iteration on the three-term recurrence from cosine-spaced initial
//! guesses; weights follow from the derivative at the root. Only the
//! positive half is solved, the other half is mirrored, so the rule is
//! exactly symmetric.

use std::sync::OnceLock;

/// (P_n(x), P_n'(x)) via the recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of the n-point rule on [-1, 1], nodes ascending.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2);
    let m = n / 2;
    // positive roots, largest first (plus the zero root when n is odd)
    let mut half = Vec::with_capacity((n + 1) / 2);
    for i in 0..(n + 1) / 2 {
        // Tricomi-style initial guess enumerates the roots from the largest.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        half.push((x, w));
    }
    let mut out = Vec::with_capacity(n);
    for &(x, w) in half.iter().take(m) {
        out.push((-x, w));
    }
    if n % 2 == 1 {
        out.push((0.0, half[m].1));
    }
    for &(x, w) in half.iter().take(m).rev() {
        out.push((x, w));
    }
    out
}

static GL64: OnceLock<Vec<(f64, f64)>> = OnceLock::new();

/// The fixed 64-point rule used by the bivariate kernels.
pub(crate) fn gl64() -> &'static [(f64, f64)] {
    GL64.get_or_init(|| gauss_legendre(64))
}

//! Dense least squares for the small systems used by scoring and fitting.

use alloc::vec;
use alloc::vec::Vec;

/// Ridge added to the diagonal (scaled by its mean) when a normal-equation
/// matrix is not numerically positive definite.
pub const RIDGE_DAMPING: f64 = 1e-8;

/// In-place Cholesky factorisation of a row-major `k × k` matrix.
/// Returns `false` if a pivot is not comfortably positive.
fn cholesky(a: &mut [f64], k: usize) -> bool {
    let scale = (0..k).map(|i| a[i * k + i].abs()).fold(0.0f64, f64::max).max(1e-300);
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d -= a[j * k + p] * a[j * k + p];
        }
        if !(d > 1e-13 * scale) {
            return false;
        }
        let d = libm::sqrt(d);
        a[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= a[i * k + p] * a[j * k + p];
            }
            a[i * k + j] = s / d;
        }
    }
    true
}

fn cholesky_solve_factored(l: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * k + p] * y[p];
        }
        y[i] = s / l[i * k + i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for p in i + 1..k {
            s -= l[p * k + i] * x[p];
        }
        x[i] = s / l[i * k + i];
    }
    x
}

/// Solves `a x = b` for symmetric positive semi-definite `a`.
///
/// Falls back to ridge damping (starting at [`RIDGE_DAMPING`] relative to the
/// mean diagonal, growing tenfold until the factorisation succeeds). The flag
/// reports whether damping was needed.
pub fn solve_spd(a: &[f64], b: &[f64], k: usize) -> (Vec<f64>, bool) {
    if k == 0 {
        return (Vec::new(), false);
    }
    let mut work = a.to_vec();
    if cholesky(&mut work, k) {
        return (cholesky_solve_factored(&work, b, k), false);
    }
    let mean_diag = ((0..k).map(|i| a[i * k + i].abs()).sum::<f64>() / k as f64).max(1e-300);
    let mut ridge = RIDGE_DAMPING * mean_diag;
    loop {
        work.copy_from_slice(a);
        for i in 0..k {
            work[i * k + i] += ridge;
        }
        if cholesky(&mut work, k) {
            return (cholesky_solve_factored(&work, b, k), true);
        }
        ridge *= 10.0;
    }
}

/// Ordinary least squares with an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub damped: bool,
}

impl LinearFit {
    pub fn predict(&self, features: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(features)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }
}

/// Fits `y ~ 1 + X` where `x` is row-major `n × k`.
pub fn least_squares(x: &[f64], y: &[f64], k: usize) -> LinearFit {
    let n = y.len();
    debug_assert_eq!(x.len(), n * k);
    let y_mean = y.iter().sum::<f64>() / n.max(1) as f64;
    let mut means = vec![0.0; k];
    for row in x.chunks_exact(k.max(1)).take(if k == 0 { 0 } else { n }) {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n.max(1) as f64;
    }
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    let mut centred = vec![0.0; k];
    for i in 0..n {
        let row = &x[i * k..(i + 1) * k];
        for j in 0..k {
            centred[j] = row[j] - means[j];
        }
        let dy = y[i] - y_mean;
        for a in 0..k {
            let ca = centred[a];
            xty[a] += ca * dy;
            for b in a..k {
                xtx[a * k + b] += ca * centred[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtx[a * k + b] = xtx[b * k + a];
        }
    }
    let (coefficients, damped) = solve_spd(&xtx, &xty, k);
    let intercept = y_mean - coefficients.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    let fit = LinearFit {
        intercept,
        coefficients,
        rss: 0.0,
        damped,
    };
    let rss = (0..n)
        .map(|i| {
            let r = y[i] - fit.predict(&x[i * k..(i + 1) * k]);
            r * r
        })
        .sum();
    LinearFit { rss, ..fit }
}

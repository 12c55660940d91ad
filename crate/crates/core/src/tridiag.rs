//! Tridiagonal solvers. Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`;
//! `lower[0]` and `upper[n-1]` are ignored.

use num_complex::Complex64;

/// Thomas elimination without pivoting. Safe for matrices of the form `I + iK`
/// with `K` symmetrizable, which is all the time stepper needs.
pub fn solve_complex(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
    scratch: &mut Vec<Complex64>,
) {
    let n = diag.len();
    scratch.clear();
    scratch.resize(n, Complex64::new(0.0, 0.0));
    let mut piv = diag[0];
    scratch[0] = upper[0] / piv;
    rhs[0] /= piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = if i + 1 < n { upper[i] / piv } else { Complex64::new(0.0, 0.0) };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i] * next;
    }
}

/// Gaussian elimination with partial pivoting (the LAPACK `gtsv` scheme).
/// Returns `None` on an exactly singular pivot.
pub fn solve_real_pivoting(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    // dl[i] couples row i+1 to column i; du2 is the fill-in two places right of the diagonal.
    let mut d = diag.to_vec();
    let mut du: Vec<f64> = (0..n).map(|i| if i + 1 < n { upper[i] } else { 0.0 }).collect();
    let mut dl: Vec<f64> = (0..n.saturating_sub(1)).map(|i| lower[i + 1]).collect();
    let mut du2 = vec![0.0; n];
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return None;
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
            dl[i] = 0.0;
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
            du[i] = tmp;
            b.swap(i, i + 1);
            b[i + 1] -= f * b[i];
        }
    }
    if d[n - 1] == 0.0 {
        return None;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n > 1 {
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn pivoting_handles_zero_leading_diagonal() {
        let lower = [0.0, 1.0, 2.0, -1.0, 0.5];
        let diag = [0.0, 1e-3, -3.0, 0.2, 4.0];
        let upper = [2.0, 5.0, 1.0, 3.0, 0.0];
        let x_true = [1.0, -2.0, 0.5, 3.0, -1.0];
        let rhs = apply(&lower, &diag, &upper, &x_true);
        let x = solve_real_pivoting(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in x.iter().zip(x_true) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn thomas_matches_residual() {
        let n = 50;
        let k = |i: usize| 1.0 + i as f64 * 0.1;
        let lower: Vec<Complex64> = (0..n).map(|i| Complex64::new(0.0, -k(i))).collect();
        let upper: Vec<Complex64> = (0..n).map(|i| Complex64::new(0.0, -k(i + 1))).collect();
        let diag: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, k(i) + k(i + 1) - 3.0)).collect();
        let x_true: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut rhs: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut s = diag[i] * x_true[i];
                if i > 0 {
                    s += lower[i] * x_true[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x_true[i + 1];
                }
                s
            })
            .collect();
        let mut scratch = Vec::new();
        solve_complex(&lower, &diag, &upper, &mut rhs, &mut scratch);
        for (a, b) in rhs.iter().zip(&x_true) {
            assert!((a - b).norm() < 1e-11);
        }
    }
}

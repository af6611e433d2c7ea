//! Dense kernels shared by the solvers.
//!
//! Matrices are `ndarray` arrays in standard (row-major) layout; the hot
//! loops work on raw slices so the inner products vectorise.

use ndarray::{Array1, Array2, ArrayView2};

/// Inner product with eight independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// `out = m · x` for a row-major matrix.
pub fn matvec_into(m: ArrayView2<'_, f64>, x: &[f64], out: &mut [f64]) {
    let cols = m.ncols();
    debug_assert_eq!(cols, x.len());
    debug_assert_eq!(m.nrows(), out.len());
    match m.as_slice() {
        Some(flat) => {
            for (o, row) in out.iter_mut().zip(flat.chunks_exact(cols.max(1))) {
                *o = dot(row, x);
            }
        }
        None => {
            for (o, row) in out.iter_mut().zip(m.rows()) {
                *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        }
    }
}

pub fn matvec(m: &Array2<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    matvec_into(m.view(), x, &mut out);
    out
}

/// `out = mᵀ · x`.
pub fn matvec_t(m: &Array2<f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.nrows(), x.len());
    let mut out = vec![0.0; m.ncols()];
    for (row, &xk) in m.rows().into_iter().zip(x) {
        if xk == 0.0 {
            continue;
        }
        for (o, &a) in out.iter_mut().zip(row.iter()) {
            *o += a * xk;
        }
    }
    out
}

/// `aᵀa` for a row-major matrix, accumulated row by row.
pub fn gram(a: &Array2<f64>) -> Array2<f64> {
    let n = a.ncols();
    let at = a.t().as_standard_layout().into_owned();
    let mut g = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let ci = at.row(i);
        let ci = ci.as_slice().expect("standard layout");
        for j in i..n {
            let cj = at.row(j);
            let v = dot(ci, cj.as_slice().expect("standard layout"));
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    g
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration from a fixed deterministic start.
pub fn power_iteration(n: usize, mut apply: impl FnMut(&[f64], &mut [f64]), iters: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..iters {
        apply(&v, &mut w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next = dot(&v, &w);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Rayleigh quotient lags the true top eigenvalue slightly from below.
    apply(&v, &mut w);
    lambda.max(dot(&v, &w))
}

pub fn to_array(x: Vec<f64>) -> Array1<f64> {
    Array1::from_vec(x)
}

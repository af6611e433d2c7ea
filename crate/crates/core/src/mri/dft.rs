//! Unitary 2-D DFT: `X[k] = (1/side) Σ_p x[p] e^{−2πi k·p/side}`.

use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::{CimError, Result};

fn transform(data: &Array2<Complex64>, direction: FftDirection) -> Result<Array2<Complex64>> {
    let (rows, cols) = data.dim();
    if rows != cols {
        return Err(CimError::DimensionMismatch { context: "dft: image must be square", expected: rows, actual: cols });
    }
    let mut out = data.clone();
    if rows == 0 {
        return Ok(out);
    }
    let fft = FftPlanner::new().plan_fft(rows, direction);
    apply_in_place(&mut out, fft.as_ref());
    Ok(out)
}

/// Row then column transforms with unitary scaling.
fn apply_in_place(out: &mut Array2<Complex64>, fft: &dyn Fft<f64>) {
    let side = out.nrows();
    let mut buf = vec![Complex64::new(0.0, 0.0); side];
    for r in 0..side {
        buf.iter_mut().zip(out.row(r)).for_each(|(b, &v)| *b = v);
        fft.process(&mut buf);
        out.row_mut(r).iter_mut().zip(&buf).for_each(|(d, &v)| *d = v);
    }
    for c in 0..side {
        buf.iter_mut().zip(out.column(c)).for_each(|(b, &v)| *b = v);
        fft.process(&mut buf);
        out.column_mut(c).iter_mut().zip(&buf).for_each(|(d, &v)| *d = v);
    }
    let scale = 1.0 / side as f64;
    out.mapv_inplace(|v| v * scale);
}

/// Planned forward and inverse transforms for one side length.
#[derive(Clone)]
pub struct Dft2 {
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft2").field("side", &self.side).finish()
    }
}

impl Dft2 {
    pub fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Dft2 { side, forward: planner.plan_fft_forward(side), inverse: planner.plan_fft_inverse(side) }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn forward_in_place(&self, data: &mut Array2<Complex64>) {
        debug_assert_eq!(data.dim(), (self.side, self.side));
        apply_in_place(data, self.forward.as_ref());
    }

    pub fn inverse_in_place(&self, data: &mut Array2<Complex64>) {
        debug_assert_eq!(data.dim(), (self.side, self.side));
        apply_in_place(data, self.inverse.as_ref());
    }
}

pub fn fft2(image: &Array2<f64>) -> Result<Array2<Complex64>> {
    transform(&image.mapv(|v| Complex64::new(v, 0.0)), FftDirection::Forward)
}

pub fn fft2_complex(data: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    transform(data, FftDirection::Forward)
}

pub fn ifft2(kspace: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    transform(kspace, FftDirection::Inverse)
}

//! Multilevel orthonormal 2-D Haar transform.
//!
//! Coefficients use the pyramid layout: after the full decomposition the
//! top-left entry is the coarsest average and each level's detail bands sit
//! in the remaining quadrants of its block.

use ndarray::{Array2, ArrayViewMut1, Axis};

use crate::{CimError, Result};

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub(crate) fn check_side(side: usize) -> Result<()> {
    if side == 0 || !side.is_power_of_two() {
        return Err(CimError::param("side", format!("must be a power of two, got {side}")));
    }
    Ok(())
}

fn check_square(image: &Array2<f64>) -> Result<usize> {
    let (rows, cols) = image.dim();
    if rows != cols {
        return Err(CimError::DimensionMismatch { context: "haar: image must be square", expected: rows, actual: cols });
    }
    check_side(rows)?;
    Ok(rows)
}

fn forward_1d(mut v: ArrayViewMut1<'_, f64>, len: usize, tmp: &mut [f64]) {
    let half = len / 2;
    for i in 0..half {
        let (a, b) = (v[2 * i], v[2 * i + 1]);
        tmp[i] = (a + b) * INV_SQRT2;
        tmp[half + i] = (a - b) * INV_SQRT2;
    }
    for i in 0..len {
        v[i] = tmp[i];
    }
}

fn inverse_1d(mut v: ArrayViewMut1<'_, f64>, len: usize, tmp: &mut [f64]) {
    let half = len / 2;
    for i in 0..half {
        let (s, d) = (v[i], v[half + i]);
        tmp[2 * i] = (s + d) * INV_SQRT2;
        tmp[2 * i + 1] = (s - d) * INV_SQRT2;
    }
    for i in 0..len {
        v[i] = tmp[i];
    }
}

/// Full decomposition down to a single approximation coefficient.
pub fn haar_forward(image: &Array2<f64>) -> Result<Array2<f64>> {
    let side = check_square(image)?;
    let mut out = image.clone();
    let mut tmp = vec![0.0; side];
    let mut len = side;
    while len > 1 {
        for r in 0..len {
            forward_1d(out.row_mut(r), len, &mut tmp);
        }
        for c in 0..len {
            forward_1d(out.column_mut(c), len, &mut tmp);
        }
        len /= 2;
    }
    Ok(out)
}

pub fn haar_inverse(coeffs: &Array2<f64>) -> Result<Array2<f64>> {
    let side = check_square(coeffs)?;
    let mut out = coeffs.clone();
    let mut tmp = vec![0.0; side];
    let mut len = 2;
    while len <= side {
        for c in 0..len {
            inverse_1d(out.column_mut(c), len, &mut tmp);
        }
        for r in 0..len {
            inverse_1d(out.row_mut(r), len, &mut tmp);
        }
        len *= 2;
    }
    Ok(out)
}

/// Row-major flattening used for coefficient vectors.
pub fn to_vector(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

pub fn from_vector(side: usize, v: &[f64]) -> Result<Array2<f64>> {
    CimError::check_len("image vector", side * side, v.len())?;
    Ok(Array2::from_shape_vec((side, side), v.to_vec()).expect("length checked"))
}

/// Applies `Ψ · M · Ψᵀ` to an `N × N` matrix whose rows and columns are
/// row-major flattened `side × side` images.
pub fn conjugate_matrix(side: usize, m: &mut Array2<f64>) -> Result<()> {
    check_side(side)?;
    let n = side * side;
    if m.dim() != (n, n) {
        return Err(CimError::DimensionMismatch { context: "haar: operator size", expected: n, actual: m.nrows() });
    }
    for axis in [Axis(0), Axis(1)] {
        for mut lane in m.lanes_mut(axis) {
            let img = from_vector(side, &lane.to_vec())?;
            let c = haar_forward(&img)?;
            lane.iter_mut().zip(c.iter()).for_each(|(d, &s)| *d = s);
        }
    }
    Ok(())
}

//! Undersampled k-space problems over Haar coefficients.

use ndarray::Array2;
use rand::Rng;
use rustfft::num_complex::Complex64;

use std::sync::Arc;

use super::dft::{fft2, ifft2, Dft2};
use super::haar::{self, check_side, haar_forward, haar_inverse};
use crate::qubo::{GramOperator, QuboProblem};
use crate::rng::{self, streams};
use crate::{CimError, Result, Support};

/// Default weight of the second-difference smoothness penalty.
pub const DEFAULT_GAMMA: f64 = 1e-4;

/// Index of the frequency conjugate to `k` (row-major `ky·side + kx`).
pub fn conjugate_index(side: usize, k: usize) -> usize {
    let (ky, kx) = (k / side, k % side);
    ((side - ky) % side) * side + (side - kx) % side
}

/// How conjugate pairs are drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaskDensity {
    Uniform,
    /// Pair weight `1 / (1 + (|k| / radius)²)` with `|k|` the wrapped
    /// distance from DC in units of the side.
    Centered { radius: f64 },
}

impl Default for MaskDensity {
    fn default() -> Self {
        MaskDensity::Centered { radius: 0.1 }
    }
}

fn pair_weight(side: usize, k: usize, density: MaskDensity) -> f64 {
    match density {
        MaskDensity::Uniform => 1.0,
        MaskDensity::Centered { radius } => {
            let wrap = |v: usize| v.min(side - v) as f64 / side as f64;
            let (ky, kx) = (wrap(k / side), wrap(k % side));
            1.0 / (1.0 + (ky * ky + kx * kx) / (radius * radius))
        }
    }
}

/// A Hermitian-symmetric set of sampled k-space points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KMask {
    side: usize,
    indices: Vec<usize>,
}

impl KMask {
    /// Samples exactly `round(compression·N)` points. DC is always taken;
    /// the other self-conjugate frequencies fill parity, and the remainder
    /// are drawn as conjugate pairs.
    pub fn random(side: usize, compression: f64, seed: u64) -> Result<Self> {
        Self::random_with(side, compression, MaskDensity::Uniform, seed)
    }

    /// As [`KMask::random`] with pairs drawn without replacement in
    /// proportion to `density`.
    pub fn random_with(side: usize, compression: f64, density: MaskDensity, seed: u64) -> Result<Self> {
        check_side(side)?;
        if let MaskDensity::Centered { radius } = density {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(CimError::param("mask radius", format!("must be positive, got {radius}")));
            }
        }
        if !(compression > 0.0 && compression <= 1.0) {
            return Err(CimError::param("compression", format!("must lie in (0, 1], got {compression}")));
        }
        let n = side * side;
        let target = (compression * n as f64).round() as usize;
        if target == 0 {
            return Err(CimError::param("compression", format!("{compression} samples no frequency at side {side}")));
        }
        let singles: Vec<usize> = (0..n).filter(|&k| conjugate_index(side, k) == k).collect();
        let pairs: Vec<usize> = (0..n).filter(|&k| conjugate_index(side, k) > k).collect();
        let mut n_single = if target % 2 == 1 { 1 } else { 2.min(singles.len()) };
        while target > n_single + 2 * pairs.len() {
            n_single += 2;
        }
        if n_single > singles.len() || (target - n_single) % 2 != 0 {
            return Err(CimError::param("compression", format!("no Hermitian mask has {target} points at side {side}")));
        }
        let mut rng = rng::stream(seed, streams::MASK);
        let mut chosen = vec![0usize];
        let mut others: Vec<usize> = singles[1..].to_vec();
        partial_shuffle(&mut others, n_single - 1, &mut rng);
        chosen.extend_from_slice(&others[..n_single - 1]);
        let n_pairs = (target - n_single) / 2;
        // weighted sampling without replacement: keep the largest u^(1/w)
        let mut keyed: Vec<(f64, usize)> = pairs
            .iter()
            .map(|&k| {
                let u: f64 = rng.random();
                (u.ln() / pair_weight(side, k, density), k)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, k) in &keyed[..n_pairs] {
            chosen.push(k);
            chosen.push(conjugate_index(side, k));
        }
        chosen.sort_unstable();
        Ok(KMask { side, indices: chosen })
    }

    /// Every frequency.
    pub fn full(side: usize) -> Result<Self> {
        check_side(side)?;
        Ok(KMask { side, indices: (0..side * side).collect() })
    }

    /// Validates range, uniqueness and conjugate symmetry.
    pub fn from_indices(side: usize, mut indices: Vec<usize>) -> Result<Self> {
        check_side(side)?;
        indices.sort_unstable();
        indices.dedup();
        let n = side * side;
        if let Some(&bad) = indices.iter().find(|&&k| k >= n) {
            return Err(CimError::param("mask", format!("index {bad} out of range for side {side}")));
        }
        if let Some(&k) = indices.iter().find(|&&k| indices.binary_search(&conjugate_index(side, k)).is_err()) {
            return Err(CimError::param("mask", format!("index {k} sampled without its conjugate")));
        }
        if indices.is_empty() {
            return Err(CimError::param("mask", "empty"));
        }
        Ok(KMask { side, indices })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn compression(&self) -> f64 {
        self.indices.len() as f64 / (self.side * self.side) as f64
    }

    fn indicator(&self) -> Array2<Complex64> {
        let mut m = Array2::from_elem((self.side, self.side), Complex64::new(0.0, 0.0));
        for &k in &self.indices {
            m[[k / self.side, k % self.side]] = Complex64::new(1.0, 0.0);
        }
        m
    }
}

fn partial_shuffle(v: &mut [usize], count: usize, rng: &mut rng::SimRng) {
    for i in 0..count.min(v.len()) {
        let j = rng.random_range(i..v.len());
        v.swap(i, j);
    }
}

/// A source image whose Haar coefficients have been hard-thresholded.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseImage {
    pub pixels: Array2<f64>,
    /// Row-major Haar coefficients.
    pub coeffs: Vec<f64>,
    /// Realised fraction of nonzero coefficients.
    pub sparseness: f64,
}

impl SparseImage {
    pub fn side(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn support(&self) -> Support {
        Support::from_bits(self.coeffs.iter().map(|&c| c != 0.0).collect())
    }
}

/// Keeps the `round(target·N)` largest-magnitude Haar coefficients (ties
/// broken by lower index) and zeroes the rest.
pub fn make_sparse_source(image: &Array2<f64>, target: f64) -> Result<SparseImage> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(CimError::param("sparseness", format!("must lie in (0, 1], got {target}")));
    }
    let coeffs = haar::to_vector(&haar_forward(image)?);
    let n = coeffs.len();
    let keep = (target * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coeffs[b].abs().total_cmp(&coeffs[a].abs()).then(a.cmp(&b)));
    let mut sparse = vec![0.0; n];
    for &r in &order[..keep] {
        sparse[r] = coeffs[r];
    }
    let side = image.nrows();
    let pixels = haar_inverse(&haar::from_vector(side, &sparse)?)?;
    let nonzero = sparse.iter().filter(|&&c| c != 0.0).count();
    Ok(SparseImage { pixels, coeffs: sparse, sparseness: nonzero as f64 / n as f64 })
}

/// Periodic second difference `x[i−1] − 2x[i] + x[i+1]` along rows
/// (`vertical = true`) or columns.
pub fn second_difference(image: &Array2<f64>, vertical: bool) -> Array2<f64> {
    let (h, w) = image.dim();
    Array2::from_shape_fn((h, w), |(r, c)| {
        if vertical {
            image[[(r + h - 1) % h, c]] - 2.0 * image[[r, c]] + image[[(r + 1) % h, c]]
        } else {
            image[[r, (c + w - 1) % w]] - 2.0 * image[[r, c]] + image[[r, (c + 1) % w]]
        }
    })
}

/// Kernel of the circulant `ΔᵥᵀΔᵥ + ΔₕᵀΔₕ`, indexed by offset mod side.
fn smoothness_kernel(side: usize) -> Array2<f64> {
    let mut k = Array2::zeros((side, side));
    for (offset, w) in [(-2i64, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)] {
        let o = offset.rem_euclid(side as i64) as usize;
        k[[o, 0]] += w;
        k[[0, o]] += w;
    }
    k
}

/// Embedded undersampled Fourier problem over Haar coefficients.
///
/// For a real image with coefficients `c`, each sampled frequency yields
/// the real and imaginary part of `(F Ψᵀ c)_k` as two observation rows.
#[derive(Clone, Debug)]
pub struct MriProblem {
    pub side: usize,
    pub mask: KMask,
    pub gamma: f64,
    /// `[Re y_k, Im y_k]` for each sampled `k` in ascending order.
    pub observations: Vec<f64>,
    /// Couplings from `Ψ(FᴴSᵀSF + γ(ΔᵥᵀΔᵥ + ΔₕᵀΔₕ))Ψᵀ`, Zeeman `A_realᵀ y`.
    pub qubo: QuboProblem,
}

/// Assembles the problem for `source` under `mask`.
pub fn build_mri_problem(source: &SparseImage, mask: KMask, gamma: f64, eta: f64) -> Result<MriProblem> {
    let side = source.side();
    if mask.side() != side {
        return Err(CimError::DimensionMismatch { context: "mri: mask side", expected: side, actual: mask.side() });
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(CimError::param("gamma", format!("must be finite and nonnegative, got {gamma}")));
    }
    let n = side * side;
    let kspace = fft2(&source.pixels)?;
    let mut observations = Vec::with_capacity(2 * mask.len());
    let mut sampled = Array2::from_elem((side, side), Complex64::new(0.0, 0.0));
    for &k in mask.indices() {
        let v = kspace[[k / side, k % side]];
        observations.push(v.re);
        observations.push(v.im);
        sampled[[k / side, k % side]] = v;
    }
    let back = ifft2(&sampled)?.mapv(|v| v.re);
    let zeeman = haar::to_vector(&haar_forward(&back)?);

    // FᴴSᵀSF is circulant with kernel ifft2(mask)/side (unitary scaling)
    let kernel_data = ifft2(&mask.indicator())?.mapv(|v| v.re / side as f64);
    let kernel = kernel_data + smoothness_kernel(side) * gamma;
    let mut op = Array2::from_shape_fn((n, n), |(p, q)| {
        let dy = (p / side + side - q / side) % side;
        let dx = (p % side + side - q % side) % side;
        kernel[[dy, dx]]
    });
    haar::conjugate_matrix(side, &mut op)?;
    let sym = (&op + &op.t()) * 0.5;
    let fast = MriGram { dft: Dft2::new(side), mask: mask.indicator().mapv(|v| v.re), gamma };
    let qubo = QuboProblem::from_gram(sym, zeeman, eta)?.with_operator(Arc::new(fast))?;
    Ok(MriProblem { side, mask, gamma, observations, qubo })
}

/// `Ψ(FᴴSᵀSF + γ(ΔᵥᵀΔᵥ + ΔₕᵀΔₕ))Ψᵀ v` via transforms, O(N log N).
#[derive(Debug)]
struct MriGram {
    dft: Dft2,
    mask: Array2<f64>,
    gamma: f64,
}

impl GramOperator for MriGram {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let side = self.dft.side();
        let img = haar_inverse(&haar::from_vector(side, v).expect("operator length")).expect("power-of-two side");
        let mut k = img.mapv(|x| Complex64::new(x, 0.0));
        self.dft.forward_in_place(&mut k);
        k.zip_mut_with(&self.mask, |c, &m| *c *= m);
        self.dft.inverse_in_place(&mut k);
        let mut acc = k.mapv(|c| c.re);
        if self.gamma > 0.0 {
            let dv = second_difference(&second_difference(&img, true), true);
            let dh = second_difference(&second_difference(&img, false), false);
            acc = acc + (dv + dh) * self.gamma;
        }
        let c = haar_forward(&acc).expect("power-of-two side");
        out.iter_mut().zip(c.iter()).for_each(|(o, &x)| *o = x);
    }
}

impl MriProblem {
    pub fn n(&self) -> usize {
        self.side * self.side
    }

    /// The real embedding of `S F Ψᵀ`, `2|S| × N`, built column by column.
    pub fn embedded_operator(&self) -> Result<Array2<f64>> {
        let n = self.n();
        let side = self.side;
        let mut a = Array2::zeros((2 * self.mask.len(), n));
        let mut unit = vec![0.0; n];
        for q in 0..n {
            unit[q] = 1.0;
            let img = haar_inverse(&haar::from_vector(side, &unit)?)?;
            unit[q] = 0.0;
            let k = fft2(&img)?;
            for (i, &idx) in self.mask.indices().iter().enumerate() {
                let v = k[[idx / side, idx % side]];
                a[[2 * i, q]] = v.re;
                a[[2 * i + 1, q]] = v.im;
            }
        }
        Ok(a)
    }
}

/// `Ψᵀ(R∘σ)` as an image.
pub fn reconstruct_image(side: usize, signal: &[f64], sigma: &Support) -> Result<Array2<f64>> {
    check_side(side)?;
    CimError::check_len("reconstruct: signal", side * side, signal.len())?;
    CimError::check_len("reconstruct: support", side * side, sigma.len())?;
    let masked: Vec<f64> = signal.iter().zip(sigma.iter()).map(|(&r, on)| if on { r } else { 0.0 }).collect();
    haar_inverse(&haar::from_vector(side, &masked)?)
}

/// Pixel-space root-mean-square error.
pub fn image_rmse(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(CimError::DimensionMismatch { context: "image rmse", expected: a.len(), actual: b.len() });
    }
    let sum: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / a.len() as f64).sqrt())
}

//! Compressed-sensing instances, the synthetic generator, and figures of
//! merit.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::linalg;
use crate::rng::{self, streams};
use crate::{CimError, Result, Support};

/// Parameters of a synthetic instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceParams {
    pub n: usize,
    /// Compression ratio M/N.
    pub alpha: f64,
    /// Fraction of nonzero source entries.
    pub sparseness: f64,
    /// Standard deviation of the observation noise.
    pub nu: f64,
    pub seed: u64,
}

/// Observation `y = A (x ∘ ξ) + w` together with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    /// Observation matrix, M×N.
    pub matrix: Array2<f64>,
    /// Observed signal, length M.
    pub observation: Vec<f64>,
    /// True source values, length N (defined off the support too).
    pub signal: Vec<f64>,
    /// True support ξ.
    pub support: Support,
    pub params: InstanceParams,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    /// Realised M/N.
    pub fn realised_alpha(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }

    /// Realised fraction of ones in ξ.
    pub fn realised_sparseness(&self) -> f64 {
        self.support.count() as f64 / self.n() as f64
    }

    /// `x ∘ ξ`.
    pub fn masked_signal(&self) -> Vec<f64> {
        self.signal
            .iter()
            .zip(self.support.iter())
            .map(|(&x, on)| if on { x } else { 0.0 })
            .collect()
    }

    /// Builds an instance from explicit data, with `y` computed noiselessly.
    pub fn from_parts(matrix: Array2<f64>, signal: Vec<f64>, support: Support, seed: u64) -> Result<Self> {
        let (m, n) = matrix.dim();
        CimError::check_len("signal", n, signal.len())?;
        CimError::check_len("support", n, support.len())?;
        let masked: Vec<f64> = signal
            .iter()
            .zip(support.iter())
            .map(|(&x, on)| if on { x } else { 0.0 })
            .collect();
        let observation = linalg::matvec(&matrix, &masked);
        let k = support.count();
        let inst = Instance {
            params: InstanceParams {
                n,
                alpha: m as f64 / n as f64,
                sparseness: k as f64 / n as f64,
                nu: 0.0,
                seed,
            },
            matrix,
            observation,
            signal,
            support,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_observation(mut self, observation: Vec<f64>) -> Result<Self> {
        CimError::check_len("observation", self.m(), observation.len())?;
        self.observation = observation;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = self.matrix.dim();
        CimError::check_len("observation", m, self.observation.len())?;
        CimError::check_len("signal", n, self.signal.len())?;
        CimError::check_len("support", n, self.support.len())?;
        if !self.matrix.iter().all(|v| v.is_finite()) {
            return Err(CimError::NonFinite("observation matrix"));
        }
        if !linalg::all_finite(&self.observation) {
            return Err(CimError::NonFinite("observation"));
        }
        if !linalg::all_finite(&self.signal) {
            return Err(CimError::NonFinite("signal"));
        }
        Ok(())
    }
}

/// Rounds half away from zero, as used for M = round(αN) and k = round(aN).
pub fn round_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}

fn check_unit_interval(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 || v > 1.0 {
        return Err(CimError::param(name, format!("must lie in (0, 1], got {v}")));
    }
    Ok(())
}

/// Generates a random instance.
///
/// A has i.i.d. N(0, 1/M) entries, x has i.i.d. N(0, 1) entries, exactly
/// round(aN) entries of ξ are set by a partial Fisher–Yates shuffle, and the
/// noise is i.i.d. N(0, ν²). Each of the four draws uses its own stream of
/// `seed`, so the output is bit-identical for a given seed.
pub fn gen_instance(params: InstanceParams) -> Result<Instance> {
    let InstanceParams { n, alpha, sparseness, nu, seed } = params;
    if n < 2 {
        return Err(CimError::param("n", format!("must be at least 2, got {n}")));
    }
    check_unit_interval("alpha", alpha)?;
    check_unit_interval("sparseness", sparseness)?;
    if !nu.is_finite() || nu < 0.0 {
        return Err(CimError::param("nu", format!("must be finite and nonnegative, got {nu}")));
    }
    let m = round_count(alpha, n);
    if m == 0 {
        return Err(CimError::param("alpha", "round(alpha * n) is zero"));
    }
    let k = round_count(sparseness, n);

    let scale = (1.0 / m as f64).sqrt();
    let mut rng_a = rng::stream(seed, streams::MATRIX);
    let matrix = Array2::from_shape_fn((m, n), |_| rng::normal(&mut rng_a) * scale);

    let mut rng_x = rng::stream(seed, streams::SIGNAL);
    let signal: Vec<f64> = (0..n).map(|_| rng::normal(&mut rng_x)).collect();

    let mut rng_s = rng::stream(seed, streams::SUPPORT);
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng_s.random_range(i..n);
        order.swap(i, j);
    }
    let mut support = Support::zeros(n);
    for &r in &order[..k] {
        support.set(r, true);
    }

    let mut rng_w = rng::stream(seed, streams::NOISE);
    let masked: Vec<f64> = signal
        .iter()
        .zip(support.iter())
        .map(|(&x, on)| if on { x } else { 0.0 })
        .collect();
    let mut observation = linalg::matvec(&matrix, &masked);
    if nu > 0.0 {
        for yk in observation.iter_mut() {
            *yk += nu * rng::normal(&mut rng_w);
        }
    }

    let inst = Instance { matrix, observation, signal, support, params };
    inst.validate()?;
    Ok(inst)
}

/// Figures of merit of one reconstruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    pub direction_cosine: f64,
    pub hamming_loss: f64,
    /// Set when either support is empty and the direction cosine was
    /// reported as 0.
    pub degenerate_cosine: bool,
}

impl Metrics {
    pub fn evaluate(estimate: &[f64], sigma: &Support, signal: &[f64], xi: &Support) -> Result<Self> {
        let rmse = rmse(estimate, sigma, signal, xi)?;
        let (direction_cosine, degenerate_cosine) = direction_cosine(xi, sigma)?;
        let hamming_loss = hamming_loss(sigma, xi)?;
        Ok(Metrics { rmse, direction_cosine, hamming_loss, degenerate_cosine })
    }
}

/// `sqrt(1/N Σ (R_r σ_r − x_r ξ_r)²)`.
pub fn rmse(estimate: &[f64], sigma: &Support, signal: &[f64], xi: &Support) -> Result<f64> {
    let n = estimate.len();
    CimError::check_len("rmse: sigma", n, sigma.len())?;
    CimError::check_len("rmse: signal", n, signal.len())?;
    CimError::check_len("rmse: xi", n, xi.len())?;
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = (0..n)
        .map(|r| {
            let d = estimate[r] * sigma.value(r) - signal[r] * xi.value(r);
            d * d
        })
        .sum();
    Ok((sum / n as f64).sqrt())
}

/// Normalised support overlap `Σ ξσ / sqrt(Σξ Σσ)`.
///
/// Returns `(0.0, true)` when either support is empty.
pub fn direction_cosine(xi: &Support, sigma: &Support) -> Result<(f64, bool)> {
    CimError::check_len("direction_cosine", xi.len(), sigma.len())?;
    let overlap = xi.iter().zip(sigma.iter()).filter(|&(a, b)| a && b).count();
    let (kx, ks) = (xi.count(), sigma.count());
    if kx == 0 || ks == 0 {
        return Ok((0.0, true));
    }
    Ok((overlap as f64 / ((kx * ks) as f64).sqrt(), false))
}

/// Fraction of positions where the supports disagree.
pub fn hamming_loss(sigma: &Support, xi: &Support) -> Result<f64> {
    CimError::check_len("hamming_loss", xi.len(), sigma.len())?;
    if xi.is_empty() {
        return Ok(0.0);
    }
    let diff = xi.iter().zip(sigma.iter()).filter(|(a, b)| a != b).count();
    Ok(diff as f64 / xi.len() as f64)
}

const MAGIC: &[u8; 8] = b"CIMCSINS";
const VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

/// Serialises to the binary container: magic, version, dimensions and
/// parameters, then A (row-major), y, x, ξ as little-endian f64, then a
/// SHA-256 of everything before it.
pub fn to_bytes(inst: &Instance) -> Vec<u8> {
    let (m, n) = inst.matrix.dim();
    let mut buf = Vec::with_capacity(64 + 8 * (m * n + m + 2 * n) + CHECKSUM_LEN);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    for v in [n as u64, m as u64, inst.params.n as u64, inst.params.seed] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in [inst.params.alpha, inst.params.sparseness, inst.params.nu] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in inst
        .matrix
        .iter()
        .chain(&inst.observation)
        .chain(&inst.signal)
    {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for b in inst.support.iter() {
        buf.extend_from_slice(&(if b { 1.0f64 } else { 0.0 }).to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| CimError::Format("instance file truncated".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|_| self.f64()).collect()
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Instance> {
    if bytes.len() < MAGIC.len() + 4 + CHECKSUM_LEN {
        return Err(CimError::Format("instance file truncated".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(CimError::Format("instance checksum mismatch".into()));
    }
    let mut rd = Reader { bytes: body, pos: 0 };
    if &rd.take::<8>()? != MAGIC {
        return Err(CimError::Format("not an instance file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(rd.take()?);
    if version != VERSION {
        return Err(CimError::Format(format!("unsupported instance version {version}")));
    }
    let n = rd.u64()? as usize;
    let m = rd.u64()? as usize;
    let pn = rd.u64()? as usize;
    let seed = rd.u64()?;
    let alpha = rd.f64()?;
    let sparseness = rd.f64()?;
    let nu = rd.f64()?;
    let expected = rd.pos + 8 * (m * n + m + 2 * n);
    if body.len() != expected {
        return Err(CimError::Format(format!(
            "instance payload is {} bytes, header implies {expected}",
            body.len()
        )));
    }
    let matrix = Array2::from_shape_vec((m, n), rd.f64s(m * n)?)
        .map_err(|e| CimError::Format(e.to_string()))?;
    let observation = rd.f64s(m)?;
    let signal = rd.f64s(n)?;
    let support = Support::from_f64(&rd.f64s(n)?);
    let inst = Instance {
        matrix,
        observation,
        signal,
        support,
        params: InstanceParams { n: pn, alpha, sparseness, nu, seed },
    };
    inst.validate()?;
    Ok(inst)
}

pub fn save(inst: &Instance, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(inst))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Instance> {
    from_bytes(&fs::read(path)?)
}

/// Writes `signal.csv` (r, x, xi), `observation.csv` (k, y) and
/// `matrix.csv` (one row of A per line) into `dir`.
pub fn export_csv(inst: &Instance, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut sig = io::BufWriter::new(fs::File::create(dir.join("signal.csv"))?);
    writeln!(sig, "r,x,xi")?;
    for (r, (&x, on)) in inst.signal.iter().zip(inst.support.iter()).enumerate() {
        writeln!(sig, "{r},{x:e},{}", on as u8)?;
    }
    sig.flush()?;
    let mut obs = io::BufWriter::new(fs::File::create(dir.join("observation.csv"))?);
    writeln!(obs, "k,y")?;
    for (k, y) in inst.observation.iter().enumerate() {
        writeln!(obs, "{k},{y:e}")?;
    }
    obs.flush()?;
    let mut mat = io::BufWriter::new(fs::File::create(dir.join("matrix.csv"))?);
    for row in inst.matrix.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(mat, "{}", line.join(","))?;
    }
    mat.flush()?;
    Ok(())
}

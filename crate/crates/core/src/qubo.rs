//! The l0-regularised compressed-sensing Hamiltonian as a QUBO.
//!
//! `H(R, σ) = Σ_{r<r'} G_rr' R_r R_r' σ_r σ_r' − Σ_r z_r R_r σ_r + λ Σ_r σ_r`
//! with `G = AᵀA` and `z = Aᵀy`. The coupling matrix is stored as
//! `J = −G` with a zeroed diagonal; the diagonal of `G` is kept separately
//! as the column norms used by the signal solver.

use std::sync::Arc;

use ndarray::Array2;

use crate::linalg;
use crate::support::heaviside;
use crate::{CimError, Result, Support};

/// Matrix-free product with the full Gram-like matrix (diagonal included).
pub trait GramOperator: Send + Sync + std::fmt::Debug {
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

#[derive(Clone, Debug)]
pub struct QuboProblem {
    /// `J_rr' = −Σ_k A_r^k A_r'^k` for r ≠ r', zero on the diagonal.
    pub coupling: Array2<f64>,
    /// Matched filter `z_r = Σ_k A_r^k y^k`.
    pub zeeman: Vec<f64>,
    /// `Σ_k (A_r^k)²`.
    pub col_norms: Vec<f64>,
    lambda: f64,
    eta: f64,
    operator: Option<Arc<dyn GramOperator>>,
}

/// Energy split into its quadratic/linear part and the penalty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    /// `data_term + reg_term`.
    pub energy: f64,
    /// `Σ_{r<r'} G R R σ σ − Σ z R σ`.
    pub data_term: f64,
    /// `λ Σ σ`.
    pub reg_term: f64,
    /// `½ Σ_r G_rr R_r² σ_r`, the diagonal self-energy that the pair sum
    /// omits. Not part of `energy`.
    pub self_term: f64,
}

impl EnergyReport {
    /// `½‖y − A(R∘σ)‖² − ½‖y‖² + λ‖σ‖₀`, the objective the signal solver
    /// minimises at fixed σ.
    pub fn objective(&self) -> f64 {
        self.energy + self.self_term
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(CimError::param("eta", format!("must be finite and nonnegative, got {eta}")));
    }
    Ok(())
}

/// Builds the QUBO for observation matrix `a` (M×N), observation `y` and
/// threshold `eta`, with `λ = η²/2`.
pub fn build_qubo(a: &Array2<f64>, y: &[f64], eta: f64) -> Result<QuboProblem> {
    CimError::check_len("build_qubo: observation", a.nrows(), y.len())?;
    check_eta(eta)?;
    if !a.iter().all(|v| v.is_finite()) {
        return Err(CimError::NonFinite("observation matrix"));
    }
    if !linalg::all_finite(y) {
        return Err(CimError::NonFinite("observation"));
    }
    let gram = linalg::gram(a);
    let zeeman = linalg::matvec_t(a, y);
    QuboProblem::from_gram(gram, zeeman, eta)
}

impl QuboProblem {
    /// Builds the problem from a symmetric Gram-like matrix whose diagonal
    /// holds the column norms.
    pub fn from_gram(mut gram: Array2<f64>, zeeman: Vec<f64>, eta: f64) -> Result<Self> {
        let n = zeeman.len();
        CimError::check_len("from_gram: rows", n, gram.nrows())?;
        CimError::check_len("from_gram: cols", n, gram.ncols())?;
        check_eta(eta)?;
        if !gram.iter().all(|v| v.is_finite()) || !linalg::all_finite(&zeeman) {
            return Err(CimError::NonFinite("QUBO coefficients"));
        }
        let col_norms: Vec<f64> = (0..n).map(|r| gram[[r, r]]).collect();
        gram.mapv_inplace(|v| -v);
        for r in 0..n {
            gram[[r, r]] = 0.0;
        }
        Ok(QuboProblem {
            coupling: gram,
            zeeman,
            col_norms,
            lambda: eta * eta / 2.0,
            eta,
            operator: None,
        })
    }

    /// Routes every product with the couplings through `op`, which must
    /// represent the same matrix; checked on two probe vectors.
    pub fn with_operator(mut self, op: Arc<dyn GramOperator>) -> Result<Self> {
        let n = self.n();
        let mut fast = vec![0.0; n];
        let mut dense = vec![0.0; n];
        for probe in 0..2 {
            let v: Vec<f64> = (0..n).map(|r| ((r * (probe + 2) + 1) as f64).sin()).collect();
            op.apply(&v, &mut fast);
            self.gram_apply_into(&v, &mut dense);
            let scale = 1.0 + linalg::max_abs(&dense);
            let gap = fast.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if !(gap <= 1e-8 * scale) {
                return Err(CimError::param("operator", format!("disagrees with the dense couplings by {gap:e}")));
            }
        }
        self.operator = Some(op);
        Ok(self)
    }

    pub fn has_operator(&self) -> bool {
        self.operator.is_some()
    }

    /// Drops a matrix-free operator so products use the dense couplings.
    pub fn without_operator(mut self) -> Self {
        self.operator = None;
        self
    }

    pub fn n(&self) -> usize {
        self.zeeman.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Changes the threshold in place, keeping `λ = η²/2`.
    pub fn set_eta(&mut self, eta: f64) -> Result<()> {
        check_eta(eta)?;
        self.eta = eta;
        self.lambda = eta * eta / 2.0;
        Ok(())
    }

    /// Overrides λ directly; η is updated to `sqrt(2λ)`.
    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(CimError::param("lambda", format!("must be finite and nonnegative, got {lambda}")));
        }
        self.lambda = lambda;
        self.eta = (2.0 * lambda).sqrt();
        Ok(())
    }

    /// `out = J · v`.
    #[inline]
    pub fn couple_into(&self, v: &[f64], out: &mut [f64]) {
        match &self.operator {
            Some(op) => {
                op.apply(v, out);
                for ((o, &c), &vi) in out.iter_mut().zip(&self.col_norms).zip(v) {
                    *o = c * vi - *o;
                }
            }
            None => linalg::matvec_into(self.coupling.view(), v, out),
        }
    }

    /// `(G v)_r = col_norms_r v_r − (J v)_r`.
    pub fn gram_apply_into(&self, v: &[f64], out: &mut [f64]) {
        if let Some(op) = &self.operator {
            op.apply(v, out);
            return;
        }
        linalg::matvec_into(self.coupling.view(), v, out);
        for ((o, &c), &vi) in out.iter_mut().zip(&self.col_norms).zip(v) {
            *o = c * vi - *o;
        }
    }

    fn check_n(&self, context: &'static str, len: usize) -> Result<()> {
        CimError::check_len(context, self.n(), len)
    }

    pub fn energy(&self, r: &[f64], sigma: &Support) -> Result<EnergyReport> {
        energy(self, r, sigma)
    }

    /// Energy change from flipping `σ_r`, given the coupling field
    /// `field = J·(R∘σ)` at the current configuration.
    #[inline]
    pub fn flip_delta(&self, r: usize, currently_on: bool, signal_r: f64, field_r: f64) -> f64 {
        let gain = -signal_r * field_r - self.zeeman[r] * signal_r + self.lambda;
        if currently_on {
            -gain
        } else {
            gain
        }
    }
}

/// Evaluates the Hamiltonian at `(R, σ)`.
pub fn energy(problem: &QuboProblem, r: &[f64], sigma: &Support) -> Result<EnergyReport> {
    problem.check_n("energy: signal", r.len())?;
    problem.check_n("energy: sigma", sigma.len())?;
    let u: Vec<f64> = r.iter().enumerate().map(|(i, &v)| v * sigma.value(i)).collect();
    let mut ju = vec![0.0; u.len()];
    problem.couple_into(&u, &mut ju);
    let pair = -0.5 * linalg::dot(&u, &ju);
    let linear = linalg::dot(&problem.zeeman, &u);
    let data_term = pair - linear;
    let reg_term = problem.lambda * sigma.count() as f64;
    let self_term = 0.5
        * u.iter()
            .zip(&problem.col_norms)
            .map(|(ui, c)| c * ui * ui)
            .sum::<f64>();
    Ok(EnergyReport {
        energy: data_term + reg_term,
        data_term,
        reg_term,
        self_term,
    })
}

/// Local field of the open-loop machine:
/// `h_r = −Σ_{r'≠r} G_rr' R_r' H(c_r') + z_r`.
pub fn local_field_ol(problem: &QuboProblem, r: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    problem.check_n("local_field_ol: signal", r.len())?;
    problem.check_n("local_field_ol: amplitude", c.len())?;
    let mut scratch = vec![0.0; r.len()];
    let mut h = vec![0.0; r.len()];
    local_field_ol_into(problem, r, c, &mut scratch, &mut h);
    Ok(h)
}

pub(crate) fn local_field_ol_into(
    problem: &QuboProblem,
    r: &[f64],
    c: &[f64],
    scratch: &mut [f64],
    h: &mut [f64],
) {
    for ((s, &ri), &ci) in scratch.iter_mut().zip(r).zip(c) {
        *s = ri * heaviside(ci);
    }
    problem.couple_into(scratch, h);
    for (hi, &zi) in h.iter_mut().zip(&problem.zeeman) {
        *hi += zi;
    }
}

/// Local field of the amplitude-controlled machine:
/// `h_r = −Σ_{r'≠r} G_rr' R_r' ½(μ̃_r' + √(τ/g²)) + √(τ/g²) z_r`.
pub fn local_field_cac(
    problem: &QuboProblem,
    r: &[f64],
    mu_tilde: &[f64],
    tau: f64,
    g2: f64,
) -> Result<Vec<f64>> {
    problem.check_n("local_field_cac: signal", r.len())?;
    problem.check_n("local_field_cac: amplitude", mu_tilde.len())?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(CimError::param("tau", format!("must be positive, got {tau}")));
    }
    if !(g2 > 0.0) || !g2.is_finite() {
        return Err(CimError::param("g2", format!("must be positive, got {g2}")));
    }
    let mut scratch = vec![0.0; r.len()];
    let mut h = vec![0.0; r.len()];
    local_field_cac_into(problem, r, mu_tilde, (tau / g2).sqrt(), &mut scratch, &mut h);
    Ok(h)
}

pub(crate) fn local_field_cac_into(
    problem: &QuboProblem,
    r: &[f64],
    mu_tilde: &[f64],
    target: f64,
    scratch: &mut [f64],
    h: &mut [f64],
) {
    for ((s, &ri), &mi) in scratch.iter_mut().zip(r).zip(mu_tilde) {
        *s = ri * 0.5 * (mi + target);
    }
    problem.couple_into(scratch, h);
    for (hi, &zi) in h.iter_mut().zip(&problem.zeeman) {
        *hi += target * zi;
    }
}

pub const BRUTE_FORCE_LIMIT: usize = 24;

/// `true` when `a` precedes `b` lexicographically (entry 0 most
/// significant, off before on).
fn lex_less(a: u64, b: u64) -> bool {
    let diff = a ^ b;
    diff != 0 && (a >> diff.trailing_zeros()) & 1 == 0
}

/// Exhaustive minimum of the energy over σ at fixed `R`.
///
/// Walks all 2^N configurations in Gray-code order with O(N) incremental
/// updates. Ties (within 1e-12 relative) go to the lexicographically
/// smallest σ. The returned energy is re-evaluated from scratch.
pub fn brute_force_ground_state(problem: &QuboProblem, r: &[f64]) -> Result<(Support, f64)> {
    let n = problem.n();
    problem.check_n("brute_force_ground_state: signal", r.len())?;
    if n > BRUTE_FORCE_LIMIT {
        return Err(CimError::TooLarge(n));
    }
    let mut field = vec![0.0; n];
    let mut code: u64 = 0;
    let mut e = 0.0;
    let mut best_code = 0u64;
    let mut best_e: f64 = 0.0;
    let total: u64 = 1 << n;
    for step in 1..total {
        let bit = step.trailing_zeros() as usize;
        let on = (code >> bit) & 1 == 1;
        e += problem.flip_delta(bit, on, r[bit], field[bit]);
        let du = if on { -r[bit] } else { r[bit] };
        code ^= 1 << bit;
        if du != 0.0 {
            let col = problem.coupling.column(bit);
            for (f, &j) in field.iter_mut().zip(col.iter()) {
                *f += j * du;
            }
        }
        let tol = 1e-12 * (1.0 + best_e.abs());
        if e < best_e - tol || ((e - best_e).abs() <= tol && lex_less(code, best_code)) {
            best_e = e;
            best_code = code;
        }
    }
    let sigma = Support::from_code(best_code, n);
    let exact = energy(problem, r, &sigma)?.energy;
    Ok((sigma, exact))
}

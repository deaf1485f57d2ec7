//! Generalized Arnoldi-Tikhonov for the linear problem
//! min ||A x - b||^2 + alpha ||x||^2 with automatic choice of alpha.
//!
//! Per iteration the Krylov basis grows by one Arnoldi vector, the problem is
//! solved in the projected space for alpha = 0 and for the current alpha
//! (small dense Tikhonov systems on the Hessenberg matrix), and alpha is
//! updated by a secant step toward the discrepancy target
//!
//!   alpha_i = | (eta_eps - D_i(0)) / (D_i(alpha_{i-1}) - D_i(0)) | alpha_{i-1}.
//!
//! The basis does not depend on alpha, so it is reused across updates; at
//! alpha = 0 the projected problem is exactly the GMRES least-squares system.
//! The loop stops once D_i(alpha_{i-1}) <= eta_eps. Stopping at first
//! satisfaction is faithful to the method and can underestimate alpha
//! slightly relative to the exact discrepancy root.

use num_complex::Complex64;

use crate::arnoldi::ArnoldiDecomposition;
use crate::defaults;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::sparse::ComplexSparseMatrix;

/// Krylov state of a GAT run: basis, Hessenberg matrix, current alpha and
/// the per-iteration history.
pub struct GatState {
    arnoldi: ArnoldiDecomposition,
    pub alpha: f64,
    pub eta_eps: f64,
    pub history: Vec<GatHistoryEntry>,
    /// Number of Arnoldi extensions performed (one per outer iteration until
    /// a breakdown freezes the space).
    pub extensions: usize,
}

/// One outer iteration: the alpha used and both projected discrepancies.
#[derive(Clone, Copy, Debug)]
pub struct GatHistoryEntry {
    pub iteration: usize,
    pub alpha: f64,
    pub d_zero: f64,
    pub d_alpha: f64,
}

/// Why a GAT run returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GatTermination {
    /// D_i(alpha) dropped to the discrepancy target.
    DiscrepancySatisfied,
    /// Iteration budget exhausted (also the normal exit when the Krylov
    /// space is maximal and alpha keeps converging from above).
    MaxIter,
    /// Secant update stalled in an invariant subspace.
    Stalled,
}

/// Result of [`gat_run`].
pub struct GatOutcome {
    pub x: Vec<Complex64>,
    pub alpha: f64,
    pub history: Vec<GatHistoryEntry>,
    pub termination: GatTermination,
    pub state: GatState,
}

impl GatState {
    pub fn new(b: &[Complex64], alpha0: f64, eta_eps: f64) -> Result<Self> {
        if alpha0 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "initial alpha must be positive, got {alpha0}"
            )));
        }
        if eta_eps <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "discrepancy target must be positive, got {eta_eps}"
            )));
        }
        Ok(GatState {
            arnoldi: ArnoldiDecomposition::new(b)?,
            alpha: alpha0,
            eta_eps,
            history: Vec::new(),
            extensions: 0,
        })
    }

    pub fn arnoldi(&self) -> &ArnoldiDecomposition {
        &self.arnoldi
    }

    /// Grow the Krylov space by one vector; false once the space is maximal.
    pub fn extend(&mut self, a: &ComplexSparseMatrix) -> Result<bool> {
        let grew = self.arnoldi.extend(a)?;
        if grew {
            self.extensions += 1;
        }
        Ok(grew)
    }

    /// Solve the projected Tikhonov problem
    /// min ||Hbar y - beta e1||^2 + alpha ||y||^2 in the current Krylov space
    /// and return the lifted solution with its exact discrepancy
    /// ||A x - b||^2 (exact by the Arnoldi relation).
    pub fn projected_tikhonov_solve(&self, alpha: f64) -> Result<(Vec<Complex64>, f64)> {
        if self.arnoldi.steps() == 0 {
            return Err(Error::InvalidConfig(
                "projected solve requires at least one Arnoldi step".into(),
            ));
        }
        let hbar = self.arnoldi.hessenberg_dense();
        let (rows, cols) = (hbar.nrows(), hbar.ncols());
        let beta = self.arnoldi.start_norm();

        // Normal equations of the stacked system [Hbar; sqrt(alpha) I].
        let mut gram = hbar.adjoint() * &hbar;
        for i in 0..cols {
            gram[(i, i)] += Complex64::new(alpha, 0.0);
        }
        let mut rhs = nalgebra::DVector::from_element(cols, Complex64::new(0.0, 0.0));
        for i in 0..cols {
            rhs[i] = hbar[(0, i)].conj() * Complex64::new(beta, 0.0);
        }
        let y = gram
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularMatrix("projected Tikhonov system"))?;

        let mut discrepancy = 0.0;
        for i in 0..rows {
            let mut acc = if i == 0 {
                Complex64::new(-beta, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for j in 0..cols {
                acc += hbar[(i, j)] * y[j];
            }
            discrepancy += acc.norm_sqr();
        }
        let x = self.arnoldi.lift(y.as_slice());
        Ok((x, discrepancy))
    }
}

/// The secant update for alpha (absolute value keeps it positive even when
/// both discrepancies still sit above the target). Returns the new alpha and
/// whether the update stalled because the two discrepancies coincide.
pub fn gat_alpha_update(eta_eps: f64, d_zero: f64, d_alpha: f64, alpha_prev: f64) -> (f64, bool) {
    let denom = d_alpha - d_zero;
    let scale = d_alpha.abs().max(d_zero.abs()).max(1.0);
    if denom.abs() < defaults::SECANT_STALL_TOL * scale {
        return (alpha_prev, true);
    }
    (((eta_eps - d_zero) / denom).abs() * alpha_prev, false)
}

/// Run GAT on A x ~ b with discrepancy target `eta_eps`, starting from
/// `alpha0`. Per iteration: extend the basis once, evaluate D_i(0) and
/// D_i(alpha_{i-1}), stop if the latter meets the target, else update alpha.
/// After an Arnoldi breakdown the alpha iteration continues in the maximal
/// Krylov space.
pub fn gat_run(
    a: &ComplexSparseMatrix,
    b: &[Complex64],
    eta_eps: f64,
    alpha0: f64,
    max_iter: usize,
) -> Result<GatOutcome> {
    let mut state = GatState::new(b, alpha0, eta_eps)?;
    let mut termination = GatTermination::MaxIter;
    for iteration in 1..=max_iter {
        state.extend(a)?;
        let alpha_prev = state.alpha;
        let (_, d_zero) = state.projected_tikhonov_solve(0.0)?;
        let (x_alpha, d_alpha) = state.projected_tikhonov_solve(alpha_prev)?;
        state.history.push(GatHistoryEntry {
            iteration,
            alpha: alpha_prev,
            d_zero,
            d_alpha,
        });
        if d_alpha <= eta_eps {
            return Ok(GatOutcome {
                x: x_alpha,
                alpha: alpha_prev,
                history: state.history.clone(),
                termination: GatTermination::DiscrepancySatisfied,
                state,
            });
        }
        let (alpha_new, stalled) = gat_alpha_update(eta_eps, d_zero, d_alpha, alpha_prev);
        if stalled && state.arnoldi.broke_down() {
            termination = GatTermination::Stalled;
            break;
        }
        state.alpha = alpha_new;
    }
    let (x, _) = state.projected_tikhonov_solve(state.alpha)?;
    Ok(GatOutcome {
        x,
        alpha: state.alpha,
        history: state.history.clone(),
        termination,
        state,
    })
}

/// 1D Gaussian deblurring test problem: A is a row-normalized Gaussian
/// convolution matrix, the true signal is a pair of smooth bumps, and the
/// data get complex Gaussian noise at the requested level. Returns
/// (A, noisy data, true signal, exact eta_eps = ||noise||^2).
pub fn gaussian_blur_problem(
    n: usize,
    kernel_width: f64,
    noise_level: f64,
    seed: u64,
) -> (ComplexSparseMatrix, Vec<Complex64>, Vec<f64>, f64) {
    let mut triplets = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut row: Vec<f64> = (0..n)
            .map(|j| {
                let d = i as f64 - j as f64;
                (-d * d / (2.0 * kernel_width * kernel_width)).exp()
            })
            .collect();
        let sum: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= sum;
        }
        for (j, v) in row.into_iter().enumerate() {
            if v > 1e-300 {
                triplets.push((i, j, Complex64::new(v, 0.0)));
            }
        }
    }
    let a = ComplexSparseMatrix::from_triplets(n, n, triplets).expect("valid triplets");

    let x_true: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let b1 = (-((t - 0.35) / 0.10_f64).powi(2) / 2.0).exp();
            let b2 = 0.6 * (-((t - 0.72) / 0.05_f64).powi(2) / 2.0).exp();
            b1 + b2
        })
        .collect();
    let x_complex: Vec<Complex64> = x_true.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let b_exact = a.spmv(&x_complex).expect("dimensions match");

    let signal: f64 = b_exact.iter().map(|v| v.norm_sqr()).sum();
    let sigma = noise_level.sqrt() * signal.sqrt() / (2.0 * n as f64).sqrt();
    let mut rng = SplitMix64::new(seed);
    let mut b = Vec::with_capacity(n);
    let mut eta_eps = 0.0;
    for v in &b_exact {
        let e = Complex64::new(rng.next_standard_normal(), rng.next_standard_normal());
        b.push(v + sigma * e);
        eta_eps += sigma * sigma * e.norm_sqr();
    }
    (a, b, x_true, eta_eps)
}

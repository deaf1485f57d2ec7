//! Linear solvers: restarted GMRES and BiCGStab for the complex non-Hermitian
//! Helmholtz systems, conjugate gradients for the real Newton systems, and a
//! dense LU fallback used by the projected Tikhonov solves and as a test
//! oracle.
//!
//! The ECS-rotated Helmholtz operator is complex symmetric but not Hermitian,
//! which rules out plain CG; GMRES is the default, BiCGStab the cheaper
//! alternative at large restart-unfriendly sizes. No preconditioning anywhere.

use num_complex::Complex64;

use crate::defaults;
use crate::error::{Error, Result};
use crate::sparse::ComplexSparseMatrix;
use crate::vec_ops::{caxpy, cdot, cnorm, cscale, rdot, rnorm};

/// Outcome summary attached to every iterative (and dense) solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual ||Ax - b|| / ||b|| at exit (absolute when b = 0).
    pub final_residual_norm: f64,
    pub converged: bool,
    /// Which algorithm produced the solution.
    pub method: &'static str,
}

/// Krylov method used for the non-Hermitian systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrylovKind {
    Gmres,
    BicgStab,
}

impl KrylovKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gmres" => Ok(KrylovKind::Gmres),
            "bicgstab" => Ok(KrylovKind::BicgStab),
            other => Err(Error::InvalidConfig(format!(
                "unknown solver kind '{other}' (expected gmres or bicgstab)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KrylovKind::Gmres => "gmres",
            KrylovKind::BicgStab => "bicgstab",
        }
    }
}

/// Parameters for `solve_nonhermitian`.
#[derive(Clone, Copy, Debug)]
pub struct KrylovConfig {
    pub kind: KrylovKind,
    /// Relative residual target ||Ax - b|| / ||b||.
    pub tol: f64,
    pub max_iter: usize,
    /// Restart length (GMRES only).
    pub restart: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig {
            kind: KrylovKind::Gmres,
            tol: defaults::SOLVER_TOL,
            max_iter: defaults::SOLVER_MAX_ITER,
            restart: defaults::GMRES_RESTART,
        }
    }
}

/// Solve A x = b for a square complex non-Hermitian system. Returns the best
/// iterate and a report; `converged = false` means the caller decides whether
/// to treat the result as a failure.
///
/// `x0` supplies a warm start; convergence is still measured against the
/// right-hand side norm, so a warm start changes the iteration count only.
pub fn solve_nonhermitian(
    a: &ComplexSparseMatrix,
    b: &[Complex64],
    x0: Option<&[Complex64]>,
    config: &KrylovConfig,
) -> Result<(Vec<Complex64>, SolveReport)> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "solve_nonhermitian matrix",
            expected: a.n_rows(),
            found: a.n_cols(),
        });
    }
    if b.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "solve_nonhermitian rhs",
            expected: a.n_rows(),
            found: b.len(),
        });
    }
    match config.kind {
        KrylovKind::Gmres => Ok(gmres(a, b, x0, config)),
        KrylovKind::BicgStab => Ok(bicgstab(a, b, x0, config)),
    }
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
fn gmres(
    a: &ComplexSparseMatrix,
    b: &[Complex64],
    x0: Option<&[Complex64]>,
    config: &KrylovConfig,
) -> (Vec<Complex64>, SolveReport) {
    let n = b.len();
    let b_norm = cnorm(b);
    if b_norm == 0.0 {
        return (
            vec![Complex64::new(0.0, 0.0); n],
            SolveReport {
                iterations: 0,
                final_residual_norm: 0.0,
                converged: true,
                method: "gmres",
            },
        );
    }
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![Complex64::new(0.0, 0.0); n],
    };
    let restart = config.restart.max(1).min(n);
    let mut total_iters = 0usize;
    let mut residual = vec![Complex64::new(0.0, 0.0); n];

    'outer: loop {
        // r = b - A x
        a.spmv_into(&x, &mut residual);
        for (ri, bi) in residual.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = cnorm(&residual);
        if beta / b_norm <= config.tol || total_iters >= config.max_iter {
            break;
        }

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(restart + 1);
        let mut v0 = residual.clone();
        cscale(1.0 / beta, &mut v0);
        basis.push(v0);

        // Hessenberg columns after Givens elimination, rotation pairs, and
        // the rotating residual vector g.
        let mut h_cols: Vec<Vec<Complex64>> = Vec::with_capacity(restart);
        let mut givens: Vec<(Complex64, Complex64)> = Vec::with_capacity(restart);
        let mut g = vec![Complex64::new(0.0, 0.0); restart + 1];
        g[0] = Complex64::new(beta, 0.0);

        let mut inner = 0usize;
        while inner < restart && total_iters < config.max_iter {
            let mut w = a.spmv(&basis[inner]).expect("dimensions checked");
            let mut h = vec![Complex64::new(0.0, 0.0); inner + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = cdot(v, &w);
                h[i] = hij;
                caxpy(-hij, v, &mut w);
            }
            let w_norm = cnorm(&w);
            h[inner + 1] = Complex64::new(w_norm, 0.0);

            // Apply accumulated rotations to the new column.
            for (i, &(c, s)) in givens.iter().enumerate() {
                let t0 = h[i];
                let t1 = h[i + 1];
                h[i] = c.conj() * t0 + s.conj() * t1;
                h[i + 1] = -s * t0 + c * t1;
            }
            // New rotation eliminating the subdiagonal entry.
            let (c, s) = givens_pair(h[inner], h[inner + 1]);
            let t0 = h[inner];
            let t1 = h[inner + 1];
            h[inner] = c.conj() * t0 + s.conj() * t1;
            h[inner + 1] = -s * t0 + c * t1;
            givens.push((c, s));
            let g0 = g[inner];
            g[inner] = c.conj() * g0;
            g[inner + 1] = -s * g0;

            h_cols.push(h);
            inner += 1;
            total_iters += 1;

            let est_residual = g[inner].norm();
            let happy_breakdown = w_norm <= defaults::ARNOLDI_BREAKDOWN_TOL * b_norm;
            if !happy_breakdown {
                cscale(1.0 / w_norm, &mut w);
                basis.push(w);
            }
            if est_residual / b_norm <= config.tol
                || happy_breakdown
                || total_iters >= config.max_iter
            {
                update_gmres_solution(&mut x, &basis, &h_cols, &g, inner);
                if happy_breakdown {
                    break 'outer;
                }
                continue 'outer;
            }
        }
        update_gmres_solution(&mut x, &basis, &h_cols, &g, inner);
    }

    a.spmv_into(&x, &mut residual);
    for (ri, bi) in residual.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let rel = cnorm(&residual) / b_norm;
    let report = SolveReport {
        iterations: total_iters,
        final_residual_norm: rel,
        converged: rel <= config.tol,
        method: "gmres",
    };
    (x, report)
}

/// Back-substitute the triangularized least-squares system and accumulate
/// the correction into x.
fn update_gmres_solution(
    x: &mut [Complex64],
    basis: &[Vec<Complex64>],
    h_cols: &[Vec<Complex64>],
    g: &[Complex64],
    m: usize,
) {
    if m == 0 {
        return;
    }
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for j in (i + 1)..m {
            acc -= h_cols[j][i] * y[j];
        }
        y[i] = acc / h_cols[i][i];
    }
    for (j, yj) in y.iter().enumerate() {
        caxpy(*yj, &basis[j], x);
    }
}

/// c, s such that the rotation [c* s*; -s c] zeroes the second component.
fn givens_pair(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let scale = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if scale == 0.0 {
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        (a / scale, b / scale)
    }
}

/// BiCGStab with the usual rho/omega breakdown guards.
fn bicgstab(
    a: &ComplexSparseMatrix,
    b: &[Complex64],
    x0: Option<&[Complex64]>,
    config: &KrylovConfig,
) -> (Vec<Complex64>, SolveReport) {
    let n = b.len();
    let b_norm = cnorm(b);
    if b_norm == 0.0 {
        return (
            vec![Complex64::new(0.0, 0.0); n],
            SolveReport {
                iterations: 0,
                final_residual_norm: 0.0,
                converged: true,
                method: "bicgstab",
            },
        );
    }
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![Complex64::new(0.0, 0.0); n],
    };
    let mut r = {
        let ax = a.spmv(&x).expect("dimensions checked");
        let mut r = b.to_vec();
        for (ri, axi) in r.iter_mut().zip(&ax) {
            *ri -= axi;
        }
        r
    };
    let r_hat = r.clone();
    let mut rho = Complex64::new(1.0, 0.0);
    let mut alpha = Complex64::new(1.0, 0.0);
    let mut omega = Complex64::new(1.0, 0.0);
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    let mut iters = 0usize;
    let tiny = 1e-290;

    while iters < config.max_iter {
        let rho_new = cdot(&r_hat, &r);
        if rho_new.norm() < tiny {
            break; // breakdown: restart would be needed; return best iterate
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = a.spmv(&p).expect("dimensions checked");
        let denom = cdot(&r_hat, &v);
        if denom.norm() < tiny {
            break;
        }
        alpha = rho / denom;
        let mut s = r.clone();
        caxpy(-alpha, &v, &mut s);
        iters += 1;
        if cnorm(&s) / b_norm <= config.tol {
            caxpy(alpha, &p, &mut x);
            break;
        }
        let t = a.spmv(&s).expect("dimensions checked");
        let t_dot_t = cdot(&t, &t);
        if t_dot_t.norm() < tiny {
            caxpy(alpha, &p, &mut x);
            break;
        }
        omega = cdot(&t, &s) / t_dot_t;
        caxpy(alpha, &p, &mut x);
        caxpy(omega, &s, &mut x);
        r = s;
        caxpy(-omega, &t, &mut r);
        if cnorm(&r) / b_norm <= config.tol {
            break;
        }
        if omega.norm() < tiny {
            break;
        }
    }

    let ax = a.spmv(&x).expect("dimensions checked");
    let mut res = b.to_vec();
    for (ri, axi) in res.iter_mut().zip(&ax) {
        *ri -= axi;
    }
    let rel = cnorm(&res) / b_norm;
    let report = SolveReport {
        iterations: iters,
        final_residual_norm: rel,
        converged: rel <= config.tol,
        method: "bicgstab",
    };
    (x, report)
}

/// Outcome of a conjugate-gradient solve on a (nominally) symmetric system.
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub report: SolveReport,
    /// p'Ap <= 0 was observed: the operator is indefinite at the current point.
    pub indefinite: bool,
    /// The caller-supplied floor on the iterate norm fired.
    pub hit_step_floor: bool,
}

/// Conjugate gradients on apply_a(x) = b with x0 = 0.
///
/// `tol_abs` is an absolute threshold on the residual norm (the Newton-CG
/// forcing rule hands in an absolute value). `iterate_floor`, when set, stops
/// the iteration as soon as the accumulated iterate norm drops below it after
/// an update; the current iterate is returned in all early-exit cases.
pub fn cg_real(
    apply_a: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol_abs: f64,
    max_iter: usize,
    iterate_floor: Option<f64>,
) -> CgOutcome {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut rr = rdot(&r, &r);
    let mut iters = 0usize;
    let mut indefinite = false;
    let mut hit_step_floor = false;

    if rr.sqrt() > tol_abs {
        let mut p = r.clone();
        while iters < max_iter {
            let ap = apply_a(&p);
            let pap = rdot(&p, &ap);
            if pap <= 0.0 {
                indefinite = true;
                break;
            }
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iters += 1;
            if let Some(floor) = iterate_floor {
                if rnorm(&x) < floor {
                    hit_step_floor = true;
                    break;
                }
            }
            let rr_new = rdot(&r, &r);
            if rr_new.sqrt() <= tol_abs {
                rr = rr_new;
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
    }

    let final_norm = rr.sqrt();
    CgOutcome {
        x,
        report: SolveReport {
            iterations: iters,
            final_residual_norm: final_norm,
            converged: final_norm <= tol_abs,
            method: "cg",
        },
        indefinite,
        hit_step_floor,
    }
}

/// Direct dense solve via LU with partial pivoting (nalgebra).
pub fn solve_dense(
    a: &nalgebra::DMatrix<Complex64>,
    b: &[Complex64],
) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context: "solve_dense matrix",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "solve_dense rhs",
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let lu = a.clone().lu();
    let rhs = nalgebra::DVector::from_column_slice(b);
    match lu.solve(&rhs) {
        Some(x) => Ok(x.as_slice().to_vec()),
        None => Err(Error::SingularMatrix("solve_dense")),
    }
}

//! Cost functional J(k) = D(k) + alpha R(k), its adjoint-state gradient, and
//! finite-difference Hessian-vector products.
//!
//! D(k) = ||L u(k) - d||^2 sums the per-angle data misfits of the scattered
//! field, R(k) = ||k - k_prior||^2. The gradient needs one forward and one
//! adjoint solve: with H* lambda = L* (L u - d) per angle,
//!
//!   dJ/dk_j = 2 Re< lambda | df/dk_j - dH/dk_j u > + 2 alpha (k_j - k_prior_j)
//!           = -4 k_j sum_angles Re( conj(lambda_j) (u_in_j + u_sc_j) )
//!             + 2 alpha (k_j - k_prior_j),
//!
//! since both dH/dk_j and df/dk_j act only on the diagonal entry at grid
//! point j. Cost accounting follows the convention in [`crate::ledger`]:
//! an objective evaluation books one PDE solve and a gradient books one PDE
//! plus one adjoint solve, independent of cache hits underneath.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ledger::RunLedger;
use crate::scattering::{
    assemble_helmholtz, forward_rhs, inject, restrict, solve_many, ScatteringProblem,
    WaveNumberField,
};
use crate::solvers::{KrylovConfig, KrylovKind};
use crate::sparse::ComplexSparseMatrix;
use crate::vec_ops::{cnorm_sqr, field_hash, rnorm};

/// J, D, R at one field.
#[derive(Clone, Copy, Debug)]
pub struct ObjectiveValue {
    pub j: f64,
    pub d: f64,
    pub r: f64,
}

/// Value and gradient at one field.
#[derive(Clone, Debug)]
pub struct GradientReport {
    pub value: f64,
    pub discrepancy: f64,
    pub regularization: f64,
    pub gradient: Vec<f64>,
}

/// Finite-difference scheme for Hessian-vector products.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdScheme {
    Forward,
    Central,
    Backward,
}

impl FdScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(FdScheme::Forward),
            "central" => Ok(FdScheme::Central),
            "backward" => Ok(FdScheme::Backward),
            other => Err(Error::InvalidConfig(format!(
                "unknown fd scheme '{other}' (expected forward, central or backward)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FdScheme::Forward => "forward",
            FdScheme::Central => "central",
            FdScheme::Backward => "backward",
        }
    }

    /// Gradient evaluations per Hessian-vector product (the base gradient is
    /// assumed cached by the caller).
    pub fn gradients_per_matvec(self) -> u64 {
        match self {
            FdScheme::Central => 2,
            FdScheme::Forward | FdScheme::Backward => 1,
        }
    }
}

/// Anything the Newton-CG optimizer can minimize.
pub trait Objective {
    fn dim(&self) -> usize;
    fn alpha(&self) -> f64;
    fn evaluate(&mut self, k: &[f64]) -> Result<ObjectiveValue>;
    fn gradient(&mut self, k: &[f64]) -> Result<GradientReport>;
    fn ledger(&self) -> &RunLedger;
    fn ledger_mut(&mut self) -> &mut RunLedger;
}

/// Default finite-difference step: scale * (1 + ||k||) / ||v||.
pub fn fd_step(scale: f64, k: &[f64], v: &[f64]) -> f64 {
    scale * (1.0 + rnorm(k)) / rnorm(v)
}

/// Finite-difference Hessian-vector product on any objective.
///
/// The central scheme costs two new gradients; forward/backward reuse the
/// caller's gradient at `k` and cost one. Exact for quadratic objectives.
pub fn hessian_vector_product<O: Objective + ?Sized>(
    obj: &mut O,
    k: &[f64],
    base_gradient: &[f64],
    v: &[f64],
    scheme: FdScheme,
    h_fd: f64,
) -> Result<Vec<f64>> {
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidConfig(
            "hessian_vector_product requires a nonzero direction".into(),
        ));
    }
    if h_fd <= 0.0 {
        return Err(Error::InvalidConfig(
            "hessian_vector_product requires a positive step".into(),
        ));
    }
    let shifted = |sign: f64| -> Vec<f64> {
        k.iter()
            .zip(v)
            .map(|(ki, vi)| ki + sign * h_fd * vi)
            .collect()
    };
    match scheme {
        FdScheme::Central => {
            let g_plus = obj.gradient(&shifted(1.0))?.gradient;
            let g_minus = obj.gradient(&shifted(-1.0))?.gradient;
            Ok(g_plus
                .iter()
                .zip(&g_minus)
                .map(|(p, m)| (p - m) / (2.0 * h_fd))
                .collect())
        }
        FdScheme::Forward => {
            let g_plus = obj.gradient(&shifted(1.0))?.gradient;
            Ok(g_plus
                .iter()
                .zip(base_gradient)
                .map(|(p, b)| (p - b) / h_fd)
                .collect())
        }
        FdScheme::Backward => {
            let g_minus = obj.gradient(&shifted(-1.0))?.gradient;
            Ok(base_gradient
                .iter()
                .zip(&g_minus)
                .map(|(b, m)| (b - m) / h_fd)
                .collect())
        }
    }
}

struct ForwardCache {
    k_hash: u64,
    fields: Vec<Vec<Complex64>>,
    discrepancy: f64,
}

/// The scattering objective: evaluates J, D, R and the adjoint gradient for
/// a fixed regularization parameter.
///
/// Holds per-angle warm-start states for the forward and adjoint solves and
/// a single-entry forward-solution cache keyed by the field's content hash,
/// so a gradient right after an objective evaluation at the same field skips
/// the physical forward solve (the ledger still books it by convention).
pub struct ObjectiveContext {
    problem: Arc<ScatteringProblem>,
    alpha: f64,
    k_prior: Vec<f64>,
    solver: KrylovConfig,
    threads: usize,
    ledger: RunLedger,
    cache: Option<ForwardCache>,
    warm_forward: Option<Vec<Vec<Complex64>>>,
    warm_adjoint: Option<Vec<Vec<Complex64>>>,
}

impl ObjectiveContext {
    pub fn new(
        problem: Arc<ScatteringProblem>,
        alpha: f64,
        k_prior: Vec<f64>,
        solver: KrylovConfig,
        threads: usize,
    ) -> Result<Self> {
        if alpha < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "alpha must be nonnegative, got {alpha}"
            )));
        }
        let n = problem.grid.interior_n * problem.grid.interior_n;
        if k_prior.len() != n {
            return Err(Error::DimensionMismatch {
                context: "k_prior",
                expected: n,
                found: k_prior.len(),
            });
        }
        if problem.observations.len() != problem.observation_count() {
            return Err(Error::InvalidConfig(
                "scattering problem has no observations; generate them first".into(),
            ));
        }
        Ok(ObjectiveContext {
            problem,
            alpha,
            k_prior,
            solver,
            threads: threads.max(1),
            ledger: RunLedger::new(),
            cache: None,
            warm_forward: None,
            warm_adjoint: None,
        })
    }

    pub fn problem(&self) -> &ScatteringProblem {
        &self.problem
    }

    pub fn k_prior(&self) -> &[f64] {
        &self.k_prior
    }

    pub fn angle_count(&self) -> u64 {
        self.problem.angle_count() as u64
    }

    fn field(&self, k: &[f64]) -> Result<WaveNumberField> {
        WaveNumberField::from_values(&self.problem.grid, k.to_vec(), self.problem.k0)
    }

    /// Solve one batch of systems with warm starts, falling back to GMRES for
    /// any right-hand side BiCGStab failed on (warm-started from its best
    /// iterate). Errors only if both fail.
    fn robust_solve(
        &self,
        matrix: &ComplexSparseMatrix,
        rhs: &[Vec<Complex64>],
        warm: Option<&[Vec<Complex64>]>,
        context: &'static str,
    ) -> Result<Vec<Vec<Complex64>>> {
        let results = solve_many(matrix, rhs, warm, &self.solver, self.threads);
        let mut fields = Vec::with_capacity(results.len());
        for (idx, (x, report)) in results.into_iter().enumerate() {
            if report.converged {
                fields.push(x);
                continue;
            }
            if self.solver.kind == KrylovKind::BicgStab {
                let gmres_cfg = KrylovConfig {
                    kind: KrylovKind::Gmres,
                    ..self.solver
                };
                let retried = solve_many(matrix, &rhs[idx..=idx], Some(&[x]), &gmres_cfg, 1);
                let (x2, report2) = retried.into_iter().next().expect("one result");
                if report2.converged {
                    fields.push(x2);
                    continue;
                }
                return Err(Error::SolverFailure {
                    context: format!("{context}, system index {idx} (bicgstab then gmres)"),
                    report: report2,
                });
            }
            return Err(Error::SolverFailure {
                context: format!("{context}, system index {idx}"),
                report,
            });
        }
        Ok(fields)
    }

    /// Make sure the cache holds the forward solution at `k`; returns true if
    /// a physical solve happened.
    fn ensure_forward(&mut self, k: &[f64]) -> Result<bool> {
        let hash = field_hash(k);
        if matches!(&self.cache, Some(c) if c.k_hash == hash) {
            return Ok(false);
        }
        let field = self.field(k)?;
        let matrix = assemble_helmholtz(&self.problem.grid, &field);
        let rhs: Vec<Vec<Complex64>> = self
            .problem
            .incoming_waves()
            .iter()
            .map(|u_in| forward_rhs(&self.problem.grid, &field, u_in))
            .collect();
        let fields =
            self.robust_solve(&matrix, &rhs, self.warm_forward.as_deref(), "forward solve")?;
        let mut discrepancy = 0.0;
        for (angle_idx, u) in fields.iter().enumerate() {
            let mut ring = restrict(&self.problem, u);
            for (r, o) in ring
                .iter_mut()
                .zip(self.problem.observed_for_angle(angle_idx))
            {
                *r -= o;
            }
            discrepancy += cnorm_sqr(&ring);
        }
        self.warm_forward = Some(fields.clone());
        self.cache = Some(ForwardCache {
            k_hash: hash,
            fields,
            discrepancy,
        });
        Ok(true)
    }

    fn regularization(&self, k: &[f64]) -> f64 {
        k.iter()
            .zip(&self.k_prior)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Forward solutions at `k` (from cache when fresh). Does not touch the
    /// ledger; callers account for the work.
    pub fn forward_fields(&mut self, k: &[f64]) -> Result<&[Vec<Complex64>]> {
        self.ensure_forward(k)?;
        Ok(&self.cache.as_ref().expect("cache just filled").fields)
    }

    /// Adjoint solves H* lambda = L* (L u - d) per angle, for the forward
    /// solutions `u` at the field `k`. Books one adjoint solve.
    pub fn solve_adjoint(
        &mut self,
        k: &[f64],
        forward: &[Vec<Complex64>],
    ) -> Result<Vec<Vec<Complex64>>> {
        let lambdas = self.solve_adjoint_inner(k, forward)?;
        self.ledger.adjoint_solves += 1;
        self.ledger.helmholtz_solves += self.angle_count();
        Ok(lambdas)
    }

    fn solve_adjoint_inner(
        &mut self,
        k: &[f64],
        forward: &[Vec<Complex64>],
    ) -> Result<Vec<Vec<Complex64>>> {
        let field = self.field(k)?;
        let mut rhs: Vec<Vec<Complex64>> = Vec::with_capacity(forward.len());
        let mut all_zero = true;
        for (angle_idx, u) in forward.iter().enumerate() {
            let mut ring = restrict(&self.problem, u);
            for (r, o) in ring
                .iter_mut()
                .zip(self.problem.observed_for_angle(angle_idx))
            {
                *r -= o;
            }
            if ring.iter().any(|v| v.norm_sqr() > 0.0) {
                all_zero = false;
            }
            rhs.push(inject(&self.problem, &ring));
        }
        if all_zero {
            // Zero residual forces lambda = 0 for any k; skip the solves.
            let n = self.problem.grid.total_points();
            return Ok(vec![vec![Complex64::new(0.0, 0.0); n]; forward.len()]);
        }
        let matrix = assemble_helmholtz(&self.problem.grid, &field).adjoint();
        let lambdas =
            self.robust_solve(&matrix, &rhs, self.warm_adjoint.as_deref(), "adjoint solve")?;
        self.warm_adjoint = Some(lambdas.clone());
        Ok(lambdas)
    }

    /// Drop warm starts and the forward cache (used when a driver reuses a
    /// context across unrelated fields).
    pub fn clear_caches(&mut self) {
        self.cache = None;
        self.warm_forward = None;
        self.warm_adjoint = None;
    }
}

impl Objective for ObjectiveContext {
    fn dim(&self) -> usize {
        self.k_prior.len()
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }

    /// One forward multi-angle solve; J = D + alpha R.
    fn evaluate(&mut self, k: &[f64]) -> Result<ObjectiveValue> {
        self.ensure_forward(k)?;
        let d = self.cache.as_ref().expect("cache filled").discrepancy;
        let r = self.regularization(k);
        self.ledger.record_objective_evaluation(self.angle_count());
        Ok(ObjectiveValue {
            j: d + self.alpha * r,
            d,
            r,
        })
    }

    /// Adjoint-state gradient: one forward and one adjoint solve.
    fn gradient(&mut self, k: &[f64]) -> Result<GradientReport> {
        self.ensure_forward(k)?;
        let fields = self.cache.as_ref().expect("cache filled").fields.clone();
        let lambdas = self.solve_adjoint_inner(k, &fields)?;
        let d = self.cache.as_ref().expect("cache filled").discrepancy;
        let r = self.regularization(k);

        let grid = &self.problem.grid;
        let interior_n = grid.interior_n;
        let mut gradient = vec![0.0; interior_n * interior_n];
        for (u, (lambda, u_in)) in fields
            .iter()
            .zip(lambdas.iter().zip(self.problem.incoming_waves()))
        {
            for jy in 0..interior_n {
                for jx in 0..interior_n {
                    let full = grid.interior_to_full(jx, jy);
                    let u_tot = u_in[full] + u[full];
                    gradient[jy * interior_n + jx] += (lambda[full].conj() * u_tot).re;
                }
            }
        }
        for (j, g) in gradient.iter_mut().enumerate() {
            *g = -4.0 * k[j] * *g + 2.0 * self.alpha * (k[j] - self.k_prior[j]);
        }

        self.ledger.record_gradient_evaluation(self.angle_count());
        Ok(GradientReport {
            value: d + self.alpha * r,
            discrepancy: d,
            regularization: r,
            gradient,
        })
    }

    fn ledger(&self) -> &RunLedger {
        &self.ledger
    }

    fn ledger_mut(&mut self) -> &mut RunLedger {
        &mut self.ledger
    }
}

/// Pure quadratic objective J(k) = 0.5 (k - m)' diag(a) (k - m) + c, used as
/// a surrogate in optimizer tests: Newton converges in one step and the
/// finite-difference Hessian products are exact.
pub struct QuadraticObjective {
    pub minimizer: Vec<f64>,
    pub curvature: Vec<f64>,
    pub offset: f64,
    ledger: RunLedger,
}

impl QuadraticObjective {
    pub fn new(minimizer: Vec<f64>, curvature: Vec<f64>, offset: f64) -> Self {
        assert_eq!(minimizer.len(), curvature.len());
        QuadraticObjective {
            minimizer,
            curvature,
            offset,
            ledger: RunLedger::new(),
        }
    }

    fn value_at(&self, k: &[f64]) -> f64 {
        0.5 * k
            .iter()
            .zip(&self.minimizer)
            .zip(&self.curvature)
            .map(|((ki, mi), ai)| ai * (ki - mi) * (ki - mi))
            .sum::<f64>()
            + self.offset
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.minimizer.len()
    }

    fn alpha(&self) -> f64 {
        0.0
    }

    fn evaluate(&mut self, k: &[f64]) -> Result<ObjectiveValue> {
        let j = self.value_at(k);
        self.ledger.record_objective_evaluation(1);
        Ok(ObjectiveValue { j, d: j, r: 0.0 })
    }

    fn gradient(&mut self, k: &[f64]) -> Result<GradientReport> {
        let gradient: Vec<f64> = k
            .iter()
            .zip(&self.minimizer)
            .zip(&self.curvature)
            .map(|((ki, mi), ai)| ai * (ki - mi))
            .collect();
        let j = self.value_at(k);
        self.ledger.record_gradient_evaluation(1);
        Ok(GradientReport {
            value: j,
            discrepancy: j,
            regularization: 0.0,
            gradient,
        })
    }

    fn ledger(&self) -> &RunLedger {
        &self.ledger
    }

    fn ledger_mut(&mut self) -> &mut RunLedger {
        &mut self.ledger
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};
    use crate::rng::SplitMix64;
    use crate::scattering::{generate_observations, make_phantom};
    use crate::vec_ops::{cnorm, rdot};

    fn test_problem(sigma: f64) -> (Arc<ScatteringProblem>, WaveNumberField) {
        let grid = build_grid(&GridConfig {
            interior_n: 10,
            buffer_n: 2,
            pre_tail_n: 2,
            tail_n: 4,
            domain_half_width: 5.0,
            tail_angle: std::f64::consts::FRAC_PI_6,
        })
        .unwrap();
        let mut problem = ScatteringProblem::new(grid, 3, 1.0, 1.0).unwrap();
        let phantom = make_phantom(&problem.grid, 1.0, 2.5).unwrap();
        let config = tight_solver();
        generate_observations(&mut problem, &phantom, sigma, 11, &config, 1).unwrap();
        (Arc::new(problem), phantom)
    }

    fn tight_solver() -> KrylovConfig {
        KrylovConfig {
            tol: 1e-12,
            ..KrylovConfig::default()
        }
    }

    fn context(problem: &Arc<ScatteringProblem>, alpha: f64) -> ObjectiveContext {
        let prior = WaveNumberField::constant(&problem.grid, problem.k0).values;
        ObjectiveContext::new(problem.clone(), alpha, prior, tight_solver(), 1).unwrap()
    }

    #[test]
    fn exact_field_on_noiseless_data_has_zero_discrepancy() {
        let (problem, phantom) = test_problem(0.0);
        let mut ctx = context(&problem, 0.3);
        let value = ctx.evaluate(&phantom.values).unwrap();
        assert!(value.d < 1e-18, "D = {}", value.d);
        let r_expected: f64 = phantom
            .values
            .iter()
            .zip(ctx.k_prior())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!((value.r - r_expected).abs() < 1e-12 * r_expected);
        assert_eq!(ctx.ledger().objective_evaluations, 1);
        assert_eq!(ctx.ledger().pde_solves, 1);
    }

    #[test]
    fn alpha_zero_collapses_j_to_d() {
        let (problem, phantom) = test_problem(0.05);
        let mut ctx = context(&problem, 0.0);
        let value = ctx.evaluate(&phantom.values).unwrap();
        assert_eq!(value.j, value.d);
    }

    #[test]
    fn j_decomposition_recomputes() {
        let (problem, _) = test_problem(0.05);
        let mut ctx = context(&problem, 0.7);
        let mut rng = SplitMix64::new(50);
        let k: Vec<f64> = ctx
            .k_prior()
            .iter()
            .map(|&v| v + 0.05 * rng.next_standard_normal())
            .collect();
        let value = ctx.evaluate(&k).unwrap();
        // Recompute D and R through independent paths.
        let fields = ctx.forward_fields(&k).unwrap().to_vec();
        let mut d = 0.0;
        for (angle_idx, u) in fields.iter().enumerate() {
            let ring = restrict(&problem, u);
            let mut acc = 0.0;
            for (r, o) in ring.iter().zip(problem.observed_for_angle(angle_idx)) {
                acc += (r - o).norm_sqr();
            }
            d += acc;
        }
        let r: f64 = k
            .iter()
            .zip(ctx.k_prior())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!((value.d - d).abs() <= 1e-13 * d.max(1.0));
        assert!((value.j - (d + 0.7 * r)).abs() <= 1e-13 * value.j.abs().max(1.0));
    }

    #[test]
    fn zero_residual_gives_zero_adjoint() {
        let (problem, phantom) = test_problem(0.0);
        let mut ctx = context(&problem, 0.0);
        let fields = ctx.forward_fields(&phantom.values).unwrap().to_vec();
        let lambdas = ctx.solve_adjoint(&phantom.values, &fields).unwrap();
        for lambda in &lambdas {
            assert!(cnorm(lambda) < 1e-7, "residual ~ 0 must give lambda ~ 0");
        }
        assert_eq!(ctx.ledger().adjoint_solves, 1);
    }

    #[test]
    fn adjoint_solution_satisfies_adjoint_equation() {
        let (problem, _) = test_problem(0.05);
        let mut ctx = context(&problem, 0.0);
        let mut rng = SplitMix64::new(51);
        let k: Vec<f64> = ctx
            .k_prior()
            .iter()
            .map(|&v| v + 0.05 * rng.next_standard_normal())
            .collect();
        let fields = ctx.forward_fields(&k).unwrap().to_vec();
        let lambdas = ctx.solve_adjoint(&k, &fields).unwrap();

        let field = WaveNumberField::from_values(&problem.grid, k.clone(), problem.k0).unwrap();
        let h = assemble_helmholtz(&problem.grid, &field);
        for (angle_idx, lambda) in lambdas.iter().enumerate() {
            let mut ring = restrict(&problem, &fields[angle_idx]);
            for (r, o) in ring.iter_mut().zip(problem.observed_for_angle(angle_idx)) {
                *r -= o;
            }
            let rhs = inject(&problem, &ring);
            let lhs = h.spmv_adjoint(lambda).unwrap();
            let mut err = 0.0;
            let mut scale = 0.0;
            for (a, b) in lhs.iter().zip(&rhs) {
                err += (a - b).norm_sqr();
                scale += b.norm_sqr();
            }
            assert!(
                err.sqrt() <= 1e-10 * scale.sqrt(),
                "angle {angle_idx}: {}",
                err.sqrt() / scale.sqrt()
            );
        }
    }

    #[test]
    fn adjoint_matches_dense_oracle_on_tiny_grid() {
        let (problem, _) = test_problem(0.05);
        let mut ctx = context(&problem, 0.0);
        let k: Vec<f64> = ctx.k_prior().iter().map(|&v| v * 1.1).collect();
        let fields = ctx.forward_fields(&k).unwrap().to_vec();
        let lambdas = ctx.solve_adjoint(&k, &fields).unwrap();

        let field = WaveNumberField::from_values(&problem.grid, k.clone(), problem.k0).unwrap();
        let dense = assemble_helmholtz(&problem.grid, &field).to_dense().adjoint();
        for (angle_idx, lambda) in lambdas.iter().enumerate() {
            let mut ring = restrict(&problem, &fields[angle_idx]);
            for (r, o) in ring.iter_mut().zip(problem.observed_for_angle(angle_idx)) {
                *r -= o;
            }
            let rhs = inject(&problem, &ring);
            let exact = crate::solvers::solve_dense(&dense, &rhs).unwrap();
            let mut err = 0.0;
            let mut scale = 0.0;
            for (a, b) in lambda.iter().zip(&exact) {
                err += (a - b).norm_sqr();
                scale += b.norm_sqr();
            }
            assert!(err.sqrt() <= 1e-8 * scale.sqrt(), "angle {angle_idx}");
        }
    }

    #[test]
    fn gradient_at_exact_field_is_pure_regularization() {
        let (problem, phantom) = test_problem(0.0);
        let alpha = 0.4;
        let mut ctx = context(&problem, alpha);
        let report = ctx.gradient(&phantom.values).unwrap();
        for (j, g) in report.gradient.iter().enumerate() {
            let expected = 2.0 * alpha * (phantom.values[j] - ctx.k_prior()[j]);
            assert!(
                (g - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
                "component {j}: {g} vs {expected}"
            );
        }
        assert_eq!(ctx.ledger().gradient_evaluations, 1);
        assert_eq!(ctx.ledger().pde_solves, 1);
        assert_eq!(ctx.ledger().adjoint_solves, 1);
    }

    #[test]
    fn regularization_gradient_vanishes_at_prior() {
        let (problem, _) = test_problem(0.0);
        // At k = prior the penalty term contributes nothing: gradients with
        // different alphas coincide.
        let mut ctx_a = context(&problem, 0.0);
        let mut ctx_b = context(&problem, 2.0);
        let prior = ctx_a.k_prior().to_vec();
        let g0 = ctx_a.gradient(&prior).unwrap().gradient;
        let g2 = ctx_b.gradient(&prior).unwrap().gradient;
        for (a, b) in g0.iter().zip(&g2) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        // The build-gating oracle at miniature scale; the acceptance suite
        // repeats it at 16x16 with 10 directions.
        let (problem, _) = test_problem(0.05);
        let alpha = 0.25;
        let mut ctx = context(&problem, alpha);
        let mut rng = SplitMix64::new(52);
        let k: Vec<f64> = ctx
            .k_prior()
            .iter()
            .map(|&v| v + 0.05 * rng.next_standard_normal())
            .collect();
        let report = ctx.gradient(&k).unwrap();
        let h = 1e-6 * (1.0 + rnorm(&k));
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let mut v: Vec<f64> = (0..k.len()).map(|_| rng.next_standard_normal()).collect();
            let vn = rnorm(&v);
            for vi in v.iter_mut() {
                *vi /= vn;
            }
            let k_plus: Vec<f64> = k.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let k_minus: Vec<f64> = k.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            let j_plus = ctx.evaluate(&k_plus).unwrap().j;
            let j_minus = ctx.evaluate(&k_minus).unwrap().j;
            let fd = (j_plus - j_minus) / (2.0 * h);
            let analytic = rdot(&report.gradient, &v);
            worst = worst.max((analytic - fd).abs() / (fd.abs() + 1e-12));
        }
        assert!(worst < 1e-5, "max relative directional error {worst:.3e}");
    }

    #[test]
    fn forward_cache_skips_resolve_but_books_cost() {
        let (problem, phantom) = test_problem(0.05);
        let mut ctx = context(&problem, 0.1);
        ctx.evaluate(&phantom.values).unwrap();
        // Same field again: cache hit, but the ledger books another solve.
        ctx.evaluate(&phantom.values).unwrap();
        assert_eq!(ctx.ledger().objective_evaluations, 2);
        assert_eq!(ctx.ledger().pde_solves, 2);
        let report = ctx.gradient(&phantom.values).unwrap();
        assert_eq!(ctx.ledger().pde_solves, 3);
        assert_eq!(ctx.ledger().adjoint_solves, 1);
        assert!(report.value.is_finite());
        ctx.ledger().verify_identities(3).unwrap();
    }

    #[test]
    fn hessian_product_is_exact_on_quadratics() {
        let mut rng = SplitMix64::new(53);
        let n = 12;
        let minimizer: Vec<f64> = (0..n).map(|_| rng.next_standard_normal()).collect();
        let curvature: Vec<f64> = (0..n).map(|_| 1.0 + rng.next_unit_open()).collect();
        let mut quad = QuadraticObjective::new(minimizer, curvature.clone(), 3.0);
        let k: Vec<f64> = (0..n).map(|_| rng.next_standard_normal()).collect();
        let base = quad.gradient(&k).unwrap().gradient;
        let v: Vec<f64> = (0..n).map(|_| rng.next_standard_normal()).collect();
        for scheme in [FdScheme::Forward, FdScheme::Central, FdScheme::Backward] {
            for h in [1e-4, 1e-2, 1.0] {
                let hv = hessian_vector_product(&mut quad, &k, &base, &v, scheme, h).unwrap();
                for ((got, ai), vi) in hv.iter().zip(&curvature).zip(&v) {
                    assert!(
                        (got - ai * vi).abs() < 1e-10 * (1.0 + (ai * vi).abs()),
                        "{scheme:?} h={h}"
                    );
                }
            }
        }
    }

    #[test]
    fn hessian_product_scales_linearly_in_direction() {
        let (problem, _) = test_problem(0.05);
        let mut ctx = context(&problem, 0.2);
        let k = ctx.k_prior().to_vec();
        let base = ctx.gradient(&k).unwrap().gradient;
        let mut rng = SplitMix64::new(54);
        let v: Vec<f64> = (0..k.len()).map(|_| rng.next_standard_normal()).collect();
        let h = fd_step(1e-7, &k, &v);
        let hv = hessian_vector_product(&mut ctx, &k, &base, &v, FdScheme::Central, h).unwrap();
        let c = 3.0;
        let v_scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let h_scaled = h / c;
        let hv_scaled =
            hessian_vector_product(&mut ctx, &k, &base, &v_scaled, FdScheme::Central, h_scaled)
                .unwrap();
        let norm = rnorm(&hv);
        let mut err = 0.0;
        for (a, b) in hv.iter().zip(&hv_scaled) {
            err += (c * a - b) * (c * a - b);
        }
        assert!(
            err.sqrt() <= 1e-4 * c * norm,
            "scaling error {} vs norm {}",
            err.sqrt(),
            norm
        );
    }

    #[test]
    fn hessian_product_is_approximately_symmetric() {
        let (problem, _) = test_problem(0.05);
        let mut ctx = context(&problem, 0.2);
        let k = ctx.k_prior().to_vec();
        let base = ctx.gradient(&k).unwrap().gradient;
        let mut rng = SplitMix64::new(55);
        let n = k.len();
        let v: Vec<f64> = (0..n).map(|_| rng.next_standard_normal()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.next_standard_normal()).collect();
        let hv = hessian_vector_product(
            &mut ctx,
            &k,
            &base,
            &v,
            FdScheme::Central,
            fd_step(1e-7, &k, &v),
        )
        .unwrap();
        let hw = hessian_vector_product(
            &mut ctx,
            &k,
            &base,
            &w,
            FdScheme::Central,
            fd_step(1e-7, &k, &w),
        )
        .unwrap();
        let whv = rdot(&w, &hv);
        let vhw = rdot(&v, &hw);
        assert!(
            (whv - vhw).abs() <= 1e-3 * whv.abs().max(vhw.abs()),
            "<w,Hv> = {whv}, <v,Hw> = {vhw}"
        );
    }

    #[test]
    fn fd_scheme_parsing_and_cost() {
        assert_eq!(FdScheme::parse("central").unwrap(), FdScheme::Central);
        assert!(FdScheme::parse("sideways").is_err());
        assert_eq!(FdScheme::Central.gradients_per_matvec(), 2);
        assert_eq!(FdScheme::Forward.gradients_per_matvec(), 1);
    }
}

//! Line-search Newton-CG for a fixed regularization parameter.
//!
//! Each iteration solves the Newton system grad^2 J dk = -grad J with
//! conjugate gradients, using finite-difference Hessian-vector products, then
//! backtracks from gamma = 1, halving until J(k + gamma dk) < J(k). CG stops
//! on the inexact-Newton forcing rule min(0.5, sqrt(||g||)) ||g||, on an
//! absolute floor for the step norm, on its iteration cap, or on detected
//! negative curvature (returning the current iterate; steepest descent if
//! that happens on the first iteration). The outer loop stops once the
//! objective stagnates, |J_{i+1} - J_i| / |J_i| below threshold.

use crate::defaults;
use crate::error::Result;
use crate::ledger::RunLedger;
use crate::objective::{fd_step, hessian_vector_product, FdScheme, Objective, ObjectiveValue};
use crate::solvers::cg_real;
use crate::vec_ops::{radd_scaled, rnorm};

/// Optimizer parameters. `stagnation_tol = 0` disables the stagnation stop
/// (used by drivers that need an exact number of Newton steps).
#[derive(Clone, Copy, Debug)]
pub struct NewtonConfig {
    /// CG stops once the Newton-step iterate norm falls below this.
    pub cg_step_floor: f64,
    /// Relative objective-change threshold for the stagnation stop.
    pub stagnation_tol: f64,
    /// Cap on CG iterations per Newton step; 0 means the problem dimension.
    pub cg_max_iter: usize,
    pub max_backtracks: usize,
    pub fd_scheme: FdScheme,
    /// Scale for the finite-difference step h = scale (1 + ||k||) / ||v||.
    pub fd_step_scale: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            cg_step_floor: defaults::CG_STEP_FLOOR,
            stagnation_tol: defaults::STAGNATION_TOL,
            cg_max_iter: 0,
            max_backtracks: defaults::MAX_BACKTRACKS,
            fd_scheme: FdScheme::Forward,
            fd_step_scale: defaults::FD_STEP_SCALE,
        }
    }
}

/// Why the Newton loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Relative objective change fell below the stagnation threshold.
    Stagnated,
    /// The CG step norm fell below the floor (gradient essentially zero).
    StepFloor,
    /// The gradient was exactly zero.
    GradientZero,
    /// Ran the requested number of steps.
    MaxSteps,
    /// Backtracking found no decrease; treated as stagnation by drivers.
    LineSearchFailure,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Stagnated => "stagnated",
            Termination::StepFloor => "step-floor",
            Termination::GradientZero => "gradient-zero",
            Termination::MaxSteps => "max-steps",
            Termination::LineSearchFailure => "line-search-failure",
        }
    }
}

/// One accepted iterate (row 0 is the starting point).
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub iter: usize,
    pub j: f64,
    pub d: f64,
    pub r: f64,
    /// Gradient norm at this iterate; NaN when not computed (final row).
    pub grad_norm: f64,
    /// Accepted step length (NaN on row 0).
    pub gamma: f64,
    /// CG iterations spent producing this iterate's step (0 on row 0).
    pub cg_iters: usize,
    /// ||k - k_exact|| / ||k_exact|| when ground truth is known, else NaN.
    pub rel_error: f64,
    /// Ledger delta since the start of this solve.
    pub ledger: RunLedger,
}

/// Per-iteration history of one Newton run.
#[derive(Clone, Debug, Default)]
pub struct NewtonTrace {
    pub rows: Vec<TraceRow>,
}

impl NewtonTrace {
    /// Accepted Newton steps (rows beyond the starting point).
    pub fn steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn final_j(&self) -> f64 {
        self.rows.last().map(|r| r.j).unwrap_or(f64::NAN)
    }

    /// CSV rendering: one row per Newton iteration, 17-significant-digit
    /// floats, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iter,j,d,r,grad_norm,gamma,cg_iters,rel_error,\
             newton_cum,cg_cum,objective_evals_cum,gradient_evals_cum,\
             pde_solves_cum,adjoint_solves_cum,helmholtz_solves_cum\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{},{},{},{},{},{},{}\n",
                row.iter,
                row.j,
                row.d,
                row.r,
                row.grad_norm,
                row.gamma,
                row.cg_iters,
                row.rel_error,
                row.ledger.newton_iterations,
                row.ledger.cg_iterations,
                row.ledger.objective_evaluations,
                row.ledger.gradient_evaluations,
                row.ledger.pde_solves,
                row.ledger.adjoint_solves,
                row.ledger.helmholtz_solves,
            ));
        }
        out
    }
}

/// Result of a Newton run.
#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub k: Vec<f64>,
    pub trace: NewtonTrace,
    pub termination: Termination,
    /// J, D, R at the final iterate.
    pub value: ObjectiveValue,
}

/// The CG forcing threshold min(0.5, sqrt(||g||)) ||g||, an absolute bound
/// on the CG residual norm.
pub fn cg_forcing_threshold(grad_norm: f64) -> f64 {
    grad_norm.sqrt().min(0.5) * grad_norm
}

/// Inner CG solve for the Newton step. Returns the step, the CG iteration
/// count, and whether the steepest-descent fallback was used (negative
/// curvature on the very first CG iteration).
pub fn cg_inner<O: Objective + ?Sized>(
    obj: &mut O,
    k: &[f64],
    gradient: &[f64],
    config: &NewtonConfig,
) -> Result<(Vec<f64>, usize, bool)> {
    let grad_norm = rnorm(gradient);
    let threshold = cg_forcing_threshold(grad_norm);
    let b: Vec<f64> = gradient.iter().map(|g| -g).collect();
    let max_iter = if config.cg_max_iter == 0 {
        k.len()
    } else {
        config.cg_max_iter
    };

    let mut matvec_error = None;
    let mut apply = |p: &[f64]| -> Vec<f64> {
        let h = fd_step(config.fd_step_scale, k, p);
        match hessian_vector_product(obj, k, gradient, p, config.fd_scheme, h) {
            Ok(hv) => hv,
            Err(err) => {
                matvec_error = Some(err);
                vec![0.0; p.len()] // forces p'Ap = 0: CG exits, error surfaces below
            }
        }
    };
    let outcome = cg_real(
        &mut apply,
        &b,
        threshold,
        max_iter,
        Some(config.cg_step_floor),
    );
    if let Some(err) = matvec_error {
        return Err(err);
    }
    let iters = outcome.report.iterations;
    if outcome.indefinite && iters == 0 {
        // No usable curvature information: fall back to steepest descent.
        return Ok((b, 0, true));
    }
    Ok((outcome.x, iters, false))
}

/// Accepted line-search step.
#[derive(Clone, Debug)]
pub struct Backtrack {
    pub gamma: f64,
    pub k_new: Vec<f64>,
    pub value: ObjectiveValue,
    /// Objective evaluations spent: log2(1/gamma) + 1.
    pub evals_used: usize,
}

/// Backtracking line search: gamma = 1, 1/2, 1/4, ... until strict decrease.
/// `None` when no decrease was found within `max_backtracks` trials.
pub fn backtrack<O: Objective + ?Sized>(
    obj: &mut O,
    k: &[f64],
    dk: &[f64],
    j_current: f64,
    max_backtracks: usize,
) -> Result<Option<Backtrack>> {
    let mut gamma = 1.0;
    for trial in 0..max_backtracks {
        let k_new = radd_scaled(k, gamma, dk);
        let value = obj.evaluate(&k_new)?;
        if value.j < j_current {
            return Ok(Some(Backtrack {
                gamma,
                k_new,
                value,
                evals_used: trial + 1,
            }));
        }
        gamma *= 0.5;
    }
    Ok(None)
}

/// Run up to `max_steps` Newton iterations from `k_init`.
///
/// `exact` supplies ground truth for the per-iteration relative-error column.
pub fn newton_solve<O: Objective + ?Sized>(
    obj: &mut O,
    k_init: &[f64],
    config: &NewtonConfig,
    max_steps: usize,
    exact: Option<&[f64]>,
) -> Result<NewtonOutcome> {
    let start_ledger = *obj.ledger();
    let mut k = k_init.to_vec();
    let mut trace = NewtonTrace::default();

    if max_steps == 0 {
        return Ok(NewtonOutcome {
            k,
            trace,
            termination: Termination::MaxSteps,
            value: ObjectiveValue {
                j: f64::NAN,
                d: f64::NAN,
                r: f64::NAN,
            },
        });
    }

    let rel_error = |k: &[f64]| -> f64 {
        match exact {
            Some(truth) => {
                let mut num = 0.0;
                let mut den = 0.0;
                for (a, b) in k.iter().zip(truth) {
                    num += (a - b) * (a - b);
                    den += b * b;
                }
                (num / den).sqrt()
            }
            None => f64::NAN,
        }
    };

    let mut report = obj.gradient(&k)?;
    let mut value = ObjectiveValue {
        j: report.value,
        d: report.discrepancy,
        r: report.regularization,
    };
    trace.rows.push(TraceRow {
        iter: 0,
        j: value.j,
        d: value.d,
        r: value.r,
        grad_norm: rnorm(&report.gradient),
        gamma: f64::NAN,
        cg_iters: 0,
        rel_error: rel_error(&k),
        ledger: obj.ledger().delta_since(&start_ledger),
    });

    let mut termination = Termination::MaxSteps;
    for step in 1..=max_steps {
        if report.gradient.iter().all(|&g| g == 0.0) {
            termination = Termination::GradientZero;
            break;
        }
        let (dk, cg_iters, _fallback) = cg_inner(obj, &k, &report.gradient, config)?;
        obj.ledger_mut().record_cg_iterations(cg_iters as u64);
        if rnorm(&dk) < config.cg_step_floor {
            termination = Termination::StepFloor;
            break;
        }
        let Some(accepted) = backtrack(obj, &k, &dk, value.j, config.max_backtracks)? else {
            termination = Termination::LineSearchFailure;
            break;
        };
        k = accepted.k_new;
        obj.ledger_mut().record_newton_iteration();
        let j_prev = value.j;
        value = accepted.value;

        let stagnated = config.stagnation_tol > 0.0
            && ((value.j - j_prev).abs() / j_prev.abs().max(defaults::RELATIVE_FLOOR))
                < config.stagnation_tol;
        let need_gradient = !stagnated && step < max_steps;
        let grad_norm = if need_gradient {
            report = obj.gradient(&k)?;
            rnorm(&report.gradient)
        } else {
            f64::NAN
        };
        trace.rows.push(TraceRow {
            iter: step,
            j: value.j,
            d: value.d,
            r: value.r,
            grad_norm,
            gamma: accepted.gamma,
            cg_iters,
            rel_error: rel_error(&k),
            ledger: obj.ledger().delta_since(&start_ledger),
        });
        if stagnated {
            termination = Termination::Stagnated;
            break;
        }
    }

    Ok(NewtonOutcome {
        k,
        trace,
        termination,
        value,
    })
}

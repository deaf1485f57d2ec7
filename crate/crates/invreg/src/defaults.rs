//! Central record of the numerical tolerances and limits used as defaults.
//!
//! Every solver and driver takes its thresholds from configuration structs;
//! the `Default` impls of those structs pull the values from here so that
//! there is a single place to audit them.

/// Arnoldi breakdown threshold: a candidate basis vector with a smaller norm
/// (relative to the norm of the vector before orthogonalization) signals that
/// the Krylov space is invariant.
pub const ARNOLDI_BREAKDOWN_TOL: f64 = 1e-14;

/// Restart length for the restarted GMRES solver.
pub const GMRES_RESTART: usize = 200;

/// Relative residual tolerance for Helmholtz forward and adjoint solves.
pub const SOLVER_TOL: f64 = 1e-8;

/// Iteration cap for the Helmholtz forward and adjoint solves.
pub const SOLVER_MAX_ITER: usize = 50_000;

/// Newton stagnation threshold: stop once |J_{i+1} - J_i| / |J_i| falls below.
pub const STAGNATION_TOL: f64 = 1e-3;

/// CG stops once the norm of the accumulated Newton step falls below this.
pub const CG_STEP_FLOOR: f64 = 1e-3;

/// Relative change of the regularization parameter at which the regula falsi
/// outer loop declares convergence.
pub const ALPHA_CONVERGENCE_TOL: f64 = 1e-3;

/// Absolute fallback for the regula falsi convergence test when the previous
/// regularization parameter is zero.
pub const ALPHA_CONVERGENCE_ABS: f64 = 1e-12;

/// Maximum number of secant-style bracket migrations before giving up.
pub const BRACKET_MIGRATION_CAP: usize = 20;

/// Maximum number of step halvings in the backtracking line search.
pub const MAX_BACKTRACKS: usize = 30;

/// Scale factor for the finite-difference step in Hessian-vector products:
/// h = FD_STEP_SCALE * (1 + ||k||) / ||v||.
pub const FD_STEP_SCALE: f64 = 1.4901161193847656e-8; // sqrt(f64::EPSILON)

/// Floor used in relative-change denominators to avoid division by zero.
pub const RELATIVE_FLOOR: f64 = 1e-300;

/// Secant update for the regularization parameter is declared stalled when
/// the two discrepancies differ by less than this (relative).
pub const SECANT_STALL_TOL: f64 = 1e-15;

//! PDE-constrained inverse problems with automatic Tikhonov regularization.
//!
//! The crate solves `min_k ||L u(k) - d||^2 + alpha ||k - k_prior||^2` subject
//! to a discretized Helmholtz equation `H(k) u = f(k)`, and selects the
//! regularization parameter `alpha` automatically from the discrepancy
//! principle. Two nonlinear drivers are provided:
//!
//! - **GNT**: a direct Newton analogue of the generalized Arnoldi-Tikhonov
//!   method, which restarts its regularized Newton sequence each time the
//!   parameter is updated (its cumulative cost after `i` outer iterations is
//!   `i (i + 3) / 2` Newton steps), and
//! - **RFGNT**: a regula falsi variant that brackets the target parameter,
//!   solves each subproblem to stagnation, and warm-starts every inner solve
//!   by interpolating the bracket endpoints' solutions.
//!
//! Baselines: early stopping at the discrepancy, an L-curve sweep with a
//! curvature-based corner detector, and the linear Arnoldi-Tikhonov method
//! (GAT) the nonlinear drivers generalize.
//!
//! The testbed is 2D inverse Helmholtz scattering on a square domain with
//! exterior-complex-scaling absorbing tails; gradients come from the adjoint
//! method, and the inner optimizer is a line-search Newton-CG with
//! finite-difference Hessian products.

pub mod arnoldi;
pub mod defaults;
pub mod drivers;
pub mod error;
pub mod experiment;
pub mod gat;
pub mod grid;
pub mod ledger;
pub mod newton;
pub mod objective;
pub mod rng;
pub mod scattering;
pub mod solvers;
pub mod sparse;
pub(crate) mod vec_ops;

pub use error::{Error, Result};
pub use ledger::RunLedger;
pub use solvers::{KrylovConfig, KrylovKind, SolveReport};
pub use sparse::ComplexSparseMatrix;

//! Cost accounting for every reconstruction run.
//!
//! The counters follow the paper-style costing convention: one "PDE solve"
//! means solving the forward Helmholtz system for all angles once, one
//! "adjoint solve" likewise for the adjoint system, and the Helmholtz-solve
//! count is the per-angle total. Counts are attributed per operation — an
//! objective evaluation books one PDE solve, a gradient books one PDE and one
//! adjoint solve — regardless of any solution caching or warm starting
//! underneath, so the identities below hold exactly on every run:
//!
//! - `pde_solves = objective_evaluations + gradient_evaluations`
//! - `adjoint_solves = gradient_evaluations`
//! - `helmholtz_solves = angle_count * (pde_solves + adjoint_solves)`

use std::fmt;

/// Counter block reproducing the cost columns of a reconstruction ledger.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunLedger {
    pub newton_iterations: u64,
    pub cg_iterations: u64,
    pub objective_evaluations: u64,
    pub gradient_evaluations: u64,
    pub pde_solves: u64,
    pub adjoint_solves: u64,
    pub helmholtz_solves: u64,
}

impl RunLedger {
    pub fn new() -> Self {
        RunLedger::default()
    }

    /// Book one objective evaluation (one forward PDE solve over all angles).
    pub fn record_objective_evaluation(&mut self, angle_count: u64) {
        self.objective_evaluations += 1;
        self.pde_solves += 1;
        self.helmholtz_solves += angle_count;
    }

    /// Book one gradient evaluation (one forward plus one adjoint solve).
    pub fn record_gradient_evaluation(&mut self, angle_count: u64) {
        self.gradient_evaluations += 1;
        self.pde_solves += 1;
        self.adjoint_solves += 1;
        self.helmholtz_solves += 2 * angle_count;
    }

    pub fn record_newton_iteration(&mut self) {
        self.newton_iterations += 1;
    }

    pub fn record_cg_iterations(&mut self, count: u64) {
        self.cg_iterations += count;
    }

    /// Componentwise difference `self - earlier`; counters only grow, so this
    /// is the cost of everything that happened since `earlier` was captured.
    pub fn delta_since(&self, earlier: &RunLedger) -> RunLedger {
        RunLedger {
            newton_iterations: self.newton_iterations - earlier.newton_iterations,
            cg_iterations: self.cg_iterations - earlier.cg_iterations,
            objective_evaluations: self.objective_evaluations - earlier.objective_evaluations,
            gradient_evaluations: self.gradient_evaluations - earlier.gradient_evaluations,
            pde_solves: self.pde_solves - earlier.pde_solves,
            adjoint_solves: self.adjoint_solves - earlier.adjoint_solves,
            helmholtz_solves: self.helmholtz_solves - earlier.helmholtz_solves,
        }
    }

    pub fn merge(&mut self, other: &RunLedger) {
        self.newton_iterations += other.newton_iterations;
        self.cg_iterations += other.cg_iterations;
        self.objective_evaluations += other.objective_evaluations;
        self.gradient_evaluations += other.gradient_evaluations;
        self.pde_solves += other.pde_solves;
        self.adjoint_solves += other.adjoint_solves;
        self.helmholtz_solves += other.helmholtz_solves;
    }

    /// Check the three accounting identities for a run with `angle_count`
    /// projection angles. Returns the first violated identity by name.
    pub fn verify_identities(&self, angle_count: u64) -> Result<(), &'static str> {
        if self.pde_solves != self.objective_evaluations + self.gradient_evaluations {
            return Err("pde_solves != objective_evaluations + gradient_evaluations");
        }
        if self.adjoint_solves != self.gradient_evaluations {
            return Err("adjoint_solves != gradient_evaluations");
        }
        if self.helmholtz_solves != angle_count * (self.pde_solves + self.adjoint_solves) {
            return Err("helmholtz_solves != angles * (pde_solves + adjoint_solves)");
        }
        Ok(())
    }
}

impl fmt::Display for RunLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "newton={} cg={} J-evals={} grad-evals={} pde={} adjoint={} helmholtz={}",
            self.newton_iterations,
            self.cg_iterations,
            self.objective_evaluations,
            self.gradient_evaluations,
            self.pde_solves,
            self.adjoint_solves,
            self.helmholtz_solves
        )
    }
}

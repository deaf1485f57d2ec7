//! Outer loops that solve the inverse problem while selecting the
//! regularization parameter from the discrepancy principle.
//!
//! - [`gnt_run`]: the direct Newton analogue of the linear Arnoldi-Tikhonov
//!   method. Per outer iteration i it advances an unregularized Newton chain
//!   by one step, restarts the regularized chain from the initial guess for
//!   i steps (the alpha update invalidates previous regularized iterates),
//!   and secant-updates alpha against the target. The cumulative Newton cost
//!   after i outer iterations is therefore exactly i (i + 3) / 2.
//! - [`rfgnt_run`]: brackets the target parameter, solves each subproblem to
//!   Newton stagnation, picks the next alpha by regula falsi, and warm-starts
//!   every inner solve by linearly interpolating the bracket solutions.
//! - [`early_stopping_run`]: unregularized Newton stopped at the discrepancy.
//! - [`lcurve_sweep`] / [`lcurve_corner`]: the classical grid baseline with a
//!   maximum-curvature corner pick in log-log coordinates. The corner pick is
//!   an extension beyond the reference experiment (which selected the
//!   minimum-error point using ground truth).

use crate::defaults;
use crate::error::{Error, Result};
use crate::gat::gat_alpha_update;
use crate::ledger::RunLedger;
use crate::newton::{newton_solve, NewtonConfig, NewtonTrace, Termination};
use crate::objective::Objective;
use crate::vec_ops::rnorm;

/// One evaluated point on the discrepancy curve.
#[derive(Clone, Debug)]
pub struct DiscrepancyPoint {
    pub alpha: f64,
    pub discrepancy: f64,
    pub k_solution: Vec<f64>,
    pub newton_steps_used: usize,
}

/// A bracket lo.alpha < hi.alpha with lo.D <= eta_eps <= hi.D (up to the
/// inner-solver slack).
#[derive(Clone, Debug)]
pub struct Bracket {
    pub lo: DiscrepancyPoint,
    pub hi: DiscrepancyPoint,
}

/// Snapshot of the bracket after a replacement, for invariant audits.
#[derive(Clone, Copy, Debug)]
pub struct BracketSnapshot {
    pub lo_alpha: f64,
    pub lo_d: f64,
    pub hi_alpha: f64,
    pub hi_d: f64,
}

/// Outer-iteration history entry shared by all drivers.
#[derive(Clone, Copy, Debug)]
pub struct DriverHistoryEntry {
    pub outer_iter: usize,
    pub alpha: f64,
    pub d: f64,
    pub r: f64,
    /// Newton steps spent in this outer iteration.
    pub newton_steps: usize,
    /// Cumulative cost counters at the end of this entry.
    pub ledger: RunLedger,
}

/// Render driver histories as CSV (the data products behind the comparison
/// figures): one row per outer iteration, cumulative ledger columns.
pub fn history_to_csv(entries: &[DriverHistoryEntry]) -> String {
    let mut out = String::from(
        "outer_iter,alpha,d,r,newton_steps,newton_cum,cg_cum,objective_evals_cum,\
         gradient_evals_cum,pde_solves_cum,adjoint_solves_cum,helmholtz_solves_cum\n",
    );
    for e in entries {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{},{},{},{},{},{},{},{}\n",
            e.outer_iter,
            e.alpha,
            e.d,
            e.r,
            e.newton_steps,
            e.ledger.newton_iterations,
            e.ledger.cg_iterations,
            e.ledger.objective_evaluations,
            e.ledger.gradient_evaluations,
            e.ledger.pde_solves,
            e.ledger.adjoint_solves,
            e.ledger.helmholtz_solves,
        ));
    }
    out
}

/// Driver-level knobs on top of the inner Newton configuration.
#[derive(Clone, Copy, Debug)]
pub struct DriverConfig {
    pub newton: NewtonConfig,
    /// Step cap for inner solves that run to stagnation.
    pub max_newton_per_solve: usize,
    /// Relative alpha-change threshold for the regula falsi convergence test.
    pub alpha_tol: f64,
    /// Absolute fallback when the previous alpha is zero.
    pub alpha_tol_abs: f64,
    /// Cap on secant-style bracket migrations.
    pub migration_cap: usize,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            newton: NewtonConfig::default(),
            max_newton_per_solve: 40,
            alpha_tol: defaults::ALPHA_CONVERGENCE_TOL,
            alpha_tol_abs: defaults::ALPHA_CONVERGENCE_ABS,
            migration_cap: defaults::BRACKET_MIGRATION_CAP,
        }
    }
}

/// Factory producing a fresh objective for a given regularization parameter.
pub type ObjectiveFactory<'a> = dyn FnMut(f64) -> Result<Box<dyn Objective>> + 'a;

fn relative_error(k: &[f64], exact: Option<&[f64]>) -> f64 {
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
}

// ---------------------------------------------------------------------------
// GNT
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GntTermination {
    DiscrepancySatisfied,
    MaxOuter,
    /// An inner Newton run could not complete its requested steps; the run
    /// stops at the last completed outer iteration.
    InnerStopped,
}

#[derive(Debug)]
pub struct GntOutcome {
    pub k: Vec<f64>,
    pub alpha: f64,
    pub history: Vec<DriverHistoryEntry>,
    pub ledger: RunLedger,
    /// Completed outer iterations; cumulative Newton steps are exactly
    /// outer (outer + 3) / 2.
    pub outer_iterations: usize,
    pub termination: GntTermination,
    pub traces: Vec<(String, NewtonTrace)>,
}

/// Generalized Newton-Tikhonov: one unregularized continuation step plus a
/// restarted i-step regularized solve per outer iteration, secant alpha
/// update, stop at D_i(alpha_{i-1}) <= eta_eps.
pub fn gnt_run(
    factory: &mut ObjectiveFactory,
    k0_field: &[f64],
    alpha0: f64,
    eta_eps: f64,
    max_outer: usize,
    config: &DriverConfig,
    exact: Option<&[f64]>,
) -> Result<GntOutcome> {
    if alpha0 <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "GNT requires alpha0 > 0, got {alpha0}"
        )));
    }
    // The cost identity requires every inner run to take its full step
    // count, so the stagnation stop is disabled for GNT inner solves.
    let inner_cfg = NewtonConfig {
        stagnation_tol: 0.0,
        ..config.newton
    };

    let mut ledger = RunLedger::new();
    let mut traces = Vec::new();
    let mut history = Vec::new();
    let mut zero_ctx = factory(0.0)?;
    let mut zero_snapshot = *zero_ctx.ledger();
    let mut k_zero = k0_field.to_vec();
    let mut alpha = alpha0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut outer_done = 0usize;
    let mut termination = GntTermination::MaxOuter;

    for i in 1..=max_outer {
        // Alg. line 3: advance the alpha = 0 chain by one Newton step.
        let out0 = newton_solve(zero_ctx.as_mut(), &k_zero, &inner_cfg, 1, exact)?;
        ledger.merge(&zero_ctx.ledger().delta_since(&zero_snapshot));
        zero_snapshot = *zero_ctx.ledger();
        if out0.trace.steps() < 1 {
            termination = GntTermination::InnerStopped;
            break;
        }
        k_zero = out0.k;
        let d_zero = out0.value.d;

        // Alg. line 4: restart the regularized chain from k0 for i steps.
        let mut reg_ctx = factory(alpha)?;
        let out_a = newton_solve(reg_ctx.as_mut(), k0_field, &inner_cfg, i, exact)?;
        ledger.merge(reg_ctx.ledger());
        if out_a.trace.steps() < i {
            termination = GntTermination::InnerStopped;
            traces.push((format!("gnt_outer{i:03}_alpha"), out_a.trace));
            break;
        }
        let d_alpha = out_a.value.d;
        let r_alpha = out_a.value.r;
        traces.push((format!("gnt_outer{i:03}_alpha"), out_a.trace));
        outer_done = i;
        history.push(DriverHistoryEntry {
            outer_iter: i,
            alpha,
            d: d_alpha,
            r: r_alpha,
            newton_steps: i + 1,
            ledger,
        });
        best = Some((out_a.k, alpha));

        if d_alpha <= eta_eps {
            termination = GntTermination::DiscrepancySatisfied;
            break;
        }
        let (alpha_new, _stalled) = gat_alpha_update(eta_eps, d_zero, d_alpha, alpha);
        alpha = alpha_new;
    }

    let (k, alpha_final) = best.unwrap_or_else(|| (k0_field.to_vec(), alpha0));
    Ok(GntOutcome {
        k,
        alpha: alpha_final,
        history,
        ledger,
        outer_iterations: outer_done,
        termination,
        traces,
    })
}

// ---------------------------------------------------------------------------
// RFGNT
// ---------------------------------------------------------------------------

/// Regula falsi interpolation of the discrepancy target: the alpha at which
/// the line through (a0, D0) and (a1, D1) equals eta_eps. Falls back to the
/// midpoint when the two discrepancies coincide.
pub fn regula_falsi_alpha(eta_eps: f64, lo: (f64, f64), hi: (f64, f64)) -> f64 {
    let (a0, d0) = lo;
    let (a1, d1) = hi;
    let denom = d1 - d0;
    if denom.abs() < defaults::SECANT_STALL_TOL * d1.abs().max(d0.abs()).max(1.0) {
        return 0.5 * (a0 + a1);
    }
    (eta_eps - d0) / denom * (a1 - a0) + a0
}

/// Warm-start interpolation between bracket solutions:
/// k = (a2 - a0)/(a1 - a0) (k1 - k0) + k0.
pub fn interpolate_warm_start(
    alpha2: f64,
    lo: &DiscrepancyPoint,
    hi: &DiscrepancyPoint,
) -> Vec<f64> {
    let w = (alpha2 - lo.alpha) / (hi.alpha - lo.alpha);
    lo.k_solution
        .iter()
        .zip(&hi.k_solution)
        .map(|(k0, k1)| w * (k1 - k0) + k0)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RfgntTermination {
    AlphaConverged,
    MaxOuter,
}

#[derive(Debug)]
pub struct RfgntOutcome {
    pub k: Vec<f64>,
    pub alpha: f64,
    pub history: Vec<DriverHistoryEntry>,
    pub bracket_history: Vec<BracketSnapshot>,
    pub final_bracket: Bracket,
    pub ledger: RunLedger,
    pub termination: RfgntTermination,
    /// Secant migrations needed before the initial bracket held.
    pub migrations: usize,
    pub traces: Vec<(String, NewtonTrace)>,
}

struct InnerSolveResult {
    k: Vec<f64>,
    d: f64,
    r: f64,
    newton_steps: usize,
}

/// Shared core of the regula falsi driver, generic over the inner solver so
/// the bracket logic can be exercised with synthetic discrepancy functions.
fn rfgnt_core(
    inner: &mut dyn FnMut(f64, &[f64], &str) -> Result<InnerSolveResult>,
    k0_field: &[f64],
    alpha_lo: f64,
    alpha_hi: f64,
    eta_eps: f64,
    max_outer: usize,
    config: &DriverConfig,
) -> Result<(
    Vec<f64>,
    f64,
    Vec<DriverHistoryEntry>,
    Vec<BracketSnapshot>,
    Bracket,
    RfgntTermination,
    usize,
)> {
    if alpha_lo >= alpha_hi {
        return Err(Error::InvalidConfig(format!(
            "RFGNT requires alpha_lo < alpha_hi, got {alpha_lo} >= {alpha_hi}"
        )));
    }
    if alpha_lo < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "RFGNT requires alpha_lo >= 0, got {alpha_lo}"
        )));
    }

    let mut history: Vec<DriverHistoryEntry> = Vec::new();
    let mut bracket_history = Vec::new();
    let mut entry = |alpha: f64, res: &InnerSolveResult, outer: usize| DriverHistoryEntry {
        outer_iter: outer,
        alpha,
        d: res.d,
        r: res.r,
        newton_steps: res.newton_steps,
        ledger: RunLedger::new(), // filled by the wrapper
    };

    let res_lo = inner(alpha_lo, k0_field, "lo")?;
    let mut lo = DiscrepancyPoint {
        alpha: alpha_lo,
        discrepancy: res_lo.d,
        newton_steps_used: res_lo.newton_steps,
        k_solution: res_lo.k.clone(),
    };
    history.push(entry(alpha_lo, &res_lo, 0));
    let res_hi = inner(alpha_hi, k0_field, "hi")?;
    let mut hi = DiscrepancyPoint {
        alpha: alpha_hi,
        discrepancy: res_hi.d,
        newton_steps_used: res_hi.newton_steps,
        k_solution: res_hi.k.clone(),
    };
    history.push(entry(alpha_hi, &res_hi, 0));

    // Secant-style migration until the bracket condition holds.
    let mut migrations = 0usize;
    while !(lo.discrepancy <= eta_eps && hi.discrepancy >= eta_eps) {
        migrations += 1;
        if migrations > config.migration_cap {
            return Err(Error::BracketFailure(format!(
                "discrepancy target unreachable in given range after {} migrations",
                config.migration_cap
            )));
        }
        let alpha2 = regula_falsi_alpha(
            eta_eps,
            (lo.alpha, lo.discrepancy),
            (hi.alpha, hi.discrepancy),
        );
        if !alpha2.is_finite() || alpha2 < 0.0 {
            return Err(Error::BracketFailure(format!(
                "secant migration left the admissible range (alpha = {alpha2})"
            )));
        }
        let warm = interpolate_warm_start(alpha2, &lo, &hi);
        let res = inner(alpha2, &warm, "migrate")?;
        history.push(entry(alpha2, &res, 0));
        let pt = DiscrepancyPoint {
            alpha: alpha2,
            discrepancy: res.d,
            newton_steps_used: res.newton_steps,
            k_solution: res.k,
        };
        // Shift the window toward the root, keeping alphas ordered.
        if alpha2 > hi.alpha {
            lo = hi;
            hi = pt;
        } else if alpha2 < lo.alpha {
            hi = lo;
            lo = pt;
        } else if pt.discrepancy <= eta_eps {
            lo = pt;
        } else {
            hi = pt;
        }
        bracket_history.push(BracketSnapshot {
            lo_alpha: lo.alpha,
            lo_d: lo.discrepancy,
            hi_alpha: hi.alpha,
            hi_d: hi.discrepancy,
        });
    }
    bracket_history.push(BracketSnapshot {
        lo_alpha: lo.alpha,
        lo_d: lo.discrepancy,
        hi_alpha: hi.alpha,
        hi_d: hi.discrepancy,
    });

    // Main regula falsi loop.
    let mut alpha2_old: Option<f64> = None;
    let mut current = lo.clone();
    let mut termination = RfgntTermination::MaxOuter;
    for outer in 1..=max_outer {
        let mut alpha2 = regula_falsi_alpha(
            eta_eps,
            (lo.alpha, lo.discrepancy),
            (hi.alpha, hi.discrepancy),
        );
        if !(alpha2 > lo.alpha && alpha2 < hi.alpha) {
            // Degenerate interpolation (discrepancy equal to the target at an
            // endpoint): bisect instead.
            alpha2 = 0.5 * (lo.alpha + hi.alpha);
        }
        let warm = interpolate_warm_start(alpha2, &lo, &hi);
        let res = inner(alpha2, &warm, "outer")?;
        history.push(entry(alpha2, &res, outer));
        let pt = DiscrepancyPoint {
            alpha: alpha2,
            discrepancy: res.d,
            newton_steps_used: res.newton_steps,
            k_solution: res.k,
        };
        current = pt.clone();

        let converged = match alpha2_old {
            Some(old) if old > 0.0 => (alpha2 - old).abs() / old < config.alpha_tol,
            Some(old) => (alpha2 - old).abs() < config.alpha_tol_abs,
            None => false,
        };
        if converged {
            termination = RfgntTermination::AlphaConverged;
            break;
        }
        alpha2_old = Some(alpha2);
        if pt.discrepancy <= eta_eps {
            lo = pt;
        } else {
            hi = pt;
        }
        bracket_history.push(BracketSnapshot {
            lo_alpha: lo.alpha,
            lo_d: lo.discrepancy,
            hi_alpha: hi.alpha,
            hi_d: hi.discrepancy,
        });
    }

    Ok((
        current.k_solution.clone(),
        current.alpha,
        history,
        bracket_history,
        Bracket { lo, hi },
        termination,
        migrations,
    ))
}

/// Regula falsi generalized Newton-Tikhonov. Solves to Newton stagnation at
/// both bracket endpoints (migrating the bracket by secant steps if the
/// target is not straddled), then iterates: interpolate alpha, warm-start
/// from the interpolated bracket solutions, solve, replace the matching
/// endpoint; stop when alpha changes by less than the relative tolerance.
pub fn rfgnt_run(
    factory: &mut ObjectiveFactory,
    k0_field: &[f64],
    alpha_lo: f64,
    alpha_hi: f64,
    eta_eps: f64,
    max_outer: usize,
    config: &DriverConfig,
    exact: Option<&[f64]>,
) -> Result<RfgntOutcome> {
    let mut ledger = RunLedger::new();
    let mut traces: Vec<(String, NewtonTrace)> = Vec::new();
    let mut ledger_per_entry: Vec<RunLedger> = Vec::new();
    {
        let mut inner = |alpha: f64, k_start: &[f64], label: &str| -> Result<InnerSolveResult> {
            let mut ctx = factory(alpha)?;
            let out = newton_solve(
                ctx.as_mut(),
                k_start,
                &config.newton,
                config.max_newton_per_solve,
                exact,
            )?;
            ledger.merge(ctx.ledger());
            ledger_per_entry.push(ledger);
            traces.push((format!("rfgnt_{label}_alpha{alpha:.6}"), out.trace.clone()));
            Ok(InnerSolveResult {
                k: out.k,
                d: out.value.d,
                r: out.value.r,
                newton_steps: out.trace.steps(),
            })
        };
        let (k, alpha, mut history, bracket_history, final_bracket, termination, migrations) =
            rfgnt_core(
                &mut inner,
                k0_field,
                alpha_lo,
                alpha_hi,
                eta_eps,
                max_outer,
                config,
            )?;
        // Attach the cumulative ledger snapshots to the history entries.
        for (entry, snap) in history.iter_mut().zip(&ledger_per_entry) {
            entry.ledger = *snap;
        }
        return Ok(RfgntOutcome {
            k,
            alpha,
            history,
            bracket_history,
            final_bracket,
            ledger,
            termination,
            migrations,
            traces,
        });
    }
}

// ---------------------------------------------------------------------------
// Early stopping
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EarlyStoppingTermination {
    DiscrepancySatisfied,
    Stagnated,
    MaxSteps,
}

#[derive(Debug)]
pub struct EarlyStoppingOutcome {
    pub k: Vec<f64>,
    pub history: Vec<DriverHistoryEntry>,
    pub ledger: RunLedger,
    pub termination: EarlyStoppingTermination,
    pub traces: Vec<(String, NewtonTrace)>,
}

/// Unregularized Newton with the discrepancy as an early-stopping rule:
/// after every accepted step evaluate D and stop as soon as D <= eta_eps.
pub fn early_stopping_run(
    factory: &mut ObjectiveFactory,
    k0_field: &[f64],
    eta_eps: f64,
    max_steps: usize,
    config: &DriverConfig,
    exact: Option<&[f64]>,
) -> Result<EarlyStoppingOutcome> {
    let mut ctx = factory(0.0)?;
    let mut history = Vec::new();
    let mut traces = Vec::new();
    let mut k = k0_field.to_vec();

    let value = ctx.evaluate(&k)?;
    history.push(DriverHistoryEntry {
        outer_iter: 0,
        alpha: 0.0,
        d: value.d,
        r: value.r,
        newton_steps: 0,
        ledger: *ctx.ledger(),
    });
    if value.d <= eta_eps {
        let ledger = *ctx.ledger();
        return Ok(EarlyStoppingOutcome {
            k,
            history,
            ledger,
            termination: EarlyStoppingTermination::DiscrepancySatisfied,
            traces,
        });
    }

    let mut termination = EarlyStoppingTermination::MaxSteps;
    for step in 1..=max_steps {
        let out = newton_solve(ctx.as_mut(), &k, &config.newton, 1, exact)?;
        let made_step = out.trace.steps() >= 1;
        if made_step {
            k = out.k;
            history.push(DriverHistoryEntry {
                outer_iter: step,
                alpha: 0.0,
                d: out.value.d,
                r: out.value.r,
                newton_steps: 1,
                ledger: *ctx.ledger(),
            });
            traces.push((format!("early_stop_step{step:03}"), out.trace.clone()));
            if out.value.d <= eta_eps {
                termination = EarlyStoppingTermination::DiscrepancySatisfied;
                break;
            }
        }
        if !made_step
            || matches!(
                out.termination,
                Termination::Stagnated | Termination::LineSearchFailure | Termination::StepFloor
            )
        {
            if !made_step {
                termination = EarlyStoppingTermination::Stagnated;
                break;
            }
            if out.termination == Termination::Stagnated
                || out.termination == Termination::LineSearchFailure
            {
                termination = EarlyStoppingTermination::Stagnated;
                break;
            }
        }
    }
    let ledger = *ctx.ledger();
    Ok(EarlyStoppingOutcome {
        k,
        history,
        ledger,
        termination,
        traces,
    })
}

// ---------------------------------------------------------------------------
// L-curve
// ---------------------------------------------------------------------------

/// One point of an L-curve sweep.
#[derive(Clone, Debug)]
pub struct LcurvePoint {
    pub alpha: f64,
    pub d: f64,
    pub r: f64,
    pub k: Vec<f64>,
    /// Relative error against ground truth (NaN when unknown).
    pub rel_error: f64,
    pub newton_steps: usize,
    /// The inner solve failed; d and r are NaN and k is the initial guess.
    pub failed: bool,
}

#[derive(Debug)]
pub struct LcurveOutcome {
    pub points: Vec<LcurvePoint>,
    pub ledger: RunLedger,
    /// Index of the minimum-rel-error point when ground truth was supplied.
    pub min_error_index: Option<usize>,
    pub traces: Vec<(String, NewtonTrace)>,
}

/// Full Newton solve per alpha, each from the initial guess; per-point
/// failures are recorded and the sweep continues.
pub fn lcurve_sweep(
    factory: &mut ObjectiveFactory,
    k0_field: &[f64],
    alphas: &[f64],
    config: &DriverConfig,
    exact: Option<&[f64]>,
) -> Result<LcurveOutcome> {
    if alphas.is_empty() {
        return Err(Error::InvalidConfig("L-curve sweep needs alphas".into()));
    }
    if alphas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig(
            "L-curve alphas must be nondecreasing".into(),
        ));
    }
    let mut ledger = RunLedger::new();
    let mut points = Vec::with_capacity(alphas.len());
    let mut traces = Vec::new();
    for (idx, &alpha) in alphas.iter().enumerate() {
        let mut ctx = factory(alpha)?;
        match newton_solve(
            ctx.as_mut(),
            k0_field,
            &config.newton,
            config.max_newton_per_solve,
            exact,
        ) {
            Ok(out) => {
                points.push(LcurvePoint {
                    alpha,
                    d: out.value.d,
                    r: out.value.r,
                    rel_error: relative_error(&out.k, exact),
                    k: out.k,
                    newton_steps: out.trace.steps(),
                    failed: false,
                });
                traces.push((format!("lcurve_{idx:02}_alpha{alpha:.6}"), out.trace));
            }
            Err(_) => {
                points.push(LcurvePoint {
                    alpha,
                    d: f64::NAN,
                    r: f64::NAN,
                    k: k0_field.to_vec(),
                    rel_error: f64::NAN,
                    newton_steps: 0,
                    failed: true,
                });
            }
        }
        ledger.merge(ctx.ledger());
    }
    let min_error_index = exact.map(|_| {
        let mut best = 0usize;
        for (i, p) in points.iter().enumerate() {
            if !p.rel_error.is_nan()
                && (points[best].rel_error.is_nan() || p.rel_error < points[best].rel_error)
            {
                best = i;
            }
        }
        best
    });
    Ok(LcurveOutcome {
        points,
        ledger,
        min_error_index,
        traces,
    })
}

/// Maximum-curvature corner of the L-curve in (log D, log R) coordinates via
/// three-point circumcircle curvature; ties break toward larger alpha.
/// Returns the chosen index and a degeneracy flag (collinear points: the
/// minimum-alpha point is returned flagged).
pub fn lcurve_corner(points: &[LcurvePoint]) -> Result<(usize, bool)> {
    let usable: Vec<(usize, f64, f64)> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.failed && p.d > 0.0 && p.r > 0.0)
        .map(|(i, p)| (i, p.d.ln(), p.r.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InvalidConfig(
            "corner detection needs at least 3 usable points".into(),
        ));
    }
    let mut best_idx = None;
    let mut best_curvature = 0.0_f64;
    for w in usable.windows(3) {
        let (_, x1, y1) = w[0];
        let (i2, x2, y2) = w[1];
        let (_, x3, y3) = w[2];
        let (ax, ay) = (x2 - x1, y2 - y1);
        let (bx, by) = (x3 - x1, y3 - y1);
        let cross = ax * by - ay * bx;
        let a = (ax * ax + ay * ay).sqrt();
        let b = (bx * bx + by * by).sqrt();
        let cx = x3 - x2;
        let cy = y3 - y2;
        let c = (cx * cx + cy * cy).sqrt();
        if a == 0.0 || b == 0.0 || c == 0.0 {
            continue;
        }
        let curvature = 2.0 * cross.abs() / (a * b * c);
        if curvature >= best_curvature && curvature > 1e-12 {
            best_curvature = curvature;
            best_idx = Some(i2);
        }
    }
    match best_idx {
        Some(idx) => Ok((idx, false)),
        None => Ok((usable[0].0, true)),
    }
}

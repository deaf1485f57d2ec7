//! Scratch probe: desk-scale solver cost and ECS tail decay.

use std::time::Instant;

use invreg::grid::{build_grid, GridConfig};
use invreg::scattering::{
    assemble_helmholtz, forward_rhs, make_phantom, restrict, ScatteringProblem,
};
use invreg::solvers::{solve_nonhermitian, KrylovConfig, KrylovKind};

fn main() {
    let grid = build_grid(&GridConfig::default()).unwrap();
    println!(
        "grid: {} x {} = {} unknowns, ring {}",
        grid.axis_points(),
        grid.axis_points(),
        grid.total_points(),
        grid.ring_count()
    );
    let problem = ScatteringProblem::new(grid, 8, 1.0, 1.0).unwrap();
    let field = make_phantom(&problem.grid, 1.0, 2.5).unwrap();
    let t0 = Instant::now();
    let matrix = assemble_helmholtz(&problem.grid, &field);
    println!("assembly: {:?}, nnz {}", t0.elapsed(), matrix.nnz());

    let rhs = forward_rhs(&problem.grid, &field, &problem.incoming_waves()[0]);

    for kind in [KrylovKind::Gmres, KrylovKind::BicgStab] {
        for tol in [1e-8f64, 1e-10] {
            let config = KrylovConfig {
                kind,
                tol,
                max_iter: 20_000,
                restart: 200,
            };
            let t = Instant::now();
            let (x, report) = solve_nonhermitian(&matrix, &rhs, None, &config).unwrap();
            println!(
                "{:9} tol {:>7.0e}: iters {:5}, res {:.2e}, conv {}, {:?}",
                report.method, tol, report.iterations, report.final_residual_norm,
                report.converged,
                t.elapsed()
            );
            if kind == KrylovKind::Gmres && tol == 1e-10 {
                // warm-start quality after a small field perturbation
                let mut field2 = field.clone();
                for (i, v) in field2.values.iter_mut().enumerate() {
                    *v += 1e-6 * ((i % 7) as f64 - 3.0);
                }
                let m2 = assemble_helmholtz(&problem.grid, &field2);
                let rhs2 = forward_rhs(&problem.grid, &field2, &problem.incoming_waves()[0]);
                let t = Instant::now();
                let (_, rep2) = solve_nonhermitian(&m2, &rhs2, Some(&x), &config).unwrap();
                println!(
                    "  warm after 1e-6 field bump: iters {}, res {:.2e}, {:?}",
                    rep2.iterations, rep2.final_residual_norm, t.elapsed()
                );
                // tail decay measurement
                let n = problem.grid.axis_points();
                let ring_vals = restrict(&problem, &x);
                let ring_mean: f64 =
                    ring_vals.iter().map(|v| v.norm()).sum::<f64>() / ring_vals.len() as f64;
                for rows in [4usize, 8, 10] {
                    let rows = rows.min(problem.grid.tail_n);
                    let mut acc = 0.0;
                    let mut count = 0usize;
                    for iy in (n - rows)..n {
                        for ix in 0..n {
                            acc += x[iy * n + ix].norm();
                            count += 1;
                        }
                    }
                    println!(
                        "  outermost {} rows mean |u| = {:.3e}; ring mean {:.3e}; ratio {:.3e}",
                        rows,
                        acc / count as f64,
                        ring_mean,
                        acc / count as f64 / ring_mean
                    );
                }
            }
        }
    }
}

//! Helmholtz inverse-scattering testbed.
//!
//! Forward model: (Laplacian + k^2) u_sc = (k0^2 - k^2) u_in per incoming
//! plane-wave angle, discretized with a 5-point stencil on the ECS grid
//! (complex spacings along the tails, homogeneous Dirichlet rows at the tail
//! ends). The wave number k is the control variable: it equals the base k0
//! everywhere outside the interior block and is unknown inside it. Synthetic
//! observations restrict the scattered field to the measurement ring and add
//! complex Gaussian white noise.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::EcsGrid;
use crate::rng::SplitMix64;
use crate::solvers::{solve_nonhermitian, KrylovConfig, SolveReport};
use crate::sparse::ComplexSparseMatrix;
use crate::vec_ops::cnorm_sqr;

/// Real-valued wave-number field on the interior grid.
#[derive(Clone, Debug)]
pub struct WaveNumberField {
    /// Row-major interior values, length interior_n^2; all positive.
    pub values: Vec<f64>,
    /// Base wave number outside the interior (and the phantom's background).
    pub k0: f64,
}

impl WaveNumberField {
    pub fn constant(grid: &EcsGrid, k0: f64) -> Self {
        WaveNumberField {
            values: vec![k0; grid.interior_n * grid.interior_n],
            k0,
        }
    }

    pub fn from_values(grid: &EcsGrid, values: Vec<f64>, k0: f64) -> Result<Self> {
        let expected = grid.interior_n * grid.interior_n;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "wave-number field",
                expected,
                found: values.len(),
            });
        }
        Ok(WaveNumberField { values, k0 })
    }
}

/// The inverse-scattering problem instance: grid, angles, measurement
/// operator, observations and their exact error norm.
#[derive(Clone, Debug)]
pub struct ScatteringProblem {
    pub grid: EcsGrid,
    /// Incoming-wave angles, `angle_count` values uniform in [0, 2 pi).
    pub angles: Vec<f64>,
    pub k0: f64,
    /// Full-grid indices of the measurement ring (defines the restriction L).
    pub restriction: Vec<usize>,
    /// Noisy observations, stacked per angle; length angles * ring points.
    pub observations: Vec<Complex64>,
    /// epsilon = ||L u_exact - observations||^2 (squared-norm convention).
    pub error_norm: f64,
    /// Discrepancy-principle tolerance factor (eta >= 1).
    pub eta: f64,
    pub noise_sigma: f64,
    pub rng_seed: u64,
    /// Precomputed incoming waves per angle on the full grid.
    incoming: Vec<Vec<Complex64>>,
}

impl ScatteringProblem {
    /// Set up the geometry and incoming waves; observations start empty and
    /// are filled by [`generate_observations`].
    pub fn new(grid: EcsGrid, angle_count: usize, k0: f64, eta: f64) -> Result<Self> {
        if angle_count == 0 {
            return Err(Error::InvalidConfig("angle_count must be positive".into()));
        }
        if eta < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "eta must be at least 1, got {eta}"
            )));
        }
        let angles: Vec<f64> = (0..angle_count)
            .map(|t| 2.0 * std::f64::consts::PI * t as f64 / angle_count as f64)
            .collect();
        let incoming = angles
            .iter()
            .map(|&theta| incoming_wave(&grid, k0, theta))
            .collect();
        let restriction = grid.ring_indices();
        Ok(ScatteringProblem {
            grid,
            angles,
            k0,
            restriction,
            observations: Vec::new(),
            error_norm: 0.0,
            eta,
            noise_sigma: 0.0,
            rng_seed: 0,
            incoming,
        })
    }

    pub fn angle_count(&self) -> usize {
        self.angles.len()
    }

    pub fn ring_count(&self) -> usize {
        self.restriction.len()
    }

    /// Total number of scalar observations over all angles.
    pub fn observation_count(&self) -> usize {
        self.angle_count() * self.ring_count()
    }

    pub fn incoming_waves(&self) -> &[Vec<Complex64>] {
        &self.incoming
    }

    /// The discrepancy target eta * epsilon.
    pub fn discrepancy_target(&self) -> f64 {
        self.eta * self.error_norm
    }

    /// Observation block for one angle.
    pub fn observed_for_angle(&self, angle_idx: usize) -> &[Complex64] {
        let m = self.ring_count();
        &self.observations[angle_idx * m..(angle_idx + 1) * m]
    }
}

/// Incoming plane wave exp(i k0 (cos t x + sin t y)) evaluated on the real
/// parts of the grid coordinates (the wave is defined on the physical domain;
/// the rotated tails carry only the outgoing solution).
pub fn incoming_wave(grid: &EcsGrid, k0: f64, theta: f64) -> Vec<Complex64> {
    let n = grid.axis_points();
    let (dir_x, dir_y) = (theta.cos(), theta.sin());
    let mut u = Vec::with_capacity(n * n);
    for iy in 0..n {
        let y = grid.coords_y[iy].re;
        for ix in 0..n {
            let x = grid.coords_x[ix].re;
            let phase = k0 * (dir_x * x + dir_y * y);
            u.push(Complex64::new(phase.cos(), phase.sin()));
        }
    }
    u
}

/// 1D second-derivative weights for spacings h1 (to the left neighbor) and
/// h2 (to the right neighbor): exact on quadratics, first-order on general
/// smooth functions when h1 != h2.
#[inline]
pub fn second_derivative_weights(
    h1: Complex64,
    h2: Complex64,
) -> (Complex64, Complex64, Complex64) {
    let two = Complex64::new(2.0, 0.0);
    let sum = h1 + h2;
    (two / (h1 * sum), -two / (h1 * h2), two / (h2 * sum))
}

/// Wave number at a full-grid point: the field value inside the interior
/// block, k0 everywhere else.
#[inline]
pub fn wave_number_at(grid: &EcsGrid, field: &WaveNumberField, ix: usize, iy: usize) -> f64 {
    if grid.is_interior(ix, iy) {
        let off = grid.interior_offset();
        field.values[(iy - off) * grid.interior_n + (ix - off)]
    } else {
        field.k0
    }
}

/// Assemble (Laplacian + k^2) over the full grid: 5-point stencil with the
/// nonuniform-spacing weights (complex along the tails), k^2 on the diagonal,
/// and identity rows at the outermost Dirichlet layer.
pub fn assemble_helmholtz(grid: &EcsGrid, field: &WaveNumberField) -> ComplexSparseMatrix {
    let n = grid.axis_points();
    let total = n * n;
    let mut triplets: Vec<(usize, usize, Complex64)> = Vec::with_capacity(5 * total);
    for iy in 0..n {
        for ix in 0..n {
            let row = grid.flat_index(ix, iy);
            if grid.is_outer_boundary(ix, iy) {
                triplets.push((row, row, Complex64::new(1.0, 0.0)));
                continue;
            }
            let hx1 = grid.coords_x[ix] - grid.coords_x[ix - 1];
            let hx2 = grid.coords_x[ix + 1] - grid.coords_x[ix];
            let (wxl, wxc, wxr) = second_derivative_weights(hx1, hx2);
            let hy1 = grid.coords_y[iy] - grid.coords_y[iy - 1];
            let hy2 = grid.coords_y[iy + 1] - grid.coords_y[iy];
            let (wyl, wyc, wyr) = second_derivative_weights(hy1, hy2);

            let k = wave_number_at(grid, field, ix, iy);
            triplets.push((row, grid.flat_index(ix - 1, iy), wxl));
            triplets.push((row, grid.flat_index(ix + 1, iy), wxr));
            triplets.push((row, grid.flat_index(ix, iy - 1), wyl));
            triplets.push((row, grid.flat_index(ix, iy + 1), wyr));
            triplets.push((row, row, wxc + wyc + Complex64::new(k * k, 0.0)));
        }
    }
    ComplexSparseMatrix::from_triplets(total, total, triplets)
        .expect("stencil indices are in range by construction")
}

/// Right-hand side (k0^2 - k^2) u_in; supported only where the field differs
/// from k0 (the interior), and zero at Dirichlet rows.
pub fn forward_rhs(
    grid: &EcsGrid,
    field: &WaveNumberField,
    u_in: &[Complex64],
) -> Vec<Complex64> {
    let n = grid.axis_points();
    let mut f = vec![Complex64::new(0.0, 0.0); n * n];
    let off = grid.interior_offset();
    let k0_sq = field.k0 * field.k0;
    for jy in 0..grid.interior_n {
        for jx in 0..grid.interior_n {
            let k = field.values[jy * grid.interior_n + jx];
            let coeff = k0_sq - k * k;
            if coeff != 0.0 {
                let idx = grid.flat_index(off + jx, off + jy);
                f[idx] = coeff * u_in[idx];
            }
        }
    }
    f
}

/// Solve one linear system per right-hand side against a shared matrix,
/// optionally warm-started and optionally in parallel over the systems.
/// Results come back in input order regardless of scheduling.
pub fn solve_many(
    matrix: &ComplexSparseMatrix,
    rhs: &[Vec<Complex64>],
    warm: Option<&[Vec<Complex64>]>,
    config: &KrylovConfig,
    threads: usize,
) -> Vec<(Vec<Complex64>, SolveReport)> {
    let solve_one = |i: usize| -> (Vec<Complex64>, SolveReport) {
        let x0 = warm.and_then(|w| w.get(i)).map(|v| v.as_slice());
        solve_nonhermitian(matrix, &rhs[i], x0, config)
            .expect("dimensions are consistent by construction")
    };
    if threads <= 1 || rhs.len() <= 1 {
        (0..rhs.len()).map(solve_one).collect()
    } else {
        let mut results: Vec<Option<(Vec<Complex64>, SolveReport)>> = vec![None; rhs.len()];
        let workers = threads.min(rhs.len());
        std::thread::scope(|scope| {
            for (w, chunk) in results.chunks_mut(rhs.len().div_ceil(workers)).enumerate() {
                let chunk_start = w * rhs.len().div_ceil(workers);
                let solve_one = &solve_one;
                scope.spawn(move || {
                    for (j, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(solve_one(chunk_start + j));
                    }
                });
            }
        });
        results.into_iter().map(|r| r.expect("all slots filled")).collect()
    }
}

/// Multi-angle forward solve: returns the scattered field per angle.
/// Fails if any angle's solver did not converge.
pub fn forward_solve(
    problem: &ScatteringProblem,
    field: &WaveNumberField,
    config: &KrylovConfig,
    warm: Option<&[Vec<Complex64>]>,
    threads: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let matrix = assemble_helmholtz(&problem.grid, field);
    forward_solve_with_matrix(problem, field, &matrix, config, warm, threads)
}

/// Forward solve against a pre-assembled Helmholtz matrix.
pub fn forward_solve_with_matrix(
    problem: &ScatteringProblem,
    field: &WaveNumberField,
    matrix: &ComplexSparseMatrix,
    config: &KrylovConfig,
    warm: Option<&[Vec<Complex64>]>,
    threads: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let rhs: Vec<Vec<Complex64>> = problem
        .incoming
        .iter()
        .map(|u_in| forward_rhs(&problem.grid, field, u_in))
        .collect();
    let results = solve_many(matrix, &rhs, warm, config, threads);
    let mut fields = Vec::with_capacity(results.len());
    for (angle_idx, (u, report)) in results.into_iter().enumerate() {
        if !report.converged {
            return Err(Error::SolverFailure {
                context: format!("forward solve, angle index {angle_idx}"),
                report,
            });
        }
        fields.push(u);
    }
    Ok(fields)
}

/// Restriction L: select the measurement-ring values of a full-grid solution.
pub fn restrict(problem: &ScatteringProblem, u_full: &[Complex64]) -> Vec<Complex64> {
    problem.restriction.iter().map(|&idx| u_full[idx]).collect()
}

/// Adjoint of the restriction, L*: inject ring values into a full-grid vector
/// (zero away from the ring).
pub fn inject(problem: &ScatteringProblem, ring_values: &[Complex64]) -> Vec<Complex64> {
    let total = problem.grid.total_points();
    let mut u = vec![Complex64::new(0.0, 0.0); total];
    for (&idx, &v) in problem.restriction.iter().zip(ring_values) {
        u[idx] = v;
    }
    u
}

/// Restrict every per-angle solution and stack the results.
pub fn restrict_all(problem: &ScatteringProblem, fields: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(problem.observation_count());
    for u in fields {
        out.extend(restrict(problem, u));
    }
    out
}

/// Three unit Gaussians placed symmetrically on a circle of the given radius;
/// the phantom is k = k0 sqrt(1 + chi).
pub fn phantom_chi(x: f64, y: f64, radius: f64) -> f64 {
    let mut chi = 0.0;
    for i in 0..3 {
        let angle = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
        let cx = radius * angle.cos();
        let cy = radius * angle.sin();
        chi += (-(x - cx) * (x - cx) - (y - cy) * (y - cy)).exp();
    }
    chi
}

/// Evaluate the phantom on the interior grid.
pub fn make_phantom(grid: &EcsGrid, k0: f64, radius: f64) -> Result<WaveNumberField> {
    if radius >= grid.domain_half_width {
        return Err(Error::InvalidConfig(format!(
            "phantom radius {radius} must be smaller than the domain half-width {}",
            grid.domain_half_width
        )));
    }
    let off = grid.interior_offset();
    let mut values = Vec::with_capacity(grid.interior_n * grid.interior_n);
    for jy in 0..grid.interior_n {
        let y = grid.coords_y[off + jy].re;
        for jx in 0..grid.interior_n {
            let x = grid.coords_x[off + jx].re;
            values.push(k0 * (1.0 + phantom_chi(x, y, radius)).sqrt());
        }
    }
    Ok(WaveNumberField { values, k0 })
}

/// Exact (noise-free) ring data for a field: one multi-angle forward solve.
pub fn exact_ring_data(
    problem: &ScatteringProblem,
    field: &WaveNumberField,
    config: &KrylovConfig,
    threads: usize,
) -> Result<Vec<Complex64>> {
    let fields = forward_solve(problem, field, config, None, threads)?;
    Ok(restrict_all(problem, fields.as_slice()))
}

/// Calibrate sigma so the expected noise level ||L u - obs||^2 / ||L u||^2
/// matches `target_level`: sigma = sqrt(target) ||L u|| / sqrt(2 m).
pub fn calibrate_sigma_from_data(l_u_exact: &[Complex64], target_level: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&target_level) {
        return Err(Error::InvalidConfig(format!(
            "noise target level must lie in [0, 1), got {target_level}"
        )));
    }
    let m = l_u_exact.len() as f64;
    Ok((target_level.sqrt()) * cnorm_sqr(l_u_exact).sqrt() / (2.0 * m).sqrt())
}

/// As [`calibrate_sigma_from_data`], computing the exact data itself.
pub fn calibrate_sigma(
    problem: &ScatteringProblem,
    exact_field: &WaveNumberField,
    target_level: f64,
    config: &KrylovConfig,
    threads: usize,
) -> Result<f64> {
    let data = exact_ring_data(problem, exact_field, config, threads)?;
    calibrate_sigma_from_data(&data, target_level)
}

/// Perturb exact ring data with complex Gaussian white noise
/// sigma (e1 + i e2); returns the observations and the exact squared error
/// norm epsilon. Deterministic given the seed.
pub fn generate_observations_from_data(
    l_u_exact: &[Complex64],
    sigma: f64,
    seed: u64,
) -> (Vec<Complex64>, f64) {
    let mut rng = SplitMix64::new(seed);
    let mut observations = Vec::with_capacity(l_u_exact.len());
    let mut epsilon = 0.0;
    for &value in l_u_exact {
        let noise = Complex64::new(rng.next_standard_normal(), rng.next_standard_normal());
        observations.push(value + sigma * noise);
        epsilon += sigma * sigma * noise.norm_sqr();
    }
    (observations, epsilon)
}

/// Fill `problem.observations` from a forward solve at the exact field plus
/// noise. Returns epsilon and the realized noise level.
pub fn generate_observations(
    problem: &mut ScatteringProblem,
    exact_field: &WaveNumberField,
    sigma: f64,
    seed: u64,
    config: &KrylovConfig,
    threads: usize,
) -> Result<(f64, f64)> {
    let data = exact_ring_data(problem, exact_field, config, threads)?;
    let (observations, epsilon) = generate_observations_from_data(&data, sigma, seed);
    let signal = cnorm_sqr(&data);
    problem.observations = observations;
    problem.error_norm = epsilon;
    problem.noise_sigma = sigma;
    problem.rng_seed = seed;
    let level = if signal > 0.0 { epsilon / signal } else { 0.0 };
    Ok((epsilon, level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};
    use crate::solvers::solve_dense;
    use crate::vec_ops::{cdot, cnorm, csub};

    fn tiny_grid() -> EcsGrid {
        build_grid(&GridConfig {
            interior_n: 12,
            buffer_n: 2,
            pre_tail_n: 2,
            tail_n: 4,
            domain_half_width: 5.0,
            tail_angle: std::f64::consts::FRAC_PI_6,
        })
        .unwrap()
    }

    fn tiny_problem() -> ScatteringProblem {
        ScatteringProblem::new(tiny_grid(), 3, 1.0, 1.0).unwrap()
    }

    #[test]
    fn stencil_is_exact_on_quadratics() {
        let grid = tiny_grid();
        let field = WaveNumberField::constant(&grid, 1.0);
        let h = assemble_helmholtz(&grid, &field);
        let n = grid.axis_points();
        let u: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let x = grid.coords_x[idx % n];
                x * x
            })
            .collect();
        let hu = h.spmv(&u).unwrap();
        // Away from the boundary, (H - k^2 I) u = Laplacian(x^2) = 2 exactly.
        for iy in 1..n - 1 {
            for ix in 1..n - 1 {
                let idx = grid.flat_index(ix, iy);
                let k = wave_number_at(&grid, &field, ix, iy);
                let lap = hu[idx] - Complex64::new(k * k, 0.0) * u[idx];
                assert!(
                    (lap - Complex64::new(2.0, 0.0)).norm() < 1e-9,
                    "({ix},{iy}): {lap}"
                );
            }
        }
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let grid = tiny_grid();
        let field = WaveNumberField::constant(&grid, 1.0);
        let h = assemble_helmholtz(&grid, &field);
        let n = grid.axis_points();
        let u = vec![Complex64::new(3.0, 0.0); n * n];
        let hu = h.spmv(&u).unwrap();
        for iy in 1..n - 1 {
            for ix in 1..n - 1 {
                let idx = grid.flat_index(ix, iy);
                let k = wave_number_at(&grid, &field, ix, iy);
                let lap = hu[idx] - Complex64::new(k * k, 0.0) * u[idx];
                assert!(lap.norm() < 1e-10, "({ix},{iy}): {lap}");
            }
        }
    }

    #[test]
    fn nonuniform_weights_match_taylor_oracle() {
        // Exact on quadratics for any spacings; O(h) consistency on cubics.
        let mut rng = SplitMix64::new(21);
        for _ in 0..10 {
            let h1 = 0.1 + 0.4 * rng.next_unit_open();
            let h2 = 0.1 + 0.4 * rng.next_unit_open();
            let (wl, wc, wr) =
                second_derivative_weights(Complex64::new(h1, 0.0), Complex64::new(h2, 0.0));
            let quad = wl * Complex64::new(h1 * h1, 0.0) + wc * Complex64::new(0.0, 0.0)
                + wr * Complex64::new(h2 * h2, 0.0);
            assert!((quad - Complex64::new(2.0, 0.0)).norm() < 1e-11);

            // Cubic x^3 at x = 0: truncation error is exactly 2 (h2 - h1).
            let cubic = wl * Complex64::new(-h1 * h1 * h1, 0.0)
                + wr * Complex64::new(h2 * h2 * h2, 0.0);
            let expected = 2.0 * (h2 - h1);
            assert!((cubic - Complex64::new(expected, 0.0)).norm() < 1e-10);
            // Halving both spacings halves the truncation error: O(h).
            let (wl2, _, wr2) = second_derivative_weights(
                Complex64::new(h1 / 2.0, 0.0),
                Complex64::new(h2 / 2.0, 0.0),
            );
            let cubic_half = wl2 * Complex64::new(-h1 * h1 * h1 / 8.0, 0.0)
                + wr2 * Complex64::new(h2 * h2 * h2 / 8.0, 0.0);
            assert!((cubic_half.re - expected / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_contrast_scatters_nothing() {
        let problem = tiny_problem();
        let field = WaveNumberField::constant(&problem.grid, problem.k0);
        let fields =
            forward_solve(&problem, &field, &KrylovConfig::default(), None, 1).unwrap();
        for u in fields {
            assert!(cnorm(&u) == 0.0, "zero RHS must give exactly zero field");
        }
    }

    #[test]
    fn forward_solution_residual_is_small() {
        let problem = tiny_problem();
        let field = make_phantom(&problem.grid, problem.k0, 2.5).unwrap();
        let config = KrylovConfig {
            tol: 1e-10,
            ..KrylovConfig::default()
        };
        let matrix = assemble_helmholtz(&problem.grid, &field);
        let fields =
            forward_solve_with_matrix(&problem, &field, &matrix, &config, None, 1).unwrap();
        for (angle_idx, u) in fields.iter().enumerate() {
            let f = forward_rhs(&problem.grid, &field, &problem.incoming[angle_idx]);
            let r = csub(&f, &matrix.spmv(u).unwrap());
            assert!(cnorm(&r) / cnorm(&f) <= 1e-10, "angle {angle_idx}");
        }
    }

    #[test]
    fn forward_matches_dense_oracle_on_tiny_grid() {
        let problem = tiny_problem();
        let field = make_phantom(&problem.grid, problem.k0, 2.5).unwrap();
        let config = KrylovConfig {
            tol: 1e-12,
            ..KrylovConfig::default()
        };
        let matrix = assemble_helmholtz(&problem.grid, &field);
        let dense = matrix.to_dense();
        let fields =
            forward_solve_with_matrix(&problem, &field, &matrix, &config, None, 1).unwrap();
        for (angle_idx, u) in fields.iter().enumerate() {
            let f = forward_rhs(&problem.grid, &field, &problem.incoming[angle_idx]);
            let exact = solve_dense(&dense, &f).unwrap();
            let err = cnorm(&csub(u, &exact)) / cnorm(&exact);
            assert!(err < 1e-8, "angle {angle_idx}: {err}");
        }
    }

    #[test]
    fn helmholtz_adjoint_consistency() {
        let problem = tiny_problem();
        let field = make_phantom(&problem.grid, problem.k0, 2.5).unwrap();
        let h = assemble_helmholtz(&problem.grid, &field);
        let n = problem.grid.total_points();
        let mut rng = SplitMix64::new(33);
        let u: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.next_standard_normal(), rng.next_standard_normal()))
            .collect();
        let lam: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.next_standard_normal(), rng.next_standard_normal()))
            .collect();
        let lhs = cdot(&lam, &h.spmv(&u).unwrap());
        let rhs = cdot(&h.spmv_adjoint(&lam).unwrap(), &u);
        assert!((lhs - rhs).norm() <= 1e-12 * (cnorm(&u) * cnorm(&lam) * 100.0));
    }

    #[test]
    fn phantom_peak_and_far_corner() {
        let grid = build_grid(&GridConfig::default()).unwrap();
        // At the first Gaussian's center chi >= 1, so k >= k0 sqrt(2) - tiny.
        let chi_peak = phantom_chi(2.5, 0.0, 2.5);
        assert!(chi_peak >= 1.0);
        assert!((1.0 + chi_peak).sqrt() >= std::f64::consts::SQRT_2 * (1.0 - 1e-6));
        // Far corner is essentially background.
        let chi_corner = phantom_chi(-5.0, -5.0, 2.5);
        assert!(chi_corner < 0.01);
        let field = make_phantom(&grid, 1.0, 2.5).unwrap();
        assert!(field.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn phantom_has_three_fold_symmetry() {
        let (s, c) = (2.0 * std::f64::consts::PI / 3.0).sin_cos();
        let mut rng = SplitMix64::new(34);
        for _ in 0..50 {
            let x = 8.0 * (rng.next_unit_open() - 0.5);
            let y = 8.0 * (rng.next_unit_open() - 0.5);
            let (xr, yr) = (c * x - s * y, s * x + c * y);
            let a = phantom_chi(x, y, 2.5);
            let b = phantom_chi(xr, yr, 2.5);
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn restriction_selects_and_injects() {
        let problem = tiny_problem();
        let total = problem.grid.total_points();
        // Constant field: all observations 1.
        let ones = vec![Complex64::new(1.0, 0.0); total];
        let obs = restrict(&problem, &ones);
        assert!(obs.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        // Index field: observations equal the restriction index list.
        let idx_field: Vec<Complex64> =
            (0..total).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let obs = restrict(&problem, &idx_field);
        for (o, &idx) in obs.iter().zip(&problem.restriction) {
            assert_eq!(o.re, idx as f64);
        }
        // L L* = I: inject-then-restrict is the identity on ring vectors.
        let mut rng = SplitMix64::new(35);
        let ring: Vec<Complex64> = (0..problem.ring_count())
            .map(|_| Complex64::new(rng.next_standard_normal(), rng.next_standard_normal()))
            .collect();
        let back = restrict(&problem, &inject(&problem, &ring));
        assert_eq!(back, ring);
    }

    #[test]
    fn restriction_is_a_partial_isometry() {
        let problem = tiny_problem();
        let total = problem.grid.total_points();
        let mut rng = SplitMix64::new(36);
        let u: Vec<Complex64> = (0..total)
            .map(|_| Complex64::new(rng.next_standard_normal(), rng.next_standard_normal()))
            .collect();
        assert!(cnorm(&restrict(&problem, &u)) <= cnorm(&u));
        // Equality iff supported on the ring.
        let supported = inject(&problem, &restrict(&problem, &u));
        let r = restrict(&problem, &supported);
        assert!((cnorm(&r) - cnorm(&supported)).abs() < 1e-12);
    }

    #[test]
    fn zero_sigma_reproduces_exact_data() {
        let mut problem = tiny_problem();
        let field = make_phantom(&problem.grid, problem.k0, 2.5).unwrap();
        let config = KrylovConfig::default();
        let exact = exact_ring_data(&problem, &field, &config, 1).unwrap();
        let (eps, level) =
            generate_observations(&mut problem, &field, 0.0, 9, &config, 1).unwrap();
        assert_eq!(eps, 0.0);
        assert_eq!(level, 0.0);
        assert_eq!(problem.observations, exact);
    }

    #[test]
    fn sigma_calibration_scales_linearly_and_hits_target() {
        let problem = tiny_problem();
        let field = make_phantom(&problem.grid, problem.k0, 2.5).unwrap();
        let config = KrylovConfig::default();
        let data = exact_ring_data(&problem, &field, &config, 1).unwrap();
        assert_eq!(calibrate_sigma_from_data(&data, 0.0).unwrap(), 0.0);
        let sigma = calibrate_sigma_from_data(&data, 0.10).unwrap();
        let doubled: Vec<Complex64> = data.iter().map(|v| 2.0 * v).collect();
        let sigma2 = calibrate_sigma_from_data(&doubled, 0.10).unwrap();
        assert!((sigma2 - 2.0 * sigma).abs() < 1e-14 * sigma.abs());

        // Realized level is within 15% of the target on a single draw.
        let (obs, eps) = generate_observations_from_data(&data, sigma, 123);
        assert_eq!(obs.len(), data.len());
        let level = eps / cnorm_sqr(&data);
        assert!(
            (level - 0.10).abs() <= 0.15 * 0.10,
            "realized level {level}"
        );
    }

    #[test]
    fn noise_level_ratio_over_many_seeds() {
        // Desk-scale observation count (8 angles x 220 ring points); the
        // +-1% band needs that many degrees of freedom to be reliable.
        let mut rng = SplitMix64::new(40);
        let data: Vec<Complex64> = (0..8 * 220)
            .map(|_| Complex64::new(rng.next_standard_normal(), rng.next_standard_normal()))
            .collect();
        let sigma = calibrate_sigma_from_data(&data, 0.10).unwrap();
        let signal = cnorm_sqr(&data);
        for seed in 0..20 {
            let (_, eps) = generate_observations_from_data(&data, sigma, seed);
            let level = eps / signal;
            assert!((0.09..=0.11).contains(&level), "seed {seed}: {level}");
        }
    }

    #[test]
    fn observations_are_deterministic_in_the_seed() {
        let mut p1 = tiny_problem();
        let mut p2 = tiny_problem();
        let field = make_phantom(&p1.grid, p1.k0, 2.5).unwrap();
        let config = KrylovConfig::default();
        generate_observations(&mut p1, &field, 0.05, 77, &config, 1).unwrap();
        generate_observations(&mut p2, &field, 0.05, 77, &config, 1).unwrap();
        assert_eq!(p1.observations, p2.observations);
        assert_eq!(p1.error_norm, p2.error_norm);
    }

    #[test]
    fn parallel_angle_solves_match_sequential() {
        let problem = tiny_problem();
        let field = make_phantom(&problem.grid, problem.k0, 2.5).unwrap();
        let config = KrylovConfig::default();
        let seq = forward_solve(&problem, &field, &config, None, 1).unwrap();
        let par = forward_solve(&problem, &field, &config, None, 3).unwrap();
        for (a, b) in seq.iter().zip(&par) {
            assert_eq!(a, b, "per-angle chains must be bit-identical");
        }
    }
}

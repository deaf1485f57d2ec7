//! Square grid with exterior-complex-scaling tails.
//!
//! Each axis is laid out symmetrically as
//!
//! ```text
//! tail | pre-tail | buffer |   interior (the physical domain)   | buffer | pre-tail | tail
//! ```
//!
//! Interior, buffer and pre-tail points are real with uniform spacing `h`;
//! tail points continue outward with steps of modulus `h` rotated into the
//! complex plane by the tail angle, so outgoing waves decay along the tails
//! and homogeneous Dirichlet conditions at the tail ends close the system.
//! Measurements live on the perimeter of the buffer+interior+buffer square.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Construction parameters for [`EcsGrid`].
#[derive(Clone, Copy, Debug)]
pub struct GridConfig {
    /// Points per axis across the physical domain (nodes at both endpoints).
    pub interior_n: usize,
    /// Real points between the domain edge and the measurement ring.
    pub buffer_n: usize,
    /// Real points between the measurement ring and the complex tails.
    pub pre_tail_n: usize,
    /// Complex tail points per side.
    pub tail_n: usize,
    /// Half-width of the physical domain [-w, w]^2.
    pub domain_half_width: f64,
    /// Rotation angle of the tails into the complex plane, in (0, pi/2).
    pub tail_angle: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        // Desk-scale profile; the paper-scale run uses 200/10/10/80.
        GridConfig {
            interior_n: 48,
            buffer_n: 4,
            pre_tail_n: 4,
            tail_n: 16,
            domain_half_width: 5.0,
            tail_angle: std::f64::consts::FRAC_PI_6,
        }
    }
}

/// Discretization grid with complex coordinates along the absorbing tails.
#[derive(Clone, Debug)]
pub struct EcsGrid {
    pub interior_n: usize,
    pub buffer_n: usize,
    pub pre_tail_n: usize,
    pub tail_n: usize,
    /// Uniform spacing of the real part of the axis, 2w / (interior_n - 1).
    pub spacing: f64,
    pub tail_angle: f64,
    pub domain_half_width: f64,
    /// Per-axis coordinates, identical for x and y but stored separately.
    pub coords_x: Vec<Complex64>,
    pub coords_y: Vec<Complex64>,
}

/// Build the grid, validating counts and the tail angle.
pub fn build_grid(config: &GridConfig) -> Result<EcsGrid> {
    if config.interior_n < 2 {
        return Err(Error::InvalidConfig(format!(
            "interior_n must be at least 2, got {}",
            config.interior_n
        )));
    }
    if config.domain_half_width <= 0.0 {
        return Err(Error::InvalidConfig(
            "domain_half_width must be positive".into(),
        ));
    }
    if !(config.tail_angle > 0.0 && config.tail_angle < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidConfig(format!(
            "tail_angle must lie in (0, pi/2), got {}",
            config.tail_angle
        )));
    }

    let h = 2.0 * config.domain_half_width / (config.interior_n - 1) as f64;
    let coords = axis_coordinates(config, h);
    Ok(EcsGrid {
        interior_n: config.interior_n,
        buffer_n: config.buffer_n,
        pre_tail_n: config.pre_tail_n,
        tail_n: config.tail_n,
        spacing: h,
        tail_angle: config.tail_angle,
        domain_half_width: config.domain_half_width,
        coords_y: coords.clone(),
        coords_x: coords,
    })
}

fn axis_coordinates(config: &GridConfig, h: f64) -> Vec<Complex64> {
    let w = config.domain_half_width;
    let real_ext = config.buffer_n + config.pre_tail_n;
    let junction = w + real_ext as f64 * h;
    let rot = Complex64::new(config.tail_angle.cos(), config.tail_angle.sin());
    let n_axis = config.interior_n + 2 * (real_ext + config.tail_n);
    let mut coords = Vec::with_capacity(n_axis);

    // Left tail, outermost point first: junction_left - m h e^{i theta}.
    for m in (1..=config.tail_n).rev() {
        coords.push(Complex64::new(-junction, 0.0) - (m as f64 * h) * rot);
    }
    // Real segment: pre-tail + buffer + interior + buffer + pre-tail.
    for j in (1..=real_ext).rev() {
        coords.push(Complex64::new(-w - j as f64 * h, 0.0));
    }
    for i in 0..config.interior_n {
        coords.push(Complex64::new(-w + i as f64 * h, 0.0));
    }
    for j in 1..=real_ext {
        coords.push(Complex64::new(w + j as f64 * h, 0.0));
    }
    // Right tail: junction_right + m h e^{i theta}.
    for m in 1..=config.tail_n {
        coords.push(Complex64::new(junction, 0.0) + (m as f64 * h) * rot);
    }
    coords
}

impl EcsGrid {
    /// Points per axis: interior + 2 (buffer + pre-tail + tail).
    pub fn axis_points(&self) -> usize {
        self.interior_n + 2 * (self.buffer_n + self.pre_tail_n + self.tail_n)
    }

    /// Total unknowns of the full 2D grid.
    pub fn total_points(&self) -> usize {
        self.axis_points() * self.axis_points()
    }

    /// Offset of the first interior index along an axis.
    pub fn interior_offset(&self) -> usize {
        self.tail_n + self.pre_tail_n + self.buffer_n
    }

    /// Axis index of the measurement ring's lower edge (ring = perimeter of
    /// the buffer+interior+buffer square).
    pub fn ring_low(&self) -> usize {
        self.tail_n + self.pre_tail_n
    }

    pub fn ring_high(&self) -> usize {
        self.axis_points() - 1 - self.ring_low()
    }

    #[inline]
    pub fn flat_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.axis_points() + ix
    }

    /// Full-grid flat index of interior point (jx, jy).
    #[inline]
    pub fn interior_to_full(&self, jx: usize, jy: usize) -> usize {
        let off = self.interior_offset();
        self.flat_index(off + jx, off + jy)
    }

    /// Is the full-grid point on the outermost layer (Dirichlet rows)?
    #[inline]
    pub fn is_outer_boundary(&self, ix: usize, iy: usize) -> bool {
        let last = self.axis_points() - 1;
        ix == 0 || iy == 0 || ix == last || iy == last
    }

    /// Does the full-grid point lie in the interior block?
    #[inline]
    pub fn is_interior(&self, ix: usize, iy: usize) -> bool {
        let off = self.interior_offset();
        let hi = off + self.interior_n;
        ix >= off && ix < hi && iy >= off && iy < hi
    }

    /// Measurement-ring flat indices, ordered counter-clockwise starting from
    /// the top-left corner of the ring square (y up): down the left edge,
    /// along the bottom, up the right edge, back along the top.
    pub fn ring_indices(&self) -> Vec<usize> {
        let lo = self.ring_low();
        let hi = self.ring_high();
        let mut indices = Vec::with_capacity(4 * (hi - lo));
        for iy in (lo..=hi).rev() {
            indices.push(self.flat_index(lo, iy));
        }
        for ix in (lo + 1)..=hi {
            indices.push(self.flat_index(ix, lo));
        }
        for iy in (lo + 1)..=hi {
            indices.push(self.flat_index(hi, iy));
        }
        for ix in ((lo + 1)..hi).rev() {
            indices.push(self.flat_index(ix, hi));
        }
        indices
    }

    /// Number of measurement points per angle: 4 (K - 1) for a K x K ring.
    pub fn ring_count(&self) -> usize {
        4 * (self.ring_high() - self.ring_low())
    }
}

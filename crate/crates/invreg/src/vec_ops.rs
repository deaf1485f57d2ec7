//! Small dense-vector kernels shared by the iterative solvers.
//!
//! All vectors in the crate are plain `Vec`s; the inner products below use
//! the convention <x|y> = x* y (conjugation on the first argument).

use num_complex::Complex64;

#[inline]
pub fn cdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[inline]
pub fn cnorm(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

#[inline]
pub fn cnorm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>()
}

/// y += alpha * x
#[inline]
pub fn caxpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn cscale(alpha: f64, x: &mut [Complex64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Test helper: elementwise x - y.
#[cfg(test)]
#[inline]
pub fn csub(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

#[inline]
pub fn rdot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn rnorm(x: &[f64]) -> f64 {
    rdot(x, x).sqrt()
}

/// x + alpha * d as a new vector.
#[inline]
pub fn radd_scaled(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

/// Content hash of a real vector, used as a cache key for solutions computed
/// at a given wave-number field. Bit-exact: two fields hash equal iff their
/// f64 bit patterns are identical.
pub fn field_hash(x: &[f64]) -> u64 {
    // FNV-1a over the little-endian bytes of each component.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdot_conjugates_first_argument() {
        let x = vec![Complex64::new(0.0, 1.0)];
        let y = vec![Complex64::new(2.0, 0.0)];
        // <i|2> = conj(i)*2 = -2i
        assert_eq!(cdot(&x, &y), Complex64::new(0.0, -2.0));
    }

    #[test]
    fn field_hash_distinguishes_sign_of_zero() {
        assert_ne!(field_hash(&[0.0]), field_hash(&[-0.0]));
        assert_eq!(field_hash(&[1.5, 2.5]), field_hash(&[1.5, 2.5]));
    }
}

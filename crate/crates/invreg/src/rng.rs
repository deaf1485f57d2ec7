//! Deterministic random number generation for synthetic data.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood, 2014): a 64-bit counter
//! advanced by the golden-ratio increment and finalized with two xor-shift
//! multiplies. It is documented here in full so that observation noise is
//! bit-reproducible across platforms and toolchains; Gaussian deviates come
//! from the Box-Muller transform.

/// SplitMix64 stream. State advances by 0x9E3779B97F4A7C15 per draw.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in (0, 1]: 53 mantissa bits, never exactly zero so that
    /// Box-Muller's logarithm is always finite.
    pub fn next_unit_open(&mut self) -> f64 {
        let bits53 = self.next_u64() >> 11;
        (bits53 as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal deviate via Box-Muller. Draws two uniforms per call;
    /// the second branch of the transform is discarded to keep the stream
    /// position independent of call parity.
    pub fn next_standard_normal(&mut self) -> f64 {
        let u1 = self.next_unit_open();
        let u2 = self.next_unit_open();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

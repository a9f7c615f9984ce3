//! Counter-based random numbers.
//!
//! Draw `j` of sample `i` is a pure function of `(seed, stream, i, j)`: there
//! is no generator state carried between samples. Any partition of the sample
//! index range over worker threads therefore produces the same draws, and two
//! estimators that use the same seed see the same random stream, which is what
//! coupled (change-of-variables) experiments rely on.

use std::f64::consts::TAU;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const DRAW_MULT: u64 = 0xd1b5_4a32_d192_ed03;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed counter-based generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x6a09_e667_f3bc_c908),
        }
    }

    /// An independent sub-generator, e.g. one per stratum or per experiment arm.
    pub fn stream(&self, tag: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(tag.wrapping_add(GOLDEN))),
        }
    }

    /// The draws belonging to sample `index`.
    #[inline]
    pub fn sample(&self, index: u64) -> SampleDraws {
        SampleDraws {
            base: mix64(self.key.wrapping_add(index.wrapping_mul(GOLDEN))),
            next: 0,
        }
    }
}

/// Sequential view over the draws of one sample.
#[derive(Debug, Clone)]
pub struct SampleDraws {
    base: u64,
    next: u64,
}

impl SampleDraws {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.next += 1;
        mix64(self.base ^ self.next.wrapping_mul(DRAW_MULT))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (consumes two draws).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Uniform unit vector in R^dim, written into `out`.
    pub fn unit_vector(&mut self, out: &mut [f64]) {
        loop {
            let mut norm2 = 0.0;
            for v in out.iter_mut() {
                *v = self.normal();
                norm2 += *v * *v;
            }
            if norm2 > 1e-300 {
                let inv = norm2.sqrt().recip();
                out.iter_mut().for_each(|v| *v *= inv);
                return;
            }
        }
    }

    /// Uniform point in the ball `B(0, radius)` of R^dim.
    pub fn in_ball(&mut self, radius: f64, out: &mut [f64]) {
        self.unit_vector(out);
        let rho = radius * self.uniform().powf(1.0 / out.len() as f64);
        out.iter_mut().for_each(|v| *v *= rho);
    }
}

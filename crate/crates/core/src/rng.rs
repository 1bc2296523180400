//! Seeded, platform-independent random numbers.
//!
//! The generator is splitmix64: a 64-bit counter advanced by the golden-ratio
//! increment and passed through a fixed avalanche finalizer. Uniform draws use
//! the top 53 bits; Gaussian draws use the Box–Muller cosine branch (one
//! normal per two uniforms, no cached spare).

use crate::tensor::{Scalar, Tensor};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the `index`-th child seed of `seed`. Pure function.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededRng {
    state: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn int_range(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(hi >= lo, "empty range {lo}..={hi}");
        let span = (hi - lo) as u64 + 1;
        lo + (self.next_u64() % span) as i64
    }

    /// Uniform index in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn gaussian(&mut self) -> f64 {
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Draw `n` values into a rank-1 tensor.
    pub fn draw<T: Scalar>(&mut self, dist: Distribution, n: usize) -> Tensor<T> {
        assert!(n >= 1, "rng_draw needs n >= 1");
        let data = (0..n)
            .map(|_| {
                let v = match dist {
                    Distribution::Uniform => self.uniform(),
                    Distribution::Gaussian => self.gaussian(),
                };
                T::of(v)
            })
            .collect();
        Tensor::from_vec(vec![n], data).expect("rank-1 shape matches")
    }
}

/// Weight initialisation scheme; biases always start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// U(±sqrt(6 / (fan_in + fan_out))).
    #[default]
    GlorotUniform,
    /// U(±sqrt(6 / fan_in)); keeps activation variance through deep ReLU stacks.
    HeUniform,
}

impl Init {
    pub fn limit(self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            Init::GlorotUniform => glorot_limit(fan_in, fan_out),
            Init::HeUniform => (6.0 / fan_in as f64).sqrt(),
        }
    }
}

/// Glorot/Xavier uniform limit for a layer with the given fan-in and fan-out.
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub(crate) fn fill_uniform<T: Scalar>(rng: &mut SeededRng, out: &mut [T], limit: f64) {
    for v in out.iter_mut() {
        *v = T::of(rng.uniform_range(-limit, limit));
    }
}

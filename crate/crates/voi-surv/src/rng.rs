//! Deterministic random-number streams keyed by a logical path.
//!
//! Every stochastic unit of work (an outer posterior draw, an MCMC chain, a
//! coefficient-draw block) gets its own ChaCha8 stream whose 256-bit key is
//! derived from the run seed and a short path of words naming the unit.
//! Streams are independent of execution order and thread count, so results
//! are byte-identical however the work is scheduled.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E3779B97F4A7C15;

/// splitmix64 finalizer: a 64-bit bijective mixer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive a 256-bit ChaCha key from the run seed and a stream path.
///
/// The path is absorbed word by word into a splitmix64 chain; four further
/// increments squeeze out the key. Distinct (seed, path) pairs give
/// unrelated keys, and the empty path is itself a valid stream.
fn derive_key(seed: u64, path: &[u64]) -> [u8; 32] {
    let mut state = mix(seed ^ GOLDEN);
    for &w in path {
        state = mix(state.wrapping_add(GOLDEN) ^ mix(w));
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let word = mix(state.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    key
}

/// Factory for keyed random streams under one run seed.
#[derive(Debug, Clone, Copy)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    /// Create a stream factory for a run seed.
    pub fn new(seed: u64) -> Self {
        Streams { seed }
    }

    /// The run seed this factory was built from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Open the stream named by `path`.
    pub fn stream(&self, path: &[u64]) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(derive_key(self.seed, path))
    }

    /// Derive a child seed for a component that keys its own streams.
    ///
    /// Children opened under distinct paths are independent of each other
    /// and of every stream opened directly from this factory.
    pub fn subseed(&self, path: &[u64]) -> u64 {
        let key = derive_key(self.seed, path);
        u64::from_le_bytes(key[..8].try_into().expect("key holds 32 bytes"))
    }
}

/// One pair of independent standard normal draws via Box-Muller.
///
/// Consumes exactly two uniforms, so the stream position after n pairs is
/// the same as after 2n uniform draws. The radius uses 1 - u in (0, 1] to
/// keep the logarithm finite.
#[inline]
pub fn standard_normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Uniform draw on [lo, 1), used for sampling conditional on survival.
#[inline]
pub fn uniform_from<R: Rng + ?Sized>(rng: &mut R, lo: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&lo));
    lo + (1.0 - lo) * rng.random::<f64>()
}

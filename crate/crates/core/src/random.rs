//! Seeded random streams and complex Gaussian draws.
//!
//! Every stochastic operation in the crate takes `&mut impl Rng`; nothing
//! reads a global generator. Monte-Carlo drivers obtain one independent
//! stream per `(master seed, domain, index)` from [`stream`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `(master, domain, index)`.
///
/// `domain` separates experiments and purposes (coupling draw, trials, ...),
/// `index` is usually the trial number and selects the ChaCha stream, so two
/// different triples never share keystream.
pub fn stream(master: u64, domain: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(splitmix64(master ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `exp(j·2π·u)` with `u ~ Uniform[0, 1)`.
#[inline]
pub fn unit_phasor<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let u: f64 = rng.random();
    Complex64::from_polar(1.0, std::f64::consts::TAU * u)
}

//! Particle-cloud resampling and diagnostics.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::glmb::ParticleCloud;
use crate::label::{Kinematic, STATE_DIM};

/// `1 / Σ w²`.
pub fn effective_sample_size(cloud: &ParticleCloud) -> f64 {
    1.0 / cloud.weights().iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling to `n` equally weighted particles: one uniform
/// offset, `n` evenly spaced pointers into the weight CDF.
pub fn systematic_resample<R: Rng + ?Sized>(cloud: &ParticleCloud, n: usize, rng: &mut R) -> ParticleCloud {
    assert!(n > 0, "resampling to zero particles");
    let step = 1.0 / n as f64;
    let u0: f64 = rng.random::<f64>() * step;
    let states = cloud.states();
    let weights = cloud.weights();
    let mut out = Vec::with_capacity(n);
    let mut cdf = weights[0];
    let mut i = 0;
    for k in 0..n {
        let u = u0 + k as f64 * step;
        while u > cdf && i + 1 < states.len() {
            i += 1;
            cdf += weights[i];
        }
        out.push(states[i]);
    }
    ParticleCloud::uniform(out)
}

/// `n` samples of `mean + sd ⊙ N(0, I)` with the amplitude clamped at zero.
pub fn gaussian_cloud<R: Rng + ?Sized>(mean: &Kinematic, sd: &Kinematic, n: usize, rng: &mut R) -> ParticleCloud {
    let states = (0..n)
        .map(|_| {
            let mut x = *mean;
            for (xi, si) in x.iter_mut().zip(sd) {
                let z: f64 = StandardNormal.sample(rng);
                *xi += si * z;
            }
            x[STATE_DIM - 1] = x[STATE_DIM - 1].max(0.0);
            x
        })
        .collect();
    ParticleCloud::uniform(states)
}

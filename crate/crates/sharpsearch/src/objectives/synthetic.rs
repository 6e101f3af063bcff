//! Deterministic synthetic landscapes over a search space.
//!
//! value = clamp(0.5 + Σ main_effect(spec, choice)
//!                   + Σ interaction(spec_i, choice_i, spec_j, choice_j)
//!                   + noise(config), 0, 1)
//!
//! Every term is derived by hashing (landscape seed, term coordinates) into
//! a generator seed, so evaluation is O(#specs²) with no stored tables and
//! identical across calls and processes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use super::ObjectiveError;
use crate::optimizer::{Objective, ObjectiveFailure};
use crate::space::{Configuration, SearchSpace};

const BASE: f64 = 0.5;
const MAIN_EFFECT_SD: f64 = 0.1;
const INTERACTION_SD: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct SyntheticLandscape {
    space: SearchSpace,
    seed: u64,
    noise_std: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

fn standard_normal(seed: u64) -> f64 {
    rand_distr::StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

impl SyntheticLandscape {
    pub fn new(space: SearchSpace, seed: u64, noise_std: f64) -> Self {
        Self { space, seed, noise_std }
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn evaluate(&self, config: &Configuration) -> Result<f64, ObjectiveError> {
        let indices = self.space.indices_of(config)?;
        let mut value = BASE;
        for (i, &ci) in indices.iter().enumerate() {
            value +=
                MAIN_EFFECT_SD * standard_normal(mix(self.seed, &[1, i as u64, ci as u64]));
            for (j, &cj) in indices.iter().enumerate().skip(i + 1) {
                value += INTERACTION_SD
                    * standard_normal(mix(
                        self.seed,
                        &[2, i as u64, ci as u64, j as u64, cj as u64],
                    ));
            }
        }
        if self.noise_std > 0.0 {
            let mut parts = vec![3u64];
            parts.extend(indices.iter().map(|&c| c as u64));
            value += self.noise_std * standard_normal(mix(self.seed, &parts));
        }
        Ok(value.clamp(0.0, 1.0))
    }
}

impl Objective for SyntheticLandscape {
    fn evaluate(&self, config: &Configuration, _seed: u64) -> Result<f64, ObjectiveFailure> {
        SyntheticLandscape::evaluate(self, config).map_err(Into::into)
    }
}

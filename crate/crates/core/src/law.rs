//! Laws on the non-negative integers used for offspring and immigration counts.

use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountLaw {
    Poisson {
        mean: f64,
    },
    /// Unit-mean law with `P(X >= k) = k^-alpha / zeta(alpha)` for `k >= 1`.
    HeavyTail {
        alpha: f64,
    },
    /// Finite probability vector on `0..probs.len()`.
    Pmf {
        probs: Vec<f64>,
    },
    PointMass {
        value: u64,
    },
}

impl CountLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            CountLaw::Poisson { mean } if !(*mean >= 0.0 && mean.is_finite()) => {
                Err(invalid("Poisson mean must be finite and non-negative"))
            }
            CountLaw::HeavyTail { alpha } if !(*alpha > 1.0 && *alpha < 2.0) => {
                Err(invalid("heavy-tail index must lie in (1, 2)"))
            }
            CountLaw::Pmf { probs } => {
                if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) {
                    return Err(invalid("pmf entries must be non-negative"));
                }
                let s: f64 = probs.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(invalid("pmf must sum to one"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            CountLaw::Poisson { mean } => *mean,
            CountLaw::HeavyTail { .. } => 1.0,
            CountLaw::Pmf { probs } => probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
            CountLaw::PointMass { value } => *value as f64,
        }
    }

    /// Variance, infinite for the heavy-tailed family.
    pub fn variance(&self) -> f64 {
        match self {
            CountLaw::Poisson { mean } => *mean,
            CountLaw::HeavyTail { .. } => f64::INFINITY,
            CountLaw::Pmf { probs } => {
                let m = self.mean();
                probs
                    .iter()
                    .enumerate()
                    .map(|(k, p)| (k as f64 - m).powi(2) * p)
                    .sum()
            }
            CountLaw::PointMass { .. } => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            CountLaw::Poisson { mean } => poisson(*mean, rng),
            CountLaw::HeavyTail { alpha } => {
                let c = 1.0 / zeta(*alpha);
                // P(X >= k) = c k^-alpha for k >= 1 and P(X >= 0) = 1.
                let u: f64 = 1.0 - rng.random::<f64>();
                let k = (c / u).powf(1.0 / alpha).floor();
                if k >= u64::MAX as f64 {
                    u64::MAX
                } else {
                    k as u64
                }
            }
            CountLaw::Pmf { probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return k as u64;
                    }
                }
                (probs.len() - 1) as u64
            }
            CountLaw::PointMass { value } => *value,
        }
    }

    /// Sum of `count` independent draws.
    pub fn sample_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> u64 {
        match self {
            CountLaw::Poisson { mean } => poisson(mean * count as f64, rng),
            CountLaw::PointMass { value } => value * count,
            _ => (0..count).map(|_| self.sample(rng)).sum(),
        }
    }
}

pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u64
}

/// Riemann zeta for real `s > 1` by Euler-Maclaurin summation.
pub fn zeta(s: f64) -> f64 {
    const N: usize = 16;
    let nf = N as f64;
    let mut acc: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    acc += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // Bernoulli corrections B_2k / (2k)! * s(s+1)...(s+2k-2) * N^(-s-2k+1).
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0];
    let mut rising = s;
    let mut fact = 2.0;
    for (j, bj) in b.iter().enumerate() {
        let k2 = 2 * (j + 1);
        acc += bj / fact * rising * nf.powf(-s - k2 as f64 + 1.0);
        rising *= (s + k2 as f64 - 1.0) * (s + k2 as f64);
        fact *= ((k2 + 1) * (k2 + 2)) as f64;
    }
    acc
}

//! Spectrally positive Lévy processes given by a branching mechanism
//!
//! `Psi(l) = a l + b l^2 + s l^alpha + rate * sum_r p_r (exp(-l r) - 1 + l r 1[r < 1])`
//!
//! with `E exp(-l X_t) = exp(t Psi(l))`.

use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::law::poisson;
use crate::path::{Interp, SampledPath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableComponent {
    /// Index in `(1, 2)`.
    pub alpha: f64,
    /// Coefficient of `l^alpha` in the mechanism.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoisson {
    pub rate: f64,
    pub sizes: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSpec {
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub gaussian: f64,
    #[serde(default)]
    pub stable: Option<StableComponent>,
    #[serde(default)]
    pub cpoisson: Option<CompoundPoisson>,
    /// Immigration rate, carried alongside the mechanism.
    #[serde(default)]
    pub delta: f64,
}

impl MechanismSpec {
    pub fn brownian(gaussian: f64) -> Self {
        Self {
            gaussian,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(invalid("drift must be finite"));
        }
        if !(self.gaussian >= 0.0 && self.gaussian.is_finite()) {
            return Err(invalid(
                "Gaussian coefficient must be finite and non-negative",
            ));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(invalid("immigration rate must be finite and non-negative"));
        }
        if let Some(s) = &self.stable {
            if !(s.alpha > 1.0 && s.alpha < 2.0) {
                return Err(invalid("stable index must lie in (1, 2)"));
            }
            if !(s.scale > 0.0 && s.scale.is_finite()) {
                return Err(invalid("stable scale must be positive"));
            }
        }
        if let Some(cp) = &self.cpoisson {
            if !(cp.rate >= 0.0 && cp.rate.is_finite()) {
                return Err(invalid("jump rate must be finite and non-negative"));
            }
            if cp.sizes.len() != cp.probs.len() || cp.sizes.is_empty() {
                return Err(invalid("jump sizes and probabilities must pair up"));
            }
            if cp.sizes.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return Err(invalid("jump sizes must be positive"));
            }
            if cp.probs.iter().any(|p| !(*p >= 0.0)) {
                return Err(invalid("jump probabilities must be non-negative"));
            }
            if (cp.probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(invalid("jump probabilities must sum to one"));
            }
        }
        // Every representable mechanism is convex; this guards against
        // numerical surprises in the Lévy part.
        let h = 0.05;
        for i in 1..200 {
            let l = i as f64 * h;
            let d2 = self.psi(l + h) - 2.0 * self.psi(l) + self.psi(l - h);
            if d2 < -1e-9 * (1.0 + self.psi(l).abs()) {
                return Err(invalid("mechanism is not convex"));
            }
        }
        Ok(())
    }

    pub fn psi(&self, l: f64) -> f64 {
        let mut v = self.drift * l + self.gaussian * l * l;
        if let Some(s) = &self.stable {
            v += s.scale * l.powf(s.alpha);
        }
        if let Some(cp) = &self.cpoisson {
            let sum: f64 = cp
                .sizes
                .iter()
                .zip(&cp.probs)
                .map(|(&r, &p)| {
                    let comp = if r < 1.0 { l * r } else { 0.0 };
                    p * ((-l * r).exp() - 1.0 + comp)
                })
                .sum();
            v += cp.rate * sum;
        }
        v
    }

    /// Conservativity: `int_0 1/|Psi| = infinity`.
    ///
    /// Every representable mechanism has a finite right derivative at zero,
    /// so `|Psi(l)| <= C l` near zero and the integral diverges.
    pub fn validate_conservative(&self) -> bool {
        true
    }

    pub fn conservativity_rule(&self) -> &'static str {
        "finite derivative at zero implies a divergent integral of 1/|Psi| near zero"
    }

    /// Continuous height process: `int^infinity 1/Psi < infinity`.
    ///
    /// Holds iff the mechanism grows faster than linearly, i.e. it has a
    /// Gaussian part or a stable part; drift and finite-rate jumps alone give
    /// at most linear growth.
    pub fn validate_cts_height(&self) -> bool {
        self.gaussian > 0.0 || self.stable.is_some()
    }

    /// Deterministic compensation drift of the compound Poisson part.
    fn jump_compensation(&self) -> f64 {
        match &self.cpoisson {
            Some(cp) => {
                cp.rate
                    * cp.sizes
                        .iter()
                        .zip(&cp.probs)
                        .filter(|(&r, _)| r < 1.0)
                        .map(|(&r, &p)| p * r)
                        .sum::<f64>()
            }
            None => 0.0,
        }
    }

    /// One increment of `X` over a step of length `dt`.
    pub fn increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        let mut dx = -self.drift * dt;
        if self.gaussian > 0.0 {
            let n: f64 = StandardNormal.sample(rng);
            dx += (2.0 * self.gaussian * dt).sqrt() * n;
        }
        if let Some(s) = &self.stable {
            let sigma = (dt * s.scale * (core::f64::consts::FRAC_PI_2 * s.alpha).cos().abs())
                .powf(1.0 / s.alpha);
            dx += sigma * totally_skewed_stable(s.alpha, rng);
        }
        if let Some(cp) = &self.cpoisson {
            let jumps = poisson(cp.rate * dt, rng);
            for _ in 0..jumps {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut size = *cp.sizes.last().unwrap();
                for (&r, &p) in cp.sizes.iter().zip(&cp.probs) {
                    acc += p;
                    if u < acc {
                        size = r;
                        break;
                    }
                }
                dx += size;
            }
            dx -= self.jump_compensation() * dt;
        }
        dx
    }
}

/// Standard totally skewed to the right `alpha`-stable variable
/// (Chambers-Mallows-Stuck, `beta = 1`, unit scale in the `S1` parametrisation).
pub fn totally_skewed_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    use core::f64::consts::{FRAC_PI_2, PI};
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    let t = (FRAC_PI_2 * alpha).tan();
    let b = t.atan() / alpha;
    let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
    let a_vb = alpha * (v + b);
    s * a_vb.sin() / v.cos().powf(1.0 / alpha) * ((v - a_vb).cos() / w).powf((1.0 - alpha) / alpha)
}

/// `X` on `[0, horizon]` as a càdlàg step path with step `dt`.
pub fn simulate_levy<R: Rng + ?Sized>(
    m: &MechanismSpec,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<SampledPath> {
    m.validate()?;
    if !(horizon >= 0.0 && dt > 0.0) {
        return Err(invalid("horizon must be non-negative and dt positive"));
    }
    let steps = (horizon / dt).round() as usize;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    let mut x = 0.0;
    for _ in 0..steps {
        x += m.increment(dt, rng);
        values.push(x);
    }
    SampledPath::new(dt, values, Interp::PiecewiseConstantLeft)
}

/// Append `extra_steps` increments to an existing path.
pub fn extend_levy<R: Rng + ?Sized>(
    path: &mut SampledPath,
    m: &MechanismSpec,
    extra_steps: usize,
    rng: &mut R,
) {
    let mut x = path.last();
    path.values.reserve(extra_steps);
    for _ in 0..extra_steps {
        x += m.increment(path.dt, rng);
        path.values.push(x);
    }
}

/// Rescaled offspring and immigration walks after `n` steps:
/// `(1/n) sum_{j < n gamma} (chi_j - 1)` and `(1/n) sum_{j <= gamma} eta_j`.
pub fn offspring_walk<R: Rng + ?Sized>(
    offspring: &crate::law::CountLaw,
    immigration: &crate::law::CountLaw,
    n: u64,
    gamma: u64,
    rng: &mut R,
) -> (f64, f64) {
    let steps = n * gamma;
    let x = offspring.sample_sum(steps, rng) as f64 - steps as f64;
    let y = immigration.sample_sum(gamma, rng) as f64;
    (x / n as f64, y / n as f64)
}

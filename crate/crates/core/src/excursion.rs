//! Brownian bridges and excursions, their drift transforms, and the left
//! height process of Brownian motion with immigration.

use alloc::vec;
use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::localtime::{occupation_histogram, LocalTimeProfile};
use crate::path::{Interp, KnotPath, SampledPath};

fn unit_steps(dt: f64) -> Result<usize> {
    let n = (1.0 / dt).round() as usize;
    if n < 1 || ((n as f64) * dt - 1.0).abs() > 1e-9 {
        return Err(invalid("dt must divide 1"));
    }
    Ok(n)
}

fn bridge_values<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let sq = (1.0 / n as f64).sqrt();
    let mut w = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    w.push(0.0);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(rng);
        acc += sq * z;
        w.push(acc);
    }
    let w1 = acc;
    for (i, v) in w.iter_mut().enumerate() {
        *v -= (i as f64 / n as f64) * w1;
    }
    w[n] = 0.0;
    w
}

/// Standard Brownian bridge `W_t - t W_1` on `[0, 1]`.
pub fn brownian_bridge<R: Rng + ?Sized>(dt: f64, rng: &mut R) -> Result<SampledPath> {
    let n = unit_steps(dt)?;
    SampledPath::new(1.0 / n as f64, bridge_values(n, rng), Interp::Linear)
}

/// `|B|` for a Brownian bridge `B`.
pub fn reflected_bridge<R: Rng + ?Sized>(dt: f64, rng: &mut R) -> Result<SampledPath> {
    let mut b = brownian_bridge(dt, rng)?;
    for v in b.values.iter_mut() {
        *v = v.abs();
    }
    Ok(b)
}

/// Normalised Brownian excursion, as the norm of three independent bridges.
pub fn brownian_excursion<R: Rng + ?Sized>(dt: f64, rng: &mut R) -> Result<SampledPath> {
    let n = unit_steps(dt)?;
    let b1 = bridge_values(n, rng);
    let b2 = bridge_values(n, rng);
    let b3 = bridge_values(n, rng);
    let values = (0..=n)
        .map(|i| (b1[i] * b1[i] + b2[i] * b2[i] + b3[i] * b3[i]).sqrt())
        .collect();
    SampledPath::new(1.0 / n as f64, values, Interp::Linear)
}

/// `X_t = B_t - x t + sup_{t-1 <= s <= t} (x s - B_s)` with `B` extended
/// 1-periodically.
pub fn drift_transform_bridge(b: &SampledPath, x: f64) -> Result<SampledPath> {
    let n = b.len() - 1;
    let (b0, b1) = (b.values[0], b.values[n]);
    if b0.abs() > 1e-12 || b1.abs() > 1e-12 {
        return Err(Error::NotABridge { start: b0, end: b1 });
    }
    let t = |i: usize| i as f64 / n as f64;
    // Suffix part: s = u - 1 for u in [t, 1].
    let mut suffix = vec_with(n + 1, f64::NEG_INFINITY);
    let mut run = f64::NEG_INFINITY;
    for i in (0..=n).rev() {
        run = run.max(x * (t(i) - 1.0) - b.values[i]);
        suffix[i] = run;
    }
    let mut prefix = f64::NEG_INFINITY;
    let values = (0..=n)
        .map(|i| {
            prefix = prefix.max(x * t(i) - b.values[i]);
            b.values[i] - x * t(i) + prefix.max(suffix[i])
        })
        .collect();
    SampledPath::new(b.dt, values, Interp::Linear)
}

/// `X_t = e_t - x t + sup_{s <= t} (x s - e_s)`.
pub fn drift_transform_excursion(e: &SampledPath, x: f64) -> Result<SampledPath> {
    let n = e.len() - 1;
    let t = |i: usize| i as f64 / n as f64;
    let mut prefix = f64::NEG_INFINITY;
    let values = (0..=n)
        .map(|i| {
            prefix = prefix.max(x * t(i) - e.values[i]);
            e.values[i] - x * t(i) + prefix
        })
        .collect();
    SampledPath::new(e.dt, values, Interp::Linear)
}

fn vec_with(n: usize, v: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    out.resize(n, v);
    out
}

/// Step-by-step generator of `2 (S - W) + (S - x)_+ / delta` for a standard
/// Brownian motion `W` with running maximum `S`.
///
/// The maximum over each step is drawn exactly from its conditional law given
/// the endpoints, so `S` is exact at every knot whatever the step length.
#[derive(Debug, Clone)]
pub struct LeftHeightWalker {
    pub x: f64,
    pub delta: f64,
    pub t: f64,
    pub w: f64,
    pub s: f64,
}

impl LeftHeightWalker {
    pub fn new(x: f64, delta: f64) -> Result<Self> {
        if !(x >= 0.0 && delta > 0.0) {
            return Err(invalid("need x >= 0 and delta > 0"));
        }
        Ok(Self {
            x,
            delta,
            t: 0.0,
            w: 0.0,
            s: 0.0,
        })
    }

    /// Levels below this are never visited again.
    pub fn floor(&self) -> f64 {
        (self.s - self.x).max(0.0) / self.delta
    }

    pub fn height(&self) -> f64 {
        2.0 * (self.s - self.w) + self.floor()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, h: f64, rng: &mut R) {
        let z: f64 = StandardNormal.sample(rng);
        let w1 = self.w + h.sqrt() * z;
        let u: f64 = 1.0 - rng.random::<f64>();
        let d = w1 - self.w;
        let m = 0.5 * (self.w + w1 + (d * d - 2.0 * h * u.ln()).sqrt());
        self.s = self.s.max(m);
        self.w = w1;
        self.t += h;
    }
}

/// A left height path together with the level below which it will never
/// return.
#[derive(Debug, Clone)]
pub struct LeftHeightPath {
    pub path: KnotPath,
    pub floor_end: f64,
}

/// Left height process that can be pushed further on demand, so that a caller
/// needing more levels keeps the path already drawn.
///
/// Steps of length `dt` are used while the height is within reach of the
/// target level; above it steps grow so that an excursion back down would be
/// a many-sigma event, which keeps long horizons affordable.
#[derive(Debug, Clone)]
pub struct LeftHeightSim {
    walker: LeftHeightWalker,
    dt: f64,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl LeftHeightSim {
    pub fn new(x: f64, delta: f64, dt: f64) -> Result<Self> {
        let walker = LeftHeightWalker::new(x, delta)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("need dt > 0"));
        }
        Ok(Self {
            walker,
            dt,
            times: vec![0.0],
            values: vec![0.0],
        })
    }

    pub fn floor(&self) -> f64 {
        self.walker.floor()
    }

    /// Run until levels up to `a_max` are never revisited.
    pub fn extend_until_floor<R: Rng + ?Sized>(
        &mut self,
        a_max: f64,
        horizon_cap: f64,
        rng: &mut R,
    ) -> Result<()> {
        if !(a_max >= 0.0) {
            return Err(invalid("need a_max >= 0"));
        }
        const SIGMAS: f64 = 8.0;
        let dt = self.dt;
        let margin = 2.0 * SIGMAS * dt.sqrt();
        let w = &mut self.walker;
        while w.floor() <= a_max {
            if w.t > horizon_cap {
                return Err(Error::HorizonCapExceeded { cap: horizon_cap });
            }
            let hgt = w.height();
            let h = if hgt <= a_max + margin {
                dt
            } else {
                let gap = (hgt - a_max) / (2.0 * SIGMAS);
                (gap * gap).max(dt)
            };
            w.step(h, rng);
            self.times.push(w.t);
            self.values.push(w.height());
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Result<LeftHeightPath> {
        Ok(LeftHeightPath {
            path: KnotPath::new(self.times.clone(), self.values.clone())?,
            floor_end: self.walker.floor(),
        })
    }
}

/// Left height process run until levels up to `a_max` are never revisited.
pub fn left_height_brownian<R: Rng + ?Sized>(
    x: f64,
    delta: f64,
    a_max: f64,
    dt: f64,
    horizon_cap: f64,
    rng: &mut R,
) -> Result<LeftHeightPath> {
    let mut sim = LeftHeightSim::new(x, delta, dt)?;
    sim.extend_until_floor(a_max, horizon_cap, rng)?;
    sim.snapshot()
}

/// Occupation data of an excursion-type path on `[0, 1]`: the cumulative
/// time spent below each level, and its inverse.
#[derive(Debug, Clone)]
pub struct JeulinMaps {
    pub local_time: LocalTimeProfile,
    /// `cum[b]` is the time spent below level `b * dv`.
    pub cum: Vec<f64>,
}

pub fn jeulin_input(e: &SampledPath, dv: f64) -> Result<JeulinMaps> {
    let local_time = occupation_histogram(e, dv)?;
    let mut cum = Vec::with_capacity(local_time.mass.len() + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for &m in &local_time.mass {
        acc += m * dv;
        cum.push(acc);
    }
    Ok(JeulinMaps { local_time, cum })
}

impl JeulinMaps {
    fn dv(&self) -> f64 {
        self.local_time.dv
    }

    /// Fraction of time spent at or below `level`.
    pub fn h(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        let s = level / self.dv();
        let b = s.floor() as usize;
        if b + 1 >= self.cum.len() {
            return *self.cum.last().unwrap();
        }
        let w = s - b as f64;
        self.cum[b] + w * (self.cum[b + 1] - self.cum[b])
    }

    /// `inf { level : H(level) > t }`.
    pub fn h_inv(&self, t: f64) -> f64 {
        let b = self.cum.partition_point(|&c| c <= t);
        if b == 0 {
            return 0.0;
        }
        if b == self.cum.len() {
            return (self.cum.len() - 1) as f64 * self.dv();
        }
        let (c0, c1) = (self.cum[b - 1], self.cum[b]);
        ((b - 1) as f64 + (t - c0) / (c1 - c0)) * self.dv()
    }

    /// `(1/2) L^{H^{-1}(t)}`.
    pub fn half_local_time_at_quantile(&self, t: f64) -> f64 {
        0.5 * self.local_time.at_level(self.h_inv(t))
    }
}

//! Sampled one-dimensional paths.

use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// How a [`SampledPath`] is read between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    /// Value on `[t_i, t_{i+1})` is `values[i]` (càdlàg step path).
    PiecewiseConstantLeft,
    Linear,
}

/// A path sampled on the uniform grid `t_i = i * dt`, `i = 0..values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    pub dt: f64,
    pub values: Vec<f64>,
    pub interp: Interp,
}

/// One piece of a path on `[t0, t1]`, linear from `y0` to `y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Anything that can be cut into linear pieces, for occupation measures.
pub trait Trajectory {
    fn for_each_segment<F: FnMut(Segment)>(&self, f: F);
    fn duration(&self) -> f64;
}

impl SampledPath {
    pub fn new(dt: f64, values: Vec<f64>, interp: Interp) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("path step dt must be positive and finite"));
        }
        if values.is_empty() {
            return Err(invalid("path needs at least one sample"));
        }
        Ok(Self { dt, values, interp })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last grid time.
    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }

    /// Value at time `t`, clamped to the grid range.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.values.len();
        if t <= 0.0 || n == 1 {
            return self.values[0];
        }
        let s = t / self.dt;
        let i = s.floor() as usize;
        if i >= n - 1 {
            return self.values[n - 1];
        }
        match self.interp {
            Interp::PiecewiseConstantLeft => self.values[i],
            Interp::Linear => {
                let w = s - i as f64;
                self.values[i] + w * (self.values[i + 1] - self.values[i])
            }
        }
    }

    /// `int_0^t` of the path, consistent with its interpolation rule.
    pub fn integral_to(&self, t: f64) -> f64 {
        let n = self.values.len();
        let t = t.min(self.horizon()).max(0.0);
        let s = t / self.dt;
        let full = (s.floor() as usize).min(n - 1);
        let mut acc = 0.0;
        for i in 0..full {
            acc += match self.interp {
                Interp::PiecewiseConstantLeft => self.values[i],
                Interp::Linear => 0.5 * (self.values[i] + self.values[i + 1]),
            };
        }
        acc *= self.dt;
        if full < n - 1 {
            let rem = (t - full as f64 * self.dt).max(0.0);
            acc += match self.interp {
                Interp::PiecewiseConstantLeft => self.values[full] * rem,
                Interp::Linear => {
                    let y0 = self.values[full];
                    let slope = (self.values[full + 1] - y0) / self.dt;
                    rem * (y0 + 0.5 * slope * rem)
                }
            };
        }
        acc
    }

    /// Running integral at every grid point.
    pub fn cumulative_integral(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += match self.interp {
                Interp::PiecewiseConstantLeft => w[0],
                Interp::Linear => 0.5 * (w[0] + w[1]),
            } * self.dt;
            out.push(acc);
        }
        out
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Trajectory for SampledPath {
    fn for_each_segment<F: FnMut(Segment)>(&self, mut f: F) {
        for (i, w) in self.values.windows(2).enumerate() {
            let t0 = i as f64 * self.dt;
            let y1 = match self.interp {
                Interp::PiecewiseConstantLeft => w[0],
                Interp::Linear => w[1],
            };
            f(Segment {
                t0,
                t1: t0 + self.dt,
                y0: w[0],
                y1,
            });
        }
    }

    fn duration(&self) -> f64 {
        self.horizon()
    }
}

/// A piecewise-linear path through arbitrary increasing knot times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl KnotPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::GridMismatch(alloc::format!(
                "{} knot times for {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("knot times must be strictly increasing"));
        }
        Ok(Self { times, values })
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.times.len() {
            return *self.values.last().unwrap();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        y0 + (t - t0) / (t1 - t0) * (y1 - y0)
    }

    pub fn to_sampled(&self, dt: f64) -> Result<SampledPath> {
        let t_end = *self.times.last().unwrap() - self.times[0];
        let n = (t_end / dt).floor() as usize;
        let values = (0..=n)
            .map(|i| self.value_at(self.times[0] + i as f64 * dt))
            .collect();
        SampledPath::new(dt, values, Interp::Linear)
    }
}

impl Trajectory for KnotPath {
    fn for_each_segment<F: FnMut(Segment)>(&self, mut f: F) {
        for i in 1..self.times.len() {
            f(Segment {
                t0: self.times[i - 1],
                t1: self.times[i],
                y0: self.values[i - 1],
                y1: self.values[i],
            });
        }
    }

    fn duration(&self) -> f64 {
        *self.times.last().unwrap() - self.times[0]
    }
}

/// Integral of a trajectory over its whole time range.
pub fn area<P: Trajectory>(p: &P) -> f64 {
    let mut acc = 0.0;
    p.for_each_segment(|s| acc += 0.5 * (s.y0 + s.y1) * (s.t1 - s.t0));
    acc
}

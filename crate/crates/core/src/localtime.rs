//! Occupation densities (local times) of non-negative paths and the
//! functionals built from them.

use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::excursion::LeftHeightPath;
use crate::path::{area, Segment, Trajectory};

/// Occupation density on bins `[b dv, (b + 1) dv)`: `mass[b]` is the time
/// spent in bin `b` divided by `dv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeProfile {
    pub dv: f64,
    pub mass: Vec<f64>,
}

impl LocalTimeProfile {
    /// Density at `level`, zero outside the recorded bins.
    pub fn at_level(&self, level: f64) -> f64 {
        if level < 0.0 {
            return 0.0;
        }
        let b = (level / self.dv).floor() as usize;
        self.mass.get(b).copied().unwrap_or(0.0)
    }

    /// `int l^2 dv` over all levels.
    pub fn squared_integral(&self) -> f64 {
        self.mass.iter().map(|m| m * m).sum::<f64>() * self.dv
    }

    /// `int_0^level l^2 dv`.
    pub fn squared_integral_to(&self, level: f64) -> f64 {
        self.partial(level, |m| m * m)
    }

    /// `int_0^level l dv`.
    pub fn mass_to(&self, level: f64) -> f64 {
        self.partial(level, |m| m)
    }

    fn partial<F: Fn(f64) -> f64>(&self, level: f64, f: F) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        let s = level / self.dv;
        let full = (s.floor() as usize).min(self.mass.len());
        let mut acc: f64 = self.mass[..full].iter().map(|&m| f(m)).sum::<f64>() * self.dv;
        if full < self.mass.len() {
            acc += f(self.mass[full]) * (level - full as f64 * self.dv);
        }
        acc
    }

    /// `inf { v : int_0^v l > r }`, infinite if the total mass is at most `r`.
    pub fn level_for_mass(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for (b, &m) in self.mass.iter().enumerate() {
            let next = acc + m * self.dv;
            if next > r {
                return b as f64 * self.dv + (r - acc) / m;
            }
            acc = next;
        }
        f64::INFINITY
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() * self.dv
    }
}

/// Exact occupation histogram of a path read as linear pieces.
pub fn occupation_histogram<P: Trajectory>(path: &P, dv: f64) -> Result<LocalTimeProfile> {
    occupation_histogram_below(path, dv, f64::INFINITY)
}

/// As [`occupation_histogram`], only recording levels below `max_level`.
pub fn occupation_histogram_below<P: Trajectory>(
    path: &P,
    dv: f64,
    max_level: f64,
) -> Result<LocalTimeProfile> {
    if !(dv > 0.0 && dv.is_finite()) {
        return Err(invalid("bin width must be positive"));
    }
    let max_bin = if max_level.is_finite() {
        (max_level / dv).ceil() as usize
    } else {
        usize::MAX
    };
    let mut time: Vec<f64> = Vec::new();
    let mut negative = false;
    path.for_each_segment(|s: Segment| {
        let tau = s.t1 - s.t0;
        let (y0, y1) = (s.y0.max(0.0), s.y1.max(0.0));
        if s.y0 < -1e-9 || s.y1 < -1e-9 {
            negative = true;
        }
        let lo = y0.min(y1);
        let hi = y0.max(y1);
        let b_lo = (lo / dv).floor() as usize;
        if b_lo >= max_bin {
            return;
        }
        // A segment ending exactly on a bin edge spends no time above it.
        let b_hi = if hi > lo {
            (((hi / dv).ceil() as usize).saturating_sub(1)).max(b_lo)
        } else {
            b_lo
        }
        .min(max_bin - 1);
        if time.len() <= b_hi {
            time.resize(b_hi + 1, 0.0);
        }
        if hi - lo <= 0.0 {
            time[b_lo] += tau;
            return;
        }
        let rate = tau / (hi - lo);
        for (b, slot) in time.iter_mut().enumerate().take(b_hi + 1).skip(b_lo) {
            let a = (b as f64 * dv).max(lo);
            let c = ((b + 1) as f64 * dv).min(hi);
            if c > a {
                *slot += (c - a) * rate;
            }
        }
    });
    if negative {
        return Err(invalid("occupation densities need a non-negative path"));
    }
    let mass = time.into_iter().map(|t| t / dv).collect();
    Ok(LocalTimeProfile { dv, mass })
}

/// `int_0^1 X - (1 / beta) int l^2`.
pub fn gs_functional<P: Trajectory>(path: &P, beta: f64, dv: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(invalid("beta must be positive"));
    }
    let lt = occupation_histogram(path, dv)?;
    Ok(area(path) - lt.squared_integral() / beta)
}

/// `delta int H 1[H <= V_r] dt - int_0^{V_r} l^2` for a left height path,
/// with `V_r` the level at which the local time first accumulates mass `r`.
pub fn crt_functional(lh: &LeftHeightPath, delta: f64, r: f64, dv: f64) -> Result<f64> {
    let lt = occupation_histogram_below(&lh.path, dv, lh.floor_end)?;
    let v = lt.level_for_mass(r);
    if !(v < lh.floor_end) {
        return Err(Error::InsufficientHorizon {
            needed: v,
            floor: lh.floor_end,
        });
    }
    let mut weighted = 0.0;
    lh.path.for_each_segment(|s| {
        let tau = s.t1 - s.t0;
        let lo = s.y0.min(s.y1);
        let hi = s.y0.max(s.y1);
        if lo > v {
            return;
        }
        if hi - lo <= 0.0 {
            weighted += lo * tau;
            return;
        }
        let top = hi.min(v);
        weighted += tau / (hi - lo) * 0.5 * (top * top - lo * lo);
    });
    Ok(delta * weighted - lt.squared_integral_to(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{Interp, KnotPath, SampledPath};
    use alloc::vec;

    #[test]
    fn constant_path_puts_all_mass_in_one_bin() {
        let p = SampledPath::new(0.25, vec![0.35; 5], Interp::Linear).unwrap();
        let lt = occupation_histogram(&p, 0.1).unwrap();
        assert_eq!(lt.mass.len(), 4);
        assert!((lt.mass[3] - 10.0).abs() < 1e-12);
        assert_eq!(lt.mass[..3], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_ramp_has_flat_density() {
        let p = SampledPath::new(1.0, vec![0.0, 2.0], Interp::Linear).unwrap();
        let lt = occupation_histogram(&p, 0.5).unwrap();
        for m in &lt.mass {
            assert!((m - 0.5).abs() < 1e-12);
        }
        assert!((lt.total_mass() - 1.0).abs() < 1e-12);
        assert!((lt.level_for_mass(0.5) - 1.0).abs() < 1e-12);
        // int_0^2 (1/2)^2 dv
        assert!((lt.squared_integral() - 0.5).abs() < 1e-12);
        // area 1, minus 0.5 / 2
        assert!((gs_functional(&p, 2.0, 0.5).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn negative_paths_are_rejected() {
        let p = SampledPath::new(1.0, vec![0.0, -1.0], Interp::Linear).unwrap();
        assert!(occupation_histogram(&p, 0.5).is_err());
    }

    #[test]
    fn capped_histogram_ignores_high_levels() {
        let p = KnotPath::new(vec![0.0, 1.0, 2.0], vec![0.0, 100.0, 0.0]).unwrap();
        let lt = occupation_histogram_below(&p, 0.5, 1.0).unwrap();
        assert_eq!(lt.mass.len(), 2);
        assert!((lt.mass[0] - 0.02).abs() < 1e-12);
    }

    #[test]
    fn crt_functional_on_a_ramp() {
        // H rises from 0 to 4 over [0, 4] and never returns below 3.
        let path = KnotPath::new(vec![0.0, 4.0], vec![0.0, 4.0]).unwrap();
        let lh = LeftHeightPath {
            path,
            floor_end: 3.0,
        };
        // l = 1 on [0, 3): V_r = r, delta int_0^r a da - int_0^r 1 = delta r^2/2 - r.
        let got = crt_functional(&lh, 2.0, 1.5, 0.25).unwrap();
        assert!((got - (2.25 - 1.5)).abs() < 1e-12);
        assert!(matches!(
            crt_functional(&lh, 2.0, 3.5, 0.25),
            Err(Error::InsufficientHorizon { .. })
        ));
    }
}

//! Discrete and continuous Lamperti transforms with immigration.

use alloc::format;
use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forest::HeightProfile;
use crate::path::{Interp, SampledPath};

/// Generation sizes from the walks `x_m = sum_{j<m} (chi_j - 1)` and
/// `y_h = sum_{j<=h} eta_j`: `z_0 = k`, `z_{h+1} = k + x_{c_h} + y_{h+1}`.
pub fn discrete_lamperti(
    roots: u64,
    x_walk: &[i64],
    y_walk: &[i64],
    height_cap: usize,
) -> Result<HeightProfile> {
    let mut z = Vec::with_capacity(height_cap);
    if height_cap == 0 {
        return Ok(HeightProfile::from(z));
    }
    z.push(roots);
    let mut c = roots as usize;
    while z.len() < height_cap {
        let h1 = z.len();
        let x = *x_walk.get(c).ok_or(Error::IndexOutOfRange {
            what: "offspring walk",
            index: c,
            len: x_walk.len(),
        })?;
        let y = *y_walk.get(h1).ok_or(Error::IndexOutOfRange {
            what: "immigration walk",
            index: h1,
            len: y_walk.len(),
        })?;
        let next = roots as i64 + x + y;
        if next < 0 {
            return Err(invalid(format!(
                "walks give a negative generation size {next} at height {h1}"
            )));
        }
        z.push(next as u64);
        c += next as usize;
    }
    Ok(HeightProfile::from(z))
}

/// Walks of a driving sequence, in the form [`discrete_lamperti`] expects.
pub fn walks(offspring: &[u64], immigrants: &[u64]) -> (Vec<i64>, Vec<i64>) {
    let mut x = Vec::with_capacity(offspring.len() + 1);
    let mut acc = 0i64;
    x.push(0);
    for &c in offspring {
        acc += c as i64 - 1;
        x.push(acc);
    }
    let mut y = Vec::with_capacity(immigrants.len() + 1);
    let mut acc = 0i64;
    y.push(0);
    for &e in immigrants {
        acc += e as i64;
        y.push(acc);
    }
    (x, y)
}

/// A solution `Z` together with its clock `C_t = int_0^t Z`, both on the same
/// uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledZC {
    pub z: SampledPath,
    pub c: SampledPath,
    /// Steps where a negative value was clipped to zero.
    pub clipped: usize,
    /// Time at which the solution was absorbed at zero, if it was.
    pub absorbed_at: Option<f64>,
    /// Whether the run reached its intended end.
    pub completed: bool,
}

impl CoupledZC {
    /// Clipping touched more than 0.1% of the steps.
    pub fn clip_flagged(&self) -> bool {
        self.clipped as f64 > 1e-3 * (self.z.len() - 1).max(1) as f64
    }

    /// Right-continuous inverse `V_r = inf { t : C_t > r }` on the grid
    /// `r_j = j dr`; entries past the end of `C` are infinite.
    pub fn inverse_clock(&self, dr: f64, len: usize) -> Result<SampledPath> {
        inverse_time_change(&self.c, dr, len)
    }
}

/// Euler scheme for `Z_t = x + X(C_t) + delta t`, `C_t = int_0^t Z`.
///
/// `X` is read as a left-constant step path. With `delta = 0` the solution is
/// absorbed at zero; with `delta > 0` negative values are clipped to zero and
/// counted. Running past the end of `X` is an error so that the caller can
/// extend the driving path and retry.
pub fn continuous_lamperti(
    x_path: &SampledPath,
    x0: f64,
    delta: f64,
    horizon: f64,
    dt: f64,
) -> Result<CoupledZC> {
    if !(x0 >= 0.0 && delta >= 0.0 && dt > 0.0 && horizon >= 0.0) {
        return Err(invalid("need x >= 0, delta >= 0, dt > 0, horizon >= 0"));
    }
    let steps = (horizon / dt).round() as usize;
    let mut z = Vec::with_capacity(steps + 1);
    let mut c = Vec::with_capacity(steps + 1);
    let mut zi = x0 + x_path.value_at(0.0);
    let mut ci = 0.0;
    let mut clipped = 0;
    let mut absorbed_at = None;
    if zi <= 0.0 && delta == 0.0 {
        zi = 0.0;
        absorbed_at = Some(0.0);
    }
    z.push(zi);
    c.push(ci);
    let x_end = x_path.horizon();
    for i in 1..=steps {
        let t = i as f64 * dt;
        if absorbed_at.is_some() {
            z.push(0.0);
            c.push(ci);
            continue;
        }
        ci += zi * dt;
        if ci > x_end {
            return Err(Error::HorizonExhausted {
                needed: ci,
                available: x_end,
            });
        }
        zi = x0 + x_path.value_at(ci) + delta * t;
        if zi < 0.0 {
            if delta == 0.0 {
                absorbed_at = Some(t);
            } else {
                clipped += 1;
            }
            zi = 0.0;
        }
        z.push(zi);
        c.push(ci);
    }
    Ok(CoupledZC {
        z: SampledPath::new(dt, z, Interp::Linear)?,
        c: SampledPath::new(dt, c, Interp::Linear)?,
        clipped,
        absorbed_at,
        completed: true,
    })
}

/// Right-continuous inverse of a non-decreasing linearly interpolated path at
/// a single level; infinite if the path never exceeds `r`.
pub fn inverse_at(c: &SampledPath, r: f64) -> f64 {
    let v = &c.values;
    let i = v.partition_point(|&x| x <= r);
    if i == v.len() {
        return f64::INFINITY;
    }
    if i == 0 {
        return 0.0;
    }
    let (c0, c1) = (v[i - 1], v[i]);
    (i - 1) as f64 * c.dt + (r - c0) / (c1 - c0) * c.dt
}

pub fn inverse_time_change(c: &SampledPath, dr: f64, len: usize) -> Result<SampledPath> {
    if c.values.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("time change must be non-decreasing"));
    }
    let values = (0..len).map(|j| inverse_at(c, j as f64 * dr)).collect();
    SampledPath::new(dr, values, Interp::Linear)
}

/// Cumulative trapezoid integral of `f(v, Z_v)` along the grid of `zc`.
pub(crate) fn cumulative_along<F: Fn(f64, f64) -> f64>(zc: &CoupledZC, f: F) -> Vec<f64> {
    let dt = zc.z.dt;
    let mut out = Vec::with_capacity(zc.z.len());
    out.push(0.0);
    let mut acc = 0.0;
    let mut prev = f(0.0, zc.z.values[0]);
    for (i, &zv) in zc.z.values.iter().enumerate().skip(1) {
        let cur = f(i as f64 * dt, zv);
        acc += 0.5 * (prev + cur) * dt;
        out.push(acc);
        prev = cur;
    }
    out
}

/// Value of a cumulative grid integral at `V_t`, linear inside the cell.
pub(crate) fn integral_at_clock(zc: &CoupledZC, cum: &[f64], t: f64) -> Result<f64> {
    let v = inverse_at(&zc.c, t);
    if !v.is_finite() {
        // The clock may stop exactly at t, as for bridges run to completion.
        if (zc.c.last() - t).abs() <= 1e-12 * t.abs().max(1.0) {
            return Ok(*cum.last().unwrap());
        }
        return Err(Error::GridMismatch(format!(
            "time {t} lies beyond the end of the clock at {}",
            zc.c.last()
        )));
    }
    let s = v / zc.z.dt;
    let i = (s.floor() as usize).min(cum.len() - 1);
    if i + 1 >= cum.len() {
        return Ok(cum[i]);
    }
    let w = s - i as f64;
    Ok(cum[i] + w * (cum[i + 1] - cum[i]))
}

/// Both sides of `int_0^{V_t} (Z_u - delta u)^n Z_u du = int_0^t (x + X_u)^n du`
/// at each time in `t_grid`.
pub fn pathwise_identity(
    zc: &CoupledZC,
    x_path: &SampledPath,
    x0: f64,
    delta: f64,
    n_power: i32,
    t_grid: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let cum = cumulative_along(zc, |u, z| (z - delta * u).powi(n_power) * z);
    let mut lhs = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        lhs.push(integral_at_clock(zc, &cum, t)?);
    }
    let rhs = rhs_integrals(x_path, x0, n_power, t_grid)?;
    Ok((lhs, rhs))
}

/// `int_0^t (x + X_u)^n du` for each `t`, exact for the step path `X`.
fn rhs_integrals(x_path: &SampledPath, x0: f64, n_power: i32, t_grid: &[f64]) -> Result<Vec<f64>> {
    let end = x_path.horizon();
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t > end + 1e-12 {
            return Err(Error::GridMismatch(format!(
                "time {t} lies beyond the driving path horizon {end}"
            )));
        }
        let full = ((t / x_path.dt).floor() as usize).min(x_path.len() - 1);
        let mut acc: f64 = x_path.values[..full]
            .iter()
            .map(|&xv| (x0 + xv).powi(n_power))
            .sum::<f64>()
            * x_path.dt;
        acc += (x0 + x_path.values[full]).powi(n_power) * (t - full as f64 * x_path.dt).max(0.0);
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{build_forest, OffspringSequence};
    use alloc::vec;

    #[test]
    fn worked_example_through_walks() {
        let offspring = [1, 1, 3, 2, 0, 2, 1, 0, 1, 1, 0, 0, 2, 0, 1, 0, 2, 0, 0, 0];
        let (x, y) = walks(&offspring, &[2, 0, 1]);
        let p = discrete_lamperti(4, &x, &y, 4).unwrap();
        assert_eq!(p.sizes(), &[4, 9, 7, 4]);
        let seq = OffspringSequence {
            roots: 4,
            offspring: offspring.to_vec(),
            immigrants: vec![2, 0, 1],
        };
        assert_eq!(build_forest(&seq, 24).unwrap(), p);
    }

    #[test]
    fn flat_and_dying_walks() {
        let x = vec![0i64; 100];
        let y = vec![0i64; 10];
        assert_eq!(
            discrete_lamperti(5, &x, &y, 4).unwrap().sizes(),
            &[5, 5, 5, 5]
        );
        let x: Vec<i64> = (0..10).map(|m| -m).collect();
        assert_eq!(discrete_lamperti(3, &x, &y, 3).unwrap().sizes(), &[3, 0, 0]);
        assert!(matches!(
            discrete_lamperti(5, &x[..4], &y, 4),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn linear_drift_gives_exponential_decay() {
        let dx = 1e-4;
        let xs: Vec<f64> = (0..=20_000).map(|i| -(i as f64) * dx).collect();
        let x = SampledPath::new(dx, xs, Interp::PiecewiseConstantLeft).unwrap();
        let zc = continuous_lamperti(&x, 1.0, 0.0, 1.0, 1e-4).unwrap();
        let err = (zc.z.last() - (-1.0f64).exp()).abs();
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn exhausted_driving_path_is_an_error() {
        let x = SampledPath::new(0.1, vec![0.0; 5], Interp::PiecewiseConstantLeft).unwrap();
        assert!(matches!(
            continuous_lamperti(&x, 1.0, 0.0, 1.0, 0.01),
            Err(Error::HorizonExhausted { .. })
        ));
    }

    #[test]
    fn inverse_of_flat_and_quadratic_clocks() {
        let dt = 0.01;
        let vals: Vec<f64> = (0..=300)
            .map(|i| {
                let t = i as f64 * dt;
                if t <= 1.0 {
                    t
                } else if t <= 2.0 {
                    1.0
                } else {
                    t - 1.0
                }
            })
            .collect();
        let c = SampledPath::new(dt, vals, Interp::Linear).unwrap();
        assert!((inverse_at(&c, 1.0) - 2.0).abs() < 1e-9);
        assert!((inverse_at(&c, 0.5) - 0.5).abs() < 1e-9);
        assert!(inverse_at(&c, 5.0).is_infinite());

        let sq: Vec<f64> = (0..=200).map(|i| (i as f64 * dt).powi(2)).collect();
        let c = SampledPath::new(dt, sq, Interp::Linear).unwrap();
        assert!((inverse_at(&c, 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_holds_exactly_for_constant_solutions() {
        let x = SampledPath::new(0.01, vec![0.0; 301], Interp::PiecewiseConstantLeft).unwrap();
        let zc = continuous_lamperti(&x, 1.0, 0.0, 2.0, 0.01).unwrap();
        let grid = [0.5, 1.0, 1.5];
        let (l, r) = pathwise_identity(&zc, &x, 1.0, 0.0, 1, &grid).unwrap();
        for i in 0..3 {
            assert!((l[i] - grid[i]).abs() < 1e-12);
            assert!((r[i] - grid[i]).abs() < 1e-12);
        }
    }
}

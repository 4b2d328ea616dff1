//! Square-root SDEs with a time-changed clock, Bessel-type bridges, and the
//! Gaussian functionals they produce.
//!
//! The unconditioned equation is
//! `dZ = g(C) sqrt(Z) dW + (c + f(C) Z) dv` with `C_v = int_0^v Z`, and the
//! bridge equation adds `- Z^2 / (1 - C)` to the drift and stops as `C -> 1`.

use alloc::format;
use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::func::FunctionSpec;
use crate::lamperti::{cumulative_along, integral_at_clock, inverse_at, CoupledZC};
use crate::path::{Interp, SampledPath};
use crate::quad;

/// Solutions larger than this are treated as having blown up.
pub const BLOW_UP: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcSde {
    pub x: f64,
    pub c: f64,
    pub f: FunctionSpec,
    pub g: FunctionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcRun {
    pub dt: f64,
    /// Maximum time in the `v` (SDE) clock.
    pub v_horizon: f64,
    /// Stop once `C` exceeds this; also the interval on which `g` is checked.
    pub clock_horizon: f64,
    /// Accept `x = 0`, where the SDE starts at the boundary.
    pub allow_zero_start: bool,
}

fn check_uc(sde: &UcSde, run: &UcRun) -> Result<()> {
    sde.f.validate()?;
    let gb = sde.g.validate_as_diffusion(run.clock_horizon)?;
    if sde.c < 0.5 * gb.sup * gb.sup {
        return Err(invalid(format!(
            "need c >= sup g^2 / 2 on [0, {}], got c = {} and sup g = {}",
            run.clock_horizon, sde.c, gb.sup
        )));
    }
    if sde.x < 0.0 || (sde.x == 0.0 && !run.allow_zero_start) {
        return Err(invalid(
            "x = 0 is an unsupported regime unless explicitly allowed; x must be >= 0",
        ));
    }
    if !(run.dt > 0.0 && run.v_horizon > 0.0) {
        return Err(invalid("dt and the v horizon must be positive"));
    }
    Ok(())
}

/// Full-truncation Euler scheme; `C` is integrated by the trapezoid rule.
pub fn euler_zsde_uc<R: Rng + ?Sized>(sde: &UcSde, run: &UcRun, rng: &mut R) -> Result<CoupledZC> {
    check_uc(sde, run)?;
    let dt = run.dt;
    let sq = dt.sqrt();
    let max_steps = (run.v_horizon / dt).ceil() as usize;
    let mut z_out = Vec::new();
    let mut c_out = Vec::new();
    let mut z = sde.x;
    let mut c = 0.0;
    z_out.push(z);
    c_out.push(c);
    let mut step = 0;
    while step < max_steps && c <= run.clock_horizon {
        let zp = z.max(0.0);
        let n: f64 = StandardNormal.sample(rng);
        z += (sde.c + sde.f.eval(c) * zp) * dt + sde.g.eval(c) * zp.sqrt() * sq * n;
        if !z.is_finite() || z.abs() > BLOW_UP {
            return Err(Error::BlowUp { step, value: z });
        }
        let zn = z.max(0.0);
        c += 0.5 * (zp + zn) * dt;
        z_out.push(zn);
        c_out.push(c);
        step += 1;
    }
    Ok(CoupledZC {
        z: SampledPath::new(dt, z_out, Interp::Linear)?,
        c: SampledPath::new(dt, c_out, Interp::Linear)?,
        clipped: 0,
        absorbed_at: None,
        completed: c > run.clock_horizon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSde {
    pub x: f64,
    pub a: f64,
    pub c: f64,
    pub f: FunctionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeRun {
    pub dt: f64,
    /// Stop once `C >= 1 - eps_stop`.
    pub eps_stop: f64,
    pub max_steps: usize,
}

impl Default for BridgeRun {
    fn default() -> Self {
        Self {
            dt: 1e-5,
            eps_stop: 1e-4,
            max_steps: 100_000_000,
        }
    }
}

/// Full-truncation Euler scheme for the bridge equation.
pub fn euler_zsde_bridge<R: Rng + ?Sized>(
    sde: &BridgeSde,
    run: &BridgeRun,
    rng: &mut R,
) -> Result<CoupledZC> {
    sde.f.validate()?;
    if !(sde.a > 0.0) {
        return Err(invalid("bridge noise coefficient must be positive"));
    }
    if !(sde.c > 0.5 * sde.a * sde.a) {
        return Err(invalid("bridge needs c > a^2 / 2"));
    }
    if !(sde.x >= 0.0 && run.dt > 0.0 && run.eps_stop > 0.0 && run.eps_stop < 1.0) {
        return Err(invalid("need x >= 0, dt > 0 and 0 < eps_stop < 1"));
    }
    let dt = run.dt;
    let sq = dt.sqrt();
    let target = 1.0 - run.eps_stop;
    let mut z_out = Vec::new();
    let mut c_out = Vec::new();
    let mut z = sde.x;
    let mut c: f64 = 0.0;
    z_out.push(z);
    c_out.push(c);
    let mut step = 0;
    while c < target {
        if step >= run.max_steps {
            return Err(Error::Stalled {
                steps: step,
                c_end: c,
            });
        }
        let zp = z.max(0.0);
        let n: f64 = StandardNormal.sample(rng);
        let drift = sde.c + sde.f.eval(c) * zp - zp * zp / (1.0 - c);
        z += drift * dt + sde.a * zp.sqrt() * sq * n;
        if !z.is_finite() || z.abs() > BLOW_UP {
            return Err(Error::BlowUp { step, value: z });
        }
        let zn = z.max(0.0);
        c = (c + 0.5 * (zp + zn) * dt).min(1.0);
        z_out.push(zn);
        c_out.push(c);
        step += 1;
    }
    Ok(CoupledZC {
        z: SampledPath::new(dt, z_out, Interp::Linear)?,
        c: SampledPath::new(dt, c_out, Interp::Linear)?,
        clipped: 0,
        absorbed_at: None,
        completed: true,
    })
}

/// Bessel-type bridge `dY = a dB + (c / Y + f(t) - Y / (1 - t)) dt` on
/// `[0, 1]`, from `x` to `0`.
///
/// Reflected Euler scheme. The `c / Y` drift is evaluated at
/// `max(Y, a sqrt(dt))` so a single step cannot be thrown out by a tiny `Y`;
/// from `x = 0` the first step is the exact Bessel increment
/// `a sqrt(dt) chi_d` with dimension `d = 2c / a^2 + 1`.
pub fn bessel_bridge<R: Rng + ?Sized>(
    a: f64,
    c: f64,
    f: &FunctionSpec,
    x: f64,
    dt: f64,
    rng: &mut R,
) -> Result<SampledPath> {
    f.validate()?;
    if !(a > 0.0 && c >= 0.5 * a * a && x >= 0.0) {
        return Err(invalid("need a > 0, c >= a^2 / 2 and x >= 0"));
    }
    let n = (1.0 / dt).round() as usize;
    if n < 2 || ((n as f64) * dt - 1.0).abs() > 1e-9 {
        return Err(invalid("dt must divide 1 into at least two steps"));
    }
    let h = 1.0 / n as f64;
    let sq = h.sqrt();
    let floor = a * sq;
    let mut y = Vec::with_capacity(n + 1);
    y.push(x);
    let mut cur = x;
    for i in 0..n - 1 {
        let t = i as f64 * h;
        cur = if i == 0 && x == 0.0 {
            let dim = 2.0 * c / (a * a) + 1.0;
            let g: f64 = Gamma::new(0.5 * dim, 1.0).unwrap().sample(rng);
            a * sq * (2.0 * g).sqrt()
        } else {
            let nrm: f64 = StandardNormal.sample(rng);
            let drift = c / cur.max(floor) + f.eval(t) - cur / (1.0 - t);
            (cur + drift * h + a * sq * nrm).abs()
        };
        y.push(cur);
    }
    y.push(0.0);
    SampledPath::new(h, y, Interp::Linear)
}

/// `Y -> Z`: with `V_t = int_0^t 1 / Y`, `Z_v = Y(V^{-1}(v))` and `C_v = V^{-1}(v)`.
///
/// The endpoint cells of an integrable `1/Y` singularity (`Y` vanishing like
/// a square root) are integrated as `2 dt / Y_neighbour`. The `v` grid has
/// four points per `t` cell on average.
pub fn time_change_y_to_z(y: &SampledPath) -> Result<CoupledZC> {
    let n = y.len() - 1;
    if n < 2 {
        return Err(invalid("path too short to time-change"));
    }
    for (i, &v) in y.values.iter().enumerate().take(n).skip(1) {
        if !(v > 0.0) {
            return Err(Error::InteriorZero { index: i });
        }
    }
    let dt = y.dt;
    let inv = |v: f64| 1.0 / v;
    let mut vt = Vec::with_capacity(n + 1);
    vt.push(0.0);
    let mut acc = 0.0;
    for i in 0..n {
        let (a, b) = (y.values[i], y.values[i + 1]);
        acc += if a <= 0.0 && b <= 0.0 {
            return Err(Error::InteriorZero { index: i });
        } else if a <= 0.0 {
            2.0 * dt * inv(b)
        } else if b <= 0.0 {
            2.0 * dt * inv(a)
        } else {
            0.5 * dt * (inv(a) + inv(b))
        };
        vt.push(acc);
    }
    let v_end = acc;
    let m = 4 * n;
    let dv = v_end / m as f64;
    let clock = SampledPath::new(dt, vt, Interp::Linear)?;
    let mut z = Vec::with_capacity(m + 1);
    let mut c = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let tau = inverse_at(&clock, j as f64 * dv).min(y.horizon());
        c.push(tau);
        z.push(y.value_at(tau));
    }
    *c.last_mut().unwrap() = y.horizon();
    *z.last_mut().unwrap() = y.last();
    Ok(CoupledZC {
        z: SampledPath::new(dv, z, Interp::Linear)?,
        c: SampledPath::new(dv, c, Interp::Linear)?,
        clipped: 0,
        absorbed_at: None,
        completed: true,
    })
}

/// `Z -> Y`: `Y_t = Z(V_t)` with `V` the inverse of `C`, on `t_j = j dt`
/// up to the end of the clock.
pub fn time_change_z_to_y(zc: &CoupledZC, dt: f64) -> Result<SampledPath> {
    let c_end = zc.c.last();
    let n = (c_end / dt + 1e-9).floor() as usize;
    let v_end = zc.z.horizon();
    let values = (0..=n)
        .map(|j| {
            let v = inverse_at(&zc.c, j as f64 * dt);
            zc.z.value_at(if v.is_finite() { v } else { v_end })
        })
        .collect();
    SampledPath::new(dt, values, Interp::Linear)
}

/// `X_t = int_0^{V_t} (Z_v - c v) Z_v dv` at each `t` in `t_grid`.
pub fn functional_gauss(zc: &CoupledZC, c: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let cum = cumulative_along(zc, |v, z| (z - c * v) * z);
    t_grid
        .iter()
        .map(|&t| integral_at_clock(zc, &cum, t))
        .collect()
}

/// `int (2 Z_v^2 - c v Z_v) dv` over a completed bridge run.
pub fn functional_bridge(zc: &CoupledZC, c: f64) -> Result<f64> {
    if !zc.completed {
        return Err(Error::IncompletePath);
    }
    let cum = cumulative_along(zc, |v, z| (2.0 * z - c * v) * z);
    Ok(*cum.last().unwrap())
}

/// Mean `x t + int_0^t (t - s) f(s) ds` and covariance
/// `int_0^{min} (t1 - s)(t2 - s) g(s)^2 ds` of the limit Gaussian process.
pub fn analytic_mean_cov(
    x: f64,
    f: &FunctionSpec,
    g: &FunctionSpec,
    t_grid: &[f64],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    const TOL: f64 = 1e-11;
    let mean = t_grid
        .iter()
        .map(|&t| x * t + quad::integrate(|s| (t - s) * f.eval(s), 0.0, t, TOL))
        .collect();
    let cov = t_grid
        .iter()
        .map(|&t1| {
            t_grid
                .iter()
                .map(|&t2| {
                    let lo = t1.min(t2);
                    quad::integrate(|s| (t1 - s) * (t2 - s) * g.eval(s).powi(2), 0.0, lo, TOL)
                })
                .collect()
        })
        .collect();
    (mean, cov)
}

/// Mean `x + int_0^1 (1 - s) f(s) ds` of the bridge functional.
pub fn bridge_functional_mean(x: f64, f: &FunctionSpec) -> f64 {
    x + quad::integrate(|s| (1.0 - s) * f.eval(s), 0.0, 1.0, 1e-11)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use alloc::vec;

    #[test]
    fn analytic_moments_for_constant_coefficients() {
        let (m, cov) = analytic_mean_cov(
            1.0,
            &FunctionSpec::constant(2.0),
            &FunctionSpec::constant(1.0),
            &[0.5, 1.0],
        );
        assert!((m[1] - 2.0).abs() < 1e-10);
        assert!((m[0] - 0.75).abs() < 1e-10);
        assert!((cov[1][1] - 1.0 / 3.0).abs() < 1e-10);
        // int_0^0.5 (0.5 - s)(1 - s) ds
        assert!((cov[0][1] - 5.0 / 48.0).abs() < 1e-10);
        assert_eq!(cov[0][1], cov[1][0]);
    }

    #[test]
    fn uc_rejects_bad_parameters() {
        let sde = UcSde {
            x: 1.0,
            c: 0.4,
            f: FunctionSpec::constant(0.0),
            g: FunctionSpec::constant(1.0),
        };
        let run = UcRun {
            dt: 1e-3,
            v_horizon: 10.0,
            clock_horizon: 1.0,
            allow_zero_start: false,
        };
        let mut rng = replicate_rng(0, 0);
        assert!(euler_zsde_uc(&sde, &run, &mut rng).is_err());
        let sde = UcSde {
            x: 0.0,
            c: 1.0,
            ..sde
        };
        assert!(euler_zsde_uc(&sde, &run, &mut rng).is_err());
        let run = UcRun {
            allow_zero_start: true,
            ..run
        };
        let zc = euler_zsde_uc(&sde, &run, &mut rng).unwrap();
        assert!(zc.z.values.iter().all(|&z| z >= 0.0));
        assert!(zc.completed);
    }

    #[test]
    fn bridge_run_reaches_the_end_of_the_clock() {
        let sde = BridgeSde {
            x: 1.0,
            a: 2.0,
            c: 4.0,
            f: FunctionSpec::constant(0.0),
        };
        let run = BridgeRun {
            dt: 1e-4,
            ..Default::default()
        };
        let mut rng = replicate_rng(9, 0);
        let zc = euler_zsde_bridge(&sde, &run, &mut rng).unwrap();
        assert!(zc.c.last() >= 1.0 - 1e-4 && zc.c.last() <= 1.0);
        assert!(zc.c.values.windows(2).all(|w| w[1] >= w[0]));
        functional_bridge(&zc, 4.0).unwrap();
        let stalled = BridgeRun {
            dt: 1e-4,
            eps_stop: 1e-4,
            max_steps: 10,
        };
        assert!(matches!(
            euler_zsde_bridge(&sde, &stalled, &mut rng),
            Err(Error::Stalled { .. })
        ));
    }

    #[test]
    fn bessel_bridge_endpoints_and_positivity() {
        let mut rng = replicate_rng(4, 0);
        let y = bessel_bridge(1.0, 1.0, &FunctionSpec::constant(0.0), 0.0, 1e-3, &mut rng).unwrap();
        assert_eq!(y.values[0], 0.0);
        assert_eq!(y.last(), 0.0);
        assert!(y.values[1..y.len() - 1].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn time_change_of_a_smooth_path_round_trips() {
        let n = 1000;
        let dt = 1.0 / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| 1.0 + i as f64 * dt).collect();
        let y = SampledPath::new(dt, vals, Interp::Linear).unwrap();
        let zc = time_change_y_to_z(&y).unwrap();
        // V_1 = ln 2 for Y = 1 + t.
        assert!((zc.z.horizon() - 2f64.ln()).abs() < 1e-6);
        let back = time_change_z_to_y(&zc, dt).unwrap();
        for (a, b) in back.values.iter().zip(&y.values) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn interior_zero_is_rejected() {
        let y = SampledPath::new(0.25, vec![0.0, 1.0, 0.0, 1.0, 0.0], Interp::Linear).unwrap();
        assert!(matches!(
            time_change_y_to_z(&y),
            Err(Error::InteriorZero { index: 2 })
        ));
    }

    #[test]
    fn bridge_mean_for_polynomial_drift() {
        let f = FunctionSpec::Poly {
            coeffs: vec![0.0, 1.0],
        };
        // int_0^1 (1 - s) s ds = 1/6
        assert!((bridge_functional_mean(1.0, &f) - (1.0 + 1.0 / 6.0)).abs() < 1e-10);
    }
}

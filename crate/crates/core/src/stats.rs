//! Monte Carlo summaries, Kolmogorov-Smirnov tests, covariance comparison and
//! step-size sweeps.

use alloc::format;
use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest sample size for which KS results are reported.
pub const KS_MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    pub stderr: f64,
    /// KS distance to the declared reference law, when there is one and
    /// `n >= KS_MIN_SAMPLES`.
    pub ks_stat: Option<f64>,
    pub ks_p: Option<f64>,
    pub ci95: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub stat: f64,
    pub p: f64,
}

pub fn mean_var(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, var))
}

impl McSummary {
    /// Moments and a normal-approximation 95% interval for the mean, plus a KS
    /// test against `reference_cdf` when given.
    pub fn from_samples(
        samples: &[f64],
        reference_cdf: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<Self> {
        let (mean, var) = mean_var(samples)?;
        let n = samples.len();
        let stderr = (var / n as f64).sqrt();
        let ks = match reference_cdf {
            Some(cdf) if n >= KS_MIN_SAMPLES => Some(ks_one_sample(samples, cdf)?),
            _ => None,
        };
        Ok(Self {
            n,
            mean,
            var,
            stderr,
            ks_stat: ks.map(|k| k.stat),
            ks_p: ks.map(|k| k.p),
            ci95: [mean - 1.96 * stderr, mean + 1.96 * stderr],
        })
    }
}

pub fn normal_cdf(x: f64, mean: f64, var: f64) -> f64 {
    0.5 * libm::erfc(-(x - mean) / (2.0 * var).sqrt())
}

/// Maxwell law with scale `sigma`: the norm of a centred 3-d Gaussian with
/// per-coordinate variance `sigma^2`.
pub fn maxwell_cdf(x: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let u = x / sigma;
    libm::erf(u / core::f64::consts::SQRT_2)
        - (2.0 / core::f64::consts::PI).sqrt() * u * (-0.5 * u * u).exp()
}

/// `Q(l) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 l^2)`, the Kolmogorov tail.
pub fn kolmogorov_q(l: f64) -> f64 {
    if l < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * l * l).exp();
        acc += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// Asymptotic p-value with the usual small-sample correction of `sqrt(n)`.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let rn = n_eff.sqrt();
    kolmogorov_q((rn + 0.12 + 0.11 / rn) * d)
}

pub fn ks_one_sample<F: Fn(f64) -> f64 + ?Sized>(samples: &[f64], cdf: &F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::Degenerate("KS test needs samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult {
        stat: d,
        p: ks_p_value(d, n),
    })
}

pub fn ks_normal(samples: &[f64], mean: f64, var: f64) -> Result<KsResult> {
    if !(var > 0.0) {
        return Err(invalid("reference variance must be positive"));
    }
    ks_one_sample(samples, &|x| normal_cdf(x, mean, var))
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Degenerate("KS test needs samples".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(KsResult {
        stat: d,
        p: ks_p_value(d, n * m / (n + m)),
    })
}

/// Sample covariance matrix of row vectors.
#[allow(clippy::needless_range_loop)]
pub fn empirical_cov(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::Degenerate(format!("need at least 2 rows, got {n}")));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(invalid("rows must have equal length"));
    }
    let means: Vec<f64> = (0..d)
        .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = alloc::vec![alloc::vec![0.0; d]; d];
    for r in rows {
        for a in 0..d {
            for b in a..d {
                cov[a][b] += (r[a] - means[a]) * (r[b] - means[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[a][b] /= (n - 1) as f64;
            cov[b][a] = cov[a][b];
        }
    }
    Ok(cov)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovReport {
    pub max_rel_err: f64,
    /// `(i, j, empirical, analytic, relative error)` for `i <= j`.
    pub entries: Vec<(usize, usize, f64, f64, f64)>,
    pub pass: bool,
}

/// Entrywise relative error `|emp - ana| / |ana|`.
pub fn compare_cov(emp: &[Vec<f64>], ana: &[Vec<f64>], rtol: f64) -> Result<CovReport> {
    if emp.len() != ana.len() || emp.iter().zip(ana).any(|(a, b)| a.len() != b.len()) {
        return Err(invalid("covariance matrices differ in shape"));
    }
    let mut entries = Vec::new();
    let mut max_rel_err: f64 = 0.0;
    for i in 0..emp.len() {
        for j in i..emp.len() {
            let rel = (emp[i][j] - ana[i][j]).abs() / ana[i][j].abs();
            max_rel_err = max_rel_err.max(rel);
            entries.push((i, j, emp[i][j], ana[i][j], rel));
        }
    }
    Ok(CovReport {
        max_rel_err,
        entries,
        pass: max_rel_err <= rtol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dt: f64,
    pub metric: f64,
    /// Previous level's metric over this one.
    pub ratio: Option<f64>,
}

/// Evaluate `metric` at `dt0, dt0 / 2, ...` over `levels` levels.
pub fn convergence_sweep<F: FnMut(f64) -> Result<f64>>(
    dt0: f64,
    levels: usize,
    mut metric: F,
) -> Result<Vec<SweepRow>> {
    if levels < 2 {
        return Err(invalid("a convergence sweep needs at least two levels"));
    }
    let mut rows: Vec<SweepRow> = Vec::with_capacity(levels);
    for l in 0..levels {
        let dt = dt0 / (1u64 << l) as f64;
        let m = metric(dt)?;
        let ratio = rows.last().map(|r| r.metric / m);
        rows.push(SweepRow {
            dt,
            metric: m,
            ratio,
        });
    }
    Ok(rows)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_samples_against_a_normal() {
        let xs = vec![0.3; 200];
        let r = ks_normal(&xs, 0.0, 1.0).unwrap();
        let f = normal_cdf(0.3, 0.0, 1.0);
        assert!((r.stat - f.max(1.0 - f)).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        // Critical values of the Kolmogorov law.
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn summary_needs_two_samples() {
        assert!(McSummary::from_samples(&[1.0], None).is_err());
        let s = McSummary::from_samples(&[1.0, 3.0], None).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.var, 2.0);
        assert_eq!(s.ks_p, None);
    }

    #[test]
    fn two_sample_identical_inputs() {
        let a: Vec<f64> = (0..300).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.stat, 0.0);
        let b: Vec<f64> = (0..300).map(|i| i as f64 + 1000.0).collect();
        assert_eq!(ks_two_sample(&a, &b).unwrap().stat, 1.0);
    }

    #[test]
    fn maxwell_cdf_limits() {
        assert_eq!(maxwell_cdf(0.0, 0.5), 0.0);
        assert!((maxwell_cdf(100.0, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_of_perfectly_correlated_rows() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let c = empirical_cov(&rows).unwrap();
        assert!((c[1][1] - 4.0 * c[0][0]).abs() < 1e-12);
        assert!((c[0][1] - 2.0 * c[0][0]).abs() < 1e-12);
        let rep = compare_cov(&c, &c, 0.0).unwrap();
        assert!(rep.pass);
        assert!(empirical_cov(&rows[..1]).is_err());
    }

    #[test]
    fn sweep_ratios() {
        let rows = convergence_sweep(0.1, 3, |dt| Ok(dt * dt)).unwrap();
        assert_eq!(rows[0].ratio, None);
        assert!((rows[2].ratio.unwrap() - 4.0).abs() < 1e-12);
        assert!(convergence_sweep(0.1, 1, Ok).is_err());
    }
}

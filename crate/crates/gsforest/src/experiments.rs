//! One Monte Carlo experiment per CLI subcommand.
//!
//! Each experiment has a JSON config whose defaults are the acceptance-scale
//! settings, produces one scalar sample per replicate, and grades itself
//! against built-in thresholds.
//!
//! Local-time bins `dv` default to several multiples of `sqrt(dt)`: on finer
//! bins the occupation density of an interpolated path picks up `dt / |dX|`
//! spikes and the squared-local-time integrals are biased upward.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use gsforest_core::excursion::{
    brownian_excursion, drift_transform_bridge, drift_transform_excursion, jeulin_input,
    reflected_bridge, LeftHeightSim,
};
use gsforest_core::forest::{gs_statistic, sample_gwi_vertices, sample_uniform_forest};
use gsforest_core::lamperti::{continuous_lamperti, pathwise_identity};
use gsforest_core::levy::{extend_levy, simulate_levy};
use gsforest_core::localtime::{crt_functional, gs_functional, occupation_histogram_below};
use gsforest_core::rng::SimRng;
use gsforest_core::sde::{
    analytic_mean_cov, bridge_functional_mean, euler_zsde_bridge, euler_zsde_uc, functional_bridge,
    functional_gauss, BridgeRun, BridgeSde, UcRun, UcSde,
};
use gsforest_core::stats::{
    compare_cov, empirical_cov, ks_one_sample, ks_two_sample, maxwell_cdf, mean_var, median,
    normal_cdf, McSummary,
};
use gsforest_core::{CountLaw, Error as CoreError, FunctionSpec, MechanismSpec, SampledPath};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::mc::{run_mc, McError};

/// KS tests pass above this p-value.
pub const KS_LEVEL: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Replicate(#[from] McError<CoreError>),
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, Copy)]
pub struct RunOpts {
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Reference {
    pub law: String,
    pub mean: Option<f64>,
    pub var: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    #[serde(skip)]
    pub subcommand: String,
    pub summary: McSummary,
    pub reference: Option<Reference>,
    pub checks: Vec<Check>,
    pub extra: Value,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn mean_check(s: &McSummary, target: f64) -> Check {
    let dev = (s.mean - target).abs();
    Check {
        name: "mean".into(),
        pass: dev <= 3.0 * s.stderr,
        detail: format!(
            "mean {:.5} vs {:.5}: |diff| {:.5}, 3 stderr {:.5}",
            s.mean,
            target,
            dev,
            3.0 * s.stderr
        ),
    }
}

fn var_check(s: &McSummary, target: f64, rel: f64) -> Check {
    let r = (s.var - target).abs() / target;
    Check {
        name: "variance".into(),
        pass: r <= rel,
        detail: format!(
            "variance {:.5} vs {:.5}: relative error {:.3} (limit {:.2})",
            s.var, target, r, rel
        ),
    }
}

fn ks_check(name: &str, p: Option<f64>, stat: Option<f64>) -> Check {
    match p {
        Some(p) => Check {
            name: name.into(),
            pass: p > KS_LEVEL,
            detail: format!(
                "KS D = {:.4}, p = {:.4} (need > {KS_LEVEL})",
                stat.unwrap_or(f64::NAN),
                p
            ),
        },
        None => Check {
            name: name.into(),
            pass: false,
            detail: "too few samples for a KS test".into(),
        },
    }
}

fn normal_reference(mean: f64, var: f64) -> Reference {
    Reference {
        law: format!("N({mean}, {var})"),
        mean: Some(mean),
        var: Some(var),
    }
}

fn normal_summary(samples: &[f64], mean: f64, var: f64) -> Result<McSummary, RunError> {
    let cdf = move |x: f64| normal_cdf(x, mean, var);
    Ok(McSummary::from_samples(samples, Some(&cdf))?)
}

/// Outcome graded on mean, variance and KS against a normal law.
fn normal_outcome(
    name: &str,
    samples: Vec<f64>,
    mean: f64,
    var: f64,
    var_rel: f64,
    with_ks: bool,
    extra: Value,
) -> Result<Outcome, RunError> {
    let summary = normal_summary(&samples, mean, var)?;
    let mut checks = vec![
        mean_check(&summary, mean),
        var_check(&summary, var, var_rel),
    ];
    if with_ks {
        checks.push(ks_check("ks", summary.ks_p, summary.ks_stat));
    }
    Ok(Outcome {
        subcommand: name.into(),
        summary,
        reference: Some(normal_reference(mean, var)),
        checks,
        extra,
        samples,
    })
}

fn check_reps(reps: usize) -> Result<(), RunError> {
    if reps < 2 {
        return Err(config_err("reps must be at least 2"));
    }
    Ok(())
}

fn check_unit_dt(dt: f64) -> Result<(), RunError> {
    let n = (1.0 / dt).round();
    if !(dt > 0.0 && dt < 1.0) || (n * dt - 1.0).abs() > 1e-9 {
        return Err(config_err("dt must divide 1"));
    }
    Ok(())
}

// ---------------------------------------------------------------- forest-clt

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestCltConfig {
    pub n: u64,
    pub x: f64,
    pub reps: usize,
    /// Overrides the root count `max(1, ceil(x sqrt(n) / 2))`.
    pub roots: Option<u64>,
}

impl Default for ForestCltConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            x: 0.0,
            reps: 5000,
            roots: None,
        }
    }
}

impl ForestCltConfig {
    pub fn root_count(&self) -> u64 {
        self.roots
            .unwrap_or_else(|| ((self.x * (self.n as f64).sqrt() / 2.0).ceil() as u64).max(1))
    }
}

pub fn forest_clt(cfg: &ForestCltConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    check_reps(cfg.reps)?;
    if cfg.x < 0.0 {
        return Err(config_err("x must be non-negative"));
    }
    let k = cfg.root_count();
    if k == 0 || k > cfg.n {
        return Err(config_err("root count must lie in 1..=n"));
    }
    let n = cfg.n;
    let samples = run_mc(cfg.reps, opts.seed, 0, opts.workers, |_, rng| {
        Ok(gs_statistic(&sample_uniform_forest(n, k, rng)?))
    })?;
    normal_outcome(
        "forest-clt",
        samples,
        -cfg.x / 4.0,
        1.0 / 12.0,
        0.10,
        false,
        json!({ "roots": k }),
    )
}

// --------------------------------------------------------------- gwi-process

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GwiConfig {
    pub n: u64,
    pub x: f64,
    pub delta: f64,
    pub t: f64,
    pub reps: usize,
    pub offspring: CountLaw,
    /// Defaults to Poisson with mean `delta`.
    pub immigration: Option<CountLaw>,
}

impl Default for GwiConfig {
    fn default() -> Self {
        Self {
            n: 100,
            x: 0.5,
            delta: 1.0,
            t: 1.0,
            reps: 2000,
            offspring: CountLaw::Poisson { mean: 1.0 },
            immigration: None,
        }
    }
}

/// Cousin/height statistic of a GWI forest with `gamma_n = n`:
/// `(delta / (n gamma^2)) J_p - (1 / (n^2 gamma)) K_p` at `p = [n gamma t]`.
pub fn gwi_process(cfg: &GwiConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    check_reps(cfg.reps)?;
    if !(cfg.n >= 1 && cfg.x >= 0.0 && cfg.delta >= 0.0 && cfg.t > 0.0) {
        return Err(config_err("need n >= 1, x >= 0, delta >= 0, t > 0"));
    }
    cfg.offspring.validate()?;
    if (cfg.offspring.mean() - 1.0).abs() > 1e-9 {
        return Err(config_err("offspring law must be critical (mean 1)"));
    }
    let immigration = cfg
        .immigration
        .clone()
        .unwrap_or(CountLaw::Poisson { mean: cfg.delta });
    immigration.validate()?;
    let n = cfg.n as f64;
    let gamma = n;
    let k = (n * cfg.x).floor() as u64;
    let p = (n * gamma * cfg.t).floor() as u64;
    let delta = cfg.delta;
    let offspring = cfg.offspring.clone();
    let samples = run_mc(cfg.reps, opts.seed, 0, opts.workers, |_, rng| {
        let prof =
            sample_gwi_vertices(k, &offspring, &immigration, p, 100 * p as usize + 100, rng)?;
        let (kk, jj) = prof.cousin_height_at(p)?;
        Ok(delta / (n * gamma * gamma) * jj as f64 - kk as f64 / (n * n * gamma))
    })?;
    let sigma2 = cfg.offspring.variance();
    let extra = json!({ "roots": k, "vertices": p, "gamma": gamma });
    if sigma2.is_finite() {
        normal_outcome(
            "gwi-process",
            samples,
            -cfg.x * cfg.t,
            sigma2 * cfg.t.powi(3) / 3.0,
            0.15,
            true,
            extra,
        )
    } else {
        let summary = McSummary::from_samples(&samples, None)?;
        Ok(Outcome {
            subcommand: "gwi-process".into(),
            summary,
            reference: None,
            checks: Vec::new(),
            extra,
            samples,
        })
    }
}

// ------------------------------------------------------------ lamperti-check

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LampertiConfig {
    pub x: f64,
    pub delta: f64,
    /// The identity is checked for `t` in `[0, horizon]` on the `X` clock.
    pub horizon: f64,
    /// Finest step; the sweep uses `dt * 2^j` for `j < levels`.
    pub dt: f64,
    pub levels: usize,
    pub paths: usize,
    pub mechanism: MechanismSpec,
    pub power: i32,
    pub grid_points: usize,
    pub max_sup_error: f64,
    pub ratio_window: [f64; 2],
}

impl Default for LampertiConfig {
    fn default() -> Self {
        Self {
            x: 0.5,
            delta: 1.0,
            horizon: 1.0,
            dt: 1e-4,
            levels: 4,
            paths: 100,
            mechanism: MechanismSpec::brownian(0.5),
            power: 1,
            grid_points: 101,
            max_sup_error: 0.05,
            ratio_window: [1.2, 1.7],
        }
    }
}

/// Sup errors of the identity for one driving path at every sweep level,
/// coarsest first. Every level reads the same finely simulated `X`.
fn lamperti_sweep_path(cfg: &LampertiConfig, rng: &mut SimRng) -> Result<Vec<f64>, CoreError> {
    let grid: Vec<f64> = (0..cfg.grid_points)
        .map(|j| cfg.horizon * j as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    let mut xp = simulate_levy(&cfg.mechanism, 4.0 * cfg.horizon.max(1.0), cfg.dt, rng)?;
    let mut errs = Vec::with_capacity(cfg.levels);
    for level in (0..cfg.levels).rev() {
        let dt = cfg.dt * (1u64 << level) as f64;
        let mut z_horizon = 2.0 * cfg.horizon;
        let zc = loop {
            match continuous_lamperti(&xp, cfg.x, cfg.delta, z_horizon, dt) {
                Ok(zc) if zc.c.last() > cfg.horizon => break zc,
                Ok(_) => {
                    if z_horizon > 1e4 {
                        return Err(CoreError::HorizonCapExceeded { cap: z_horizon });
                    }
                    z_horizon *= 2.0;
                }
                Err(CoreError::HorizonExhausted { .. }) => {
                    let extra = xp.len();
                    extend_levy(&mut xp, &cfg.mechanism, extra, rng);
                }
                Err(e) => return Err(e),
            }
        };
        let (lhs, rhs) = pathwise_identity(&zc, &xp, cfg.x, cfg.delta, cfg.power, &grid)?;
        let sup = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        errs.push(sup);
    }
    Ok(errs)
}

pub fn lamperti_check(cfg: &LampertiConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    check_reps(cfg.paths)?;
    cfg.mechanism.validate()?;
    if cfg.levels < 2 || cfg.grid_points < 2 {
        return Err(config_err(
            "need at least two sweep levels and two grid points",
        ));
    }
    if !(cfg.x >= 0.0 && cfg.delta >= 0.0 && cfg.horizon > 0.0 && cfg.dt > 0.0) {
        return Err(config_err("need x >= 0, delta >= 0, horizon > 0, dt > 0"));
    }
    let rows = run_mc(cfg.paths, opts.seed, 0, opts.workers, |_, rng| {
        lamperti_sweep_path(cfg, rng)
    })?;
    let finest: Vec<f64> = rows.iter().map(|r| *r.last().unwrap()).collect();
    let mut ratio_medians = Vec::new();
    for j in 1..cfg.levels {
        let ratios: Vec<f64> = rows.iter().map(|r| r[j - 1] / r[j]).collect();
        ratio_medians.push(json!({
            "coarse_dt": cfg.dt * (1u64 << (cfg.levels - j)) as f64,
            "fine_dt": cfg.dt * (1u64 << (cfg.levels - j - 1)) as f64,
            "median_ratio": median(&ratios),
            "median_coarse_error": median(&rows.iter().map(|r| r[j - 1]).collect::<Vec<_>>()),
        }));
    }
    let last_ratio = ratio_medians.last().unwrap()["median_ratio"]
        .as_f64()
        .unwrap();
    let max_err = finest.iter().cloned().fold(0.0, f64::max);
    let summary = McSummary::from_samples(&finest, None)?;
    let checks = vec![
        Check {
            name: "sup-error".into(),
            pass: max_err < cfg.max_sup_error,
            detail: format!(
                "largest sup error at dt={} is {:.3e} (limit {})",
                cfg.dt, max_err, cfg.max_sup_error
            ),
        },
        Check {
            name: "halving-ratio".into(),
            pass: last_ratio >= cfg.ratio_window[0] && last_ratio <= cfg.ratio_window[1],
            detail: format!(
                "median sup-error ratio {:.3} under halving {} -> {} (window [{}, {}])",
                last_ratio,
                2.0 * cfg.dt,
                cfg.dt,
                cfg.ratio_window[0],
                cfg.ratio_window[1]
            ),
        },
    ];
    Ok(Outcome {
        subcommand: "lamperti-check".into(),
        summary,
        reference: None,
        checks,
        extra: json!({
            "max_sup_error": max_err,
            "median_sup_error": median(&finest),
            "sweep": ratio_medians,
        }),
        samples: finest,
    })
}

// --------------------------------------------------------------- gs-identity

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GsIdentityConfig {
    pub reps: usize,
    pub dt: f64,
    pub dv: f64,
    pub beta: f64,
}

impl Default for GsIdentityConfig {
    fn default() -> Self {
        Self {
            reps: 5000,
            dt: 1.0 / 65536.0,
            dv: 1.0 / 256.0,
            beta: 2.0,
        }
    }
}

pub fn gs_identity(cfg: &GsIdentityConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    check_reps(cfg.reps)?;
    check_unit_dt(cfg.dt)?;
    let (dt, dv, beta) = (cfg.dt, cfg.dv, cfg.beta);
    let samples = run_mc(cfg.reps, opts.seed, 0, opts.workers, |_, rng| {
        gs_functional(&brownian_excursion(dt, rng)?, beta, dv)
    })?;
    if beta == 2.0 {
        let summary = normal_summary(&samples, 0.0, 1.0 / 12.0)?;
        let lo = 1.0 / 12.0 * 0.9;
        let hi = 1.0 / 12.0 * 1.1;
        let checks = vec![
            mean_check(&summary, 0.0),
            Check {
                name: "variance".into(),
                pass: summary.var >= 0.075 && summary.var <= 0.092,
                detail: format!(
                    "variance {:.5} (need [0.075, 0.092]; 1/12 +- 10% is [{lo:.4}, {hi:.4}])",
                    summary.var
                ),
            },
            ks_check("ks", summary.ks_p, summary.ks_stat),
        ];
        Ok(Outcome {
            subcommand: "gs-identity".into(),
            summary,
            reference: Some(normal_reference(0.0, 1.0 / 12.0)),
            checks,
            extra: Value::Null,
            samples,
        })
    } else {
        Ok(Outcome {
            subcommand: "gs-identity".into(),
            summary: McSummary::from_samples(&samples, None)?,
            reference: None,
            checks: Vec::new(),
            extra: Value::Null,
            samples,
        })
    }
}

// --------------------------------------------------------------------- abeta

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbetaConfig {
    pub reps: usize,
    pub dt: f64,
    pub dv: f64,
    pub beta: f64,
    /// Odd moments `E[A^(2m-1)]` reported for `m = 1..=moments`.
    pub moments: u32,
}

impl Default for AbetaConfig {
    fn default() -> Self {
        Self {
            reps: 10_000,
            dt: 1.0 / 65536.0,
            dv: 1.0 / 64.0,
            beta: 2.0,
            moments: 3,
        }
    }
}

/// `-(2^m (2m - 1)! / (4 (m - 1)!)) sqrt(6 pi)`, the `(2m-1)`-th moment of `A_2`.
pub fn a2_odd_moment(m: u32) -> f64 {
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    -(2f64.powi(m as i32) * fact(2 * m - 1) / (4.0 * fact(m - 1)))
        * (6.0 * std::f64::consts::PI).sqrt()
}

pub fn abeta(cfg: &AbetaConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    check_reps(cfg.reps)?;
    check_unit_dt(cfg.dt)?;
    if cfg.moments == 0 {
        return Err(config_err("moments must be at least 1"));
    }
    let (dt, dv, beta) = (cfg.dt, cfg.dv, cfg.beta);
    let scale = 12f64.sqrt();
    let samples = run_mc(cfg.reps, opts.seed, 0, opts.workers, |_, rng| {
        Ok(scale * gs_functional(&reflected_bridge(dt, rng)?, beta, dv)?)
    })?;
    let summary = McSummary::from_samples(&samples, None)?;
    let n = samples.len() as f64;
    let mut moments = Vec::new();
    for m in 1..=cfg.moments {
        let p = (2 * m - 1) as i32;
        let vals: Vec<f64> = samples.iter().map(|a| a.powi(p)).collect();
        let (mu, var) = mean_var(&vals)?;
        moments.push(json!({
            "order": p,
            "empirical": mu,
            "stderr": (var / n).sqrt(),
            "exact": if beta == 2.0 { Some(a2_odd_moment(m)) } else { None },
        }));
    }
    let mut checks = Vec::new();
    if beta == 2.0 {
        let target = a2_odd_moment(1);
        let dev = (summary.mean - target).abs();
        checks.push(Check {
            name: "first-moment".into(),
            pass: dev <= 3.0 * summary.stderr || dev <= 0.05 * target.abs(),
            detail: format!(
                "E[A_2] {:.4} vs {:.4}: |diff| {:.4}, 3 stderr {:.4}, 5% {:.4}",
                summary.mean,
                target,
                dev,
                3.0 * summary.stderr,
                0.05 * target.abs()
            ),
        });
    }
    Ok(Outcome {
        subcommand: "abeta".into(),
        summary,
        reference: None,
        checks,
        extra: json!({ "moments": moments }),
        samples,
    })
}

// ----------------------------------------------------------- bridge-normal / rbb

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeNormalConfig {
    pub a: f64,
    pub c: f64,
    pub x: f64,
    pub f: FunctionSpec,
    pub reps: usize,
    pub dt: f64,
    pub eps_stop: f64,
}

impl Default for BridgeNormalConfig {
    fn default() -> Self {
        Self {
            a: 2.0,
            c: 4.0,
            x: 1.0,
            f: FunctionSpec::constant(0.0),
            reps: 10_000,
            dt: 1e-5,
            eps_stop: 1e-4,
        }
    }
}

fn bridge_samples(cfg: &BridgeNormalConfig, opts: RunOpts) -> Result<Vec<f64>, RunError> {
    check_reps(cfg.reps)?;
    let sde = BridgeSde {
        x: cfg.x,
        a: cfg.a,
        c: cfg.c,
        f: cfg.f.clone(),
    };
    let run = BridgeRun {
        dt: cfg.dt,
        eps_stop: cfg.eps_stop,
        ..BridgeRun::default()
    };
    // Surface parameter errors as config errors before spawning replicates.
    let mut probe = gsforest_core::rng::replicate_rng(0, u64::MAX);
    let probe_run = BridgeRun {
        max_steps: 1,
        ..run.clone()
    };
    if let Err(CoreError::InvalidParameter(m)) = euler_zsde_bridge(&sde, &probe_run, &mut probe) {
        return Err(RunError::Config(m));
    }
    let c = cfg.c;
    Ok(run_mc(cfg.reps, opts.seed, 0, opts.workers, |_, rng| {
        functional_bridge(&euler_zsde_bridge(&sde, &run, rng)?, c)
    })?)
}

pub fn bridge_normal(cfg: &BridgeNormalConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    let samples = bridge_samples(cfg, opts)?;
    normal_outcome(
        "bridge-normal",
        samples,
        bridge_functional_mean(cfg.x, &cfg.f),
        cfg.a * cfg.a / 3.0,
        0.10,
        true,
        Value::Null,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbbConfig {
    pub x: f64,
    pub reps: usize,
    pub dt: f64,
    pub eps_stop: f64,
}

impl Default for RbbConfig {
    fn default() -> Self {
        Self {
            x: 1.0,
            reps: 10_000,
            dt: 1e-5,
            eps_stop: 1e-4,
        }
    }
}

/// Reflected-bridge statistic through the `a = 2, c = 4` bridge SDE:
/// `-(1/4)` times the bridge functional, against `N(-x/4, 1/12)`.
pub fn rbb(cfg: &RbbConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    let bcfg = BridgeNormalConfig {
        a: 2.0,
        c: 4.0,
        x: cfg.x,
        f: FunctionSpec::constant(0.0),
        reps: cfg.reps,
        dt: cfg.dt,
        eps_stop: cfg.eps_stop,
    };
    rbb_outcome(bridge_samples(&bcfg, opts)?, cfg.x)
}

/// Map `a = 2, c = 4, f = 0` bridge-functional samples started at `x` to the
/// reflected-bridge statistic and grade them.
pub fn rbb_outcome(bridge_samples: Vec<f64>, x: f64) -> Result<Outcome, RunError> {
    let samples = bridge_samples.into_iter().map(|v| -0.25 * v).collect();
    normal_outcome(
        "rbb",
        samples,
        -x / 4.0,
        1.0 / 12.0,
        0.10,
        true,
        Value::Null,
    )
}

// --------------------------------------------------------------------- drift

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftVariant {
    Bridge,
    Excursion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub x: f64,
    pub variant: DriftVariant,
    pub reps: usize,
    pub dt: f64,
    pub dv: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            x: 1.0,
            variant: DriftVariant::Bridge,
            reps: 5000,
            dt: 1.0 / 65536.0,
            dv: 1.0 / 64.0,
        }
    }
}

pub fn drift(cfg: &DriftConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    check_reps(cfg.reps)?;
    check_unit_dt(cfg.dt)?;
    if cfg.x < 0.0 {
        return Err(config_err("x must be non-negative"));
    }
    let (x, dt, dv, variant) = (cfg.x, cfg.dt, cfg.dv, cfg.variant);
    let samples = run_mc(cfg.reps, opts.seed, 0, opts.workers, |_, rng| {
        let path = match variant {
            DriftVariant::Bridge => {
                drift_transform_bridge(&gsforest_core::excursion::brownian_bridge(dt, rng)?, x)?
            }
            DriftVariant::Excursion => drift_transform_excursion(&brownian_excursion(dt, rng)?, x)?,
        };
        gs_functional(&path, 2.0, dv)
    })?;
    normal_outcome(
        "drift",
        samples,
        -x / 8.0,
        1.0 / 12.0,
        0.10,
        true,
        json!({ "variant": variant, "regulator_at_one": x, "density_at_zero": 2.0 * x }),
    )
}

// ---------------------------------------------------------------- gauss-proc

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussConfig {
    pub x: f64,
    pub c: f64,
    pub f: FunctionSpec,
    pub g: FunctionSpec,
    pub t_grid: Vec<f64>,
    pub reps: usize,
    pub dt: f64,
    pub cov_rtol: f64,
}

impl Default for GaussConfig {
    fn default() -> Self {
        Self {
            x: 1.0,
            c: 1.0,
            f: FunctionSpec::constant(1.0),
            g: FunctionSpec::Sinusoid {
                a: 1.0,
                b: 0.5,
                omega: 1.0,
            },
            t_grid: vec![0.16, 0.32, 0.48, 0.64, 0.8],
            reps: 10_000,
            dt: 1e-5,
            cov_rtol: 0.10,
        }
    }
}

pub fn gauss_proc(cfg: &GaussConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    check_reps(cfg.reps)?;
    if cfg.t_grid.is_empty() || cfg.t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(config_err("t_grid must hold positive times"));
    }
    let t_max = cfg.t_grid.iter().cloned().fold(0.0, f64::max);
    let sde = UcSde {
        x: cfg.x,
        c: cfg.c,
        f: cfg.f.clone(),
        g: cfg.g.clone(),
    };
    let run = UcRun {
        dt: cfg.dt,
        v_horizon: 1e3,
        clock_horizon: t_max,
        allow_zero_start: false,
    };
    let mut probe = gsforest_core::rng::replicate_rng(0, u64::MAX);
    let probe_run = UcRun {
        v_horizon: cfg.dt,
        ..run.clone()
    };
    if let Err(CoreError::InvalidParameter(m)) = euler_zsde_uc(&sde, &probe_run, &mut probe) {
        return Err(RunError::Config(m));
    }
    let (c, grid) = (cfg.c, cfg.t_grid.clone());
    let rows = run_mc(cfg.reps, opts.seed, 0, opts.workers, |_, rng| {
        let zc = euler_zsde_uc(&sde, &run, rng)?;
        if !zc.completed {
            return Err(CoreError::IncompletePath);
        }
        functional_gauss(&zc, c, &grid)
    })?;
    let (mu, gamma) = analytic_mean_cov(cfg.x, &cfg.f, &cfg.g, &cfg.t_grid);
    let d = cfg.t_grid.len();
    let n = rows.len() as f64;
    let mut checks = Vec::new();
    let mut means = Vec::new();
    for k in 0..d {
        let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let (m, v) = mean_var(&col)?;
        let se = (v / n).sqrt();
        let pass = (m - mu[k]).abs() <= 3.0 * se;
        checks.push(Check {
            name: format!("mean[t={}]", cfg.t_grid[k]),
            pass,
            detail: format!("mean {:.5} vs {:.5}, 3 stderr {:.5}", m, mu[k], 3.0 * se),
        });
        means.push(json!({ "t": cfg.t_grid[k], "empirical": m, "analytic": mu[k], "stderr": se }));
    }
    let emp = empirical_cov(&rows)?;
    let report = compare_cov(&emp, &gamma, cfg.cov_rtol)?;
    checks.push(Check {
        name: "covariance".into(),
        pass: report.pass,
        detail: format!(
            "largest relative covariance error {:.4} (limit {})",
            report.max_rel_err, cfg.cov_rtol
        ),
    });
    let samples: Vec<f64> = rows.iter().map(|r| r[d - 1]).collect();
    let summary = normal_summary(&samples, mu[d - 1], gamma[d - 1][d - 1])?;
    Ok(Outcome {
        subcommand: "gauss-proc".into(),
        summary,
        reference: Some(normal_reference(mu[d - 1], gamma[d - 1][d - 1])),
        checks,
        extra: json!({ "means": means, "covariance": report, "analytic_cov": gamma }),
        samples,
    })
}

// ----------------------------------------------------------------- height-rk

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeightRkConfig {
    pub x: f64,
    pub delta: f64,
    pub r: f64,
    pub reps: usize,
    pub dt: f64,
    pub dv: f64,
    /// Initial level up to which the left height path is simulated; extended
    /// (doubled) when the functional needs more.
    pub a_max: f64,
    /// Level at which terminal local times are compared with the CBI marginal.
    pub rk_level: f64,
    pub lamperti_dt: f64,
    pub horizon_cap: f64,
    pub var_rtol: f64,
}

impl Default for HeightRkConfig {
    fn default() -> Self {
        Self {
            x: 0.5,
            delta: 1.0,
            r: 1.0,
            reps: 2000,
            dt: 1.0 / 16384.0,
            dv: 1.0 / 32.0,
            a_max: 4.0,
            rk_level: 1.0,
            lamperti_dt: 1e-4,
            horizon_cap: 1e15,
            var_rtol: 0.15,
        }
    }
}

pub fn height_rk(cfg: &HeightRkConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    check_reps(cfg.reps)?;
    if !(cfg.x >= 0.0 && cfg.delta > 0.0 && cfg.r > 0.0 && cfg.a_max >= cfg.rk_level) {
        return Err(config_err(
            "need x >= 0, delta > 0, r > 0, a_max >= rk_level",
        ));
    }
    let pairs = run_mc(cfg.reps, opts.seed, 0, opts.workers, |_, rng| {
        let mut sim = LeftHeightSim::new(cfg.x, cfg.delta, cfg.dt)?;
        let mut a_max = cfg.a_max;
        sim.extend_until_floor(a_max, cfg.horizon_cap, rng)?;
        loop {
            let lh = sim.snapshot()?;
            match crt_functional(&lh, cfg.delta, cfg.r, cfg.dv) {
                Ok(v) => {
                    let lt = occupation_histogram_below(&lh.path, cfg.dv, lh.floor_end)?;
                    return Ok((v, lt.at_level(cfg.rk_level)));
                }
                Err(CoreError::InsufficientHorizon { .. }) => {
                    a_max *= 2.0;
                    sim.extend_until_floor(a_max, cfg.horizon_cap, rng)?;
                }
                Err(e) => return Err(e),
            }
        }
    })?;
    let (crt, local): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    // CBI marginal from the Lamperti transform of a standard Brownian motion,
    // on replicate streams disjoint from the ones above.
    let mech = MechanismSpec::brownian(0.5);
    let cbi = run_mc(
        cfg.reps,
        opts.seed,
        cfg.reps as u64,
        opts.workers,
        |_, rng| cbi_marginal(&mech, cfg.x, cfg.delta, cfg.rk_level, cfg.lamperti_dt, rng),
    )?;
    let rk = ks_two_sample(&local, &cbi)?;
    let mut out = normal_outcome(
        "height-rk",
        crt,
        -cfg.x * cfg.r,
        cfg.r.powi(3) / 3.0,
        cfg.var_rtol,
        false,
        Value::Null,
    )?;
    out.checks.push(Check {
        name: "ray-knight".into(),
        pass: rk.p > KS_LEVEL,
        detail: format!(
            "two-sample KS of local time at level {} vs CBI marginal: D = {:.4}, p = {:.4}",
            cfg.rk_level, rk.stat, rk.p
        ),
    });
    out.extra = json!({
        "ray_knight": { "level": cfg.rk_level, "ks_stat": rk.stat, "ks_p": rk.p,
                        "local_time_mean": mean_var(&local)?.0, "cbi_mean": mean_var(&cbi)?.0 },
    });
    Ok(out)
}

/// `Z_t` of the Lamperti transform driven by `mech`, extending `X` as needed.
fn cbi_marginal(
    mech: &MechanismSpec,
    x: f64,
    delta: f64,
    t: f64,
    dt: f64,
    rng: &mut SimRng,
) -> Result<f64, CoreError> {
    let mut xp: SampledPath = simulate_levy(mech, 4.0 * (x + delta + 1.0) * t, dt, rng)?;
    loop {
        match continuous_lamperti(&xp, x, delta, t, dt) {
            Ok(zc) => return Ok(zc.z.last()),
            Err(CoreError::HorizonExhausted { .. }) => {
                let extra = xp.len();
                extend_levy(&mut xp, mech, extra, rng);
            }
            Err(e) => return Err(e),
        }
    }
}

// -------------------------------------------------------------------- jeulin

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JeulinConfig {
    pub reps: usize,
    pub dt: f64,
    pub dv: f64,
    pub t: f64,
}

impl Default for JeulinConfig {
    fn default() -> Self {
        Self {
            reps: 5000,
            dt: 1.0 / 65536.0,
            dv: 1.0 / 64.0,
            t: 0.5,
        }
    }
}

pub fn jeulin(cfg: &JeulinConfig, opts: RunOpts) -> Result<Outcome, RunError> {
    check_reps(cfg.reps)?;
    check_unit_dt(cfg.dt)?;
    if !(cfg.t > 0.0 && cfg.t < 1.0) {
        return Err(config_err("t must lie in (0, 1)"));
    }
    let (dt, dv, t) = (cfg.dt, cfg.dv, cfg.t);
    let samples = run_mc(cfg.reps, opts.seed, 0, opts.workers, |_, rng| {
        let e = brownian_excursion(dt, rng)?;
        Ok(jeulin_input(&e, dv)?.half_local_time_at_quantile(t))
    })?;
    let sigma = (t * (1.0 - t)).sqrt();
    let cdf = move |v: f64| maxwell_cdf(v, sigma);
    let summary = McSummary::from_samples(&samples, Some(&cdf))?;
    let ks = ks_one_sample(&samples, &cdf)?;
    let mean = 2.0 * sigma * (2.0 / std::f64::consts::PI).sqrt();
    let var = sigma * sigma * (3.0 - 8.0 / std::f64::consts::PI);
    Ok(Outcome {
        subcommand: "jeulin".into(),
        checks: vec![ks_check("ks", Some(ks.p), Some(ks.stat))],
        summary,
        reference: Some(Reference {
            law: format!("excursion marginal at t={t} (Maxwell, scale {sigma})"),
            mean: Some(mean),
            var: Some(var),
        }),
        extra: Value::Null,
        samples,
    })
}

// ------------------------------------------------------------------ dispatch

pub const SUBCOMMANDS: [&str; 11] = [
    "forest-clt",
    "gwi-process",
    "lamperti-check",
    "gs-identity",
    "abeta",
    "rbb",
    "drift",
    "gauss-proc",
    "bridge-normal",
    "height-rk",
    "jeulin",
];

fn parse<T: DeserializeOwned + Default>(text: Option<&str>) -> Result<T, RunError> {
    match text {
        None => Ok(T::default()),
        Some(s) => serde_json::from_str(s).map_err(|e| config_err(e.to_string())),
    }
}

fn with_config<T, F>(text: Option<&str>, opts: RunOpts, f: F) -> Result<(Outcome, Value), RunError>
where
    T: DeserializeOwned + Default + Serialize,
    F: FnOnce(&T, RunOpts) -> Result<Outcome, RunError>,
{
    let cfg: T = parse(text)?;
    let effective = serde_json::to_value(&cfg).expect("config serialises");
    Ok((f(&cfg, opts)?, effective))
}

/// Run a subcommand by name with an optional JSON config; returns the outcome
/// and the effective config.
pub fn run_named(
    name: &str,
    config: Option<&str>,
    opts: RunOpts,
) -> Result<(Outcome, Value), RunError> {
    match name {
        "forest-clt" => with_config::<ForestCltConfig, _>(config, opts, forest_clt),
        "gwi-process" => with_config::<GwiConfig, _>(config, opts, gwi_process),
        "lamperti-check" => with_config::<LampertiConfig, _>(config, opts, lamperti_check),
        "gs-identity" => with_config::<GsIdentityConfig, _>(config, opts, gs_identity),
        "abeta" => with_config::<AbetaConfig, _>(config, opts, abeta),
        "rbb" => with_config::<RbbConfig, _>(config, opts, rbb),
        "drift" => with_config::<DriftConfig, _>(config, opts, drift),
        "gauss-proc" => with_config::<GaussConfig, _>(config, opts, gauss_proc),
        "bridge-normal" => with_config::<BridgeNormalConfig, _>(config, opts, bridge_normal),
        "height-rk" => with_config::<HeightRkConfig, _>(config, opts, height_rk),
        "jeulin" => with_config::<JeulinConfig, _>(config, opts, jeulin),
        other => Err(config_err(format!("unknown subcommand {other}"))),
    }
}

//! Deterministic coefficient functions of time.

use alloc::vec::Vec;

// Only needed on targets whose core lacks float math.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Const {
        c: f64,
    },
    /// `coeffs[0] + coeffs[1] t + coeffs[2] t^2 + ...`
    Poly {
        coeffs: Vec<f64>,
    },
    /// `a + b sin(omega t)`
    Sinusoid {
        a: f64,
        b: f64,
        omega: f64,
    },
    /// Linear interpolation through `(grid[i], values[i])`, flat outside.
    Table {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Bounds relevant to using a function as a diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionBounds {
    pub inf: f64,
    pub sup: f64,
    /// Lipschitz constant of `g^2` on the checked interval.
    pub square_lipschitz: f64,
}

impl FunctionSpec {
    pub fn constant(c: f64) -> Self {
        FunctionSpec::Const { c }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionSpec::Poly { coeffs } if coeffs.is_empty() => {
                Err(invalid("polynomial needs at least one coefficient"))
            }
            FunctionSpec::Table { grid, values } => {
                if grid.len() != values.len() || grid.is_empty() {
                    return Err(invalid(
                        "table grid and values must have equal, non-zero length",
                    ));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("table grid must be strictly increasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FunctionSpec::Const { c } => *c,
            FunctionSpec::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &a| acc * t + a),
            FunctionSpec::Sinusoid { a, b, omega } => a + b * (omega * t).sin(),
            FunctionSpec::Table { grid, values } => {
                let i = grid.partition_point(|&g| g <= t);
                if i == 0 {
                    values[0]
                } else if i == grid.len() {
                    values[i - 1]
                } else {
                    let w = (t - grid[i - 1]) / (grid[i] - grid[i - 1]);
                    values[i - 1] + w * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// Sup of `|f|` on `[0, horizon]`, from a fine grid plus the table knots.
    pub fn sup_abs(&self, horizon: f64) -> f64 {
        self.grid_values(horizon).fold(0.0, |m, v| m.max(v.abs()))
    }

    fn grid_values(&self, horizon: f64) -> impl Iterator<Item = f64> + '_ {
        const N: usize = 4096;
        let knots: Vec<f64> = match self {
            FunctionSpec::Table { grid, .. } => {
                grid.iter().copied().filter(|&g| g <= horizon).collect()
            }
            _ => Vec::new(),
        };
        (0..=N)
            .map(move |i| horizon * i as f64 / N as f64)
            .chain(knots)
            .map(move |t| self.eval(t))
    }

    /// Bounds for use as `g`: `inf g > 0` is required and `g^2` must be
    /// Lipschitz on `[0, horizon]`.
    pub fn validate_as_diffusion(&self, horizon: f64) -> Result<DiffusionBounds> {
        self.validate()?;
        let (inf, sup) = self
            .grid_values(horizon)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if !(inf > 0.0) {
            return Err(invalid(
                "diffusion coefficient must be bounded away from zero",
            ));
        }
        let square_lipschitz = match self {
            FunctionSpec::Const { .. } => 0.0,
            FunctionSpec::Sinusoid { a, b, omega } => 2.0 * (a.abs() + b.abs()) * (b * omega).abs(),
            FunctionSpec::Poly { coeffs } => {
                let d: f64 = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| k as f64 * c.abs() * horizon.max(1.0).powi(k as i32 - 1))
                    .sum();
                2.0 * sup * d
            }
            FunctionSpec::Table { grid, values } => grid
                .windows(2)
                .zip(values.windows(2))
                .map(|(g, v)| ((v[1] * v[1] - v[0] * v[0]) / (g[1] - g[0])).abs())
                .fold(0.0, f64::max),
        };
        Ok(DiffusionBounds {
            inf,
            sup,
            square_lipschitz,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn evaluation() {
        assert_eq!(FunctionSpec::constant(2.0).eval(5.0), 2.0);
        let p = FunctionSpec::Poly {
            coeffs: vec![1.0, 0.0, 2.0],
        };
        assert_eq!(p.eval(3.0), 19.0);
        let t = FunctionSpec::Table {
            grid: vec![0.0, 1.0],
            values: vec![0.0, 2.0],
        };
        assert_eq!(t.eval(0.25), 0.5);
        assert_eq!(t.eval(3.0), 2.0);
    }

    #[test]
    fn diffusion_bounds() {
        let g = FunctionSpec::Sinusoid {
            a: 1.0,
            b: 0.5,
            omega: 1.0,
        };
        let b = g.validate_as_diffusion(1.0).unwrap();
        assert!((b.sup - (1.0 + 0.5 * 1f64.sin())).abs() < 1e-6);
        assert_eq!(b.inf, 1.0);
        assert!(FunctionSpec::constant(0.0)
            .validate_as_diffusion(1.0)
            .is_err());
    }

    #[test]
    fn json_shape() {
        let f: FunctionSpec = serde_json::from_str(r#"{"kind":"const","c":1.5}"#).unwrap();
        assert_eq!(f, FunctionSpec::constant(1.5));
    }
}

//! Flux laws (fundamental diagrams) and the scalar Godunov flux.
//!
//! A diagram is immutable once built. The critical density `sigma`, the
//! maximal flux `f(sigma)` and the maximal characteristic speed
//! `sup |f'|` are computed at construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Densities within this distance outside `[0, rho_max]` are clamped.
pub const DOMAIN_SLACK: f64 = 1e-12;

const CONCAVITY_SAMPLES: usize = 1000;

/// Serialized form of a diagram, as found in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DiagramSpec {
    /// `f(rho) = v_max * rho * (1 - rho / rho_max)`.
    Parabola {
        rho_max: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        v_max: f64,
    },
    /// `f(rho) = sum_k coeffs[k] * rho^k` on `[0, rho_max]`.
    Polynomial { rho_max: f64, coeffs: Vec<f64> },
    /// Piecewise-linear interpolation of `(rho[i], f[i])`.
    Table { rho: Vec<f64>, f: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

impl Default for DiagramSpec {
    fn default() -> Self {
        DiagramSpec::Parabola {
            rho_max: 1.0,
            v_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Parabola { v_max: f64 },
    Polynomial { coeffs: Vec<f64>, deriv: Vec<f64> },
    Table { rho: Vec<f64>, f: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalDiagram {
    law: Law,
    rho_max: f64,
    sigma: f64,
    f_sigma: f64,
    max_char_speed: f64,
}

impl Default for FundamentalDiagram {
    fn default() -> Self {
        Self::parabola(1.0, 1.0).expect("unit parabola is valid")
    }
}

impl FundamentalDiagram {
    pub fn from_spec(spec: &DiagramSpec) -> Result<Self> {
        match spec {
            DiagramSpec::Parabola { rho_max, v_max } => Self::parabola(*rho_max, *v_max),
            DiagramSpec::Polynomial { rho_max, coeffs } => Self::polynomial(*rho_max, coeffs),
            DiagramSpec::Table { rho, f } => Self::table(rho, f),
        }
    }

    pub fn spec(&self) -> DiagramSpec {
        match &self.law {
            Law::Parabola { v_max } => DiagramSpec::Parabola {
                rho_max: self.rho_max,
                v_max: *v_max,
            },
            Law::Polynomial { coeffs, .. } => DiagramSpec::Polynomial {
                rho_max: self.rho_max,
                coeffs: coeffs.clone(),
            },
            Law::Table { rho, f } => DiagramSpec::Table {
                rho: rho.clone(),
                f: f.clone(),
            },
        }
    }

    /// The quadratic Greenshields law. Critical density and `sup |f'|` are
    /// closed-form.
    pub fn parabola(rho_max: f64, v_max: f64) -> Result<Self> {
        if !(rho_max > 0.0 && rho_max.is_finite()) {
            return Err(Error::Config(format!("rho_max must be positive, got {rho_max}")));
        }
        if !(v_max > 0.0 && v_max.is_finite()) {
            return Err(Error::Config(format!("v_max must be positive, got {v_max}")));
        }
        let sigma = 0.5 * rho_max;
        Ok(Self {
            law: Law::Parabola { v_max },
            rho_max,
            sigma,
            f_sigma: v_max * sigma * (1.0 - sigma / rho_max),
            max_char_speed: v_max,
        })
    }

    pub fn polynomial(rho_max: f64, coeffs: &[f64]) -> Result<Self> {
        if !(rho_max > 0.0 && rho_max.is_finite()) {
            return Err(Error::Config(format!("rho_max must be positive, got {rho_max}")));
        }
        if coeffs.len() < 3 {
            return Err(Error::Config(
                "polynomial diagram needs degree >= 2 to be strictly concave".into(),
            ));
        }
        let deriv: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
        let law = Law::Polynomial {
            coeffs: coeffs.to_vec(),
            deriv,
        };
        let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1.0);
        let at_max = horner(coeffs, rho_max);
        if coeffs[0].abs() > DOMAIN_SLACK || at_max.abs() > DOMAIN_SLACK * scale {
            return Err(Error::Config(format!(
                "polynomial diagram must vanish at 0 and rho_max (f(0) = {}, f(rho_max) = {at_max})",
                coeffs[0]
            )));
        }
        let mut d = Self {
            law,
            rho_max,
            sigma: 0.0,
            f_sigma: 0.0,
            max_char_speed: 0.0,
        };
        d.check_concave()?;

        // f' is strictly decreasing: bisect for its root.
        let (mut lo, mut hi) = (0.0, rho_max);
        if d.derivative(lo) <= 0.0 || d.derivative(hi) >= 0.0 {
            return Err(Error::Config(
                "polynomial diagram has no interior maximum".into(),
            ));
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if d.derivative(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        d.sigma = if d.eval(lo) >= d.eval(hi) { lo } else { hi };
        d.f_sigma = d.eval(d.sigma);
        d.max_char_speed = d.derivative(0.0).abs().max(d.derivative(rho_max).abs());
        Ok(d)
    }

    /// Piecewise-linear diagram. Slopes must strictly decrease, so the
    /// maximum sits at a node and `sup |f'|` is the steeper end slope.
    pub fn table(rho: &[f64], f: &[f64]) -> Result<Self> {
        if rho.len() != f.len() {
            return Err(Error::Config(format!(
                "table diagram has {} densities but {} fluxes",
                rho.len(),
                f.len()
            )));
        }
        if rho.len() < 3 {
            return Err(Error::Config("table diagram needs at least 3 points".into()));
        }
        if rho[0] != 0.0 {
            return Err(Error::Config("table diagram must start at rho = 0".into()));
        }
        if rho.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("table densities must be strictly increasing".into()));
        }
        let last = f.len() - 1;
        if f[0].abs() > DOMAIN_SLACK || f[last].abs() > DOMAIN_SLACK {
            return Err(Error::Config(
                "table diagram must vanish at both ends".into(),
            ));
        }
        let slopes: Vec<f64> = rho
            .windows(2)
            .zip(f.windows(2))
            .map(|(r, v)| (v[1] - v[0]) / (r[1] - r[0]))
            .collect();
        if let Some(k) = slopes.windows(2).position(|s| s[1] >= s[0]) {
            return Err(Error::Config(format!(
                "table diagram is not strictly concave at rho = {}",
                rho[k + 1]
            )));
        }
        if slopes.contains(&0.0) {
            return Err(Error::Config(
                "table diagram has a flat top, so its maximum is not unique".into(),
            ));
        }
        let mut fv = f.to_vec();
        fv[0] = 0.0;
        fv[last] = 0.0;
        let (imax, _) = fv
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let rho_max = rho[last];
        Ok(Self {
            sigma: rho[imax],
            f_sigma: fv[imax],
            max_char_speed: slopes[0].abs().max(slopes[slopes.len() - 1].abs()),
            law: Law::Table { rho: rho.to_vec(), f: fv },
            rho_max,
        })
    }

    fn check_concave(&self) -> Result<()> {
        let h = self.rho_max / CONCAVITY_SAMPLES as f64;
        let vals: Vec<f64> = (0..=CONCAVITY_SAMPLES)
            .map(|i| self.eval_raw(i as f64 * h))
            .collect();
        for (i, w) in vals.windows(3).enumerate() {
            if w[0] - 2.0 * w[1] + w[2] >= 0.0 {
                return Err(Error::Config(format!(
                    "diagram is not strictly concave near rho = {}",
                    (i + 1) as f64 * h
                )));
            }
        }
        if vals.iter().any(|v| *v < -DOMAIN_SLACK) {
            return Err(Error::Config("diagram takes negative values".into()));
        }
        Ok(())
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    /// The density maximizing the flux.
    pub fn critical_density(&self) -> f64 {
        self.sigma
    }

    /// `f(sigma)`.
    pub fn max_flux(&self) -> f64 {
        self.f_sigma
    }

    /// `sup |f'|` over the open interval.
    pub fn max_char_speed(&self) -> f64 {
        self.max_char_speed
    }

    fn check(&self, rho: f64) -> Result<f64> {
        if rho.is_nan() || rho < -DOMAIN_SLACK || rho > self.rho_max + DOMAIN_SLACK {
            return Err(Error::Domain {
                value: rho,
                rho_max: self.rho_max,
            });
        }
        Ok(rho.clamp(0.0, self.rho_max))
    }

    pub fn flux(&self, rho: f64) -> Result<f64> {
        let rho = self.check(rho)?;
        Ok(self.eval(rho))
    }

    /// Flux after clamping to `[0, rho_max]`. Used on solver hot paths
    /// where states have already been checked.
    #[inline]
    pub(crate) fn eval(&self, rho: f64) -> f64 {
        let rho = rho.clamp(0.0, self.rho_max);
        if rho == 0.0 || rho == self.rho_max {
            return 0.0;
        }
        self.eval_raw(rho).max(0.0)
    }

    #[inline]
    fn eval_raw(&self, rho: f64) -> f64 {
        match &self.law {
            Law::Parabola { v_max } => v_max * rho * (1.0 - rho / self.rho_max),
            Law::Polynomial { coeffs, .. } => horner(coeffs, rho),
            Law::Table { rho: xs, f } => {
                let k = segment(xs, rho);
                let t = (rho - xs[k]) / (xs[k + 1] - xs[k]);
                f[k] + t * (f[k + 1] - f[k])
            }
        }
    }

    /// `f'(rho)`; for tables, the slope of the segment containing `rho`
    /// (right segment at interior nodes).
    pub fn derivative(&self, rho: f64) -> f64 {
        let rho = rho.clamp(0.0, self.rho_max);
        match &self.law {
            Law::Parabola { v_max } => v_max * (1.0 - 2.0 * rho / self.rho_max),
            Law::Polynomial { deriv, .. } => horner(deriv, rho),
            Law::Table { rho: xs, f } => {
                let k = segment(xs, rho);
                (f[k + 1] - f[k]) / (xs[k + 1] - xs[k])
            }
        }
    }

    /// Maximal flux an upstream cell at density `rho` can send.
    pub fn demand(&self, rho: f64) -> Result<f64> {
        let rho = self.check(rho)?;
        Ok(self.demand_unchecked(rho))
    }

    /// Maximal flux a downstream cell at density `rho` can receive.
    pub fn supply(&self, rho: f64) -> Result<f64> {
        let rho = self.check(rho)?;
        Ok(self.supply_unchecked(rho))
    }

    #[inline]
    pub(crate) fn demand_unchecked(&self, rho: f64) -> f64 {
        if rho <= self.sigma {
            self.eval(rho)
        } else {
            self.f_sigma
        }
    }

    #[inline]
    pub(crate) fn supply_unchecked(&self, rho: f64) -> f64 {
        if rho <= self.sigma {
            self.f_sigma
        } else {
            self.eval(rho)
        }
    }

    /// Godunov interface flux between a left state `rho_minus` and a right
    /// state `rho_plus`.
    pub fn godunov_flux(&self, rho_minus: f64, rho_plus: f64) -> Result<f64> {
        let a = self.check(rho_minus)?;
        let b = self.check(rho_plus)?;
        Ok(self.godunov(a, b))
    }

    #[inline]
    pub(crate) fn godunov(&self, rho_minus: f64, rho_plus: f64) -> f64 {
        if rho_minus <= rho_plus {
            self.eval(rho_minus).min(self.eval(rho_plus))
        } else if rho_minus < self.sigma {
            self.eval(rho_minus)
        } else if rho_plus > self.sigma {
            self.eval(rho_plus)
        } else {
            self.f_sigma
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn segment(xs: &[f64], rho: f64) -> usize {
    let k = xs.partition_point(|&x| x <= rho);
    k.saturating_sub(1).min(xs.len() - 2)
}

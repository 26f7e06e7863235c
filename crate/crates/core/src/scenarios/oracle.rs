use serde::Serialize;

use crate::error::Result;
use crate::fundamental::FundamentalDiagram;
use crate::network::PreferenceMatrix;

/// Entropy solution of the Riemann problem at `x / t = xi`.
pub fn riemann_exact(d: &FundamentalDiagram, rho_l: f64, rho_r: f64, xi: f64) -> Result<f64> {
    let fl = d.flux(rho_l)?;
    let fr = d.flux(rho_r)?;
    if rho_l == rho_r {
        return Ok(rho_l);
    }
    if rho_l < rho_r {
        let speed = (fr - fl) / (rho_r - rho_l);
        return Ok(if xi < speed { rho_l } else { rho_r });
    }
    // rarefaction: f' decreases, so f'(rho_l) < f'(rho_r)
    if xi <= d.derivative(rho_l) {
        return Ok(rho_l);
    }
    if xi >= d.derivative(rho_r) {
        return Ok(rho_r);
    }
    let (mut lo, mut hi) = (rho_r, rho_l);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if d.derivative(mid) > xi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Brute-force answer to a junction problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JunctionOracle {
    /// Best total found on the grid; below the true optimum by less than
    /// `resolution`.
    pub max_total: f64,
    pub resolution: f64,
    /// Total of the farthest feasible point on the priority ray.
    pub ray_total: f64,
    /// Whether the priority ray reaches the optimum, so that no
    /// projection is needed.
    pub ray_attains: bool,
}

/// Grid search for the largest `sum gamma` with `0 <= gamma_i <= d_i` and
/// `A gamma <= s`.
///
/// The first `n - 1` coordinates run over a grid of step
/// `resolution / (n - 1)`; the last one takes its largest feasible value.
/// Rounding the grid coordinates down only loosens the constraints on the
/// last one, so the result is within `resolution` of the optimum.
pub fn junction_oracle(
    demands: &[f64],
    supplies: &[f64],
    a: &PreferenceMatrix,
    q: &[f64],
    resolution: f64,
) -> JunctionOracle {
    let n = demands.len();
    let step = if n > 1 { resolution / (n - 1) as f64 } else { resolution };
    let axis = |d: f64| -> Vec<f64> {
        let k = (d / step).floor() as usize;
        let mut v: Vec<f64> = (0..=k).map(|i| i as f64 * step).collect();
        if *v.last().unwrap() < d {
            v.push(d);
        }
        v
    };
    let axes: Vec<Vec<f64>> = demands[..n - 1].iter().map(|&d| axis(d)).collect();

    let mut best = 0.0_f64;
    let mut point = vec![0.0; n];
    let mut visit = |point: &[f64]| {
        let mut last = demands[n - 1];
        for (j, sj) in supplies.iter().enumerate() {
            let used: f64 = (0..n - 1).map(|i| a.get(j, i) * point[i]).sum();
            let ajn = a.get(j, n - 1);
            if used > *sj {
                return;
            }
            if ajn > 0.0 {
                last = last.min((sj - used) / ajn);
            }
        }
        let total = point[..n - 1].iter().sum::<f64>() + last.max(0.0);
        best = best.max(total);
    };
    grid_walk(&axes, 0, &mut point, &mut visit);

    let mut s = f64::INFINITY;
    for i in 0..n {
        if q[i] > 0.0 {
            s = s.min(demands[i] / q[i]);
        }
    }
    for (j, sj) in supplies.iter().enumerate() {
        let w: f64 = (0..n).map(|i| a.get(j, i) * q[i]).sum();
        if w > 0.0 {
            s = s.min(sj / w);
        }
    }
    let ray_total = s * q.iter().sum::<f64>();
    JunctionOracle {
        max_total: best,
        resolution,
        ray_total,
        ray_attains: ray_total >= best - 1e-12,
    }
}

fn grid_walk(axes: &[Vec<f64>], k: usize, point: &mut Vec<f64>, visit: &mut dyn FnMut(&[f64])) {
    if k == axes.len() {
        visit(point);
        return;
    }
    for &v in &axes[k] {
        point[k] = v;
        grid_walk(axes, k + 1, point, visit);
    }
}

//! Junction flux maximization with priorities.
//!
//! The feasible set is the polytope
//! `{0 <= gamma_i <= d_i, (A gamma)_j <= s_j}` in at most three dimensions.
//! Its vertices are enumerated directly: every choice of `n` active
//! constraints gives a linear system, and the feasible solutions are the
//! vertices. The optimum of `sum gamma` is attained at one of them.

use crate::error::{Error, Result};
use crate::network::{PreferenceMatrix, MAX_JUNCTION_DEGREE, STOCHASTIC_TOL};

/// Fluxes through one junction for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionFluxSolution {
    pub gamma_in: Vec<f64>,
    pub gamma_out: Vec<f64>,
}

impl JunctionFluxSolution {
    pub fn total(&self) -> f64 {
        self.gamma_in.iter().sum()
    }
}

const SINGULAR_PIVOT: f64 = 1e-14;

/// Solves the junction problem for incoming demands and outgoing supplies.
///
/// Among the maximizers of the total flux, the point `q * s` with the
/// largest feasible `s` is returned if it is optimal. Otherwise the result
/// is the point of the optimal face closest to `q * V`, where `V` is the
/// optimal total.
pub fn solve_junction(
    demands: &[f64],
    supplies: &[f64],
    a: &PreferenceMatrix,
    q: &[f64],
) -> Result<JunctionFluxSolution> {
    let n = demands.len();
    let m = supplies.len();
    check_inputs(demands, supplies, a, q)?;

    let scale = demands
        .iter()
        .chain(supplies)
        .fold(1.0_f64, |acc, v| acc.max(*v));
    let tol = 1e-12 * scale;

    let gamma = if n == 1 {
        // The only freedom is the single incoming flux.
        let mut g = demands[0];
        for j in 0..m {
            let aj = a.get(j, 0);
            if aj > 0.0 {
                g = g.min(supplies[j] / aj);
            }
        }
        vec![g]
    } else {
        let vertices = Polytope { demands, supplies, a, tol }.vertices();
        let best = vertices
            .iter()
            .map(|v| v.iter().sum::<f64>())
            .fold(0.0, f64::max);

        let s_ray = ray_extent(demands, supplies, a, q);
        if s_ray >= best - tol {
            q.iter().map(|qi| qi * s_ray).collect()
        } else {
            let face: Vec<&Vec<f64>> = vertices
                .iter()
                .filter(|v| v.iter().sum::<f64>() >= best - tol)
                .collect();
            let target: Vec<f64> = q.iter().map(|qi| qi * best).collect();
            nearest_on_face(&face, &target)
        }
    };

    let gamma_in: Vec<f64> = gamma
        .iter()
        .zip(demands)
        .map(|(g, d)| g.clamp(0.0, *d))
        .collect();
    let gamma_out = a.apply(&gamma_in);
    Ok(JunctionFluxSolution { gamma_in, gamma_out })
}

fn check_inputs(demands: &[f64], supplies: &[f64], a: &PreferenceMatrix, q: &[f64]) -> Result<()> {
    let n = demands.len();
    let m = supplies.len();
    if n == 0 || m == 0 || n > MAX_JUNCTION_DEGREE || m > MAX_JUNCTION_DEGREE {
        return Err(Error::Dimension(format!(
            "junction with {n} incoming and {m} outgoing arcs (1..={MAX_JUNCTION_DEGREE} each)"
        )));
    }
    if a.cols() != n || a.rows() != m {
        return Err(Error::Dimension(format!(
            "preference matrix is {}x{}, expected {m}x{n}",
            a.rows(),
            a.cols()
        )));
    }
    if let Some(v) = demands.iter().chain(supplies).find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Dimension(format!("flow rate {v} is not a finite non-negative number")));
    }
    if n > 1 {
        if q.len() != n {
            return Err(Error::Priorities(format!("{} priorities for {n} incoming arcs", q.len())));
        }
        let sum: f64 = q.iter().sum();
        if q.iter().any(|v| !(*v >= 0.0)) || (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Priorities(format!("{q:?} is not a probability vector")));
        }
    }
    Ok(())
}

/// Largest `s` with `q * s` feasible.
fn ray_extent(demands: &[f64], supplies: &[f64], a: &PreferenceMatrix, q: &[f64]) -> f64 {
    let mut s = f64::INFINITY;
    for (d, qi) in demands.iter().zip(q) {
        if *qi > 0.0 {
            s = s.min(d / qi);
        }
    }
    let aq = a.apply(q);
    for (sj, w) in supplies.iter().zip(&aq) {
        if *w > 0.0 {
            s = s.min(sj / w);
        }
    }
    s
}

struct Polytope<'a> {
    demands: &'a [f64],
    supplies: &'a [f64],
    a: &'a PreferenceMatrix,
    tol: f64,
}

impl Polytope<'_> {
    /// Constraint `k` as `(row, rhs)` meaning `row . x <= rhs`.
    fn constraint(&self, k: usize) -> ([f64; 3], f64) {
        let n = self.demands.len();
        let mut row = [0.0; 3];
        if k < n {
            row[k] = -1.0;
            (row, 0.0)
        } else if k < 2 * n {
            row[k - n] = 1.0;
            (row, self.demands[k - n])
        } else {
            let j = k - 2 * n;
            for (i, r) in row.iter_mut().enumerate().take(n) {
                *r = self.a.get(j, i);
            }
            (row, self.supplies[j])
        }
    }

    fn feasible(&self, x: &[f64]) -> bool {
        let total = 2 * self.demands.len() + self.supplies.len();
        (0..total).all(|k| {
            let (row, rhs) = self.constraint(k);
            let lhs: f64 = x.iter().zip(row).map(|(a, b)| a * b).sum();
            lhs <= rhs + self.tol
        })
    }

    fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.demands.len();
        let total = 2 * n + self.supplies.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        for_each_subset(total, n, &mut |active| {
            let mut mat = [[0.0; 3]; 3];
            let mut rhs = [0.0; 3];
            for (r, &k) in active.iter().enumerate() {
                let (row, b) = self.constraint(k);
                mat[r] = row;
                rhs[r] = b;
            }
            if let Some(x) = solve_dense(&mut mat, &mut rhs, n) {
                let x = x[..n].to_vec();
                if self.feasible(&x) && !out.iter().any(|v| close(v, &x, self.tol)) {
                    out.push(x);
                }
            }
        });
        out
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn for_each_subset(total: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, total: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..total {
            if total - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, total, k, cur, f);
            cur.pop();
        }
    }
    rec(0, total, k, &mut Vec::with_capacity(k), f);
}

/// Gaussian elimination with partial pivoting on the leading `n x n`
/// block. `None` when singular.
fn solve_dense(mat: &mut [[f64; 3]; 3], rhs: &mut [f64; 3], n: usize) -> Option<[f64; 3]> {
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| mat[r][col].abs().total_cmp(&mat[s][col].abs()))?;
        if mat[piv][col].abs() < SINGULAR_PIVOT {
            return None;
        }
        mat.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let factor = mat[r][col] / mat[col][col];
            for c in col..n {
                mat[r][c] -= factor * mat[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| mat[r][c] * x[c]).sum();
        x[r] = (rhs[r] - tail) / mat[r][r];
    }
    Some(x)
}

/// Point of `conv(face)` nearest to `target`, taken over all segments
/// between face vertices. When `target` lies in the face's plane but
/// outside the face, the nearest point sits on a boundary edge, so this is
/// the exact projection.
fn nearest_on_face(face: &[&Vec<f64>], target: &[f64]) -> Vec<f64> {
    let mut best = face[0].clone();
    let mut best_d = dist2(&best, target);
    for (i, p) in face.iter().enumerate() {
        for r in &face[i..] {
            let c = project_segment(p, r, target);
            let d = dist2(&c, target);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
    }
    best
}

fn project_segment(p: &[f64], r: &[f64], t: &[f64]) -> Vec<f64> {
    let dir: Vec<f64> = r.iter().zip(p).map(|(a, b)| a - b).collect();
    let len2: f64 = dir.iter().map(|v| v * v).sum();
    let u = if len2 == 0.0 {
        0.0
    } else {
        let dot: f64 = t.iter().zip(p).zip(&dir).map(|((t, p), d)| (t - p) * d).sum();
        (dot / len2).clamp(0.0, 1.0)
    };
    p.iter().zip(&dir).map(|(p, d)| p + u * d).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> PreferenceMatrix {
        PreferenceMatrix::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn ray_point_inside_box() {
        let s = solve_junction(&[0.24, 0.16], &[0.25], &mat(1, 2, &[1.0, 1.0]), &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(s.gamma_in[0], 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(s.gamma_in[1], 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(s.gamma_out[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn projection_saturates_short_road() {
        let s = solve_junction(&[0.05, 0.24], &[0.25], &mat(1, 2, &[1.0, 1.0]), &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(s.gamma_in[0], 0.05, epsilon = 1e-14);
        assert_abs_diff_eq!(s.gamma_in[1], 0.20, epsilon = 1e-14);
    }

    #[test]
    fn single_incoming() {
        let s = solve_junction(&[0.25], &[0.25, 0.09], &mat(2, 1, &[0.8, 0.2]), &[1.0]).unwrap();
        assert_abs_diff_eq!(s.gamma_in[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(s.gamma_out[0], 0.20, epsilon = 1e-15);
        assert_abs_diff_eq!(s.gamma_out[1], 0.05, epsilon = 1e-15);
    }

    #[test]
    fn slack_supply_takes_demands() {
        let s = solve_junction(&[0.1, 0.1], &[0.25], &mat(1, 2, &[1.0, 1.0]), &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(s.gamma_in[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.gamma_in[1], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn two_by_two_reaches_optimum_off_the_ray() {
        let a = mat(2, 2, &[0.8, 0.9, 0.2, 0.1]);
        let s = solve_junction(&[0.25, 0.25], &[0.25, 0.05], &a, &[0.5, 0.5]).unwrap();
        // both supply rows bind at (0.2, 0.1); the ray stops at 0.25 / 0.85
        assert_abs_diff_eq!(s.total(), 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(s.gamma_in[0], 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(s.gamma_in[1], 0.1, epsilon = 1e-14);
        assert!(s.gamma_out[0] <= 0.25 + 1e-14 && s.gamma_out[1] <= 0.05 + 1e-14);
    }

    #[test]
    fn optimal_face_projection_in_3d() {
        // one outgoing road caps the total; the ray is clipped by d1
        let a = mat(1, 3, &[1.0, 1.0, 1.0]);
        let q = [0.5, 0.25, 0.25];
        let s = solve_junction(&[0.02, 0.2, 0.2], &[0.2], &a, &q).unwrap();
        assert_abs_diff_eq!(s.total(), 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(s.gamma_in[0], 0.02, epsilon = 1e-14);
        assert_abs_diff_eq!(s.gamma_in[1], 0.09, epsilon = 1e-14);
        assert_abs_diff_eq!(s.gamma_in[2], 0.09, epsilon = 1e-14);
    }

    #[test]
    fn zero_everything() {
        let s = solve_junction(&[0.0, 0.0], &[0.0], &mat(1, 2, &[1.0, 1.0]), &[0.5, 0.5]).unwrap();
        assert_eq!(s.gamma_in, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = mat(1, 2, &[1.0, 1.0]);
        assert!(matches!(
            solve_junction(&[0.1, 0.1], &[0.2], &a, &[0.7, 0.7]),
            Err(Error::Priorities(_))
        ));
        assert!(matches!(
            solve_junction(&[0.1], &[0.2], &a, &[1.0]),
            Err(Error::Dimension(_))
        ));
    }
}

use serde::Serialize;

use crate::error::Result;
use crate::network::{ArcDensityState, GridSpec, PathCellMap, Scenario};
use crate::par::Execution;
use crate::sim::{run, RunOptions, RunResult, SolverKind, SolverState};

/// Relative tolerance for calling two outflow integrals equal.
pub const OUTFLOW_REL_TOL: f64 = 1e-8;

/// `dx` times the total density summed over physical cells. Cells shared
/// by several paths are counted once.
pub fn total_mass(state: &SolverState, map: &PathCellMap, grid: &GridSpec) -> f64 {
    match state {
        SolverState::Arcs(s) => grid.dx * s.arcs.iter().flatten().sum::<f64>(),
        SolverState::Paths(s) => grid.dx * map.omega_flat(s, Execution::Sequential).iter().sum::<f64>(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverMetrics {
    pub solver: SolverKind,
    pub steps: usize,
    pub t_final: f64,
    pub exit_outflow: Vec<(String, f64)>,
    pub entry_inflow: Vec<(String, f64)>,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub mass_residual: f64,
    /// Per junction, the flux leaving each incoming arc at the last step.
    pub junction_throughput: Vec<Vec<f64>>,
    pub steady_at: Option<f64>,
    pub elapsed_secs: f64,
}

/// Differences between two solvers' total densities.
#[derive(Debug, Clone, Serialize)]
pub struct PairDifference {
    pub a: SolverKind,
    pub b: SolverKind,
    /// Along every path (or every arc when there are no paths).
    pub l1: f64,
    pub linf: f64,
}

/// Classical density on an outgoing arc compared with the per-path total
/// one cell further downstream.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftCheck {
    pub arc: String,
    /// First and last classical cell compared (1-based).
    pub cells: (usize, usize),
    pub max_diff_shifted: f64,
    pub max_diff_unshifted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMetrics {
    pub scenario: String,
    pub solvers: Vec<SolverMetrics>,
    pub differences: Vec<PairDifference>,
    /// Classical versus per-path outflow, relative to classical.
    pub outflow_rel_diff: Option<f64>,
    pub outflow_equal: Option<bool>,
    pub shift_checks: Vec<ShiftCheck>,
    /// Per solver: whether any incoming arc ends above critical density.
    pub queue_detected: Vec<(SolverKind, bool)>,
}

/// Results of running every applicable solver on one scenario.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub metrics: ReportMetrics,
    pub runs: Vec<RunResult>,
}

impl ComparisonReport {
    pub fn run(&self, kind: SolverKind) -> Option<&RunResult> {
        self.runs.iter().find(|r| r.solver == kind)
    }

    pub fn difference(&self, a: SolverKind, b: SolverKind) -> Option<&PairDifference> {
        self.metrics
            .differences
            .iter()
            .find(|d| (d.a, d.b) == (a, b) || (d.a, d.b) == (b, a))
    }
}

/// Solvers that apply to a scenario: the per-path solver needs paths, the
/// local one needs junctions.
pub fn applicable_solvers(scenario: &Scenario) -> Vec<SolverKind> {
    let net = scenario.network();
    let mut v = vec![SolverKind::Classical];
    if !net.paths().is_empty() {
        v.push(SolverKind::Multipath);
    }
    if !net.junctions().is_empty() {
        v.push(SolverKind::Local);
    }
    v
}

/// Runs the classical, per-path and local solvers (where applicable) to
/// the final time and compares them.
pub fn run_comparison(scenario: &Scenario, exec: Execution) -> Result<ComparisonReport> {
    run_solvers(scenario, &applicable_solvers(scenario), exec)
}

pub fn run_solvers(scenario: &Scenario, kinds: &[SolverKind], exec: Execution) -> Result<ComparisonReport> {
    let opts = RunOptions { exec, ..RunOptions::default() };
    let runs: Vec<RunResult> = exec
        .map(kinds.len(), |k| run(scenario, kinds[k], opts))
        .into_iter()
        .collect::<Result<_>>()?;

    let solvers = runs
        .iter()
        .map(|r| SolverMetrics {
            solver: r.solver,
            steps: r.steps,
            t_final: r.t_final,
            exit_outflow: r.exit_outflow.clone(),
            entry_inflow: r.entry_inflow.clone(),
            mass_initial: r.mass_initial,
            mass_final: r.mass_final,
            mass_residual: r.mass_residual,
            junction_throughput: r.last_fluxes.junction_in.clone(),
            steady_at: r.steady_at,
            elapsed_secs: r.elapsed_secs,
        })
        .collect();

    let mut differences = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let (l1, linf) = profile_difference(scenario, &runs[i].final_arcs, &runs[j].final_arcs);
            differences.push(PairDifference { a: runs[i].solver, b: runs[j].solver, l1, linf });
        }
    }

    let find = |k: SolverKind| runs.iter().find(|r| r.solver == k);
    let (mut outflow_rel_diff, mut outflow_equal) = (None, None);
    let mut shift_checks = Vec::new();
    if let (Some(c), Some(m)) = (find(SolverKind::Classical), find(SolverKind::Multipath)) {
        let total = |r: &RunResult| r.exit_outflow.iter().map(|(_, v)| v).sum::<f64>();
        let (tc, tm) = (total(c), total(m));
        let rel = (tc - tm).abs() / tc.abs().max(f64::MIN_POSITIVE);
        outflow_rel_diff = Some(rel);
        outflow_equal = Some(rel <= OUTFLOW_REL_TOL);
        shift_checks = shift(scenario, &c.final_arcs, &m.final_arcs);
    }

    let d = scenario.network().diagram();
    let queue_detected = runs
        .iter()
        .map(|r| {
            let queued = scenario.network().junctions().iter().any(|j| {
                j.incoming
                    .iter()
                    .any(|&a| *r.final_arcs.arcs[a].last().unwrap() > d.critical_density() + 1e-6)
            });
            (r.solver, queued)
        })
        .collect();

    Ok(ComparisonReport {
        metrics: ReportMetrics {
            scenario: scenario.name().to_string(),
            solvers,
            differences,
            outflow_rel_diff,
            outflow_equal,
            shift_checks,
            queue_detected,
        },
        runs,
    })
}

/// L1 (`dx`-weighted) and max-norm differences along every path, or over
/// every arc when the network has no paths.
pub fn profile_difference(scenario: &Scenario, a: &ArcDensityState, b: &ArcDensityState) -> (f64, f64) {
    let map = scenario.map();
    let dx = scenario.grid().dx;
    let diffs: Vec<f64> = if map.path_count() == 0 {
        a.arcs
            .iter()
            .flatten()
            .zip(b.arcs.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .collect()
    } else {
        (0..map.path_count())
            .flat_map(|p| (0..map.path_len(p)).map(move |k| (p, k)))
            .map(|(p, k)| {
                let c = map.to_physical(p, k);
                (a.get(c) - b.get(c)).abs()
            })
            .collect()
    };
    (dx * diffs.iter().sum::<f64>(), diffs.iter().copied().fold(0.0, f64::max))
}

/// For every junction with a single outgoing arc, compares classical cell
/// `k` with per-path cell `k + 1` on that arc, for `k` at least three cells
/// downstream of the junction.
fn shift(scenario: &Scenario, classical: &ArcDensityState, multi: &ArcDensityState) -> Vec<ShiftCheck> {
    let net = scenario.network();
    net.junctions()
        .iter()
        .filter(|j| j.outgoing.len() == 1)
        .map(|j| {
            let a = j.outgoing[0];
            let cells = net.arcs()[a].cells;
            let (mut shifted, mut unshifted) = (0.0_f64, 0.0_f64);
            // 0-based k from 2 to cells - 2: 1-based 3 ..= cells - 1
            for k in 2..cells - 1 {
                shifted = shifted.max((classical.arcs[a][k] - multi.arcs[a][k + 1]).abs());
                unshifted = unshifted.max((classical.arcs[a][k] - multi.arcs[a][k]).abs());
            }
            ShiftCheck {
                arc: net.arcs()[a].id.clone(),
                cells: (3, cells - 1),
                max_diff_shifted: shifted,
                max_diff_unshifted: unshifted,
            }
        })
        .collect()
}

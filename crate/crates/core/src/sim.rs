//! Time stepping driver shared by the three solvers.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classical::{advance_classical, cfl_check_classical, require_cfl};
use crate::error::{Error, Result};
use crate::multipath::{advance_local, advance_multipath, cfl_check_multipath};
use crate::network::{ArcDensityState, ArcLink, PathDensityState, Scenario};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Classical,
    Multipath,
    Local,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Classical, SolverKind::Multipath, SolverKind::Local];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Classical => "classical",
            SolverKind::Multipath => "multipath",
            SolverKind::Local => "local",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver `{s}` (classical, multipath, local)")))
    }
}

/// Fluxes of one step. Arc entries are the fluxes through each arc's first
/// and last interface; path entries are only filled by the per-path solver.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepFluxes {
    pub arc_in: Vec<f64>,
    pub arc_out: Vec<f64>,
    /// Per junction, the flux leaving each incoming arc.
    pub junction_in: Vec<Vec<f64>>,
    pub path_in: Vec<f64>,
    pub path_out: Vec<f64>,
}

impl StepFluxes {
    pub(crate) fn for_arcs(n: usize) -> Self {
        Self {
            arc_in: vec![0.0; n],
            arc_out: vec![0.0; n],
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverState {
    Arcs(ArcDensityState),
    Paths(PathDensityState),
}

/// A running simulation of one scenario with one solver.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    kind: SolverKind,
    exec: Execution,
    state: SolverState,
    steps_taken: usize,
}

impl<'a> Simulation<'a> {
    /// Starts from the scenario's initial data after checking the solver's
    /// CFL condition.
    pub fn new(scenario: &'a Scenario, kind: SolverKind, exec: Execution) -> Result<Self> {
        let grid = scenario.grid();
        let d = scenario.network().diagram();
        match kind {
            SolverKind::Classical => {
                require_cfl(cfl_check_classical(d, &grid), "dt * sup|f'| <= dx", &grid)?
            }
            _ => require_cfl(cfl_check_multipath(d, &grid), "2 dt * sup|f'| <= dx", &grid)?,
        }
        Self::new_unchecked(scenario, kind, exec)
    }

    /// Like [`Self::new`] without the CFL check, for stability experiments.
    pub fn new_unchecked(scenario: &'a Scenario, kind: SolverKind, exec: Execution) -> Result<Self> {
        let state = match kind {
            SolverKind::Multipath => SolverState::Paths(scenario.initial_path_state()?),
            _ => SolverState::Arcs(scenario.initial_arc_state()?),
        };
        Ok(Self {
            scenario,
            kind,
            exec,
            state,
            steps_taken: 0,
        })
    }

    /// Replaces the current state. The variant must match the solver.
    pub fn set_state(&mut self, state: SolverState) -> Result<()> {
        let ok = matches!(
            (&state, self.kind),
            (SolverState::Paths(_), SolverKind::Multipath)
                | (SolverState::Arcs(_), SolverKind::Classical | SolverKind::Local)
        );
        if !ok {
            return Err(Error::Config(format!("state kind does not match the {} solver", self.kind)));
        }
        self.state = state;
        Ok(())
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.scenario.grid().dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Total density per arc cell.
    pub fn arc_totals(&self) -> ArcDensityState {
        match &self.state {
            SolverState::Arcs(s) => s.clone(),
            SolverState::Paths(s) => s.to_arc_state(self.scenario.network(), self.scenario.map()),
        }
    }

    /// `dx` times the sum of the total density over all physical cells.
    pub fn total_mass(&self) -> f64 {
        let dx = self.scenario.grid().dx;
        match &self.state {
            SolverState::Arcs(s) => dx * s.arcs.iter().flatten().sum::<f64>(),
            SolverState::Paths(s) => {
                dx * self.scenario.map().omega_flat(s, Execution::Sequential).iter().sum::<f64>()
            }
        }
    }

    /// Advances one step and returns the fluxes used.
    pub fn step(&mut self) -> Result<StepFluxes> {
        let sc = self.scenario;
        let net = sc.network();
        let t = self.time();
        let lambda = sc.grid().lambda();
        let ghosts = sc.boundary().ghosts(t);
        let fluxes = match &self.state {
            SolverState::Arcs(s) => {
                let (next, fl) = match self.kind {
                    SolverKind::Classical => advance_classical(net, lambda, &ghosts, s, t, self.exec)?,
                    _ => advance_local(net, lambda, &ghosts, s, t, self.exec),
                };
                self.state = SolverState::Arcs(next);
                fl
            }
            SolverState::Paths(s) => {
                let (next, fl) = advance_multipath(net, sc.map(), lambda, &ghosts, s, t, self.exec);
                self.state = SolverState::Paths(next);
                fl
            }
        };
        self.steps_taken += 1;
        Ok(fluxes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub exec: Execution,
    /// A step whose largest per-cell change is below this marks steady state.
    pub steady_tol: f64,
    /// Record probe time series.
    pub record: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            exec: Execution::Sequential,
            steady_tol: 1e-10,
            record: true,
        }
    }
}

/// Everything measured during one run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub solver: SolverKind,
    pub steps: usize,
    pub t_final: f64,
    pub final_state: SolverState,
    pub final_arcs: ArcDensityState,
    /// Time nodes `0, dt, ..., t_final`.
    pub times: Vec<f64>,
    /// Per probe, the density at every time node.
    pub probes: Vec<Vec<f64>>,
    /// `(arc id, dt * sum of outflow)` for every free outflow end.
    pub exit_outflow: Vec<(String, f64)>,
    /// `(arc id, dt * sum of inflow)` for every free inflow end.
    pub entry_inflow: Vec<(String, f64)>,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// Largest per-step `|mass change - dt * (inflow - outflow)|`.
    pub mass_residual: f64,
    pub last_fluxes: StepFluxes,
    /// Time of the first step whose largest change fell below the tolerance.
    pub steady_at: Option<f64>,
    pub elapsed_secs: f64,
}

fn probe_values(sim: &Simulation, arcs: &ArcDensityState) -> Vec<f64> {
    sim.scenario.probes().iter().map(|(_, c)| arcs.get(*c)).collect()
}

/// Runs `scenario` to its final time with one solver.
pub fn run(scenario: &Scenario, kind: SolverKind, opts: RunOptions) -> Result<RunResult> {
    let start = Instant::now();
    let mut sim = Simulation::new(scenario, kind, opts.exec)?;
    let net = scenario.network();
    let grid = scenario.grid();
    let steps = grid.steps();

    let exits: Vec<usize> = (0..net.arcs().len())
        .filter(|&a| net.arcs()[a].end == ArcLink::Free)
        .collect();
    let entries: Vec<usize> = (0..net.arcs().len())
        .filter(|&a| net.arcs()[a].start == ArcLink::Free)
        .collect();
    let mut out_sum = vec![0.0; exits.len()];
    let mut in_sum = vec![0.0; entries.len()];

    let mut arcs = sim.arc_totals();
    let mut times = Vec::with_capacity(if opts.record { steps + 1 } else { 0 });
    let mut probes: Vec<Vec<f64>> = vec![Vec::new(); scenario.probes().len()];
    let mut record = |t: f64, arcs: &ArcDensityState, sim: &Simulation| {
        if opts.record {
            times.push(t);
            for (series, v) in probes.iter_mut().zip(probe_values(sim, arcs)) {
                series.push(v);
            }
        }
    };
    record(0.0, &arcs, &sim);

    let mass_initial = sim.total_mass();
    let mut mass = mass_initial;
    let mut mass_residual: f64 = 0.0;
    let mut steady_at = None;
    let mut last_fluxes = StepFluxes::default();

    for _ in 0..steps {
        let fl = sim.step()?;
        let next = sim.arc_totals();
        let mut net_in = 0.0;
        for (k, &a) in exits.iter().enumerate() {
            out_sum[k] += grid.dt * fl.arc_out[a];
            net_in -= fl.arc_out[a];
        }
        for (k, &a) in entries.iter().enumerate() {
            in_sum[k] += grid.dt * fl.arc_in[a];
            net_in += fl.arc_in[a];
        }
        let new_mass = sim.total_mass();
        mass_residual = mass_residual.max((new_mass - mass - grid.dt * net_in).abs());
        mass = new_mass;

        if steady_at.is_none() && next.max_abs_diff(&arcs) < opts.steady_tol {
            steady_at = Some(sim.time());
        }
        arcs = next;
        record(sim.time(), &arcs, &sim);
        last_fluxes = fl;
    }

    Ok(RunResult {
        solver: kind,
        steps,
        t_final: sim.time(),
        final_arcs: arcs,
        final_state: sim.state.clone(),
        times,
        probes,
        exit_outflow: exits
            .iter()
            .zip(out_sum)
            .map(|(&a, v)| (net.arcs()[a].id.clone(), v))
            .collect(),
        entry_inflow: entries
            .iter()
            .zip(in_sum)
            .map(|(&a, v)| (net.arcs()[a].id.clone(), v))
            .collect(),
        mass_initial,
        mass_final: mass,
        mass_residual,
        last_fluxes,
        steady_at,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

//! Per-arc Godunov scheme with explicit junction resolution.

mod junction;

pub use junction::{solve_junction, JunctionFluxSolution};

use crate::error::{Error, Result};
use crate::fundamental::{FundamentalDiagram, DOMAIN_SLACK};
use crate::network::{ArcDensityState, ArcLink, Boundary, Ghosts, GridSpec, Network};
use crate::par::Execution;
use crate::sim::StepFluxes;

/// Outcome of a CFL check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflReport {
    pub passed: bool,
    /// Slack in the condition, in units of length: negative on failure.
    pub margin: f64,
    /// `dt * sup|f'| / dx`.
    pub courant: f64,
}

/// `dt * sup|f'| <= dx`.
pub fn cfl_check_classical(d: &FundamentalDiagram, grid: &GridSpec) -> CflReport {
    cfl(d, grid, 1.0)
}

pub(crate) fn cfl(d: &FundamentalDiagram, grid: &GridSpec, factor: f64) -> CflReport {
    let lhs = factor * grid.dt * d.max_char_speed();
    CflReport {
        passed: lhs <= grid.dx,
        margin: grid.dx - lhs,
        courant: grid.dt * d.max_char_speed() / grid.dx,
    }
}

pub(crate) fn require_cfl(report: CflReport, condition: &'static str, grid: &GridSpec) -> Result<()> {
    if report.passed {
        Ok(())
    } else {
        Err(Error::Cfl {
            condition,
            lhs: grid.dx - report.margin,
            rhs: grid.dx,
        })
    }
}

pub(crate) fn check_arc_state(net: &Network, state: &ArcDensityState) -> Result<()> {
    if state.arcs.len() != net.arcs().len()
        || state.arcs.iter().zip(net.arcs()).any(|(s, a)| s.len() != a.cells)
    {
        return Err(Error::Dimension("arc state does not match the network".into()));
    }
    let rho_max = net.diagram().rho_max();
    for (a, cells) in state.arcs.iter().enumerate() {
        if let Some(k) = cells
            .iter()
            .position(|v| !(*v >= -DOMAIN_SLACK && *v <= rho_max + DOMAIN_SLACK))
        {
            return Err(Error::Inadmissible(format!(
                "density {} at arc `{}` cell {}",
                cells[k],
                net.arcs()[a].id,
                k + 1
            )));
        }
    }
    Ok(())
}

/// One step of the classical scheme from time `t`.
///
/// Returns the new state and the fluxes through every arc end.
pub fn step_classical(
    net: &Network,
    grid: &GridSpec,
    boundary: &Boundary,
    state: &ArcDensityState,
    t: f64,
    exec: Execution,
) -> Result<(ArcDensityState, StepFluxes)> {
    require_cfl(cfl_check_classical(net.diagram(), grid), "dt * sup|f'| <= dx", grid)?;
    check_arc_state(net, state)?;
    advance_classical(net, grid.lambda(), &boundary.ghosts(t), state, t, exec)
}

pub(crate) fn advance_classical(
    net: &Network,
    lambda: f64,
    ghosts: &Ghosts,
    state: &ArcDensityState,
    t: f64,
    exec: Execution,
) -> Result<(ArcDensityState, StepFluxes)> {
    let d = net.diagram();
    let solutions: Vec<JunctionFluxSolution> = exec
        .map(net.junctions().len(), |jk| {
            let j = &net.junctions()[jk];
            let demands: Vec<f64> = j
                .incoming
                .iter()
                .enumerate()
                .map(|(slot, &a)| {
                    let last = *state.arcs[a].last().expect("arcs have cells");
                    d.demand_unchecked(last.clamp(0.0, d.rho_max())) * j.gate(slot, t)
                })
                .collect();
            let supplies: Vec<f64> = j
                .outgoing
                .iter()
                .map(|&a| d.supply_unchecked(state.arcs[a][0].clamp(0.0, d.rho_max())))
                .collect();
            solve_junction(&demands, &supplies, &j.preferences, &j.priorities)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(update_arcs(net, lambda, ghosts, state, &solutions, exec))
}

/// Godunov update of every arc, with junction end fluxes taken from
/// `solutions` and free ends from the ghost values.
pub(crate) fn update_arcs(
    net: &Network,
    lambda: f64,
    ghosts: &Ghosts,
    state: &ArcDensityState,
    solutions: &[JunctionFluxSolution],
    exec: Execution,
) -> (ArcDensityState, StepFluxes) {
    let d = net.diagram();
    let updated = exec.map(net.arcs().len(), |a| {
        let arc = &net.arcs()[a];
        let rho = &state.arcs[a];
        let n = rho.len();
        let f_in = match arc.start {
            ArcLink::Free => ghosts.arc_in[a].map_or(0.0, |g| d.godunov(g, rho[0])),
            ArcLink::Junction { junction, slot } => solutions[junction].gamma_out[slot],
        };
        let f_out = match arc.end {
            ArcLink::Free => ghosts.arc_out[a].map_or(0.0, |g| d.godunov(rho[n - 1], g)),
            ArcLink::Junction { junction, slot } => solutions[junction].gamma_in[slot],
        };
        let mut next = Vec::with_capacity(n);
        let mut left = f_in;
        for k in 0..n {
            let right = if k + 1 < n { d.godunov(rho[k], rho[k + 1]) } else { f_out };
            next.push(rho[k] - lambda * (right - left));
            left = right;
        }
        (next, f_in, f_out)
    });

    let mut fluxes = StepFluxes::for_arcs(net.arcs().len());
    let mut arcs = Vec::with_capacity(updated.len());
    for (a, (next, f_in, f_out)) in updated.into_iter().enumerate() {
        fluxes.arc_in[a] = f_in;
        fluxes.arc_out[a] = f_out;
        arcs.push(next);
    }
    fluxes.junction_in = solutions.iter().map(|s| s.gamma_in.clone()).collect();
    (ArcDensityState { arcs }, fluxes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{BoundaryCondition, BoundarySpec, End, NetworkSpec};

    fn grid() -> GridSpec {
        GridSpec { dx: 0.05, dt: 5.0 / 240.0, t_f: 5.0 }
    }

    #[test]
    fn cfl_examples() {
        let d = FundamentalDiagram::default();
        let r = cfl_check_classical(&d, &grid());
        assert!(r.passed);
        assert!((r.margin - (0.05 - 5.0 / 240.0)).abs() < 1e-15);
        let eq = GridSpec { dx: 0.05, dt: 0.05, t_f: 1.0 };
        assert!(cfl_check_classical(&d, &eq).passed);
        let bad = GridSpec { dx: 0.05, dt: 0.1, t_f: 1.0 };
        assert!(!cfl_check_classical(&d, &bad).passed);
    }

    fn road(cells: usize, rho_in: f64, rho_out: f64) -> (Network, Boundary) {
        let spec: NetworkSpec = serde_json::from_str(&format!(
            r#"{{"arcs":[{{"id":"r","length":{},"cells":{cells}}}]}}"#,
            cells as f64 * 0.05
        ))
        .unwrap();
        let net = Network::new(spec).unwrap();
        let bc = Boundary::build(
            &net,
            &[
                BoundarySpec::arc("r", End::In, BoundaryCondition::Dirichlet { value: rho_in }),
                BoundarySpec::arc("r", End::Out, BoundaryCondition::Dirichlet { value: rho_out }),
            ],
            5.0,
        )
        .unwrap();
        (net, bc)
    }

    #[test]
    fn uniform_state_is_steady() {
        let (net, bc) = road(10, 0.37, 0.37);
        let st = ArcDensityState { arcs: vec![vec![0.37; 10]] };
        let (next, _) = step_classical(&net, &grid(), &bc, &st, 0.0, Execution::Sequential).unwrap();
        assert_eq!(next, st);
    }

    #[test]
    fn riemann_stencil_is_local() {
        // a transonic rarefaction touches both neighbours of the jump
        let (net, bc) = road(10, 0.6, 0.2);
        let mut st = ArcDensityState { arcs: vec![vec![0.6; 10]] };
        st.arcs[0][5..].fill(0.2);
        let (next, _) = step_classical(&net, &grid(), &bc, &st, 0.0, Execution::Sequential).unwrap();
        let changed: Vec<usize> = (0..10).filter(|&k| next.arcs[0][k] != st.arcs[0][k]).collect();
        assert_eq!(changed, vec![4, 5]);
    }

    #[test]
    fn closed_ends_carry_no_flux() {
        let (net, _) = road(10, 0.0, 0.0);
        let bc = Boundary::build(
            &net,
            &[
                BoundarySpec::arc("r", End::In, BoundaryCondition::ZeroFlux),
                BoundarySpec::arc("r", End::Out, BoundaryCondition::ZeroFlux),
            ],
            5.0,
        )
        .unwrap();
        let st = ArcDensityState { arcs: vec![vec![0.37; 10]] };
        let (next, fl) = step_classical(&net, &grid(), &bc, &st, 0.0, Execution::Sequential).unwrap();
        assert_eq!((fl.arc_in[0], fl.arc_out[0]), (0.0, 0.0));
        let before: f64 = st.arcs[0].iter().sum();
        let after: f64 = next.arcs[0].iter().sum();
        assert!((before - after).abs() < 1e-15);
    }

    #[test]
    fn rejects_cfl_violation_and_bad_state() {
        let (net, bc) = road(10, 0.1, 0.1);
        let st = ArcDensityState { arcs: vec![vec![0.1; 10]] };
        let g = GridSpec { dx: 0.05, dt: 0.1, t_f: 1.0 };
        assert!(matches!(
            step_classical(&net, &g, &bc, &st, 0.0, Execution::Sequential),
            Err(Error::Cfl { .. })
        ));
        let bad = ArcDensityState { arcs: vec![vec![1.2; 10]] };
        assert!(matches!(
            step_classical(&net, &grid(), &bc, &bad, 0.0, Execution::Sequential),
            Err(Error::Inadmissible(_))
        ));
    }
}

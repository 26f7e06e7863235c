//! Per-path conservative scheme and its local (per-arc) variant.
//!
//! Each path density is advected with the velocity of the total density at
//! its cell: the flux of path `p` through interface `k+1/2` is
//! `(mu_k / omega_k) * g(omega_k, omega_{k+1})`. Junctions are ordinary
//! interfaces along a path, so no junction problem is solved.

use crate::classical::{check_arc_state, cfl, require_cfl, update_arcs, CflReport, JunctionFluxSolution};
use crate::error::{Error, Result};
use crate::fundamental::{FundamentalDiagram, DOMAIN_SLACK};
use crate::network::{
    ArcDensityState, Boundary, Ghosts, GridSpec, Network, PathCellMap, PathDensityState,
};
use crate::par::Execution;
use crate::sim::StepFluxes;

/// Below this total density a cell is treated as empty and its paths
/// carry no flux.
pub const EMPTY_CELL: f64 = 1e-300;

#[inline]
fn share(mu: f64, omega: f64) -> f64 {
    if omega < EMPTY_CELL {
        0.0
    } else {
        mu / omega
    }
}

/// `2 * dt * sup|f'| <= dx`.
pub fn cfl_check_multipath(d: &FundamentalDiagram, grid: &GridSpec) -> CflReport {
    cfl(d, grid, 2.0)
}

/// True when every path density is non-negative and every physical cell's
/// total stays within `rho_max`, both up to roundoff slack.
pub fn admissible(state: &PathDensityState, map: &PathCellMap, rho_max: f64) -> bool {
    state.paths.iter().flatten().all(|mu| *mu >= -DOMAIN_SLACK)
        && map
            .omega_flat(state, Execution::Sequential)
            .iter()
            .all(|w| *w <= rho_max + DOMAIN_SLACK)
}

fn check_path_state(net: &Network, map: &PathCellMap, state: &PathDensityState) -> Result<()> {
    if state.paths.len() != map.path_count()
        || state.paths.iter().enumerate().any(|(p, v)| v.len() != map.path_len(p))
    {
        return Err(Error::Dimension("path state does not match the network".into()));
    }
    if state.paths.iter().flatten().any(|v| !v.is_finite()) || !admissible(state, map, net.diagram().rho_max()) {
        return Err(Error::Inadmissible("path densities negative or above rho_max".into()));
    }
    Ok(())
}

/// One step of the per-path scheme from time `t`.
pub fn step_multipath(
    net: &Network,
    map: &PathCellMap,
    grid: &GridSpec,
    boundary: &Boundary,
    state: &PathDensityState,
    t: f64,
    exec: Execution,
) -> Result<(PathDensityState, StepFluxes)> {
    require_cfl(cfl_check_multipath(net.diagram(), grid), "2 dt * sup|f'| <= dx", grid)?;
    check_path_state(net, map, state)?;
    Ok(advance_multipath(net, map, grid.lambda(), &boundary.ghosts(t), state, t, exec))
}

pub(crate) fn advance_multipath(
    net: &Network,
    map: &PathCellMap,
    lambda: f64,
    ghosts: &Ghosts,
    state: &PathDensityState,
    t: f64,
    exec: Execution,
) -> (PathDensityState, StepFluxes) {
    let d = net.diagram();
    let omega = map.omega_flat(state, exec);

    let updated = exec.map(map.path_count(), |p| {
        let mu = &state.paths[p];
        let cells = map.path_cells(p);
        let len = mu.len();
        let w = |k: usize| omega[cells[k]];

        // interface k sits between path cells k-1 and k
        let mut flux = Vec::with_capacity(len + 1);
        flux.push(match ghosts.path_in[p] {
            Some(g) => {
                let wg = ghosts.path_in_omega[p];
                share(g, wg) * d.godunov(wg, w(0))
            }
            None => 0.0,
        });
        for k in 1..len {
            flux.push(share(mu[k - 1], w(k - 1)) * d.godunov(w(k - 1), w(k)));
        }
        flux.push(match ghosts.path_out_omega[p] {
            Some(wg) => share(mu[len - 1], w(len - 1)) * d.godunov(w(len - 1), wg),
            None => 0.0,
        });
        for c in map.crossings(p) {
            flux[c.cell] *= net.junctions()[c.junction].gate(c.slot, t);
        }

        let next: Vec<f64> = (0..len)
            .map(|k| mu[k] - lambda * (flux[k + 1] - flux[k]))
            .collect();
        (next, flux)
    });

    let mut fluxes = StepFluxes::for_arcs(net.arcs().len());
    fluxes.junction_in = net
        .junctions()
        .iter()
        .map(|j| vec![0.0; j.incoming.len()])
        .collect();
    let mut paths = Vec::with_capacity(updated.len());
    for (p, (next, flux)) in updated.into_iter().enumerate() {
        let mut start = 0;
        for &a in &net.paths()[p].arcs {
            let end = start + net.arcs()[a].cells;
            fluxes.arc_in[a] += flux[start];
            fluxes.arc_out[a] += flux[end];
            start = end;
        }
        for c in map.crossings(p) {
            fluxes.junction_in[c.junction][c.slot] += flux[c.cell];
        }
        fluxes.path_in.push(flux[0]);
        fluxes.path_out.push(flux[flux.len() - 1]);
        paths.push(next);
    }
    (PathDensityState { paths }, fluxes)
}

/// One step of the local variant from time `t`.
///
/// Arcs carry total densities. At a junction the last cell of incoming arc
/// `i` is split by direction with the preferences `alpha_ji`, each part
/// crosses with the per-path flux `alpha_ji * g(rho_i, rho_j)`, and the
/// parts entering each outgoing arc are summed again.
pub fn step_local(
    net: &Network,
    grid: &GridSpec,
    boundary: &Boundary,
    state: &ArcDensityState,
    t: f64,
    exec: Execution,
) -> Result<(ArcDensityState, StepFluxes)> {
    require_cfl(cfl_check_multipath(net.diagram(), grid), "2 dt * sup|f'| <= dx", grid)?;
    check_arc_state(net, state)?;
    Ok(advance_local(net, grid.lambda(), &boundary.ghosts(t), state, t, exec))
}

pub(crate) fn advance_local(
    net: &Network,
    lambda: f64,
    ghosts: &Ghosts,
    state: &ArcDensityState,
    t: f64,
    exec: Execution,
) -> (ArcDensityState, StepFluxes) {
    let d = net.diagram();
    let solutions: Vec<JunctionFluxSolution> = exec.map(net.junctions().len(), |jk| {
        let j = &net.junctions()[jk];
        let mut gamma_in = vec![0.0; j.incoming.len()];
        let mut gamma_out = vec![0.0; j.outgoing.len()];
        for (i, &ai) in j.incoming.iter().enumerate() {
            let gate = j.gate(i, t);
            let last = *state.arcs[ai].last().expect("arcs have cells");
            for (o, &ao) in j.outgoing.iter().enumerate() {
                let phi = j.preferences.get(o, i) * d.godunov(last, state.arcs[ao][0]) * gate;
                gamma_in[i] += phi;
                gamma_out[o] += phi;
            }
        }
        JunctionFluxSolution { gamma_in, gamma_out }
    });
    update_arcs(net, lambda, ghosts, state, &solutions, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::three_arc;
    use crate::network::{BoundaryCondition, BoundarySpec, End};

    fn setup() -> (Network, PathCellMap, Boundary) {
        let net = Network::new(three_arc()).unwrap();
        let map = PathCellMap::new(&net);
        let bc = Boundary::build(
            &net,
            &[
                BoundarySpec::arc("1", End::In, BoundaryCondition::Dirichlet { value: 0.0 }),
                BoundarySpec::arc("2", End::In, BoundaryCondition::Dirichlet { value: 0.0 }),
                BoundarySpec::arc("3", End::Out, BoundaryCondition::Dirichlet { value: 0.0 }),
            ],
            5.0,
        )
        .unwrap();
        (net, map, bc)
    }

    fn grid() -> GridSpec {
        GridSpec { dx: 0.05, dt: 5.0 / 240.0, t_f: 5.0 }
    }

    #[test]
    fn cfl_examples() {
        let d = FundamentalDiagram::default();
        let r = cfl_check_multipath(&d, &grid());
        assert!(r.passed);
        assert!((r.courant - 5.0 / 12.0).abs() < 1e-15);
        assert!(cfl_check_multipath(&d, &GridSpec { dx: 0.05, dt: 0.025, t_f: 1.0 }).passed);
        assert!(!cfl_check_multipath(&d, &GridSpec { dx: 0.05, dt: 0.04, t_f: 1.0 }).passed);
    }

    #[test]
    fn empty_stays_empty() {
        let (net, map, bc) = setup();
        let st = PathDensityState::zeros(&map);
        let (next, _) = step_multipath(&net, &map, &grid(), &bc, &st, 0.0, Execution::Sequential).unwrap();
        assert_eq!(next, st);
    }

    #[test]
    fn worst_case_junction_cell() {
        // both incoming cells at sigma, junction cell at 0.6, the next one full
        let (net, map, bc) = setup();
        let mut st = PathDensityState::zeros(&map);
        st.paths[0][19] = 0.5;
        st.paths[1][19] = 0.5;
        st.paths[0][20] = 0.3;
        st.paths[1][20] = 0.3;
        st.paths[0][21] = 0.5;
        st.paths[1][21] = 0.5;
        let (next, _) = step_multipath(&net, &map, &grid(), &bc, &st, 0.0, Execution::Sequential).unwrap();
        let z = next.paths[0][20] + next.paths[1][20];
        assert!((z - 0.8).abs() < 1e-14, "{z}");
    }

    #[test]
    fn admissibility_examples() {
        let (_, map, _) = setup();
        let mut st = PathDensityState::zeros(&map);
        assert!(admissible(&st, &map, 1.0));
        st.paths[0][3] = 1.0;
        assert!(admissible(&st, &map, 1.0));
        st.paths[0][25] = 0.6;
        st.paths[1][25] = 0.5;
        assert!(!admissible(&st, &map, 1.0));
    }

    #[test]
    fn local_empty_stays_empty() {
        let (net, _, bc) = setup();
        let st = ArcDensityState::zeros(&net);
        let (next, _) = step_local(&net, &grid(), &bc, &st, 0.0, Execution::Sequential).unwrap();
        assert_eq!(next, st);
    }
}

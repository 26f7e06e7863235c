//! Canonical networks, independent oracles and solver comparison.

mod compare;
mod oracle;

pub use compare::{
    applicable_solvers, profile_difference, run_comparison, run_solvers, total_mass, ComparisonReport, PairDifference, ReportMetrics, ShiftCheck,
    SolverMetrics, OUTFLOW_REL_TOL,
};
pub use oracle::{junction_oracle, riemann_exact, JunctionOracle};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fundamental::DiagramSpec;
use crate::network::{
    ArcSpec, BoundaryCondition, BoundarySpec, End, GridSpec, InitialSpec, JunctionSpec,
    NetworkSpec, PathSpec, ProbeSpec, Scenario, ScenarioDocument, SignalPhase, SignalSpec,
};

pub const SCENARIO_NAMES: [&str; 7] = [
    "two_in_one_out_const",
    "two_in_one_out_timedep",
    "one_in_two_out",
    "two_in_two_out",
    "five_arc",
    "single_road_riemann",
    "synthetic_large",
];

/// Cells per unit-length arc in the small test networks.
const CELLS: usize = 20;
const DX: f64 = 1.0 / CELLS as f64;
/// Gives the 241 time nodes of the two-in-one-out test over `t_f = 5`.
const DT: f64 = 5.0 / 240.0;

fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn unit_arcs(names: &[&str]) -> Vec<ArcSpec> {
    names
        .iter()
        .map(|id| ArcSpec { id: id.to_string(), length: 1.0, cells: CELLS })
        .collect()
}

fn junction(id: &str, incoming: &[&str], outgoing: &[&str], a: &[f64], q: Option<Vec<f64>>) -> JunctionSpec {
    JunctionSpec {
        id: id.into(),
        incoming: ids(incoming),
        outgoing: ids(outgoing),
        preferences: a.to_vec(),
        q,
        signal: None,
    }
}

fn path(id: &str, arcs: &[&str]) -> PathSpec {
    PathSpec { id: id.into(), arcs: ids(arcs) }
}

fn dirichlet(arc: &str, end: End, value: f64) -> BoundarySpec {
    BoundarySpec::arc(arc, end, BoundaryCondition::Dirichlet { value })
}

fn probe(label: &str, arc: &str, cell: usize) -> ProbeSpec {
    ProbeSpec { label: label.into(), arc: arc.into(), cell }
}

fn small_grid(t_f: f64) -> GridSpec {
    GridSpec { dx: DX, dt: DT, t_f }
}

fn empty() -> InitialSpec {
    InitialSpec::Constant { value: 0.0 }
}

/// Builds one of the named scenarios in [`SCENARIO_NAMES`].
pub fn build_scenario(name: &str) -> Result<Scenario> {
    Scenario::from_document(scenario_document(name)?)
}

pub fn scenario_document(name: &str) -> Result<ScenarioDocument> {
    let doc = match name {
        "two_in_one_out_const" => two_in_one_out(
            name,
            5.0,
            BoundaryCondition::Dirichlet { value: 0.4 },
            BoundaryCondition::Dirichlet { value: 0.2 },
        ),
        "two_in_one_out_timedep" => {
            let t_f = 8.0;
            let n = (t_f / DT).round() as usize;
            let t: Vec<f64> = (0..=n).map(|k| k as f64 * DT).collect();
            let table = |g: fn(f64) -> f64| BoundaryCondition::Table {
                t: t.clone(),
                value: t.iter().map(|&s| 0.25 * (1.0 + g(s))).collect(),
            };
            two_in_one_out(name, t_f, table(f64::sin), table(f64::cos))
        }
        "one_in_two_out" => ScenarioDocument {
            name: name.into(),
            network: NetworkSpec {
                diagram: DiagramSpec::default(),
                arcs: unit_arcs(&["1", "2", "3"]),
                junctions: vec![junction("J", &["1"], &["2", "3"], &[0.8, 0.2], None)],
                paths: vec![path("P1", &["1", "2"]), path("P2", &["1", "3"])],
            },
            grid: small_grid(11.0),
            boundary: vec![
                dirichlet("1", End::In, 0.5),
                dirichlet("2", End::Out, 0.0),
                dirichlet("3", End::Out, 0.9),
            ],
            initial: empty(),
            probes: vec![probe("J", "1", 20), probe("J+1 on 2", "2", 1), probe("J+1 on 3", "3", 1)],
        },
        "two_in_two_out" => ScenarioDocument {
            name: name.into(),
            network: NetworkSpec {
                diagram: DiagramSpec::default(),
                arcs: unit_arcs(&["1", "2", "3", "4"]),
                junctions: vec![junction(
                    "J",
                    &["1", "2"],
                    &["3", "4"],
                    &[0.8, 0.9, 0.2, 0.1],
                    Some(vec![0.5, 0.5]),
                )],
                paths: vec![
                    path("P1", &["1", "3"]),
                    path("P2", &["2", "3"]),
                    path("P3", &["1", "4"]),
                    path("P4", &["2", "4"]),
                ],
            },
            grid: small_grid(6.0),
            boundary: vec![
                dirichlet("1", End::In, 0.5),
                dirichlet("2", End::In, 0.5),
                dirichlet("3", End::Out, 0.0),
                dirichlet("4", End::Out, 0.0),
            ],
            initial: empty(),
            probes: vec![
                probe("J-1 on 1", "1", 20),
                probe("J-1 on 2", "2", 20),
                probe("J on 3", "3", 1),
                probe("J on 4", "4", 1),
            ],
        },
        "five_arc" => {
            let mut j1 = junction("J1", &["1", "2"], &["3"], &[1.0, 1.0], Some(vec![0.5, 0.5]));
            // arc 2 is stopped for the whole run
            j1.signal = Some(SignalSpec {
                period: 1.0,
                offset: 0.0,
                phases: vec![SignalPhase { arc: "2".into(), green: vec![] }],
            });
            ScenarioDocument {
                name: name.into(),
                network: NetworkSpec {
                    diagram: DiagramSpec::default(),
                    arcs: unit_arcs(&["1", "2", "3", "4", "5"]),
                    junctions: vec![j1, junction("J2", &["3"], &["4", "5"], &[0.5, 0.5], None)],
                    paths: vec![path("P1", &["1", "3", "4"]), path("P2", &["2", "3", "5"])],
                },
                grid: small_grid(3.0),
                boundary: vec![
                    dirichlet("1", End::In, 0.3),
                    dirichlet("2", End::In, 0.2),
                    dirichlet("4", End::Out, 0.0),
                    dirichlet("5", End::Out, 0.0),
                ],
                initial: empty(),
                probes: vec![probe("4 first", "4", 1), probe("5 first", "5", 1)],
            }
        }
        "single_road_riemann" => riemann_document(0.8, 0.2, 40, 0.5),
        "synthetic_large" => synthetic_large(),
        _ => {
            return Err(Error::Config(format!(
                "unknown scenario `{name}` (one of {})",
                SCENARIO_NAMES.join(", ")
            )))
        }
    };
    Ok(doc)
}

fn two_in_one_out(name: &str, t_f: f64, in1: BoundaryCondition, in2: BoundaryCondition) -> ScenarioDocument {
    ScenarioDocument {
        name: name.into(),
        network: NetworkSpec {
            diagram: DiagramSpec::default(),
            arcs: unit_arcs(&["1", "2", "3"]),
            junctions: vec![junction("J", &["1", "2"], &["3"], &[1.0, 1.0], Some(vec![0.5, 0.5]))],
            paths: vec![path("P1", &["1", "3"]), path("P2", &["2", "3"])],
        },
        grid: small_grid(t_f),
        boundary: vec![
            BoundarySpec::arc("1", End::In, in1),
            BoundarySpec::arc("2", End::In, in2),
            dirichlet("3", End::Out, 0.0),
        ],
        initial: empty(),
        probes: vec![
            probe("P1 J-1", "1", 20),
            probe("P2 J-1", "2", 20),
            probe("J", "3", 1),
            probe("J+1", "3", 2),
        ],
    }
}

/// A road on `[-1, 1]` with a jump at `x = 0`, `cells_per_unit` cells per
/// unit length and the boundary held at the far-field states.
pub fn riemann_document(rho_l: f64, rho_r: f64, cells_per_unit: usize, t_f: f64) -> ScenarioDocument {
    let cells = 2 * cells_per_unit;
    let dx = 1.0 / cells_per_unit as f64;
    let values: Vec<f64> = (0..cells).map(|k| if k < cells_per_unit { rho_l } else { rho_r }).collect();
    ScenarioDocument {
        name: "single_road_riemann".into(),
        network: NetworkSpec {
            diagram: DiagramSpec::default(),
            arcs: vec![ArcSpec { id: "road".into(), length: 2.0, cells }],
            junctions: vec![],
            paths: vec![path("P", &["road"])],
        },
        grid: GridSpec { dx, dt: dx * DT / DX, t_f },
        boundary: vec![dirichlet("road", End::In, rho_l), dirichlet("road", End::Out, rho_r)],
        initial: InitialSpec::Arcs { values: BTreeMap::from([("road".to_string(), values)]) },
        probes: vec![probe("x=0-", "road", cells_per_unit), probe("x=0+", "road", cells_per_unit + 1)],
    }
}

/// A grid of six two-by-two junctions in two rows and three columns, plus
/// a hub collecting both rows. 20 arcs, 3282 cells of 100 m, 1080 steps of
/// 2.5 s, and signals at four junctions coordinated in two pairs.
fn synthetic_large() -> ScenarioDocument {
    let dx = 100.0;
    let mut arcs: Vec<(String, usize)> = Vec::new();
    let mut junctions = Vec::new();
    let mut boundary = Vec::new();
    let split = [0.7, 0.3, 0.3, 0.7];
    let g = |r: usize, c: usize| format!("G{r}{c}");

    for r in 0..2 {
        arcs.push((format!("W{r}"), 0));
        boundary.push(dirichlet(&format!("W{r}"), End::In, 0.3));
        for c in 0..2 {
            arcs.push((format!("R{r}{c}"), 0));
        }
        arcs.push((format!("H{r}"), 0));
    }
    for c in 0..3 {
        arcs.push((format!("N{c}"), 0));
        boundary.push(dirichlet(&format!("N{c}"), End::In, 0.3));
        arcs.push((format!("C{c}"), 0));
        arcs.push((format!("S{c}"), 0));
        boundary.push(dirichlet(&format!("S{c}"), End::Out, 0.0));
    }
    arcs.push(("E".into(), 0));
    boundary.push(dirichlet("E", End::In, 0.3));
    for k in 0..2 {
        arcs.push((format!("X{k}"), 0));
        boundary.push(dirichlet(&format!("X{k}"), End::Out, 0.0));
    }

    for r in 0..2 {
        for c in 0..3 {
            let west = if c == 0 { format!("W{r}") } else { format!("R{r}{}", c - 1) };
            let east = if c == 2 { format!("H{r}") } else { format!("R{r}{c}") };
            let north = if r == 0 { format!("N{c}") } else { format!("C{c}") };
            let south = if r == 0 { format!("C{c}") } else { format!("S{c}") };
            let mut j = junction(
                &g(r, c),
                &[&west, &north],
                &[&east, &south],
                &split,
                Some(vec![0.5, 0.5]),
            );
            if c < 2 {
                // rows 0 and 1 form the two pairs, half a cycle apart
                j.signal = Some(SignalSpec {
                    period: 90.0,
                    offset: 45.0 * r as f64,
                    phases: vec![
                        SignalPhase { arc: west.clone(), green: vec![[0.0, 45.0]] },
                        SignalPhase { arc: north.clone(), green: vec![[45.0, 90.0]] },
                    ],
                });
            }
            junctions.push(j);
        }
    }
    let third = 1.0 / 3.0;
    junctions.push(junction(
        "HUB",
        &["H0", "H1", "E"],
        &["X0", "X1"],
        &[0.7, 0.3, 0.5, 0.3, 0.7, 0.5],
        Some(vec![third, third, 1.0 - 2.0 * third]),
    ));

    // 3282 cells over 20 arcs
    let total = 3282;
    let base = total / arcs.len();
    let extra = total % arcs.len();
    let arcs: Vec<ArcSpec> = arcs
        .into_iter()
        .enumerate()
        .map(|(k, (id, _))| {
            let cells = base + usize::from(k < extra);
            ArcSpec { id, length: cells as f64 * dx, cells }
        })
        .collect();

    ScenarioDocument {
        name: "synthetic_large".into(),
        network: NetworkSpec {
            diagram: DiagramSpec::Parabola { rho_max: 1.0, v_max: 15.0 },
            arcs,
            junctions,
            paths: vec![],
        },
        grid: GridSpec { dx, dt: 2.5, t_f: 2700.0 },
        boundary,
        initial: InitialSpec::Constant { value: 0.2 },
        probes: vec![probe("G01 west", "R00", base), probe("G11 west", "R10", base)],
    }
}

//! Road network description: arcs, junctions, paths and their validation.
//!
//! Arcs are identified by string ids in scenario files. [`Network`] is the
//! validated, index-based form that the solvers consume.
//!
//! Cells are numbered from 1 in files and reports. Internally every index
//! is 0-based.

mod boundary;
mod cells;
mod scenario;
mod state;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Diagnostic, Error, Result};
use crate::fundamental::{DiagramSpec, FundamentalDiagram};

pub use boundary::{Boundary, BoundaryCondition, BoundarySpec, End, Ghosts};
pub use cells::{aggregate_omega, path_cell_map, CellRef, PathCellMap};
pub use scenario::{GridSpec, InitialSpec, ProbeSpec, Scenario, ScenarioDocument};
pub use state::{ArcDensityState, PathDensityState};

/// Tolerance on column sums of preference matrices and on priority sums.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Largest junction fan-in / fan-out handled by the junction solver.
pub const MAX_JUNCTION_DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub id: String,
    pub length: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionSpec {
    pub id: String,
    pub incoming: Vec<String>,
    pub outgoing: Vec<String>,
    /// m x n preference matrix, row-major: row j is outgoing arc j,
    /// column i is incoming arc i.
    #[serde(rename = "A")]
    pub preferences: Vec<f64>,
    /// Right-of-way coefficients, one per incoming arc. Optional when
    /// there is a single incoming arc.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<SignalSpec>,
}

/// Periodic traffic light. Arcs without a phase entry are always green.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub period: f64,
    #[serde(default)]
    pub offset: f64,
    pub phases: Vec<SignalPhase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPhase {
    pub arc: String,
    /// Green intervals `[start, end)` within one period.
    pub green: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub id: String,
    pub arcs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(default)]
    pub diagram: DiagramSpec,
    pub arcs: Vec<ArcSpec>,
    #[serde(default)]
    pub junctions: Vec<JunctionSpec>,
    #[serde(default)]
    pub paths: Vec<PathSpec>,
}

/// Checks every structural invariant of `net`. Returns one diagnostic per
/// violation; an empty list means the network is valid.
pub fn validate(net: &NetworkSpec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    if let Err(e) = FundamentalDiagram::from_spec(&net.diagram) {
        diags.push(Diagnostic::new("$.diagram", e.to_string()));
    }

    let mut arc_ids = HashSet::new();
    if net.arcs.is_empty() {
        diags.push(Diagnostic::new("$.arcs", "network has no arcs"));
    }
    let dx0 = net.arcs.first().map(|a| a.length / a.cells.max(1) as f64);
    for (k, arc) in net.arcs.iter().enumerate() {
        let loc = format!("$.arcs[{k}]");
        if !arc_ids.insert(arc.id.as_str()) {
            diags.push(Diagnostic::new(&loc, format!("duplicate arc id `{}`", arc.id)));
        }
        if !(arc.length > 0.0 && arc.length.is_finite()) {
            diags.push(Diagnostic::new(&loc, format!("arc `{}` has non-positive length", arc.id)));
        }
        if arc.cells < 3 {
            diags.push(Diagnostic::new(
                &loc,
                format!("arc `{}` has {} cells; at least 3 are required", arc.id, arc.cells),
            ));
        }
        if let Some(dx0) = dx0 {
            let dx = arc.length / arc.cells.max(1) as f64;
            if (dx - dx0).abs() > 1e-12 * dx0.abs().max(1.0) {
                diags.push(Diagnostic::new(
                    &loc,
                    format!("arc `{}` has cell size {dx}, expected {dx0}", arc.id),
                ));
            }
        }
    }

    let mut junction_ids = HashSet::new();
    let mut feeds: HashMap<&str, &str> = HashMap::new();
    let mut fed_by: HashMap<&str, &str> = HashMap::new();
    for (k, j) in net.junctions.iter().enumerate() {
        let loc = format!("$.junctions[{k}]");
        if !junction_ids.insert(j.id.as_str()) {
            diags.push(Diagnostic::new(&loc, format!("duplicate junction id `{}`", j.id)));
        }
        let (n, m) = (j.incoming.len(), j.outgoing.len());
        if n == 0 || m == 0 {
            diags.push(Diagnostic::new(
                &loc,
                format!("junction `{}` needs at least one incoming and one outgoing arc", j.id),
            ));
        }
        if n > MAX_JUNCTION_DEGREE || m > MAX_JUNCTION_DEGREE {
            diags.push(Diagnostic::new(
                &loc,
                format!(
                    "junction `{}` is {n}-in-{m}-out; at most {MAX_JUNCTION_DEGREE} on each side are supported",
                    j.id
                ),
            ));
        }
        for (side, list) in [("incoming", &j.incoming), ("outgoing", &j.outgoing)] {
            for (i, a) in list.iter().enumerate() {
                if !arc_ids.contains(a.as_str()) {
                    diags.push(Diagnostic::new(
                        format!("{loc}.{side}[{i}]"),
                        format!("unknown arc `{a}`"),
                    ));
                }
            }
        }
        for a in &j.incoming {
            if j.outgoing.contains(a) {
                diags.push(Diagnostic::new(
                    &loc,
                    format!("arc `{a}` is both incoming and outgoing at junction `{}`", j.id),
                ));
            }
            if let Some(other) = feeds.insert(a, &j.id) {
                diags.push(Diagnostic::new(
                    &loc,
                    format!("arc `{a}` ends at both junction `{other}` and `{}`", j.id),
                ));
            }
        }
        for a in &j.outgoing {
            if let Some(other) = fed_by.insert(a, &j.id) {
                diags.push(Diagnostic::new(
                    &loc,
                    format!("arc `{a}` starts at both junction `{other}` and `{}`", j.id),
                ));
            }
        }

        if j.preferences.len() != n * m {
            diags.push(Diagnostic::new(
                format!("{loc}.A"),
                format!("preference matrix has {} entries, expected {m}x{n}", j.preferences.len()),
            ));
        } else {
            if let Some(bad) = j.preferences.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                diags.push(Diagnostic::new(
                    format!("{loc}.A"),
                    format!("preference {bad} outside [0, 1]"),
                ));
            }
            for i in 0..n {
                let s: f64 = (0..m).map(|r| j.preferences[r * n + i]).sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    diags.push(Diagnostic::new(
                        format!("{loc}.A"),
                        format!("preference column {} sums to {s}", i + 1),
                    ));
                }
            }
        }

        match &j.q {
            None if n >= 2 => diags.push(Diagnostic::new(
                format!("{loc}.q"),
                format!(
                    "junction `{}` has {n} incoming arcs but no priorities `q`",
                    j.id
                ),
            )),
            None => {}
            Some(q) => {
                if q.len() != n {
                    diags.push(Diagnostic::new(
                        format!("{loc}.q"),
                        format!("{} priorities for {n} incoming arcs", q.len()),
                    ));
                }
                if q.iter().any(|v| !(*v >= 0.0)) {
                    diags.push(Diagnostic::new(format!("{loc}.q"), "negative priority"));
                }
                let s: f64 = q.iter().sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    diags.push(Diagnostic::new(
                        format!("{loc}.q"),
                        format!("priorities sum to {s}"),
                    ));
                }
            }
        }

        if let Some(sig) = &j.signal {
            let sloc = format!("{loc}.signal");
            if !(sig.period > 0.0 && sig.period.is_finite()) {
                diags.push(Diagnostic::new(&sloc, "signal period must be positive"));
            }
            for (p, phase) in sig.phases.iter().enumerate() {
                if !j.incoming.contains(&phase.arc) {
                    diags.push(Diagnostic::new(
                        format!("{sloc}.phases[{p}]"),
                        format!("arc `{}` is not incoming at junction `{}`", phase.arc, j.id),
                    ));
                }
                for [a, b] in &phase.green {
                    if !(0.0 <= *a && a < b && *b <= sig.period) {
                        diags.push(Diagnostic::new(
                            format!("{sloc}.phases[{p}]"),
                            format!("green interval [{a}, {b}) outside [0, {}]", sig.period),
                        ));
                    }
                }
            }
        }
    }

    let mut path_ids = HashSet::new();
    for (k, p) in net.paths.iter().enumerate() {
        let loc = format!("$.paths[{k}]");
        if !path_ids.insert(p.id.as_str()) {
            diags.push(Diagnostic::new(&loc, format!("duplicate path id `{}`", p.id)));
        }
        if p.arcs.is_empty() {
            diags.push(Diagnostic::new(&loc, format!("path `{}` is empty", p.id)));
            continue;
        }
        let mut seen = HashSet::new();
        for a in &p.arcs {
            if !arc_ids.contains(a.as_str()) {
                diags.push(Diagnostic::new(&loc, format!("path `{}` uses unknown arc `{a}`", p.id)));
            }
            if !seen.insert(a.as_str()) {
                diags.push(Diagnostic::new(&loc, format!("path `{}` repeats arc `{a}`", p.id)));
            }
        }
        for w in p.arcs.windows(2) {
            let linked = net
                .junctions
                .iter()
                .any(|j| j.incoming.contains(&w[0]) && j.outgoing.contains(&w[1]));
            if !linked {
                diags.push(Diagnostic::new(
                    &loc,
                    format!(
                        "path `{}`: arcs `{}` -> `{}` are not consecutive at any junction",
                        p.id, w[0], w[1]
                    ),
                ));
            }
        }
        let first = &p.arcs[0];
        let last = &p.arcs[p.arcs.len() - 1];
        if let Some(j) = fed_by.get(first.as_str()) {
            diags.push(Diagnostic::new(
                &loc,
                format!("path `{}` starts on arc `{first}`, which is fed by junction `{j}`", p.id),
            ));
        }
        if let Some(j) = feeds.get(last.as_str()) {
            diags.push(Diagnostic::new(
                &loc,
                format!("path `{}` ends on arc `{last}`, which feeds junction `{j}`", p.id),
            ));
        }
    }

    diags
}

/// What an arc end is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcLink {
    /// A free end fed by boundary data.
    Free,
    /// Position `slot` in the incoming (for arc ends) or outgoing (for arc
    /// starts) list of `junction`.
    Junction { junction: usize, slot: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub id: String,
    pub length: f64,
    pub cells: usize,
    pub start: ArcLink,
    pub end: ArcLink,
}

/// Column-stochastic m x n matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PreferenceMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "preference matrix {rows}x{cols} given {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Outgoing count m.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Incoming count n.
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, out: usize, inc: usize) -> f64 {
        self.data[out * self.cols + inc]
    }

    pub fn apply(&self, gamma_in: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|j| (0..self.cols).map(|i| self.get(j, i) * gamma_in[i]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSchedule {
    pub period: f64,
    pub offset: f64,
    /// Per incoming slot: `None` when always green.
    pub green: Vec<Option<Vec<(f64, f64)>>>,
}

impl SignalSchedule {
    pub fn is_green(&self, slot: usize, t: f64) -> bool {
        match self.green.get(slot).and_then(|g| g.as_ref()) {
            None => true,
            Some(intervals) => {
                let phase = (t - self.offset).rem_euclid(self.period);
                intervals.iter().any(|&(a, b)| a <= phase && phase < b)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: String,
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
    pub preferences: PreferenceMatrix,
    pub priorities: Vec<f64>,
    pub signal: Option<SignalSchedule>,
}

impl Junction {
    /// 1.0 when incoming slot `slot` may discharge at time `t`, else 0.0.
    #[inline]
    pub fn gate(&self, slot: usize, t: f64) -> f64 {
        match &self.signal {
            Some(s) if !s.is_green(slot, t) => 0.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub id: String,
    pub arcs: Vec<usize>,
}

/// A validated network with index-based topology.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    diagram: FundamentalDiagram,
    dx: f64,
    arcs: Vec<Arc>,
    junctions: Vec<Junction>,
    paths: Vec<Path>,
    arc_lookup: HashMap<String, usize>,
    path_lookup: HashMap<String, usize>,
}

impl Network {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        let diags = validate(&spec);
        if !diags.is_empty() {
            return Err(Error::Invalid(diags));
        }
        let diagram = FundamentalDiagram::from_spec(&spec.diagram)?;
        let arc_lookup: HashMap<String, usize> = spec
            .arcs
            .iter()
            .enumerate()
            .map(|(k, a)| (a.id.clone(), k))
            .collect();
        let mut arcs: Vec<Arc> = spec
            .arcs
            .iter()
            .map(|a| Arc {
                id: a.id.clone(),
                length: a.length,
                cells: a.cells,
                start: ArcLink::Free,
                end: ArcLink::Free,
            })
            .collect();

        let mut junctions = Vec::with_capacity(spec.junctions.len());
        for (jk, j) in spec.junctions.iter().enumerate() {
            let incoming: Vec<usize> = j.incoming.iter().map(|a| arc_lookup[a]).collect();
            let outgoing: Vec<usize> = j.outgoing.iter().map(|a| arc_lookup[a]).collect();
            for (slot, &a) in incoming.iter().enumerate() {
                arcs[a].end = ArcLink::Junction { junction: jk, slot };
            }
            for (slot, &a) in outgoing.iter().enumerate() {
                arcs[a].start = ArcLink::Junction { junction: jk, slot };
            }
            let signal = j.signal.as_ref().map(|s| SignalSchedule {
                period: s.period,
                offset: s.offset,
                green: j
                    .incoming
                    .iter()
                    .map(|a| {
                        s.phases
                            .iter()
                            .find(|p| &p.arc == a)
                            .map(|p| p.green.iter().map(|g| (g[0], g[1])).collect())
                    })
                    .collect(),
            });
            junctions.push(Junction {
                id: j.id.clone(),
                preferences: PreferenceMatrix::new(
                    outgoing.len(),
                    incoming.len(),
                    j.preferences.clone(),
                )?,
                priorities: j.q.clone().unwrap_or_else(|| vec![1.0]),
                incoming,
                outgoing,
                signal,
            });
        }

        let paths: Vec<Path> = spec
            .paths
            .iter()
            .map(|p| Path {
                id: p.id.clone(),
                arcs: p.arcs.iter().map(|a| arc_lookup[a]).collect(),
            })
            .collect();
        let path_lookup = paths
            .iter()
            .enumerate()
            .map(|(k, p)| (p.id.clone(), k))
            .collect();
        let dx = spec.arcs[0].length / spec.arcs[0].cells as f64;

        Ok(Self {
            spec,
            diagram,
            dx,
            arcs,
            junctions,
            paths,
            arc_lookup,
            path_lookup,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn diagram(&self) -> &FundamentalDiagram {
        &self.diagram
    }

    /// Common cell size of all arcs.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn arc_index(&self, id: &str) -> Option<usize> {
        self.arc_lookup.get(id).copied()
    }

    pub fn path_index(&self, id: &str) -> Option<usize> {
        self.path_lookup.get(id).copied()
    }

    pub fn total_cells(&self) -> usize {
        self.arcs.iter().map(|a| a.cells).sum()
    }

    /// Fraction of the traffic of a route that follows each path: the
    /// product of the preferences met along the path.
    pub fn path_weights(&self) -> Vec<f64> {
        self.paths
            .iter()
            .map(|p| {
                p.arcs
                    .windows(2)
                    .map(|w| match self.arcs[w[0]].end {
                        ArcLink::Junction { junction, slot } => {
                            let j = &self.junctions[junction];
                            let out = j.outgoing.iter().position(|&a| a == w[1]).unwrap_or(0);
                            j.preferences.get(out, slot)
                        }
                        ArcLink::Free => 0.0,
                    })
                    .product()
            })
            .collect()
    }

    /// For each path traversing `arc`, its share of the arc's traffic.
    /// Shares are path weights normalized over the traversing paths, or
    /// uniform when all weights vanish.
    pub fn path_shares_on_arc(&self, arc: usize) -> Vec<(usize, f64)> {
        let weights = self.path_weights();
        let through: Vec<usize> = (0..self.paths.len())
            .filter(|&p| self.paths[p].arcs.contains(&arc))
            .collect();
        normalized_shares(&through, &weights)
    }

    /// Like [`Self::path_shares_on_arc`], restricted to paths starting
    /// (`End::In`) or ending (`End::Out`) on `arc`.
    pub fn path_shares_at_end(&self, arc: usize, end: End) -> Vec<(usize, f64)> {
        let weights = self.path_weights();
        let at: Vec<usize> = (0..self.paths.len())
            .filter(|&p| {
                let arcs = &self.paths[p].arcs;
                match end {
                    End::In => arcs.first() == Some(&arc),
                    End::Out => arcs.last() == Some(&arc),
                }
            })
            .collect();
        normalized_shares(&at, &weights)
    }
}

fn normalized_shares(paths: &[usize], weights: &[f64]) -> Vec<(usize, f64)> {
    let total: f64 = paths.iter().map(|&p| weights[p]).sum();
    paths
        .iter()
        .map(|&p| {
            let w = if total > 0.0 {
                weights[p] / total
            } else {
                1.0 / paths.len() as f64
            };
            (p, w)
        })
        .collect()
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    validate, ArcDensityState, Boundary, BoundarySpec, CellRef, Network, NetworkSpec,
    PathCellMap, PathDensityState,
};
use crate::error::{Diagnostic, Error, Result};
use crate::fundamental::DOMAIN_SLACK;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dx: f64,
    pub dt: f64,
    pub t_f: f64,
}

impl GridSpec {
    /// Number of steps to reach `t_f`; the last step may overshoot when
    /// `t_f` is not a multiple of `dt`.
    pub fn steps(&self) -> usize {
        ((self.t_f / self.dt) - 1e-9).ceil().max(0.0) as usize
    }

    /// `dt / dx`.
    pub fn lambda(&self) -> f64 {
        self.dt / self.dx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialSpec {
    /// Same total density on every cell.
    Constant { value: f64 },
    /// Per-arc cell arrays; missing arcs start empty.
    Arcs { values: BTreeMap<String, Vec<f64>> },
    /// Per-path cell arrays; missing paths start empty.
    Paths { values: BTreeMap<String, Vec<f64>> },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Constant { value: 0.0 }
    }
}

/// A labelled physical cell whose density is recorded every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub label: String,
    pub arc: String,
    /// 1-based cell index within the arc.
    pub cell: usize,
}

/// The on-disk scenario format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub name: String,
    #[serde(flatten)]
    pub network: NetworkSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub boundary: Vec<BoundarySpec>,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeSpec>,
}

/// A fully validated scenario, ready to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    doc: ScenarioDocument,
    network: Network,
    map: PathCellMap,
    boundary: Boundary,
    probes: Vec<(String, CellRef)>,
}

impl Scenario {
    pub fn from_document(doc: ScenarioDocument) -> Result<Self> {
        let mut diags = validate(&doc.network);
        let g = doc.grid;
        for (name, v) in [("dx", g.dx), ("dt", g.dt), ("t_f", g.t_f)] {
            if !(v > 0.0 && v.is_finite()) {
                diags.push(Diagnostic::new(format!("$.grid.{name}"), format!("{name} must be positive")));
            }
        }
        if !diags.is_empty() {
            return Err(Error::Invalid(diags));
        }
        let network = Network::new(doc.network.clone())?;
        if (g.dx - network.dx()).abs() > 1e-12 * network.dx().max(1.0) {
            diags.push(Diagnostic::new(
                "$.grid.dx",
                format!("dx {} does not match arc cell size {}", g.dx, network.dx()),
            ));
        }
        let boundary = match Boundary::build(&network, &doc.boundary, g.t_f) {
            Ok(b) => Some(b),
            Err(d) => {
                diags.extend(d);
                None
            }
        };
        let map = PathCellMap::new(&network);
        diags.extend(check_initial(&doc.initial, &network, &map));

        let mut probes = Vec::new();
        for (k, p) in doc.probes.iter().enumerate() {
            match network.arc_index(&p.arc) {
                Some(a) if (1..=network.arcs()[a].cells).contains(&p.cell) => {
                    probes.push((p.label.clone(), CellRef { arc: a, cell: p.cell - 1 }))
                }
                Some(_) => diags.push(Diagnostic::new(
                    format!("$.probes[{k}]"),
                    format!("cell {} outside arc `{}`", p.cell, p.arc),
                )),
                None => diags.push(Diagnostic::new(
                    format!("$.probes[{k}]"),
                    format!("unknown arc `{}`", p.arc),
                )),
            }
        }

        if !diags.is_empty() {
            return Err(Error::Invalid(diags));
        }
        Ok(Self {
            doc,
            network,
            map,
            boundary: boundary.expect("no diagnostics"),
            probes,
        })
    }

    pub fn document(&self) -> &ScenarioDocument {
        &self.doc
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn grid(&self) -> GridSpec {
        self.doc.grid
    }

    pub fn map(&self) -> &PathCellMap {
        &self.map
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn probes(&self) -> &[(String, CellRef)] {
        &self.probes
    }

    /// Re-grids the scenario. Changing `dx` recomputes cell counts, which
    /// fails if the initial data is given per cell.
    pub fn with_overrides(&self, dx: Option<f64>, dt: Option<f64>, t_f: Option<f64>) -> Result<Self> {
        let mut doc = self.doc.clone();
        if let Some(dx) = dx {
            for arc in &mut doc.network.arcs {
                let cells = (arc.length / dx).round();
                if (cells * dx - arc.length).abs() > 1e-9 * arc.length {
                    return Err(Error::Config(format!(
                        "dx {dx} does not divide arc `{}` of length {}",
                        arc.id, arc.length
                    )));
                }
                arc.cells = cells as usize;
            }
            doc.grid.dx = dx;
        }
        if let Some(dt) = dt {
            doc.grid.dt = dt;
        }
        if let Some(t_f) = t_f {
            doc.grid.t_f = t_f;
        }
        Self::from_document(doc)
    }

    pub fn initial_arc_state(&self) -> Result<ArcDensityState> {
        let mut st = ArcDensityState::zeros(&self.network);
        match &self.doc.initial {
            InitialSpec::Constant { value } => {
                st.arcs.iter_mut().for_each(|a| a.fill(*value));
            }
            InitialSpec::Arcs { values } => {
                for (id, v) in values {
                    let a = self.network.arc_index(id).expect("validated");
                    st.arcs[a].copy_from_slice(v);
                }
            }
            InitialSpec::Paths { .. } => {
                st = self.initial_path_state()?.to_arc_state(&self.network, &self.map);
            }
        }
        Ok(st)
    }

    /// Per-path initial data. Arc-level data is split among the paths
    /// crossing each arc according to [`Network::path_shares_on_arc`].
    pub fn initial_path_state(&self) -> Result<PathDensityState> {
        let mut st = PathDensityState::zeros(&self.map);
        if let InitialSpec::Paths { values } = &self.doc.initial {
            for (id, v) in values {
                let p = self.network.path_index(id).expect("validated");
                st.paths[p].copy_from_slice(v);
            }
            return Ok(st);
        }
        let arcs = self.initial_arc_state()?;
        for (a, cells) in arcs.arcs.iter().enumerate() {
            let shares = self.network.path_shares_on_arc(a);
            if shares.is_empty() {
                if cells.iter().any(|&v| v > 0.0) {
                    return Err(Error::Config(format!(
                        "arc `{}` carries density but no path crosses it",
                        self.network.arcs()[a].id
                    )));
                }
                continue;
            }
            for (cell, &rho) in cells.iter().enumerate() {
                for &(p, w) in &shares {
                    let k = self.map.to_path(p, CellRef { arc: a, cell }).expect("path crosses arc");
                    st.paths[p][k] = rho * w;
                }
            }
        }
        Ok(st)
    }
}

fn check_initial(init: &InitialSpec, net: &Network, map: &PathCellMap) -> Vec<Diagnostic> {
    let rho_max = net.diagram().rho_max();
    let ok = |v: f64| (-DOMAIN_SLACK..=rho_max + DOMAIN_SLACK).contains(&v);
    let mut diags = Vec::new();
    match init {
        InitialSpec::Constant { value } => {
            if !ok(*value) {
                diags.push(Diagnostic::new(
                    "$.initial.value",
                    format!("density {value} outside [0, {rho_max}]"),
                ));
            }
        }
        InitialSpec::Arcs { values } => {
            for (id, v) in values {
                let loc = format!("$.initial.values.{id}");
                match net.arc_index(id) {
                    None => diags.push(Diagnostic::new(loc, format!("unknown arc `{id}`"))),
                    Some(a) if v.len() != net.arcs()[a].cells => diags.push(Diagnostic::new(
                        loc,
                        format!("{} values for {} cells", v.len(), net.arcs()[a].cells),
                    )),
                    Some(_) => {
                        if let Some(bad) = v.iter().find(|x| !ok(**x)) {
                            diags.push(Diagnostic::new(loc, format!("density {bad} outside [0, {rho_max}]")));
                        }
                    }
                }
            }
        }
        InitialSpec::Paths { values } => {
            let mut st = PathDensityState::zeros(map);
            for (id, v) in values {
                let loc = format!("$.initial.values.{id}");
                match net.path_index(id) {
                    None => diags.push(Diagnostic::new(loc, format!("unknown path `{id}`"))),
                    Some(p) if v.len() != map.path_len(p) => diags.push(Diagnostic::new(
                        loc,
                        format!("{} values for {} path cells", v.len(), map.path_len(p)),
                    )),
                    Some(p) => {
                        if v.iter().any(|x| !(*x >= 0.0)) {
                            diags.push(Diagnostic::new(&loc, "negative path density"));
                        }
                        st.paths[p].copy_from_slice(v);
                    }
                }
            }
            if diags.is_empty() {
                let omega = map.omega_flat(&st, crate::par::Execution::Sequential);
                if let Some(i) = omega.iter().position(|w| *w > rho_max + DOMAIN_SLACK) {
                    diags.push(Diagnostic::new(
                        "$.initial",
                        format!("total density {} exceeds rho_max at {}", omega[i], map.cell(i)),
                    ));
                }
            }
        }
    }
    diags
}

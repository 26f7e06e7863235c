//! Scenario files, run configuration and result emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Scenario, ScenarioDocument};
use crate::scenarios::{build_scenario, ComparisonReport, SCENARIO_NAMES};
use crate::sim::{RunResult, SolverKind, SolverState};

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDocument = serde_json::from_str(text)?;
    Scenario::from_document(doc)
}

pub fn scenario_to_json(doc: &ScenarioDocument) -> String {
    serde_json::to_string_pretty(doc).expect("scenario documents serialize")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Resolves a built-in scenario name or a path to a scenario file.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario> {
    if SCENARIO_NAMES.contains(&name_or_path) {
        build_scenario(name_or_path)
    } else {
        parse_scenario(&read(Path::new(name_or_path))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Classical,
    Multipath,
    Local,
    All,
}

impl SolverChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(SolverChoice::All),
            _ => Ok(match s.parse::<SolverKind>()? {
                SolverKind::Classical => SolverChoice::Classical,
                SolverKind::Multipath => SolverChoice::Multipath,
                SolverKind::Local => SolverChoice::Local,
            }),
        }
    }

    pub fn kinds(self, scenario: &Scenario) -> Vec<SolverKind> {
        match self {
            SolverChoice::Classical => vec![SolverKind::Classical],
            SolverChoice::Multipath => vec![SolverKind::Multipath],
            SolverChoice::Local => vec![SolverKind::Local],
            SolverChoice::All => crate::scenarios::applicable_solvers(scenario),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Profiles,
    Timeseries,
    Report,
}

impl Emit {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "profiles" => Ok(Emit::Profiles),
            "timeseries" => Ok(Emit::Timeseries),
            "report" => Ok(Emit::Report),
            _ => Err(Error::Config(format!("unknown output `{s}` (profiles, timeseries, report)"))),
        }
    }
}

fn all_outputs() -> Vec<Emit> {
    vec![Emit::Profiles, Emit::Timeseries, Emit::Report]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Everything `run` needs; loadable from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Built-in scenario name or scenario file path.
    pub scenario: String,
    pub solver: SolverChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_f: Option<f64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "all_outputs")]
    pub emit: Vec<Emit>,
    #[serde(default)]
    pub parallel: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(&read(path)?)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [("dx", self.dx), ("dt", self.dt), ("t_f", self.t_f)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} override must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// The scenario with overrides applied.
    pub fn scenario(&self) -> Result<Scenario> {
        let sc = load_scenario(&self.scenario)?;
        if self.dx.is_none() && self.dt.is_none() && self.t_f.is_none() {
            Ok(sc)
        } else {
            sc.with_overrides(self.dx, self.dt, self.t_f)
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: PathBuf, body: String) -> Result<PathBuf> {
    fs::write(&path, body).map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes the requested outputs into `out` and returns the files written.
pub fn emit_results(
    scenario: &Scenario,
    report: &ComparisonReport,
    out: &Path,
    emit: &[Emit],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|source| Error::Io { path: out.to_path_buf(), source })?;
    let mut files = Vec::new();
    if emit.contains(&Emit::Profiles) {
        for r in &report.runs {
            let path = out.join(format!("profile_{}.csv", r.solver));
            files.push(write_profile(scenario, r, path)?);
        }
    }
    if emit.contains(&Emit::Timeseries) {
        files.push(write_file(out.join("timeseries_J.csv"), timeseries_csv(scenario, &report.runs))?);
    }
    if emit.contains(&Emit::Report) {
        let body = serde_json::to_string_pretty(&report.metrics)? + "\n";
        files.push(write_file(out.join("report.json"), body)?);
    }
    Ok(files)
}

fn write_profile(scenario: &Scenario, r: &RunResult, path: PathBuf) -> Result<PathBuf> {
    let net = scenario.network();
    let map = scenario.map();
    let dx = scenario.grid().dx;
    let mut w = csv::Writer::from_path(&path).map_err(|source| Error::Csv { path: path.clone(), source })?;
    let mut rows: Vec<[String; 7]> = Vec::new();
    if map.path_count() == 0 {
        for (a, arc) in net.arcs().iter().enumerate() {
            for k in 0..arc.cells {
                let rho = r.final_arcs.arcs[a][k];
                rows.push([
                    String::new(),
                    (k + 1).to_string(),
                    arc.id.clone(),
                    (k + 1).to_string(),
                    num((k as f64 + 0.5) * dx),
                    String::new(),
                    num(rho),
                ]);
            }
        }
    } else {
        for (p, path_def) in net.paths().iter().enumerate() {
            for k in 0..map.path_len(p) {
                let c = map.to_physical(p, k);
                let mu = match &r.final_state {
                    SolverState::Paths(s) => num(s.paths[p][k]),
                    SolverState::Arcs(_) => String::new(),
                };
                rows.push([
                    path_def.id.clone(),
                    (k + 1).to_string(),
                    net.arcs()[c.arc].id.clone(),
                    (c.cell + 1).to_string(),
                    num((k as f64 + 0.5) * dx),
                    mu,
                    num(r.final_arcs.get(c)),
                ]);
            }
        }
    }
    let csv_err = |source| Error::Csv { path: path.clone(), source };
    w.write_record(["path", "cell", "arc", "arc_cell", "x", "mu", "omega"]).map_err(csv_err)?;
    for row in &rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}

/// `t` plus one column per solver and probe; one row per time node.
pub fn timeseries_csv(scenario: &Scenario, runs: &[RunResult]) -> String {
    let mut s = String::from("t");
    for r in runs {
        for (label, _) in scenario.probes() {
            let _ = write!(s, ",{}:{}", r.solver, label);
        }
    }
    s.push('\n');
    let times = runs.first().map(|r| r.times.as_slice()).unwrap_or(&[]);
    for (n, t) in times.iter().enumerate() {
        s.push_str(&num(*t));
        for r in runs {
            for series in &r.probes {
                let _ = write!(s, ",{}", num(series[n]));
            }
        }
        s.push('\n');
    }
    s
}

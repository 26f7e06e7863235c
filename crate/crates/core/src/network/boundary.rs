use serde::{Deserialize, Serialize};

use super::{ArcLink, Network};
use crate::error::Diagnostic;
use crate::fundamental::DOMAIN_SLACK;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    In,
    Out,
}

/// Data imposed through a ghost cell at a free end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet { value: f64 },
    /// Linear interpolation of `(t[i], value[i])`, evaluated at the start
    /// of each step.
    Table { t: Vec<f64>, value: Vec<f64> },
    /// No flux crosses the end.
    ZeroFlux,
}

impl BoundaryCondition {
    /// Ghost density at time `t`, or `None` for a closed end.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        match self {
            BoundaryCondition::Dirichlet { value } => Some(*value),
            BoundaryCondition::ZeroFlux => None,
            BoundaryCondition::Table { t: ts, value } => {
                let k = ts.partition_point(|&s| s <= t);
                Some(if k == 0 {
                    value[0]
                } else if k == ts.len() {
                    value[ts.len() - 1]
                } else {
                    let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
                    value[k - 1] + w * (value[k] - value[k - 1])
                })
            }
        }
    }

    fn check(&self, rho_max: f64, t_f: f64) -> Option<String> {
        let in_range = |v: f64| (-DOMAIN_SLACK..=rho_max + DOMAIN_SLACK).contains(&v);
        match self {
            BoundaryCondition::Dirichlet { value } if !in_range(*value) => {
                Some(format!("boundary density {value} outside [0, {rho_max}]"))
            }
            BoundaryCondition::Table { t, value } => {
                if t.is_empty() || t.len() != value.len() {
                    return Some(format!(
                        "time table has {} times and {} values",
                        t.len(),
                        value.len()
                    ));
                }
                if t.windows(2).any(|w| w[1] <= w[0]) {
                    return Some("time table times must be strictly increasing".into());
                }
                if t[0] > 0.0 || t[t.len() - 1] < t_f - 1e-9 * t_f.max(1.0) {
                    return Some(format!(
                        "time table covers [{}, {}], not [0, {t_f}]",
                        t[0],
                        t[t.len() - 1]
                    ));
                }
                value
                    .iter()
                    .find(|v| !in_range(**v))
                    .map(|v| format!("boundary density {v} outside [0, {rho_max}]"))
            }
            _ => None,
        }
    }
}

/// One boundary entry of a scenario file. Exactly one of `arc` and `path`
/// is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub end: End,
    #[serde(flatten)]
    pub condition: BoundaryCondition,
}

impl BoundarySpec {
    pub fn arc(id: &str, end: End, condition: BoundaryCondition) -> Self {
        Self {
            arc: Some(id.to_string()),
            path: None,
            end,
            condition,
        }
    }

    pub fn path(id: &str, end: End, condition: BoundaryCondition) -> Self {
        Self {
            arc: None,
            path: Some(id.to_string()),
            end,
            condition,
        }
    }
}

/// Boundary data indexed by arc and path.
///
/// Every free arc end carries an arc-level condition. Path-level entries
/// override the per-path ghost densities derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    arc_in: Vec<Option<BoundaryCondition>>,
    arc_out: Vec<Option<BoundaryCondition>>,
    path_in: Vec<Option<BoundaryCondition>>,
    path_out: Vec<Option<BoundaryCondition>>,
    path_start: Vec<usize>,
    path_end: Vec<usize>,
    share_in: Vec<f64>,
    share_out: Vec<f64>,
}

/// Ghost values for one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Ghosts {
    /// Per arc: inflow ghost density, `None` when closed or not free.
    pub arc_in: Vec<Option<f64>>,
    pub arc_out: Vec<Option<f64>>,
    /// Per path: ghost density of that path before its first cell.
    pub path_in: Vec<Option<f64>>,
    /// Per path: total ghost density before its first cell.
    pub path_in_omega: Vec<f64>,
    /// Per path: total ghost density after its last cell, `None` when the
    /// path's exit is closed.
    pub path_out_omega: Vec<Option<f64>>,
}

impl Boundary {
    pub fn build(
        net: &Network,
        specs: &[BoundarySpec],
        t_f: f64,
    ) -> std::result::Result<Self, Vec<Diagnostic>> {
        let na = net.arcs().len();
        let np = net.paths().len();
        let mut b = Boundary {
            arc_in: vec![None; na],
            arc_out: vec![None; na],
            path_in: vec![None; np],
            path_out: vec![None; np],
            path_start: net.paths().iter().map(|p| p.arcs[0]).collect(),
            path_end: net.paths().iter().map(|p| p.arcs[p.arcs.len() - 1]).collect(),
            share_in: vec![0.0; np],
            share_out: vec![0.0; np],
        };
        let mut diags = Vec::new();
        let rho_max = net.diagram().rho_max();

        for (k, s) in specs.iter().enumerate() {
            let loc = format!("$.boundary[{k}]");
            if let Some(msg) = s.condition.check(rho_max, t_f) {
                diags.push(Diagnostic::new(&loc, msg));
            }
            let slot = match (&s.arc, &s.path) {
                (Some(a), None) => match net.arc_index(a) {
                    None => {
                        diags.push(Diagnostic::new(&loc, format!("unknown arc `{a}`")));
                        continue;
                    }
                    Some(ai) => {
                        let arc = &net.arcs()[ai];
                        let link = if s.end == End::In { arc.start } else { arc.end };
                        if link != ArcLink::Free {
                            diags.push(Diagnostic::new(
                                &loc,
                                format!("arc `{a}` end `{:?}` is attached to a junction", s.end),
                            ));
                            continue;
                        }
                        match s.end {
                            End::In => &mut b.arc_in[ai],
                            End::Out => &mut b.arc_out[ai],
                        }
                    }
                },
                (None, Some(p)) => match net.path_index(p) {
                    None => {
                        diags.push(Diagnostic::new(&loc, format!("unknown path `{p}`")));
                        continue;
                    }
                    Some(pi) => match s.end {
                        End::In => &mut b.path_in[pi],
                        End::Out => &mut b.path_out[pi],
                    },
                },
                _ => {
                    diags.push(Diagnostic::new(&loc, "exactly one of `arc` and `path` must be set"));
                    continue;
                }
            };
            if slot.is_some() {
                diags.push(Diagnostic::new(&loc, "duplicate boundary entry"));
            }
            *slot = Some(s.condition.clone());
        }

        for (ai, arc) in net.arcs().iter().enumerate() {
            if arc.start == ArcLink::Free && b.arc_in[ai].is_none() {
                diags.push(Diagnostic::new(
                    "$.boundary",
                    format!("free inflow end of arc `{}` has no boundary condition", arc.id),
                ));
            }
            if arc.end == ArcLink::Free && b.arc_out[ai].is_none() {
                diags.push(Diagnostic::new(
                    "$.boundary",
                    format!("free outflow end of arc `{}` has no boundary condition", arc.id),
                ));
            }
        }

        for ai in 0..na {
            for (p, w) in net.path_shares_at_end(ai, End::In) {
                b.share_in[p] = w;
            }
            for (p, w) in net.path_shares_at_end(ai, End::Out) {
                b.share_out[p] = w;
            }
        }

        if diags.is_empty() {
            Ok(b)
        } else {
            Err(diags)
        }
    }

    pub fn arc_condition(&self, arc: usize, end: End) -> Option<&BoundaryCondition> {
        match end {
            End::In => self.arc_in[arc].as_ref(),
            End::Out => self.arc_out[arc].as_ref(),
        }
    }

    pub fn ghosts(&self, t: f64) -> Ghosts {
        let arc_in: Vec<Option<f64>> = self
            .arc_in
            .iter()
            .map(|c| c.as_ref().and_then(|c| c.value_at(t)))
            .collect();
        let arc_out: Vec<Option<f64>> = self
            .arc_out
            .iter()
            .map(|c| c.as_ref().and_then(|c| c.value_at(t)))
            .collect();

        let np = self.path_start.len();
        let path_in: Vec<Option<f64>> = (0..np)
            .map(|p| match &self.path_in[p] {
                Some(c) => c.value_at(t),
                None => arc_in[self.path_start[p]].map(|v| v * self.share_in[p]),
            })
            .collect();
        let path_out: Vec<Option<f64>> = (0..np)
            .map(|p| match &self.path_out[p] {
                Some(c) => c.value_at(t),
                None => arc_out[self.path_end[p]].map(|v| v * self.share_out[p]),
            })
            .collect();

        let mut in_sum = vec![0.0; arc_in.len()];
        let mut out_sum = vec![0.0; arc_in.len()];
        for p in 0..np {
            in_sum[self.path_start[p]] += path_in[p].unwrap_or(0.0);
            out_sum[self.path_end[p]] += path_out[p].unwrap_or(0.0);
        }
        let path_in_omega = (0..np).map(|p| in_sum[self.path_start[p]]).collect();
        let path_out_omega = (0..np)
            .map(|p| path_out[p].map(|_| out_sum[self.path_end[p]]))
            .collect();

        Ghosts {
            arc_in,
            arc_out,
            path_in,
            path_in_omega,
            path_out_omega,
        }
    }
}

//! Macroscopic traffic simulation on road networks.
//!
//! Two first-order Godunov solvers share one network description:
//!
//! * [`classical`] evolves the total density on each arc and resolves every
//!   junction by maximizing the crossing flux subject to demand, supply,
//!   routing preferences and priorities.
//! * [`multipath`] evolves one density per path. The flux of every path is
//!   driven by the total density at each cell, so junctions need no
//!   separate resolution. A local variant keeps per-arc totals and only
//!   splits traffic by direction at the cells next to a junction.
//!
//! [`scenarios`] holds the canonical test networks, independent oracles and
//! the solver comparison; [`io`] reads scenario files and writes results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod fundamental;
pub mod io;
pub mod multipath;
pub mod network;
pub mod par;
pub mod scenarios;
pub mod sim;

pub use error::{Diagnostic, Error, Result};
pub use fundamental::{DiagramSpec, FundamentalDiagram};
pub use network::{Network, NetworkSpec, Scenario, ScenarioDocument};
pub use par::Execution;
pub use sim::{RunOptions, RunResult, Simulation, SolverKind};

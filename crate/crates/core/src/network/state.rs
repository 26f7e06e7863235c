use super::{CellRef, Network, PathCellMap};

/// Total density per arc cell. Ghost values are not stored; they come
/// from the boundary data at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcDensityState {
    pub arcs: Vec<Vec<f64>>,
}

impl ArcDensityState {
    pub fn zeros(net: &Network) -> Self {
        Self {
            arcs: net.arcs().iter().map(|a| vec![0.0; a.cells]).collect(),
        }
    }

    pub fn get(&self, c: CellRef) -> f64 {
        self.arcs[c.arc][c.cell]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.arcs
            .iter()
            .flatten()
            .zip(other.arcs.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-path densities along each path's cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDensityState {
    pub paths: Vec<Vec<f64>>,
}

impl PathDensityState {
    pub fn zeros(map: &PathCellMap) -> Self {
        Self {
            paths: (0..map.path_count())
                .map(|p| vec![0.0; map.path_len(p)])
                .collect(),
        }
    }

    /// Sums paths into per-arc totals.
    pub fn to_arc_state(&self, net: &Network, map: &PathCellMap) -> ArcDensityState {
        let mut st = ArcDensityState::zeros(net);
        let flat = map.omega_flat(self, crate::par::Execution::Sequential);
        for (i, w) in flat.into_iter().enumerate() {
            let c = map.cell(i);
            st.arcs[c.arc][c.cell] = w;
        }
        st
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.paths
            .iter()
            .flatten()
            .zip(other.paths.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

use std::fmt;
use std::ops::Range;

use super::{ArcLink, GridSpec, Network, PathDensityState};
use crate::error::{Error, Result};
use crate::par::Execution;

/// A physical cell: `cell` is 0-based within `arc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellRef {
    pub arc: usize,
    pub cell: usize,
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arc #{} cell {}", self.arc, self.cell + 1)
    }
}

/// A path interface that crosses a junction: it lies between path cells
/// `cell - 1` and `cell`, and the upstream arc is incoming slot `slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JunctionCrossing {
    pub cell: usize,
    pub junction: usize,
    pub slot: usize,
}

/// Correspondence between path coordinates and physical cells.
///
/// Physical cells are laid out arc after arc in a flat array. A path's
/// cells are the concatenation of its arcs' cells in order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCellMap {
    arc_offset: Vec<usize>,
    flat_cell: Vec<CellRef>,
    path_cells: Vec<Vec<usize>>,
    traversals: Vec<Vec<(usize, usize)>>,
    crossings: Vec<Vec<JunctionCrossing>>,
}

/// Builds the path-cell map, checking that `grid.dx` matches the arcs.
pub fn path_cell_map(net: &Network, grid: &GridSpec) -> Result<PathCellMap> {
    if (grid.dx - net.dx()).abs() > 1e-12 * net.dx().max(1.0) {
        return Err(Error::Config(format!(
            "grid dx {} does not match arc cell size {}",
            grid.dx,
            net.dx()
        )));
    }
    Ok(PathCellMap::new(net))
}

impl PathCellMap {
    pub fn new(net: &Network) -> Self {
        let mut arc_offset = Vec::with_capacity(net.arcs().len() + 1);
        let mut flat_cell = Vec::with_capacity(net.total_cells());
        let mut off = 0;
        for (a, arc) in net.arcs().iter().enumerate() {
            arc_offset.push(off);
            flat_cell.extend((0..arc.cells).map(|cell| CellRef { arc: a, cell }));
            off += arc.cells;
        }
        arc_offset.push(off);

        let mut traversals = vec![Vec::new(); off];
        let mut path_cells = Vec::with_capacity(net.paths().len());
        let mut crossings = Vec::with_capacity(net.paths().len());
        for (p, path) in net.paths().iter().enumerate() {
            let mut cells = Vec::new();
            let mut cross = Vec::new();
            for (k, &a) in path.arcs.iter().enumerate() {
                if k > 0 {
                    if let ArcLink::Junction { junction, slot } = net.arcs()[path.arcs[k - 1]].end {
                        cross.push(JunctionCrossing {
                            cell: cells.len(),
                            junction,
                            slot,
                        });
                    }
                }
                for flat in arc_offset[a]..arc_offset[a + 1] {
                    traversals[flat].push((p, cells.len()));
                    cells.push(flat);
                }
            }
            path_cells.push(cells);
            crossings.push(cross);
        }

        Self {
            arc_offset,
            flat_cell,
            path_cells,
            traversals,
            crossings,
        }
    }

    pub fn total_cells(&self) -> usize {
        self.flat_cell.len()
    }

    pub fn path_count(&self) -> usize {
        self.path_cells.len()
    }

    pub fn path_len(&self, path: usize) -> usize {
        self.path_cells[path].len()
    }

    /// Flat indices of the physical cells along `path`.
    pub fn path_cells(&self, path: usize) -> &[usize] {
        &self.path_cells[path]
    }

    pub fn crossings(&self, path: usize) -> &[JunctionCrossing] {
        &self.crossings[path]
    }

    pub fn arc_range(&self, arc: usize) -> Range<usize> {
        self.arc_offset[arc]..self.arc_offset[arc + 1]
    }

    pub fn flat(&self, c: CellRef) -> usize {
        self.arc_offset[c.arc] + c.cell
    }

    pub fn cell(&self, flat: usize) -> CellRef {
        self.flat_cell[flat]
    }

    pub fn to_physical(&self, path: usize, k: usize) -> CellRef {
        self.flat_cell[self.path_cells[path][k]]
    }

    /// Inverse of [`Self::to_physical`]; `None` when `path` does not cross
    /// the cell.
    pub fn to_path(&self, path: usize, c: CellRef) -> Option<usize> {
        self.traversals[self.flat(c)]
            .iter()
            .find(|(p, _)| *p == path)
            .map(|(_, k)| *k)
    }

    /// `(path, path cell)` pairs crossing a physical cell, in path order.
    pub fn paths_through(&self, c: CellRef) -> &[(usize, usize)] {
        &self.traversals[self.flat(c)]
    }

    /// Total density per physical cell (flat layout). Each cell sums its
    /// traversing paths in path order, so the result does not depend on
    /// the execution mode.
    pub fn omega_flat(&self, state: &PathDensityState, exec: Execution) -> Vec<f64> {
        exec.map_chunked(self.total_cells(), |flat| {
            self.traversals[flat]
                .iter()
                .fold(0.0, |acc, &(p, k)| acc + state.paths[p][k])
        })
    }
}

/// Total density seen by each path along its own cells.
pub fn aggregate_omega(state: &PathDensityState, map: &PathCellMap) -> Vec<Vec<f64>> {
    let flat = map.omega_flat(state, Execution::Sequential);
    (0..map.path_count())
        .map(|p| map.path_cells(p).iter().map(|&c| flat[c]).collect())
        .collect()
}

//! Uniform Cartesian grids on the torus `R^n / T Z^n` and on axis-aligned boxes.
//!
//! Nodes are ordered row-major with axis 0 fastest. On the torus each axis
//! carries `T_k * p` nodes that wrap around; on the box each axis carries
//! `T_k * p + 1` nodes including both endpoints, and missing neighbors at the
//! boundary realize the natural (Neumann) condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Box,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    extent_units: Vec<usize>,
    cells_per_unit: usize,
    topology: Topology,
    shape: Vec<usize>,
    node_count: usize,
    spacing: f64,
}

/// One undirected grid edge, stored once with `i` the lower-coordinate end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub axis: usize,
}

pub const DEFAULT_CELLS_PER_UNIT: usize = 4;

pub fn build_grid(
    dim: usize,
    extent_units: &[usize],
    cells_per_unit: usize,
    topology: Topology,
) -> Result<GridSpec> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if extent_units.len() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            got: extent_units.len(),
        });
    }
    if cells_per_unit == 0 || extent_units.iter().any(|&t| t == 0) {
        return Err(Error::ZeroExtent);
    }
    let shape: Vec<usize> = extent_units
        .iter()
        .map(|&t| match topology {
            Topology::Torus => t * cells_per_unit,
            Topology::Box => t * cells_per_unit + 1,
        })
        .collect();
    let node_count = shape.iter().product();
    Ok(GridSpec {
        dim,
        extent_units: extent_units.to_vec(),
        cells_per_unit,
        topology,
        shape,
        node_count,
        spacing: 1.0 / cells_per_unit as f64,
    })
}

impl GridSpec {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent_units(&self) -> &[usize] {
        &self.extent_units
    }

    pub fn cells_per_unit(&self) -> usize {
        self.cells_per_unit
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Nodes per axis.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Mesh width `h = 1/p`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Volume of the cell owned by one node, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn multi_index(&self, i: usize) -> [usize; 2] {
        match self.dim {
            1 => [i, 0],
            _ => [i % self.shape[0], i / self.shape[0]],
        }
    }

    pub fn linear_index(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] + self.shape[0] * idx[1],
        }
    }

    pub fn coords(&self, i: usize) -> [f64; 2] {
        let m = self.multi_index(i);
        [m[0] as f64 * self.spacing, m[1] as f64 * self.spacing]
    }

    /// Index of the unit cell of the potential that owns node `i`.
    ///
    /// On the box the last node along an axis is folded into the last cell.
    pub fn unit_cell(&self, i: usize) -> [usize; 2] {
        let m = self.multi_index(i);
        let mut cell = [0; 2];
        for k in 0..self.dim {
            cell[k] = (m[k] / self.cells_per_unit).min(self.extent_units[k] - 1);
        }
        cell
    }

    fn forward(&self, i: usize, axis: usize) -> Option<usize> {
        let mut m = self.multi_index(i);
        let n = self.shape[axis];
        match self.topology {
            Topology::Torus => {
                if n == 1 {
                    return None;
                }
                m[axis] = (m[axis] + 1) % n;
            }
            Topology::Box => {
                if m[axis] + 1 >= n {
                    return None;
                }
                m[axis] += 1;
            }
        }
        Some(self.linear_index(m))
    }

    fn backward(&self, i: usize, axis: usize) -> Option<usize> {
        let mut m = self.multi_index(i);
        let n = self.shape[axis];
        match self.topology {
            Topology::Torus => {
                if n == 1 {
                    return None;
                }
                m[axis] = (m[axis] + n - 1) % n;
            }
            Topology::Box => {
                if m[axis] == 0 {
                    return None;
                }
                m[axis] -= 1;
            }
        }
        Some(self.linear_index(m))
    }

    /// Neighbors of node `i` as `(j, axis)`, backward before forward per axis.
    pub fn adjacency(&self, i: usize) -> Result<Vec<(usize, usize)>> {
        if i >= self.node_count {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.node_count,
            });
        }
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            if let Some(j) = self.backward(i, axis) {
                out.push((j, axis));
            }
            if let Some(j) = self.forward(i, axis) {
                out.push((j, axis));
            }
        }
        Ok(out)
    }

    /// Every undirected edge exactly once, ordered by node then axis.
    ///
    /// A torus axis with two nodes carries two parallel edges between them,
    /// as the circle does.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.node_count * self.dim);
        for i in 0..self.node_count {
            for axis in 0..self.dim {
                if let Some(j) = self.forward(i, axis) {
                    out.push(Edge { i, j, axis });
                }
            }
        }
        out
    }
}

/// Sorted set of unique node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        IndexSet(indices)
    }

    /// Validates the range against `node_count`.
    pub fn checked(indices: Vec<usize>, node_count: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= node_count) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: node_count,
            });
        }
        Ok(Self::new(indices))
    }

    pub fn full(node_count: usize) -> Self {
        IndexSet((0..node_count).collect())
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        IndexSet(
            mask.iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn to_mask(&self, node_count: usize) -> Vec<bool> {
        let mut mask = vec![false; node_count];
        for &i in &self.0 {
            mask[i] = true;
        }
        mask
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        IndexSet::new(v)
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        let (mut a, mut b) = (0, 0);
        while a < self.0.len() && b < other.0.len() {
            match self.0[a].cmp(&other.0[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        IndexSet::new(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    #[test]
    fn node_counts() {
        let g = build_grid(1, &[8], 1, Topology::Torus).unwrap();
        assert_eq!(g.node_count(), 8);
        assert_eq!(g.spacing(), 1.0);
        let g = build_grid(2, &[80, 80], 1, Topology::Torus).unwrap();
        assert_eq!(g.node_count(), 6400);
        let g = build_grid(1, &[4], 2, Topology::Box).unwrap();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.spacing(), 0.5);
        let g = build_grid(2, &[3, 2], 2, Topology::Box).unwrap();
        assert_eq!(g.node_count(), 7 * 5);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            build_grid(3, &[2, 2, 2], 1, Topology::Torus),
            Err(Error::InvalidDimension(3))
        );
        assert_eq!(build_grid(1, &[0], 1, Topology::Torus), Err(Error::ZeroExtent));
        assert_eq!(build_grid(1, &[4], 0, Topology::Box), Err(Error::ZeroExtent));
    }

    #[test]
    fn adjacency_examples() {
        let g = build_grid(1, &[8], 1, Topology::Torus).unwrap();
        let n: Vec<usize> = g.adjacency(0).unwrap().iter().map(|p| p.0).collect();
        assert_eq!(n, vec![7, 1]);

        let b = build_grid(1, &[4], 2, Topology::Box).unwrap();
        assert_eq!(b.adjacency(0).unwrap(), vec![(1, 0)]);
        assert_eq!(b.adjacency(8).unwrap(), vec![(7, 0)]);

        let t = build_grid(2, &[3, 3], 1, Topology::Torus).unwrap();
        let a = t.adjacency(0).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.contains(&(2, 0)) && a.contains(&(1, 0)));
        assert!(a.contains(&(6, 1)) && a.contains(&(3, 1)));

        assert!(matches!(
            t.adjacency(9),
            Err(Error::IndexOutOfRange { index: 9, len: 9 })
        ));
    }

    fn all_specs() -> Vec<GridSpec> {
        let mut v = Vec::new();
        for topo in [Topology::Torus, Topology::Box] {
            for p in 1..=3 {
                for t in 1..=4 {
                    v.push(build_grid(1, &[t], p, topo).unwrap());
                    v.push(build_grid(2, &[t, 5 - t], p, topo).unwrap());
                }
            }
        }
        v
    }

    #[test]
    fn adjacency_symmetric_and_edges_consistent() {
        for g in all_specs() {
            let mut degree = vec![0usize; g.node_count()];
            for e in g.edges() {
                degree[e.i] += 1;
                degree[e.j] += 1;
            }
            for i in 0..g.node_count() {
                let adj = g.adjacency(i).unwrap();
                assert_eq!(adj.len(), degree[i]);
                for &(j, axis) in &adj {
                    let back = g.adjacency(j).unwrap();
                    assert!(back.contains(&(i, axis)), "{g:?} {i} {j}");
                }
                if g.topology() == Topology::Torus && g.shape().iter().all(|&n| n >= 3) {
                    assert_eq!(adj.len(), 2 * g.dim());
                }
            }
        }
    }

    #[test]
    fn grid_graph_is_connected() {
        for g in all_specs() {
            let mut seen = vec![false; g.node_count()];
            let mut queue = VecDeque::from([0]);
            seen[0] = true;
            while let Some(i) = queue.pop_front() {
                for (j, _) in g.adjacency(i).unwrap() {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn index_roundtrip_row_major() {
        let g = build_grid(2, &[2, 3], 2, Topology::Torus).unwrap();
        assert_eq!(g.shape(), &[4, 6]);
        assert_eq!(g.multi_index(5), [1, 1]);
        for i in 0..g.node_count() {
            assert_eq!(g.linear_index(g.multi_index(i)), i);
        }
        assert_eq!(g.unit_cell(g.linear_index([3, 5])), [1, 2]);
        let b = build_grid(1, &[2], 2, Topology::Box).unwrap();
        assert_eq!(b.unit_cell(4), [1, 0]);
    }

    #[test]
    fn index_set_ops() {
        let a = IndexSet::new(vec![5, 1, 3, 3]);
        assert_eq!(a.as_slice(), &[1, 3, 5]);
        assert!(a.contains(3) && !a.contains(2));
        let b = IndexSet::new(vec![2, 4]);
        assert!(a.is_disjoint(&b));
        assert_eq!(a.union(&b).as_slice(), &[1, 2, 3, 4, 5]);
        assert!(IndexSet::checked(vec![7], 5).is_err());
        assert_eq!(IndexSet::from_mask(&[true, false, true]).as_slice(), &[0, 2]);
    }
}

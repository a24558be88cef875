//! Agmon weights `w_mu = (1/u - mu)_+` and the associated effective distance,
//! computed as multi-source shortest paths on the weighted grid graph.
//!
//! Along an axis-`k` edge the path integral of `sqrt(w b_k)` is approximated
//! by the trapezoidal rule on `sqrt(w)` with `b_k = 1/a^(k)` averaged over the
//! two endpoints. The optional diagonal stencil (2D only) adds the four
//! diagonal neighbors with length `h sqrt(2)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, IndexSet, Topology};
use crate::landscape::Landscape;
use crate::operator::CoefficientField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    #[default]
    Axis,
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct AgmonWeight {
    mu: f64,
    w: Vec<f64>,
    /// Inverse diffusion `1/a^(k)` per node and axis.
    b: Vec<[f64; 2]>,
}

pub fn agmon_weight(landscape: &Landscape, coeffs: &CoefficientField, mu: f64) -> Result<AgmonWeight> {
    if !(mu >= 0.0) {
        return Err(Error::NegativeLevel(mu));
    }
    let n = landscape.u().len();
    if coeffs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: coeffs.len(),
        });
    }
    let w = landscape
        .effective_potential()
        .iter()
        .map(|&x| (x - mu).max(0.0))
        .collect();
    let b = coeffs
        .diffusion()
        .iter()
        .map(|a| [1.0 / a[0], 1.0 / a[1]])
        .collect();
    Ok(AgmonWeight { mu, w, b })
}

impl AgmonWeight {
    /// Weight field with unit diffusion, for callers that have `w` directly.
    pub fn from_values(mu: f64, w: Vec<f64>) -> Result<Self> {
        if let Some(i) = w.iter().position(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative weight at node {i}")));
        }
        let n = w.len();
        Ok(AgmonWeight {
            mu,
            w,
            b: vec![[1.0, 1.0]; n],
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    /// Nodes where the weight vanishes, i.e. the sublevel set `E(mu)`.
    pub fn zero_set(&self) -> IndexSet {
        IndexSet::from_mask(&self.w.iter().map(|&x| x == 0.0).collect::<Vec<_>>())
    }

    fn axis_cost(&self, h: f64, i: usize, j: usize, axis: usize) -> f64 {
        let b = 0.5 * (self.b[i][axis] + self.b[j][axis]);
        h * b.sqrt() * 0.5 * (self.w[i].sqrt() + self.w[j].sqrt())
    }

    fn diagonal_cost(&self, h: f64, i: usize, j: usize) -> f64 {
        let bi = 0.5 * (self.b[i][0] + self.b[i][1]);
        let bj = 0.5 * (self.b[j][0] + self.b[j][1]);
        let b = 0.5 * (bi + bj);
        h * std::f64::consts::SQRT_2 * b.sqrt() * 0.5 * (self.w[i].sqrt() + self.w[j].sqrt())
    }
}

/// Weighted grid graph in adjacency-list form.
#[derive(Debug, Clone)]
pub struct AgmonGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    costs: Vec<f64>,
    stencil: Stencil,
}

impl AgmonGraph {
    pub fn new(grid: &GridSpec, weight: &AgmonWeight, stencil: Stencil) -> Result<Self> {
        let n = grid.node_count();
        if weight.w.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: weight.w.len(),
            });
        }
        let h = grid.spacing();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(n * 2 * grid.dim());
        let mut costs = Vec::with_capacity(n * 2 * grid.dim());
        offsets.push(0);
        for i in 0..n {
            for (j, axis) in grid.adjacency(i)? {
                targets.push(j);
                costs.push(weight.axis_cost(h, i, j, axis));
            }
            if stencil == Stencil::Diagonal && grid.dim() == 2 {
                for j in diagonal_neighbors(grid, i) {
                    targets.push(j);
                    costs.push(weight.diagonal_cost(h, i, j));
                }
            }
            offsets.push(targets.len());
        }
        Ok(AgmonGraph {
            offsets,
            targets,
            costs,
            stencil,
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        self.targets[a..b]
            .iter()
            .copied()
            .zip(self.costs[a..b].iter().copied())
    }

    /// Multi-source label-setting shortest paths. Ties in the queue are
    /// settled by ascending node index.
    pub fn distances(&self, sources: &IndexSet) -> Result<DistanceField> {
        if sources.is_empty() {
            return Err(Error::EmptySourceSet);
        }
        let (h, _) = self.search(sources.iter().map(|s| (s, 0)))?;
        Ok(DistanceField {
            h,
            sources: sources.clone(),
            stencil: self.stencil,
        })
    }

    /// Distance to the union of `sets` and, per node, the index of the set
    /// that realizes it (`None` where unreachable). Ties go to the set whose
    /// path is settled first.
    pub fn nearest_set(&self, sets: &[IndexSet]) -> Result<(Vec<f64>, Vec<Option<usize>>)> {
        if sets.iter().all(|s| s.is_empty()) {
            return Err(Error::EmptySourceSet);
        }
        for (l, set) in sets.iter().enumerate() {
            if let Some(prev) = sets[..l].iter().position(|o| !o.is_disjoint(set)) {
                return Err(Error::OverlappingComponents(prev, l));
            }
        }
        self.search(sets.iter().enumerate().flat_map(|(l, s)| s.iter().map(move |i| (i, l))))
    }

    /// Multi-source Dijkstra carrying a label from each source.
    fn search(&self, seeds: impl Iterator<Item = (usize, usize)>) -> Result<(Vec<f64>, Vec<Option<usize>>)> {
        let n = self.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut label = vec![None; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        for (s, l) in seeds {
            if s >= n {
                return Err(Error::IndexOutOfRange { index: s, len: n });
            }
            dist[s] = 0.0;
            label[s] = Some(l);
            heap.push(QueueEntry { dist: 0.0, node: s });
        }
        while let Some(QueueEntry { dist: d, node: i }) = heap.pop() {
            if settled[i] {
                continue;
            }
            settled[i] = true;
            for (j, c) in self.neighbors(i) {
                let nd = d + c;
                if nd < dist[j] {
                    dist[j] = nd;
                    label[j] = label[i];
                    heap.push(QueueEntry { dist: nd, node: j });
                }
            }
        }
        Ok((dist, label))
    }
}

fn diagonal_neighbors(grid: &GridSpec, i: usize) -> Vec<usize> {
    let [x, y] = grid.multi_index(i);
    let shape = grid.shape();
    let (nx, ny) = (shape[0] as isize, shape[1] as isize);
    let mut out = Vec::with_capacity(4);
    for (dx, dy) in [(-1isize, -1isize), (1, -1), (-1, 1), (1, 1)] {
        let (mut a, mut b) = (x as isize + dx, y as isize + dy);
        match grid.topology() {
            Topology::Torus => {
                if nx == 1 || ny == 1 {
                    continue;
                }
                a = a.rem_euclid(nx);
                b = b.rem_euclid(ny);
            }
            Topology::Box => {
                if a < 0 || b < 0 || a >= nx || b >= ny {
                    continue;
                }
            }
        }
        out.push(grid.linear_index([a as usize, b as usize]));
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct QueueEntry {
    dist: f64,
    node: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Effective distance from every node to a source set.
#[derive(Debug, Clone)]
pub struct DistanceField {
    h: Vec<f64>,
    sources: IndexSet,
    stencil: Stencil,
}

impl DistanceField {
    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn sources(&self) -> &IndexSet {
        &self.sources
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    /// Smallest distance over the nodes of `set`.
    pub fn min_over(&self, set: &IndexSet) -> f64 {
        set.iter().map(|i| self.h[i]).fold(f64::INFINITY, f64::min)
    }
}

pub fn distance_to_set(
    grid: &GridSpec,
    weight: &AgmonWeight,
    sources: &IndexSet,
    stencil: Stencil,
) -> Result<DistanceField> {
    if sources.is_empty() {
        return Err(Error::EmptySourceSet);
    }
    AgmonGraph::new(grid, weight, stencil)?.distances(sources)
}

/// Symmetric matrix of effective distances between node sets. Entry
/// `(l, l')` is the smaller of the two one-sided minima, so the matrix is
/// exactly symmetric.
pub fn pairwise_separation(
    grid: &GridSpec,
    weight: &AgmonWeight,
    components: &[IndexSet],
    stencil: Stencil,
) -> Result<Vec<Vec<f64>>> {
    let graph = AgmonGraph::new(grid, weight, stencil)?;
    separation_on_graph(&graph, components)
}

pub fn separation_on_graph(graph: &AgmonGraph, components: &[IndexSet]) -> Result<Vec<Vec<f64>>> {
    if components.is_empty() {
        return Err(Error::EmptySourceSet);
    }
    let n = graph.node_count();
    let mut owner = vec![usize::MAX; n];
    for (l, c) in components.iter().enumerate() {
        if c.is_empty() {
            return Err(Error::EmptySourceSet);
        }
        for i in c.iter() {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            if owner[i] != usize::MAX {
                return Err(Error::OverlappingComponents(owner[i], l));
            }
            owner[i] = l;
        }
    }
    let r = components.len();
    let mut sep = vec![vec![0.0; r]; r];
    if r == 1 {
        return Ok(sep);
    }
    for (lp, c) in components.iter().enumerate() {
        let field = graph.distances(c)?;
        for (l, other) in components.iter().enumerate() {
            if l != lp {
                sep[l][lp] = field.min_over(other);
            }
        }
    }
    for l in 0..r {
        for lp in l + 1..r {
            let m = sep[l][lp].min(sep[lp][l]);
            sep[l][lp] = m;
            sep[lp][l] = m;
        }
    }
    Ok(sep)
}

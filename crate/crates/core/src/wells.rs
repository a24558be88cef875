//! Sublevel sets of the effective potential, their connected components,
//! cluster merging and the disjoint neighborhoods `Omega_l` around each
//! cluster.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::agmon::{agmon_weight, AgmonGraph, AgmonWeight, Stencil};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, IndexSet};
use crate::landscape::Landscape;
use crate::operator::CoefficientField;

/// `{i : 1/u_i <= nu}`.
pub fn sublevel_set(landscape: &Landscape, nu: f64) -> IndexSet {
    landscape
        .effective_potential()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w <= nu)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }

    /// Groups `members` by root, ordered by smallest member.
    pub(crate) fn groups(&mut self, members: impl Iterator<Item = usize>) -> Vec<Vec<usize>> {
        let mut slot = std::collections::HashMap::new();
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut sorted: Vec<usize> = members.collect();
        sorted.sort_unstable();
        for i in sorted {
            let r = self.find(i);
            let k = *slot.entry(r).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[k].push(i);
        }
        out
    }
}

/// Grid-connected components of `set`, ordered by smallest member.
pub fn components(grid: &GridSpec, set: &IndexSet) -> Vec<IndexSet> {
    let n = grid.node_count();
    let mask = set.to_mask(n);
    let mut uf = UnionFind::new(n);
    for e in grid.edges() {
        if mask[e.i] && mask[e.j] {
            uf.union(e.i, e.j);
        }
    }
    uf.groups(set.iter())
        .into_iter()
        .map(IndexSet::new)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct WellPartition {
    pub mu_bar: f64,
    pub delta: f64,
    pub nu: f64,
    pub merge_threshold: f64,
    pub stencil: Stencil,
    #[serde(skip)]
    pub e: IndexSet,
    #[serde(skip)]
    pub components: Vec<IndexSet>,
    #[serde(skip)]
    pub clusters: Vec<IndexSet>,
    /// Cluster-to-cluster separation under `w_{mu_bar}`.
    pub separation: Vec<Vec<f64>>,
    /// Smallest off-diagonal separation; infinite for a single cluster.
    pub s_bar: f64,
    #[serde(skip)]
    pub omegas: Vec<IndexSet>,
    /// Distance from each node to its own cluster, or to the nearest
    /// cluster for nodes outside every `Omega_l`.
    #[serde(skip)]
    pub rho_own: Vec<f64>,
    #[serde(skip)]
    pub owner: Vec<Option<usize>>,
    pub single_cluster: bool,
    pub warnings: Vec<String>,
}

impl WellPartition {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Writes `node_index,cluster_id,in_E,rho_to_own_cluster`; nodes outside
    /// every neighborhood get an empty cluster id.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.owner.len();
        let in_e = self.e.to_mask(n);
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "node_index,cluster_id,in_E,rho_to_own_cluster")?;
        for i in 0..n {
            let id = self.owner[i].map(|c| c.to_string()).unwrap_or_default();
            writeln!(f, "{},{},{},{:.16e}", i, id, in_e[i] as u8, self.rho_own[i])?;
        }
        f.flush()?;
        Ok(())
    }

    /// Rechecks the partition invariants against freshly computed distance
    /// fields.
    pub fn check_invariants(&self, grid: &GridSpec, weight: &AgmonWeight) -> Result<()> {
        let fail = |msg: String| Err(Error::HypothesisViolated(msg));
        let n = grid.node_count();
        let mut seen = vec![false; n];
        for c in &self.components {
            for i in c.iter() {
                if seen[i] {
                    return fail(format!("node {i} in two components"));
                }
                seen[i] = true;
            }
        }
        if IndexSet::from_mask(&seen) != self.e {
            return fail("components do not cover E".into());
        }
        let mut cl = vec![usize::MAX; n];
        for (l, c) in self.clusters.iter().enumerate() {
            for i in c.iter() {
                if cl[i] != usize::MAX {
                    return fail(format!("node {i} in two clusters"));
                }
                cl[i] = l;
            }
        }
        for c in &self.components {
            let l = cl[c.first().unwrap()];
            if c.iter().any(|i| cl[i] != l) {
                return fail("component split across clusters".into());
            }
        }
        let graph = AgmonGraph::new(grid, weight, self.stencil)?;
        let fields: Vec<_> = self
            .clusters
            .iter()
            .map(|c| graph.distances(c))
            .collect::<Result<_>>()?;
        let half = 0.5 * self.s_bar;
        for (l, om) in self.omegas.iter().enumerate() {
            if !self.clusters[l].is_subset(om) {
                return fail(format!("cluster {l} not inside its neighborhood"));
            }
            for (lp, other) in self.omegas.iter().enumerate().skip(l + 1) {
                if !om.is_disjoint(other) {
                    return fail(format!("neighborhoods {l} and {lp} overlap"));
                }
            }
            for i in om.iter() {
                if !(fields[l].values()[i] < half) {
                    return fail(format!("node {i} of neighborhood {l} too far from its cluster"));
                }
                for (lp, f) in fields.iter().enumerate() {
                    if lp != l && f.values()[i] < half {
                        return fail(format!("node {i} of neighborhood {l} within S/2 of cluster {lp}"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the well partition at threshold `mu_bar` and window `delta`.
/// Components whose separation is below `merge_threshold` are merged.
pub fn build_partition(
    grid: &GridSpec,
    landscape: &Landscape,
    coeffs: &CoefficientField,
    mu_bar: f64,
    delta: f64,
    merge_threshold: f64,
    stencil: Stencil,
) -> Result<WellPartition> {
    if !(mu_bar >= 0.0) {
        return Err(Error::NegativeLevel(mu_bar));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let v_bar = coeffs.v_bar();
    if mu_bar + delta > v_bar {
        return Err(Error::HypothesisViolated(format!(
            "mu_bar + delta = {} exceeds V_bar = {}",
            mu_bar + delta,
            v_bar
        )));
    }
    let n = grid.node_count();
    if landscape.u().len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: landscape.u().len(),
        });
    }
    let nu = mu_bar + delta;
    let e = sublevel_set(landscape, nu);
    if e.is_empty() {
        return Err(Error::EmptyWellSet(nu));
    }
    let comps = components(grid, &e);
    let weight = agmon_weight(landscape, coeffs, mu_bar)?;
    let graph = AgmonGraph::new(grid, &weight, stencil)?;
    let mut warnings = Vec::new();

    let comp_sep = crate::agmon::separation_on_graph(&graph, &comps)?;
    let mut uf = UnionFind::new(comps.len());
    for l in 0..comps.len() {
        for lp in l + 1..comps.len() {
            if comp_sep[l][lp] < merge_threshold {
                uf.union(l, lp);
            }
        }
    }
    let mut clusters: Vec<IndexSet> = uf
        .groups(0..comps.len())
        .into_iter()
        .map(|g| g.iter().fold(IndexSet::default(), |acc, &c| acc.union(&comps[c])))
        .collect();
    clusters.sort_by_key(|c| c.first());
    let separation = if clusters.len() == comps.len() {
        comp_sep
    } else {
        crate::agmon::separation_on_graph(&graph, &clusters)?
    };
    let r = clusters.len();
    let mut s_bar = f64::INFINITY;
    for (l, row) in separation.iter().enumerate() {
        for (lp, &s) in row.iter().enumerate() {
            if l != lp {
                s_bar = s_bar.min(s);
            }
        }
    }
    let single_cluster = r == 1;
    if single_cluster {
        warnings.push("single cluster: separation undefined, S_bar set to +inf".into());
    }

    let fields: Vec<Vec<f64>> = clusters
        .iter()
        .map(|c| graph.distances(c).map(|f| f.values().to_vec()))
        .collect::<Result<_>>()?;
    let half = 0.5 * s_bar;
    // a node may only join a neighborhood if it is at least S_bar/2 from
    // every other cluster; in exact arithmetic this follows from the
    // triangle inequality, here it also absorbs rounding
    let mut ambiguous = 0usize;
    let mut eligible = vec![None; n];
    for i in 0..n {
        let near: Vec<usize> = (0..r).filter(|&l| fields[l][i] < half).collect();
        match near.len() {
            0 => {}
            1 => eligible[i] = Some(near[0]),
            _ => ambiguous += 1,
        }
    }
    if ambiguous > 0 {
        warnings.push(format!("{ambiguous} nodes within S_bar/2 of two clusters were left unassigned"));
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (l, cluster) in clusters.iter().enumerate() {
        let ball: IndexSet = (0..n).filter(|&i| eligible[i] == Some(l)).collect();
        let own_mask = cluster.to_mask(n);
        for comp in components(grid, &ball) {
            if comp.iter().any(|i| own_mask[i]) {
                for i in comp.iter() {
                    owner[i] = Some(l);
                }
            }
        }
    }
    let mut omegas = vec![Vec::new(); r];
    let mut rho_own = vec![f64::INFINITY; n];
    for i in 0..n {
        match owner[i] {
            Some(l) => {
                omegas[l].push(i);
                rho_own[i] = fields[l][i];
            }
            None => {
                rho_own[i] = fields.iter().map(|f| f[i]).fold(f64::INFINITY, f64::min);
            }
        }
    }
    let omegas: Vec<IndexSet> = omegas.into_iter().map(IndexSet::new).collect();
    let partition = WellPartition {
        mu_bar,
        delta,
        nu,
        merge_threshold,
        stencil,
        e,
        components: comps,
        clusters,
        separation,
        s_bar,
        omegas,
        rho_own,
        owner,
        single_cluster,
        warnings,
    };
    partition.check_invariants(grid, &weight)?;
    Ok(partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Topology};
    use crate::landscape::{solve_landscape, DEFAULT_LANDSCAPE_TOL};
    use crate::operator::assemble;

    #[test]
    fn sublevel_extremes() {
        let l = Landscape::from_raw_unchecked(vec![0.5, 0.25, 1.0], 0.0, 4.0);
        assert_eq!(sublevel_set(&l, 4.0).len(), 3);
        assert!(sublevel_set(&l, 0.5).is_empty());
        assert_eq!(sublevel_set(&l, 2.0).as_slice(), &[0, 2]);
    }

    #[test]
    fn component_examples() {
        let g = build_grid(2, &[3, 3], 1, Topology::Torus).unwrap();
        assert_eq!(components(&g, &IndexSet::full(9)).len(), 1);
        let line = build_grid(1, &[10], 1, Topology::Box).unwrap();
        let set = IndexSet::new(vec![1, 2, 3, 6, 7]);
        let c = components(&line, &set);
        assert_eq!(c, vec![IndexSet::new(vec![1, 2, 3]), IndexSet::new(vec![6, 7])]);
        let ring = build_grid(1, &[10], 1, Topology::Torus).unwrap();
        let c = components(&ring, &IndexSet::new(vec![0, 1, 8, 9]));
        assert_eq!(c.len(), 1);
        assert!(components(&ring, &IndexSet::default()).is_empty());
    }

    fn two_well_line() -> (GridSpec, CoefficientField, Landscape) {
        let g = build_grid(1, &[40], 1, Topology::Torus).unwrap();
        let v: Vec<f64> = (0..40)
            .map(|i| if (5..8).contains(&i) || (25..28).contains(&i) { 0.0 } else { 8.0 })
            .collect();
        let c = CoefficientField::from_potential(v, None).unwrap();
        let op = assemble(&g, &c).unwrap();
        let l = solve_landscape(&op, DEFAULT_LANDSCAPE_TOL).unwrap();
        (g, c, l)
    }

    #[test]
    fn constant_potential_is_one_cluster() {
        let g = build_grid(1, &[12], 2, Topology::Torus).unwrap();
        let c = CoefficientField::from_potential(vec![3.0; g.node_count()], Some(4.0)).unwrap();
        let op = assemble(&g, &c).unwrap();
        let l = solve_landscape(&op, DEFAULT_LANDSCAPE_TOL).unwrap();
        let p = build_partition(&g, &l, &c, 3.0, 0.5, 0.0, Stencil::Axis).unwrap();
        assert!(p.single_cluster);
        assert!(p.s_bar.is_infinite());
        assert_eq!(p.omegas[0].len(), g.node_count());
    }

    #[test]
    fn two_wells_separate() {
        let (g, c, l) = two_well_line();
        let p = build_partition(&g, &l, &c, 1.0, 0.5, 0.0, Stencil::Axis).unwrap();
        assert_eq!(p.cluster_count(), 2);
        assert_eq!(p.clusters, p.components);
        let w = agmon_weight(&l, &c, 1.0).unwrap();
        let d = crate::agmon::distance_to_set(&g, &w, &p.clusters[1], Stencil::Axis).unwrap();
        assert_eq!(p.s_bar, d.min_over(&p.clusters[0]).min(p.separation[0][1]));
        assert!(p.warnings.is_empty());
        let merged = build_partition(&g, &l, &c, 1.0, 0.5, p.s_bar * 1.01, Stencil::Axis).unwrap();
        assert_eq!(merged.cluster_count(), 1);
        assert_eq!(merged.components.len(), 2);
    }

    #[test]
    fn partition_errors() {
        let (g, c, l) = two_well_line();
        assert!(matches!(
            build_partition(&g, &l, &c, 0.0, 1e-6, 0.0, Stencil::Axis),
            Err(Error::EmptyWellSet(_))
        ));
        assert!(matches!(
            build_partition(&g, &l, &c, -1.0, 0.5, 0.0, Stencil::Axis),
            Err(Error::NegativeLevel(_))
        ));
        assert!(matches!(
            build_partition(&g, &l, &c, 7.9, 0.5, 0.0, Stencil::Axis),
            Err(Error::HypothesisViolated(_))
        ));
    }
}

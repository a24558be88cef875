//! Finite-volume assembly of `L = -(1/m) div(m A grad) + V` on a grid.
//!
//! The stiffness matrix `K` collects the Dirichlet form
//! `sum_edges c_ij (f_i - f_j)^2 + sum_i V_i M_ii f_i^2` and the mass matrix
//! is diagonal with `M_ii = m_i h^dim`. Face conductances use the arithmetic
//! mean of `m a` at the two endpoints, scaled by `h^(dim-2)`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, IndexSet};
use crate::linalg::CsrMatrix;

/// Potential, diffusion and density sampled at grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    v: Vec<f64>,
    /// Per-axis diagonal diffusion `a^(k)`; axis 1 mirrors axis 0 in 1D.
    a: Vec<[f64; 2]>,
    m: Vec<f64>,
    v_bar: f64,
    c_bound: f64,
}

impl CoefficientField {
    /// `v_bar` defaults to `max V`. It may be set higher (e.g. the upper end of
    /// a sampling distribution) but never lower.
    pub fn new(v: Vec<f64>, a: Vec<[f64; 2]>, m: Vec<f64>, v_bar: Option<f64>) -> Result<Self> {
        let n = v.len();
        for (len, _) in [(a.len(), "a"), (m.len(), "m")] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if let Some(i) = v.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::NegativePotential(i));
        }
        for (i, ai) in a.iter().enumerate() {
            if !(ai[0] > 0.0 && ai[1] > 0.0) || !ai[0].is_finite() || !ai[1].is_finite() {
                return Err(Error::NonpositiveCoefficient { field: "a", node: i });
            }
        }
        if let Some(i) = m.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::NonpositiveCoefficient { field: "m", node: i });
        }
        let v_max = v.iter().copied().fold(0.0, f64::max);
        let v_bar = match v_bar {
            Some(b) if b >= v_max && b.is_finite() => b,
            Some(b) => {
                return Err(Error::InvalidParameter(format!(
                    "v_bar = {b} is below max V = {v_max}"
                )))
            }
            None => v_max,
        };
        let c_bound = a
            .iter()
            .flat_map(|x| x.iter().copied())
            .chain(m.iter().copied())
            .map(|x| x.max(1.0 / x))
            .fold(1.0, f64::max);
        Ok(CoefficientField {
            v,
            a,
            m,
            v_bar,
            c_bound,
        })
    }

    /// Schrödinger case `a = 1`, `m = 1`.
    pub fn from_potential(v: Vec<f64>, v_bar: Option<f64>) -> Result<Self> {
        let n = v.len();
        Self::new(v, vec![[1.0, 1.0]; n], vec![1.0; n], v_bar)
    }

    /// Scalar diffusion coefficient per node.
    pub fn with_scalar_diffusion(
        v: Vec<f64>,
        a: Vec<f64>,
        m: Vec<f64>,
        v_bar: Option<f64>,
    ) -> Result<Self> {
        let a = a.into_iter().map(|x| [x, x]).collect();
        Self::new(v, a, m, v_bar)
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn potential(&self) -> &[f64] {
        &self.v
    }

    pub fn diffusion(&self) -> &[[f64; 2]] {
        &self.a
    }

    pub fn density(&self) -> &[f64] {
        &self.m
    }

    pub fn v_bar(&self) -> f64 {
        self.v_bar
    }

    /// Smallest `C` with `1/C <= a, m <= C` everywhere.
    pub fn c_bound(&self) -> f64 {
        self.c_bound
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.v.iter().any(|&x| x > 0.0)
    }

    /// Loads `node_index,V,a_0[,a_1],m` rows. A missing `a_1` column means
    /// isotropic diffusion.
    pub fn from_csv(path: &Path, node_count: usize, v_bar: Option<f64>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            node_index: usize,
            #[serde(rename = "V")]
            v: f64,
            a_0: f64,
            a_1: Option<f64>,
            m: f64,
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let mut v = vec![f64::NAN; node_count];
        let mut a = vec![[f64::NAN; 2]; node_count];
        let mut m = vec![f64::NAN; node_count];
        let mut seen = vec![false; node_count];
        for row in reader.deserialize() {
            let row: Row = row.map_err(|e| Error::Parse(e.to_string()))?;
            if row.node_index >= node_count {
                return Err(Error::IndexOutOfRange {
                    index: row.node_index,
                    len: node_count,
                });
            }
            if seen[row.node_index] {
                return Err(Error::Parse(format!("duplicate node_index {}", row.node_index)));
            }
            seen[row.node_index] = true;
            v[row.node_index] = row.v;
            a[row.node_index] = [row.a_0, row.a_1.unwrap_or(row.a_0)];
            m[row.node_index] = row.m;
        }
        let got = seen.iter().filter(|&&s| s).count();
        if got != node_count {
            return Err(Error::LengthMismatch {
                expected: node_count,
                got,
            });
        }
        Self::new(v, a, m, v_bar)
    }
}

/// An edge of the operator graph with its conductance, in local indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpEdge {
    pub i: usize,
    pub j: usize,
    pub axis: usize,
    pub c: f64,
}

/// Assembled pencil `(K, M)`, either on the whole grid or restricted to a
/// subset of nodes with zero extension outside.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    /// Grid node of each local degree of freedom, increasing.
    nodes: Vec<usize>,
    grid_nodes: usize,
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    potential_mass: Vec<f64>,
    edges: Vec<OpEdge>,
    /// Conductance to neighbors removed by restriction (Dirichlet part of K).
    boundary: Vec<f64>,
    v_bar: f64,
}

pub fn assemble(grid: &GridSpec, coeffs: &CoefficientField) -> Result<DiscreteOperator> {
    let n = grid.node_count();
    if coeffs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: coeffs.len(),
        });
    }
    let h = grid.spacing();
    let scale = h.powi(grid.dim() as i32 - 2);
    let cell = grid.cell_volume();
    let (v, a, m) = (coeffs.potential(), coeffs.diffusion(), coeffs.density());

    let edges: Vec<OpEdge> = grid
        .edges()
        .into_iter()
        .map(|e| {
            let k = e.axis;
            let c = scale * (m[e.i] * a[e.i][k] + m[e.j] * a[e.j][k]) / 2.0;
            OpEdge {
                i: e.i,
                j: e.j,
                axis: k,
                c,
            }
        })
        .collect();
    let mass: Vec<f64> = m.iter().map(|&mi| mi * cell).collect();
    let potential_mass: Vec<f64> = v.iter().zip(&mass).map(|(vi, mi)| vi * mi).collect();
    let stiffness = build_stiffness(n, &edges, &vec![0.0; n], &potential_mass);
    Ok(DiscreteOperator {
        nodes: (0..n).collect(),
        grid_nodes: n,
        stiffness,
        mass,
        potential_mass,
        edges,
        boundary: vec![0.0; n],
        v_bar: coeffs.v_bar(),
    })
}

fn build_stiffness(
    n: usize,
    edges: &[OpEdge],
    boundary: &[f64],
    potential_mass: &[f64],
) -> CsrMatrix {
    let mut diag = boundary.to_vec();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in edges {
        diag[e.i] += e.c;
        diag[e.j] += e.c;
        rows[e.i].push((e.j, -e.c));
        rows[e.j].push((e.i, -e.c));
    }
    for i in 0..n {
        rows[i].push((i, diag[i] + potential_mass[i]));
    }
    CsrMatrix::from_rows(rows)
}

impl DiscreteOperator {
    /// Number of degrees of freedom.
    pub fn dof(&self) -> usize {
        self.nodes.len()
    }

    /// Grid node index of every local degree of freedom.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn grid_node_count(&self) -> usize {
        self.grid_nodes
    }

    pub fn is_restricted(&self) -> bool {
        self.nodes.len() != self.grid_nodes
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Diagonal `V_i M_ii`.
    pub fn potential_mass(&self) -> &[f64] {
        &self.potential_mass
    }

    pub fn edges(&self) -> &[OpEdge] {
        &self.edges
    }

    pub fn boundary_conductance(&self) -> &[f64] {
        &self.boundary
    }

    pub fn v_bar(&self) -> f64 {
        self.v_bar
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.potential_mass.iter().any(|&x| x > 0.0)
            || self.boundary.iter().any(|&x| x > 0.0)
    }

    /// Gradient-only stiffness, `K - diag(V M)`.
    pub fn laplacian(&self) -> CsrMatrix {
        build_stiffness(
            self.dof(),
            &self.edges,
            &self.boundary,
            &vec![0.0; self.dof()],
        )
    }

    /// `K - diag(V M) + shift * M`.
    pub fn shifted_laplacian(&self, shift: f64) -> CsrMatrix {
        let d: Vec<f64> = self.mass.iter().map(|m| shift * m).collect();
        build_stiffness(self.dof(), &self.edges, &self.boundary, &d)
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        Ok(self.stiffness.matvec(f))
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.dof() {
            return Err(Error::LengthMismatch {
                expected: self.dof(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `f^T K f`, evaluated edge by edge so the result is a sum of
    /// nonnegative terms.
    pub fn quadratic_form(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(self.gradient_energy(f) + self.potential_energy(f))
    }

    /// `sum_edges c_ij (f_i - f_j)^2 + sum_i b_i f_i^2` with `b` the Dirichlet
    /// conductance left by restriction.
    pub fn gradient_energy(&self, f: &[f64]) -> f64 {
        let inner: f64 = self
            .edges
            .iter()
            .map(|e| e.c * (f[e.i] - f[e.j]).powi(2))
            .sum();
        let outer: f64 = self
            .boundary
            .iter()
            .zip(f)
            .map(|(b, x)| b * x * x)
            .sum();
        inner + outer
    }

    pub fn potential_energy(&self, f: &[f64]) -> f64 {
        self.potential_mass
            .iter()
            .zip(f)
            .map(|(vm, x)| vm * x * x)
            .sum()
    }

    /// `||f||_M^2`
    pub fn mass_norm_sq(&self, f: &[f64]) -> f64 {
        self.mass.iter().zip(f).map(|(m, x)| m * x * x).sum()
    }

    /// Principal submatrix on `set` (local indices of this operator):
    /// Dirichlet on the removed nodes, natural conditions elsewhere.
    pub fn restrict(&self, set: &IndexSet) -> Result<DiscreteOperator> {
        if set.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        if let Some(last) = set.as_slice().last() {
            if *last >= self.dof() {
                return Err(Error::IndexOutOfRange {
                    index: *last,
                    len: self.dof(),
                });
            }
        }
        let keep = set.as_slice();
        let mut local = vec![usize::MAX; self.dof()];
        for (l, &g) in keep.iter().enumerate() {
            local[g] = l;
        }
        let mut boundary: Vec<f64> = keep.iter().map(|&g| self.boundary[g]).collect();
        let mut edges = Vec::new();
        for e in &self.edges {
            match (local[e.i], local[e.j]) {
                (usize::MAX, usize::MAX) => {}
                (li, usize::MAX) => boundary[li] += e.c,
                (usize::MAX, lj) => boundary[lj] += e.c,
                (li, lj) => edges.push(OpEdge {
                    i: li,
                    j: lj,
                    axis: e.axis,
                    c: e.c,
                }),
            }
        }
        let mass: Vec<f64> = keep.iter().map(|&g| self.mass[g]).collect();
        let potential_mass: Vec<f64> = keep.iter().map(|&g| self.potential_mass[g]).collect();
        let stiffness = self.stiffness.principal_submatrix(keep);
        Ok(DiscreteOperator {
            nodes: keep.iter().map(|&g| self.nodes[g]).collect(),
            grid_nodes: self.grid_nodes,
            stiffness,
            mass,
            potential_mass,
            edges,
            boundary,
            v_bar: self.v_bar,
        })
    }

    /// Zero-extends a local vector to the whole grid.
    pub fn extend_to_grid(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid_nodes];
        for (&g, &x) in self.nodes.iter().zip(f) {
            out[g] = x;
        }
        out
    }

    /// Picks this operator's degrees of freedom out of a grid-sized vector.
    pub fn gather_from_grid(&self, f: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&g| f[g]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Topology};
    use crate::linalg::{dense_generalized_eigen, dot};

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_field(n: usize, seed: u64) -> CoefficientField {
        let mut s = seed;
        let v = (0..n).map(|_| 4.0 * lcg(&mut s)).collect();
        let a = (0..n)
            .map(|_| [0.5 + lcg(&mut s), 0.5 + lcg(&mut s)])
            .collect();
        let m = (0..n).map(|_| 0.5 + lcg(&mut s)).collect();
        CoefficientField::new(v, a, m, Some(4.0)).unwrap()
    }

    /// Dense K built straight from the bilinear form, one node-pair at a time.
    fn dense_oracle(grid: &GridSpec, c: &CoefficientField) -> Vec<Vec<f64>> {
        let n = grid.node_count();
        let h = grid.spacing();
        let d = grid.dim() as i32;
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            for (j, axis) in grid.adjacency(i).unwrap() {
                let ma_i = c.density()[i] * c.diffusion()[i][axis];
                let ma_j = c.density()[j] * c.diffusion()[j][axis];
                let cij = h.powi(d - 2) * 0.5 * (ma_i + ma_j);
                k[i][i] += cij;
                k[i][j] -= cij;
            }
            k[i][i] += c.potential()[i] * c.density()[i] * h.powi(d);
        }
        k
    }

    #[test]
    fn small_torus_stencil() {
        let g = build_grid(1, &[4], 1, Topology::Torus).unwrap();
        let c = CoefficientField::from_potential(vec![1.0; 4], None).unwrap();
        let op = assemble(&g, &c).unwrap();
        let k = op.stiffness().to_dense();
        for i in 0..4 {
            assert_eq!(k[i][i], 3.0);
            assert_eq!(k[i][(i + 1) % 4], -1.0);
            assert_eq!(k[i][(i + 3) % 4], -1.0);
            assert_eq!(k[i][(i + 2) % 4], 0.0);
        }
        assert_eq!(op.mass(), &[1.0; 4]);
    }

    #[test]
    fn matches_dense_oracle() {
        for (dim, ext, p, topo, seed) in [
            (1, vec![8], 1, Topology::Torus, 1),
            (1, vec![3], 3, Topology::Box, 2),
            (2, vec![3, 2], 2, Topology::Torus, 3),
            (2, vec![2, 2], 2, Topology::Box, 4),
        ] {
            let g = build_grid(dim, &ext, p, topo).unwrap();
            let c = random_field(g.node_count(), seed);
            let op = assemble(&g, &c).unwrap();
            let want = dense_oracle(&g, &c);
            let got = op.stiffness().to_dense();
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    assert!((want[i][j] - got[i][j]).abs() <= 1e-13 * want[i][i].abs());
                }
            }
        }
    }

    #[test]
    fn symmetric_m_matrix() {
        let g = build_grid(2, &[3, 4], 2, Topology::Torus).unwrap();
        let c = random_field(g.node_count(), 9);
        let op = assemble(&g, &c).unwrap();
        let k = op.stiffness();
        assert!(k.is_bitwise_symmetric());
        let lap = op.laplacian();
        for i in 0..op.dof() {
            let mut row_sum = 0.0;
            for (j, v) in lap.row(i) {
                if j != i {
                    assert!(v <= 0.0);
                }
                row_sum += v;
            }
            assert!(row_sum.abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_form_examples() {
        let g = build_grid(1, &[6], 1, Topology::Torus).unwrap();
        let c = CoefficientField::from_potential(vec![0.7; 6], None).unwrap();
        let op = assemble(&g, &c).unwrap();
        let q = op.quadratic_form(&[2.0; 6]).unwrap();
        assert!((q - 4.0 * 0.7 * 6.0).abs() < 1e-12);

        let c0 = CoefficientField::from_potential(vec![0.0; 6], None).unwrap();
        let op0 = assemble(&g, &c0).unwrap();
        let mut f = vec![0.0; 6];
        f[2] = 1.0;
        assert_eq!(op0.quadratic_form(&f).unwrap(), 2.0);
        assert!(op0.quadratic_form(&[1.0; 5]).is_err());
    }

    #[test]
    fn quadratic_form_matches_dense() {
        let g = build_grid(2, &[3, 3], 2, Topology::Box).unwrap();
        let c = random_field(g.node_count(), 17);
        let op = assemble(&g, &c).unwrap();
        let mut s = 5u64;
        let f: Vec<f64> = (0..op.dof()).map(|_| lcg(&mut s) - 0.5).collect();
        let kf = op.stiffness().matvec(&f);
        let want = dot(&f, &kf);
        let got = op.quadratic_form(&f).unwrap();
        assert!((want - got).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn plane_wave_consistency() {
        let alpha = 1.7;
        let g = build_grid(2, &[3, 2], 3, Topology::Torus).unwrap();
        let n = g.node_count();
        let c = CoefficientField::with_scalar_diffusion(
            vec![0.0; n],
            vec![alpha; n],
            vec![1.0; n],
            None,
        )
        .unwrap();
        let op = assemble(&g, &c).unwrap();
        let h = g.spacing();
        let shape = g.shape().to_vec();
        let t: Vec<f64> = g.extent_units().iter().map(|&t| t as f64).collect();
        for k0 in 0..shape[0] {
            for k1 in 0..shape[1] {
                let phase = |i: usize| {
                    let m = g.multi_index(i);
                    2.0 * std::f64::consts::PI
                        * (k0 as f64 * m[0] as f64 * h / t[0] + k1 as f64 * m[1] as f64 * h / t[1])
                };
                let re: Vec<f64> = (0..n).map(|i| phase(i).cos()).collect();
                let im: Vec<f64> = (0..n).map(|i| phase(i).sin()).collect();
                let expect = alpha
                    * [(k0, 0), (k1, 1)]
                        .iter()
                        .map(|&(kd, d)| {
                            (2.0 / (h * h))
                                * (1.0 - (2.0 * std::f64::consts::PI * kd as f64 * h / t[d]).cos())
                        })
                        .sum::<f64>();
                let kr = op.stiffness().matvec(&re);
                let ki = op.stiffness().matvec(&im);
                let vol = g.cell_volume();
                for i in 0..n {
                    assert!((kr[i] / vol - expect * re[i]).abs() < 1e-10);
                    assert!((ki[i] / vol - expect * im[i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn restriction() {
        let g = build_grid(1, &[8], 1, Topology::Torus).unwrap();
        let c = CoefficientField::from_potential(vec![0.5; 8], None).unwrap();
        let op = assemble(&g, &c).unwrap();
        let all = op.restrict(&IndexSet::full(8)).unwrap();
        assert_eq!(all.stiffness(), op.stiffness());
        assert_eq!(all.mass(), op.mass());

        let sub = op.restrict(&IndexSet::new(vec![1, 2, 3])).unwrap();
        let k = sub.stiffness().to_dense();
        assert_eq!(k, vec![
            vec![2.5, -1.0, 0.0],
            vec![-1.0, 2.5, -1.0],
            vec![0.0, -1.0, 2.5]
        ]);
        assert_eq!(sub.nodes(), &[1, 2, 3]);
        assert!(matches!(op.restrict(&IndexSet::default()), Err(Error::EmptyIndexSet)));

        // the edge-wise form agrees with the matrix after restriction
        let f = [0.3, -1.0, 2.0];
        let direct = dot(&f, &sub.stiffness().matvec(&f));
        assert!((sub.quadratic_form(&f).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn restriction_monotonicity_dense() {
        let g = build_grid(2, &[4, 3], 2, Topology::Torus).unwrap();
        let c = random_field(g.node_count(), 23);
        let op = assemble(&g, &c).unwrap();
        let (full, _) = dense_generalized_eigen(&op.stiffness().to_dense(), op.mass()).unwrap();
        let set: IndexSet = (0..op.dof()).filter(|i| i % 3 != 0).collect();
        let sub = op.restrict(&set).unwrap();
        let (part, _) = dense_generalized_eigen(&sub.stiffness().to_dense(), sub.mass()).unwrap();
        for j in 0..part.len() {
            assert!(part[j] >= full[j] - 1e-12);
        }
    }

    #[test]
    fn coefficient_validation() {
        assert!(matches!(
            CoefficientField::from_potential(vec![1.0, -0.1], None),
            Err(Error::NegativePotential(1))
        ));
        assert!(matches!(
            CoefficientField::with_scalar_diffusion(vec![1.0], vec![0.0], vec![1.0], None),
            Err(Error::NonpositiveCoefficient { field: "a", .. })
        ));
        assert!(matches!(
            CoefficientField::new(vec![1.0], vec![[1.0, 1.0]], vec![1.0, 1.0], None),
            Err(Error::LengthMismatch { .. })
        ));
        let g = build_grid(1, &[4], 1, Topology::Torus).unwrap();
        let c = CoefficientField::from_potential(vec![1.0; 3], None).unwrap();
        assert!(matches!(assemble(&g, &c), Err(Error::LengthMismatch { .. })));
        let c = random_field(5, 1);
        assert!(c.c_bound() >= 1.0 && c.c_bound() <= 2.0);
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coeffs.csv");
        std::fs::write(
            &path,
            "node_index,V,a_0,m\n1,4.0,1.0,1.0\n0,0.0,2.0,0.5\n2,1.5,1.0,1.0\n",
        )
        .unwrap();
        let c = CoefficientField::from_csv(&path, 3, None).unwrap();
        assert_eq!(c.potential(), &[0.0, 4.0, 1.5]);
        assert_eq!(c.diffusion()[0], [2.0, 2.0]);
        assert_eq!(c.density()[0], 0.5);
        assert!(CoefficientField::from_csv(&path, 4, None).is_err());
    }
}

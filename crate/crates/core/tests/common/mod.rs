#![allow(dead_code)]

use landscape_core::agmon::AgmonGraph;
use landscape_core::grid::{build_grid, GridSpec, IndexSet, Topology};
use landscape_core::instance::Instance;
use landscape_core::operator::CoefficientField;
use landscape_core::rng::{rng_from_seed, uniform01, Rng};

pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

pub fn index(rng: &mut Rng, n: usize) -> usize {
    ((uniform01(rng) * n as f64) as usize).min(n - 1)
}

/// Random grid and coefficients: 1D with at most 1024 nodes or 2D with at
/// most 64 x 64, either topology, `V` in `[0, v_bar)`, `a` and `m` in
/// `[0.5, 2]`.
pub fn random_instance(seed: u64, dim: usize, v_bar: f64) -> (GridSpec, CoefficientField) {
    let mut rng = rng_from_seed(seed);
    let p = 1 + index(&mut rng, 4);
    let topo = if index(&mut rng, 2) == 0 { Topology::Torus } else { Topology::Box };
    let grid = if dim == 1 {
        let t = 2 + index(&mut rng, 1000 / p - 2);
        build_grid(1, &[t], p, topo).unwrap()
    } else {
        let cap = 63 / p;
        let tx = 2 + index(&mut rng, cap - 1);
        let ty = 2 + index(&mut rng, cap - 1);
        build_grid(2, &[tx, ty], p, topo).unwrap()
    };
    let n = grid.node_count();
    let v: Vec<f64> = (0..n).map(|_| uniform(&mut rng, 0.0, v_bar)).collect();
    let a: Vec<[f64; 2]> = (0..n)
        .map(|_| [uniform(&mut rng, 0.5, 2.0), uniform(&mut rng, 0.5, 2.0)])
        .collect();
    let m: Vec<f64> = (0..n).map(|_| uniform(&mut rng, 0.5, 2.0)).collect();
    let coeffs = CoefficientField::new(v, a, m, Some(v_bar)).unwrap();
    (grid, coeffs)
}

pub fn random_vector(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n).map(|_| uniform(&mut rng, -1.0, 1.0)).collect()
}

pub fn instance(grid: GridSpec, coeffs: CoefficientField) -> Instance {
    Instance::new(grid, coeffs, 1e-12).unwrap()
}

/// All-pairs shortest paths over the graph's own edge costs.
pub fn floyd_warshall(graph: &AgmonGraph) -> Vec<Vec<f64>> {
    let n = graph.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
        for (j, c) in graph.neighbors(i) {
            if c < row[j] {
                row[j] = c;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let alt = dik + d[k][j];
                if alt < d[i][j] {
                    d[i][j] = alt;
                }
            }
        }
    }
    d
}

pub fn distance_oracle(all: &[Vec<f64>], sources: &IndexSet) -> Vec<f64> {
    (0..all.len())
        .map(|i| sources.iter().map(|s| all[s][i]).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Weights `(k/8)^2` with small integers `k`, so that with unit diffusion and
/// a power-of-two resolution every edge cost and every path length is an
/// exact binary fraction.
pub fn dyadic_weights(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            let k = index(&mut rng, 17) as f64 / 8.0;
            k * k
        })
        .collect()
}

mod common;

use std::collections::VecDeque;

use landscape_core::agmon::{AgmonGraph, AgmonWeight, Stencil};
use landscape_core::grid::{build_grid, GridSpec, IndexSet, Topology};
use landscape_core::wells::components;
use proptest::prelude::*;

use common::{distance_oracle, floyd_warshall};

fn small_grid() -> impl Strategy<Value = GridSpec> {
    (1usize..=2, 2usize..=5, 2usize..=5, 1usize..=3, any::<bool>()).prop_map(|(dim, tx, ty, p, torus)| {
        let topo = if torus { Topology::Torus } else { Topology::Box };
        if dim == 1 {
            build_grid(1, &[tx * ty], p, topo).unwrap()
        } else {
            build_grid(2, &[tx, ty], p, topo).unwrap()
        }
    })
}

fn case() -> impl Strategy<Value = (GridSpec, Vec<f64>, Vec<usize>, bool)> {
    small_grid().prop_flat_map(|g| {
        let n = g.node_count();
        (
            Just(g),
            prop::collection::vec(0.0f64..4.0, n),
            prop::collection::vec(0..n, 1..4),
            any::<bool>(),
        )
    })
}

fn stencil(diag: bool) -> Stencil {
    if diag {
        Stencil::Diagonal
    } else {
        Stencil::Axis
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dijkstra_matches_floyd_warshall((grid, w, src, diag) in case()) {
        let weight = AgmonWeight::from_values(0.0, w).unwrap();
        let graph = AgmonGraph::new(&grid, &weight, stencil(diag)).unwrap();
        let sources = IndexSet::new(src);
        let oracle = distance_oracle(&floyd_warshall(&graph), &sources);
        let h = graph.distances(&sources).unwrap();
        for (a, b) in h.values().iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn distance_is_lipschitz_along_edges((grid, w, src, diag) in case()) {
        let weight = AgmonWeight::from_values(0.0, w).unwrap();
        let graph = AgmonGraph::new(&grid, &weight, stencil(diag)).unwrap();
        let h = graph.distances(&IndexSet::new(src)).unwrap();
        let h = h.values();
        for i in 0..grid.node_count() {
            for (j, c) in graph.neighbors(i) {
                prop_assert!(h[j] <= h[i] + c + 1e-12 * h[i].max(1.0));
            }
        }
    }

    #[test]
    fn larger_source_set_never_increases_distance((grid, w, src, diag) in case()) {
        let weight = AgmonWeight::from_values(0.0, w).unwrap();
        let graph = AgmonGraph::new(&grid, &weight, stencil(diag)).unwrap();
        let one = graph.distances(&IndexSet::new(vec![src[0]])).unwrap();
        let all = graph.distances(&IndexSet::new(src)).unwrap();
        for (a, b) in all.values().iter().zip(one.values()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn triangle_inequality_through_any_node((grid, w, src, diag) in case()) {
        let weight = AgmonWeight::from_values(0.0, w).unwrap();
        let graph = AgmonGraph::new(&grid, &weight, stencil(diag)).unwrap();
        let a = graph.distances(&IndexSet::new(vec![src[0]])).unwrap();
        let k = *src.last().unwrap();
        let b = graph.distances(&IndexSet::new(vec![k])).unwrap();
        for i in 0..grid.node_count() {
            prop_assert!(a.values()[i] <= a.values()[k] + b.values()[i] + 1e-12 * a.values()[i].max(1.0));
        }
    }

    #[test]
    fn components_match_breadth_first_search((grid, w, _src, _diag) in case()) {
        let set = IndexSet::from_mask(&w.iter().map(|&x| x < 2.0).collect::<Vec<_>>());
        let got = components(&grid, &set);
        prop_assert_eq!(got, bfs_components(&grid, &set));
    }
}

#[test]
fn distance_decreases_as_level_rises() {
    use landscape_core::agmon::agmon_weight;
    let (grid, coeffs) = common::random_instance(17, 2, 4.0);
    let inst = common::instance(grid, coeffs);
    let sources = IndexSet::new(vec![0]);
    let mut prev: Option<Vec<f64>> = None;
    for mu in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let w = agmon_weight(&inst.landscape, &inst.coeffs, mu).unwrap();
        let h = AgmonGraph::new(&inst.grid, &w, Stencil::Axis).unwrap().distances(&sources).unwrap();
        if let Some(p) = &prev {
            assert!(h.values().iter().zip(p).all(|(a, b)| a <= b));
        }
        prev = Some(h.values().to_vec());
    }
}

fn bfs_components(grid: &GridSpec, set: &IndexSet) -> Vec<IndexSet> {
    let n = grid.node_count();
    let mask = set.to_mask(n);
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in set.iter() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut comp = Vec::new();
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            for (j, _) in grid.adjacency(i).unwrap() {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        out.push(IndexSet::new(comp));
    }
    out
}

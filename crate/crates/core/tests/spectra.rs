mod common;

use landscape_core::agmon::{agmon_weight, AgmonGraph, Stencil};
use landscape_core::eigensolve::{eig_localized_with, eig_smallest_with, spectral_project, Domain, EigenMethod, EigenOptions};
use landscape_core::ensemble::gen_uniform_1d;
use landscape_core::grid::{build_grid, IndexSet, Topology};
use landscape_core::instance::Instance;
use landscape_core::linalg::{dense_solve, weighted_dot};
use landscape_core::operator::CoefficientField;
use landscape_core::verify::{verify_eigen_identity, verify_form_bound, verify_identity};
use landscape_core::wells::{build_partition, sublevel_set};

fn opts(method: EigenMethod) -> EigenOptions {
    EigenOptions {
        method,
        tol: 1e-11,
        ..Default::default()
    }
}

#[test]
fn krylov_matches_dense_at_400_nodes() {
    let (grid, coeffs) = gen_uniform_1d(11, 100, 4.0, 4).unwrap();
    let inst = common::instance(grid, coeffs);
    let k = eig_smallest_with(&inst.op, 12, &opts(EigenMethod::Krylov), Domain::Global).unwrap();
    let d = eig_smallest_with(&inst.op, 12, &opts(EigenMethod::Dense), Domain::Global).unwrap();
    for (a, b) in k.values.iter().zip(&d.values) {
        assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
    }
    assert!(k.max_orthonormality_error() < 1e-9);
}

#[test]
fn identity_and_form_bound_hold_on_random_instances() {
    for seed in 0..12u64 {
        let (grid, coeffs) = common::random_instance(500 + seed, 1 + (seed as usize % 2), 3.0);
        let inst = common::instance(grid, coeffs);
        let f = common::random_vector(seed, inst.op.dof());
        let id = verify_identity(&inst.op, &inst.landscape, &f).unwrap();
        assert!(id.pass, "seed {seed}: {id:?}");
        let fb = verify_form_bound(&inst.op, &inst.landscape, &f).unwrap();
        assert!(fb.pass, "seed {seed}: {fb:?}");
        assert!(inst.landscape.min_u() >= 1.0 / 3.0 - 1e-12);
    }
}

#[test]
fn eigen_identity_with_exponential_weight_cut_off() {
    let (grid, coeffs) = gen_uniform_1d(4, 64, 4.0, 4).unwrap();
    let inst = common::instance(grid, coeffs);
    let eig = eig_smallest_with(&inst.op, 3, &EigenOptions::default(), Domain::Global).unwrap();
    let n = inst.op.dof();
    let full = IndexSet::full(n);
    let lambda = eig.values[0];
    let w = agmon_weight(&inst.landscape, &inst.coeffs, lambda).unwrap();
    let wells = sublevel_set(&inst.landscape, lambda);
    let h = AgmonGraph::new(&inst.grid, &w, Stencil::Axis).unwrap().distances(&wells).unwrap();
    for j in 0..3 {
        let phi = eig.extended(j);
        // chi is the indicator of {h < 4}
        let g: Vec<f64> = h.values().iter().map(|&x| if x < 4.0 { (0.5 * x).exp() } else { 0.0 }).collect();
        let r = verify_eigen_identity(&inst.op, &inst.landscape, &phi, &full, &g, eig.values[j]).unwrap();
        assert!(r.pass, "pair {j}: {r:?}");
    }
}

#[test]
fn scaling_potential_and_diffusion_scales_spectrum() {
    let (grid, coeffs) = common::random_instance(77, 2, 2.0);
    let c = 3.0;
    let scaled = CoefficientField::new(
        coeffs.potential().iter().map(|v| c * v).collect(),
        coeffs.diffusion().iter().map(|a| [c * a[0], c * a[1]]).collect(),
        coeffs.density().to_vec(),
        Some(c * coeffs.v_bar()),
    )
    .unwrap();
    let a = Instance::new(grid.clone(), coeffs, 1e-12).unwrap();
    let b = Instance::new(grid, scaled, 1e-12).unwrap();
    for (u, v) in a.landscape.u().iter().zip(b.landscape.u()) {
        assert!((u - c * v).abs() <= 1e-10 * u);
    }
    let o = EigenOptions::default();
    let ea = eig_smallest_with(&a.op, 5, &o, Domain::Global).unwrap();
    let eb = eig_smallest_with(&b.op, 5, &o, Domain::Global).unwrap();
    for (x, y) in ea.values.iter().zip(&eb.values) {
        assert!((c * x - y).abs() <= 1e-9 * y);
    }
}

#[test]
fn spectral_projection_matches_gram_solve() {
    let (grid, coeffs) = gen_uniform_1d(9, 128, 4.0, 4).unwrap();
    let inst = common::instance(grid, coeffs);
    let o = EigenOptions::default();
    let g = eig_smallest_with(&inst.op, 5, &o, Domain::Global).unwrap();
    let part = build_partition(&inst.grid, &inst.landscape, &inst.coeffs, g.values[4], 0.05, 0.0, Stencil::Axis).unwrap();
    let loc = eig_localized_with(&inst.op, &part, 2, g.values[4] + 0.05, &o).unwrap();
    let window = (0.0, g.values[4] + 0.05);
    let mass = inst.op.mass();
    let v = g.extended(2);
    let (proj, resid) = spectral_project(&v, &loc, mass, window).unwrap();

    let basis: Vec<Vec<f64>> = loc
        .flat
        .iter()
        .filter(|p| window.0 < p.value && p.value < window.1)
        .map(|p| loc.vector(p))
        .collect();
    assert!(!basis.is_empty());
    let gram: Vec<Vec<f64>> = basis
        .iter()
        .map(|x| basis.iter().map(|y| weighted_dot(x, y, mass)).collect())
        .collect();
    let rhs: Vec<f64> = basis.iter().map(|x| weighted_dot(x, &v, mass)).collect();
    let coef = dense_solve(&gram, &rhs).unwrap();
    let mut oracle = vec![0.0; v.len()];
    for (c, x) in coef.iter().zip(&basis) {
        for (o, xi) in oracle.iter_mut().zip(x) {
            *o += c * xi;
        }
    }
    for (a, b) in proj.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-9);
    }
    let d: Vec<f64> = v.iter().zip(&oracle).map(|(a, b)| a - b).collect();
    assert!((resid - weighted_dot(&d, &d, mass)).abs() <= 1e-9);
}

#[test]
fn constant_potential_on_torus_gives_constant_landscape() {
    let grid = build_grid(2, &[6, 6], 2, Topology::Torus).unwrap();
    let n = grid.node_count();
    let coeffs = CoefficientField::from_potential(vec![2.0; n], None).unwrap();
    let inst = common::instance(grid, coeffs);
    for u in inst.landscape.u() {
        assert!((u - 0.5).abs() < 1e-12);
    }
}

//! The landscape function `u` solving `K u = M 1`, and the effective
//! potential `W = 1/u`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{norm2, pcg, SpdSolver, DIRECT_SOLVE_LIMIT};
use crate::operator::DiscreteOperator;

pub const DEFAULT_LANDSCAPE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverInfo {
    Direct { refinement_steps: usize },
    Iterative { iterations: usize },
}

#[derive(Debug, Clone)]
pub struct Landscape {
    u: Vec<f64>,
    w: Vec<f64>,
    residual: f64,
    solver: SolverInfo,
    v_bar: f64,
}

fn relative_residual(op: &DiscreteOperator, u: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
    let ku = op.stiffness().matvec(u);
    let r: Vec<f64> = rhs.iter().zip(&ku).map(|(b, k)| b - k).collect();
    let rel = norm2(&r) / norm2(rhs);
    (r, rel)
}

/// Solves the landscape equation on `op` to relative residual `tol`.
pub fn solve_landscape(op: &DiscreteOperator, tol: f64) -> Result<Landscape> {
    if !op.is_nondegenerate() {
        return Err(Error::DegeneratePotential);
    }
    let rhs = op.mass().to_vec();
    let (u, residual, info) = if op.dof() <= DIRECT_SOLVE_LIMIT {
        let solver = SpdSolver::cholesky(op.stiffness())?;
        let mut u = solver.solve(&rhs)?;
        let (mut r, mut residual) = relative_residual(op, &u, &rhs);
        let mut steps = 0;
        while residual > tol && steps < 3 {
            let du = solver.solve(&r)?;
            for (x, d) in u.iter_mut().zip(&du) {
                *x += d;
            }
            (r, residual) = relative_residual(op, &u, &rhs);
            steps += 1;
        }
        (u, residual, SolverInfo::Direct { refinement_steps: steps })
    } else {
        let k = op.stiffness();
        let inv_diag: Vec<f64> = k.diagonal().iter().map(|d| 1.0 / d).collect();
        let (u, iterations) = pcg(k, &inv_diag, &rhs, 0.5 * tol, 20 * op.dof())?;
        let (_, residual) = relative_residual(op, &u, &rhs);
        (u, residual, SolverInfo::Iterative { iterations })
    };
    if residual > tol {
        let iterations = match info {
            SolverInfo::Direct { refinement_steps } => refinement_steps,
            SolverInfo::Iterative { iterations } => iterations,
        };
        return Err(Error::NoConvergence {
            solver: "landscape",
            iterations,
            residual,
        });
    }
    Landscape::from_solution(u, residual, info, op.v_bar())
}

impl Landscape {
    /// Wraps a precomputed solution, enforcing positivity.
    pub fn from_solution(u: Vec<f64>, residual: f64, solver: SolverInfo, v_bar: f64) -> Result<Self> {
        if let Some((node, &value)) = u
            .iter()
            .enumerate()
            .find(|(_, &x)| !(x > 0.0) || !x.is_finite())
        {
            return Err(Error::NonpositiveLandscape { node, value });
        }
        let w = u.iter().map(|x| 1.0 / x).collect();
        Ok(Landscape {
            u,
            w,
            residual,
            solver,
            v_bar,
        })
    }

    /// Bypasses the positivity guard; only for negative-control checks.
    #[doc(hidden)]
    pub fn from_raw_unchecked(u: Vec<f64>, residual: f64, v_bar: f64) -> Self {
        let w = u.iter().map(|x| 1.0 / x).collect();
        Landscape {
            u,
            w,
            residual,
            solver: SolverInfo::Direct {
                refinement_steps: 0,
            },
            v_bar,
        }
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Effective potential `1/u`.
    pub fn effective_potential(&self) -> &[f64] {
        &self.w
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn solver(&self) -> &SolverInfo {
        &self.solver
    }

    pub fn v_bar(&self) -> f64 {
        self.v_bar
    }

    pub fn min_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_w(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_w(&self) -> f64 {
        self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn effective_potential(landscape: &Landscape) -> Vec<f64> {
    landscape.effective_potential().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Topology};
    use crate::linalg::dense_solve;
    use crate::operator::{assemble, CoefficientField};

    #[test]
    fn constant_potential_gives_constant_landscape() {
        for (dim, ext) in [(1, vec![7]), (2, vec![3, 4])] {
            let g = build_grid(dim, &ext, 2, Topology::Torus).unwrap();
            let c = CoefficientField::from_potential(vec![2.5; g.node_count()], None).unwrap();
            let op = assemble(&g, &c).unwrap();
            let l = solve_landscape(&op, DEFAULT_LANDSCAPE_TOL).unwrap();
            for (&u, &w) in l.u().iter().zip(l.effective_potential()) {
                assert!((u - 0.4).abs() < 1e-14);
                assert!((w - 2.5).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn eight_node_instance_matches_dense_solve() {
        let g = build_grid(1, &[8], 1, Topology::Torus).unwrap();
        let v = vec![4.0, 0.0, 0.0, 4.0, 4.0, 0.0, 4.0, 0.0];
        let c = CoefficientField::from_potential(v, None).unwrap();
        let op = assemble(&g, &c).unwrap();
        let l = solve_landscape(&op, DEFAULT_LANDSCAPE_TOL).unwrap();
        let dense = dense_solve(&op.stiffness().to_dense(), op.mass()).unwrap();
        for (a, b) in l.u().iter().zip(&dense) {
            assert!(((a - b) / b).abs() < 1e-10);
        }
        assert!(l.residual() <= DEFAULT_LANDSCAPE_TOL);
        assert!(l.min_u() >= 0.25 - 1e-10);
        assert_eq!(l.min_w(), 1.0 / l.max_u());
    }

    #[test]
    fn zero_potential_is_degenerate() {
        let g = build_grid(1, &[5], 1, Topology::Torus).unwrap();
        let c = CoefficientField::from_potential(vec![0.0; 5], None).unwrap();
        let op = assemble(&g, &c).unwrap();
        assert!(matches!(
            solve_landscape(&op, 1e-12),
            Err(Error::DegeneratePotential)
        ));
    }

    #[test]
    fn nonpositive_solution_rejected() {
        let err = Landscape::from_solution(vec![1.0, -0.5], 0.0, SolverInfo::Iterative { iterations: 1 }, 1.0);
        assert!(matches!(err, Err(Error::NonpositiveLandscape { node: 1, .. })));
    }

    #[test]
    fn iterative_path_agrees_with_direct() {
        let g = build_grid(2, &[4, 4], 2, Topology::Box).unwrap();
        let v: Vec<f64> = (0..g.node_count()).map(|i| ((i * 7) % 5) as f64).collect();
        let c = CoefficientField::from_potential(v, None).unwrap();
        let op = assemble(&g, &c).unwrap();
        let direct = solve_landscape(&op, 1e-12).unwrap();
        let cg = SpdSolver::cg(op.stiffness(), 1e-13);
        let u = cg.solve(op.mass()).unwrap();
        for (a, b) in u.iter().zip(direct.u()) {
            assert!((a - b).abs() < 1e-10 * b);
        }
    }
}

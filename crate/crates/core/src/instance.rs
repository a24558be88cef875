//! A grid, its coefficients, the assembled operator and the landscape,
//! bundled so that downstream checks share one consistent set of inputs.

use crate::error::Result;
use crate::grid::GridSpec;
use crate::landscape::{solve_landscape, Landscape};
use crate::operator::{assemble, CoefficientField, DiscreteOperator};

#[derive(Debug, Clone)]
pub struct Instance {
    pub grid: GridSpec,
    pub coeffs: CoefficientField,
    pub op: DiscreteOperator,
    pub landscape: Landscape,
}

impl Instance {
    pub fn new(grid: GridSpec, coeffs: CoefficientField, landscape_tol: f64) -> Result<Self> {
        let op = assemble(&grid, &coeffs)?;
        let landscape = solve_landscape(&op, landscape_tol)?;
        Ok(Instance {
            grid,
            coeffs,
            op,
            landscape,
        })
    }

    pub fn v_bar(&self) -> f64 {
        self.coeffs.v_bar()
    }
}

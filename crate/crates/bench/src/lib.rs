//! Shared fixtures for the operator benchmarks.

use ncbe_core::cases::{self, CaseId};
use ncbe_core::stepper::project_initial;
use ncbe_core::{build_dof_map, AssemblyOptions, OperatorSet, Result};

/// Operators and projected initial data of a registry case on an `n`-element grid.
pub fn fixture(id: CaseId, n: usize, degree: usize) -> Result<(OperatorSet, Vec<f64>)> {
    let c = cases::case(id)?;
    let dofs = build_dof_map(&c.mesh(n)?, degree)?;
    let ops = OperatorSet::assemble(&dofs, &c.gamma, &c.beta, AssemblyOptions::default())?;
    let alpha = project_initial(&c.initial, &ops)?;
    Ok((ops, alpha))
}

pub fn assemble(id: CaseId, n: usize, degree: usize) -> Result<OperatorSet> {
    let c = cases::case(id)?;
    let dofs = build_dof_map(&c.mesh(n)?, degree)?;
    OperatorSet::assemble(&dofs, &c.gamma, &c.beta, AssemblyOptions::default())
}

//! Conforming finite elements for the nonlinear collisional breakage equation on
//! tensor-product grids in one to three property dimensions, with BDF2 time stepping.

pub mod basis;
pub mod cases;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod mesh;
pub mod observables;
pub mod operators;
pub mod quadrature;
pub mod report;
pub mod stepper;

pub use basis::{build_dof_map, eval_fe_function, DofMap, ReferenceBasis};
pub use cases::{case, registry, CaseId, TestCase};
pub use error::{Error, Result};
pub use kernel::{BreakageKernel, CollisionKernel};
pub use mesh::{Axis1D, Grading, TensorMesh};
pub use observables::{ErrorReport, ExactSolution, NormKind};
pub use operators::{AssemblyOptions, Nonlinearity, OperatorSet};
pub use stepper::{InitialDatum, StepperConfig, TimeScheme, Trajectory};

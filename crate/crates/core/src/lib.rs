//! Scalar conservation laws with discontinuous flux `λ(x) h(ρ)` and the zero
//! range process whose hydrodynamic limit they are.

pub mod coupling;
pub mod entropy;
pub mod flux;
pub mod fv;
pub mod harness;
pub mod quadrature;
pub mod rng;
pub mod steady;
pub mod zrp;

pub use flux::{Closure, FluxError, FluxModel, MollifierKernel, RateFunction, SpeedField};
pub use fv::{Grid1D, GridSolution};
pub use steady::Branch;
pub use zrp::{Configuration, EquilibriumTables, JumpKernel, ZrpError};

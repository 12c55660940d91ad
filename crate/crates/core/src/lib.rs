//! Numerical lab for the focusing nonlinear Schrodinger equation
//! `i u_t + Delta u + |u|^{p-1} u = 0` on hyperbolic space `H^n`, `n = 2, 3`,
//! restricted to radial data.

pub mod ddouble;
pub mod error;
pub mod field;
pub mod functionals;
pub mod groundstate;
pub mod evolve;
pub mod expcli;
pub mod hypgeom;
pub mod spectral;
pub mod tridiag;

pub use error::{Error, Result};
pub use field::RadialField;
pub use groundstate::{solve_ground_state, GroundState};
pub use hypgeom::{build_grid, RadialGrid};

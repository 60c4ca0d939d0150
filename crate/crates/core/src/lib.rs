//! Backstepping controllers, observers and motion planning for coupled linear
//! hyperbolic systems `u_t + Λ⁺u_x = Σ⁺⁺u + Σ⁺⁻v`, `v_t − Λ⁻v_x = Σ⁻⁺u + Σ⁻⁻v`
//! on `[0, 1]`, actuated at `x = 1`.

pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod planner;
pub mod sim;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{DiscontinuityLine, KernelField, KernelMatrix, TriangularGrid};
pub use system::{HyperbolicSystem, ValidationReport};

//! Kernel synthesis: characteristics, successive approximations, Volterra
//! solves, the observer reflection, explicit 2×2 kernels and growth bounds.

pub mod bessel;
pub mod bound;
pub mod characteristics;
pub mod closed_form;
pub mod controller;
pub mod observer;
pub mod picard;
pub mod transform;
pub mod volterra;

pub use bound::{default_eps, theoretical_bound, TheoreticalBound};
pub use characteristics::{trace_characteristic_k, trace_characteristic_l, CharacteristicPath, Terminus};
pub use closed_form::{closed_form_2x2, closed_form_artificial, ClosedForm2x2, L12Prefactor};
pub use controller::{compute_g, picard_solve_controller, solve_c_kernels, ControllerKernels, TraceMatrix};
pub use observer::{solve_observer_kernels, ObserverKernels};
pub use picard::{ArtificialBoundary, BoundaryDatum, KernelProblem, PicardOptions, PicardReport};
pub use transform::invert_transform;

//! Enumeration of all local minimizers of a black-box objective on a box.
//!
//! The pipeline: sample the box (i.i.d. from the tensorized Chebyshev
//! measure, or a tensor Chebyshev grid), query a noisy evaluation oracle,
//! fit a discrete least-squares polynomial in the tensor Chebyshev basis,
//! enumerate and certify every real critical point of the approximant
//! with a subdivision + interval-Newton solver, classify them by Hessian
//! spectrum, and report the minimizers. The `planner` module turns the
//! accuracy/regularity parameters into degree, noise, and sample budgets;
//! `driver` runs the end-to-end regular and adaptive pipelines.

pub mod bruteforce;
pub mod cheb;
pub mod dlsp;
pub mod driver;
pub mod oracle;
pub mod planner;
pub mod psolve;
pub mod sampling;

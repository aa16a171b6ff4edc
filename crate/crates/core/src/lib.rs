//! Mass-action realizations of polynomial ODE systems.
//!
//! The crate decides whether a polynomial system `dx/dt = Z · x^Y` is
//! kinetic, searches for reaction networks that induce it with prescribed
//! structure, analyzes those networks and rewrites them without changing
//! the induced dynamics.
//!
//! ```
//! use crn_realize::model::parse_ode;
//! use crn_realize::realize::canonical_realization;
//! use crn_realize::network::induced_ode;
//!
//! let sys = parse_ode("dx/dt = x - x^2").unwrap();
//! let net = canonical_realization(&sys).unwrap();
//! assert_eq!(net.reactions().len(), 2);
//! assert_eq!(induced_ode(&net), sys);
//! ```

#![allow(clippy::needless_range_loop)]

pub mod linalg;
pub mod linsolve;
pub mod model;
pub mod network;
pub mod realize;
pub mod scalar;
pub mod transform;

pub use model::{Complex, KineticSystem};
pub use network::{Reaction, Realization};
pub use scalar::{Rational, Scalar};

//! Complex Legendre transforms of Kähler potentials.
//!
//! The crate implements, over flat boxes in ℂⁿ and the two-chart Riemann
//! sphere:
//!
//! * polarization and Calabi diastasis of real-analytic strongly
//!   plurisubharmonic potentials ([`potentials`]);
//! * the classical Legendre transform, its complex analogue
//!   `sup_z [2Re φ_ℂ(z,w) − ψ(z)]`, and the diastasis form
//!   `sup_p [−D(p,q) − η(p)]` ([`transforms`]);
//! * the maximizer map q ↦ G(η)(q), its Jacobian and inverse
//!   ([`gradient_map`]);
//! * Kähler forms, Monge–Ampère densities, pullbacks and the Mabuchi
//!   inner product ([`geometry`]);
//! * a verification harness with named scenarios, reports and refinement
//!   studies ([`harness`]).

pub mod domain;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod gradient_map;
pub mod grid;
pub mod potentials;
pub mod solver;
pub mod transforms;

pub use error::{Error, Result};

//! Hard-core lattice gas on discrete tori.
//!
//! The model places particles on the vertices of an even-sided torus so that
//! no two are adjacent; a configuration `I` gets weight `lambda^|I|`. This
//! crate provides the pieces needed to study the model at small scale with
//! exact arithmetic:
//!
//! - [`lattice`]: the torus graph and dense bitmask vertex sets,
//! - [`ensemble`]: exhaustive enumeration and exact rational probabilities
//!   under even, odd, or free boundary conditions,
//! - [`sampler`]: single-site heat-bath (Glauber) dynamics,
//! - [`contour`]: the region `W = G ∪ A` separating a fixed vertex from the
//!   boundary layer, with its checked structural properties,
//! - [`flow`]: weight-transporting maps from boundary-cut configurations to
//!   the full ensemble, with exact row sums and defect audits,
//! - [`approx`]: coarse approximations `(F, S)` of a contour pair `(G, A)`
//!   and the cover machinery built on them,
//! - [`iso`]: vertex-isoperimetry tables for the `l1` ball and related counts.
//!
//! Everything except the sampler computes in exact rational arithmetic.

pub mod approx;
pub mod contour;
pub mod ensemble;
mod error;
pub mod flow;
pub mod iso;
pub mod lattice;
pub mod sampler;

pub use error::{Error, Result};

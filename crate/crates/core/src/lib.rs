//! Numerical laboratory for a weak form of BMO defined through lattice
//! averages.
//!
//! The crate computes oscillation quantities of step functions, evaluates the
//! closed-form minimal locally concave function on the lattice-comb domain,
//! runs the constructive splitting and Bellman induction, builds the extremal
//! step functions, and solves for minimal locally concave functions on grids
//! over non-convex planar domains.
//!
//! Module map:
//! - [`geometry`]: comb and two-disk domains, region classification, hull
//!   clearance of segments, and the structural axiom checker.
//! - [`stepfn`]: step functions on the interval and the circle with exact
//!   prefix-sum averages.
//! - [`oscillation`]: BMO, dyadic BMO, the lattice-restricted quantity and
//!   class membership.
//! - [`bellman`]: the closed-form Bellman function for exponential data.
//! - [`extremal`]: the geometric-piece extremal functions.
//! - [`induction`]: the splitting lemma and the Bellman induction driver.
//! - [`mlcf`]: the grid solver for minimal locally concave functions.

pub mod bellman;
pub mod error;
pub mod extremal;
pub mod geometry;
pub mod induction;
pub mod mlcf;
pub mod oscillation;
pub mod rootfind;
pub mod stepfn;

pub use error::{Error, Result};
pub use geometry::{CombDomain, DomainDescriptor, PlanePoint, RegionTag, TwoDiskDomain};
pub use stepfn::{PlaneStepFunction, Space, StepFunction};

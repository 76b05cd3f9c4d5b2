//! Exact crossing minimization for storyline layouts.
//!
//! A [`story::Story`] is turned into a layered graph with tree constraints
//! ([`instance::MlcmInstance`]), modelled as a quadratic ordering problem
//! ([`model`]), reduced to maximum cut ([`maxcut`]) and solved exactly by
//! branch-and-cut ([`solver`]). [`oracle`] is a brute-force reference solver
//! and [`render`] draws the result as SVG.

pub mod error;
pub mod heuristic;
pub mod instance;
pub mod lp;
pub mod maxcut;
pub mod model;
pub mod oracle;
pub mod random;
pub mod render;
pub mod solver;
pub mod story;
pub mod transform;

pub use error::{Error, Result, ValidationReport};
pub use instance::{MlcmInstance, Solution};
pub use story::Story;

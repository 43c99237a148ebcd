//! Motion planning on distance fields with safe bubble covers.
//!
//! A single distance query at `y` certifies a ball of radius
//! `(d(y) - eps) / L` as collision free. This crate samples covers of free
//! space made of such balls, searches the cover's intersection graph for a
//! bubble path and refines the path into a piecewise Bezier trajectory whose
//! control points are kept inside the bubbles.
//!
//! Modules, bottom up:
//! - [`distance_field`]: analytic and grid distance oracles with query accounting
//! - [`bubbles`]: bubble geometry and covers
//! - [`samplers`]: BRM, RBG and EBG cover construction
//! - [`graph`]: intersection graph and bubble-path search
//! - [`trajopt`]: Bezier curves and the containment-constrained QP
//! - [`baselines`]: PRM* and RRT* with edge-sampled collision checks
//! - [`frontier`]: visibility-gated exploration of unknown scenes
//! - [`benchmark`]: environment suite, randomized trials and coverage study

pub mod baselines;
pub mod benchmark;
pub mod bubbles;
pub mod distance_field;
pub mod error;
pub mod frontier;
pub mod graph;
pub mod point;
pub mod samplers;
pub mod spatial;
pub mod trajopt;

pub use bubbles::{BubbleCover, SafeBubble};
pub use distance_field::{DistanceOracle, Environment, Workspace};
pub use error::{Error, Result};
pub use point::Point;

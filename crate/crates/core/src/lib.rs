//! Layer-guided kinodynamic motion planning for signal temporal logic
//! missions.
//!
//! The pipeline: parse the mission formula and extract its reach-region goals
//! ([`stl`]), enumerate goal visit orders consistent with the deadline
//! windows ([`taskplan`]), build a geometric lead path through the ordered
//! regions and split it into layers ([`geolead`]), then grow a sparse
//! kinodynamic tree along the lead, scoring nodes with an incremental
//! STL-robustness monitor ([`monitor`], [`kinoplanner`]). [`highlevel`] ties
//! the stages together; [`bench`] and [`render`] support the benchmark CLI.

pub mod bench;
pub mod dynamics;
pub mod geolead;
pub mod geometry;
pub mod highlevel;
pub mod kinoplanner;
pub mod monitor;
pub mod render;
pub mod stl;
pub mod taskplan;
pub mod world;

pub use world::scenario::{Scenario, ScenarioError};

//! Deterministic 2D swarm navigation library.
//!
//! The pipeline: a scenario (arena, obstacles, gate, goal script) is turned
//! into a structured scene description, the description is embedded and used
//! to retrieve an impedance profile from a vector database, and the profile
//! drives a fixed-timestep simulation in which an APF-guided leader tows
//! impedance-coupled followers around soft (alive) and hard (inanimate)
//! obstacles.
//!
//! All numeric code is generic over the scalar type through [`Real`];
//! `f64` aliases for every public type live at the crate root.

pub mod dbgen;
pub mod geometry;
pub mod impedance;
pub mod perception;
pub mod planner;
pub mod retrieval;
pub mod scene;
pub mod sim;

use serde::{de::DeserializeOwned, Serialize};

/// Scalar type required by every numeric routine in this crate.
///
/// `f32` and `f64` satisfy it; the blanket impl picks up any other type with
/// the same capabilities.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssignOps
    + core::fmt::Debug
    + core::fmt::Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + num_traits::NumAssignOps
        + core::fmt::Debug
        + core::fmt::Display
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics only if `T` cannot represent any `f64` at all, which no admissible
/// scalar does; rounding to the nearest representable value is fine.
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("scalar type must convert from f64")
}

/// Derives an independent 64-bit seed from a base seed and two indices.
///
/// Used to give every (scenario, trial) or (scenario, sample) pair its own
/// generator stream so results do not depend on evaluation order. The mix is
/// the splitmix64 finalizer over the xor of the inputs scaled by odd
/// constants; distinct index pairs collide with negligible probability.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub use perception::{AnalyzerOutcome, PerceptionNoise};
pub use scene::{Lighting, ObstacleKind, SceneDescription, Spacing};
pub use sim::Role;

/// `f64` aliases for the generic public types.
pub type Vec2 = geometry::Vec2<f64>;
pub type Arena = scene::Arena<f64>;
pub type Obstacle = scene::Obstacle<f64>;
pub type Gate = scene::Gate<f64>;
pub type Waypoint = scene::Waypoint<f64>;
pub type Scenario = scene::Scenario<f64>;
pub type EmbeddingVector = retrieval::EmbeddingVector<f64>;
pub type ImpedanceProfile = retrieval::ImpedanceProfile<f64>;
pub type ScenarioRecord = retrieval::ScenarioRecord<f64>;
pub type VectorDatabase = retrieval::VectorDatabase<f64>;
pub type LinkState = impedance::LinkState<f64>;
pub type DeflectionConstants = impedance::DeflectionConstants<f64>;
pub type ApfConfig = planner::ApfConfig<f64>;
pub type SimConfig = sim::SimConfig<f64>;
pub type DroneState = sim::DroneState<f64>;
pub type WorldState = sim::WorldState<f64>;
pub type Sample = sim::Sample<f64>;
pub type Trajectory = sim::Trajectory<f64>;
pub type SimResult = sim::SimResult<f64>;
pub type Metrics = sim::Metrics<f64>;
pub type SearchConfig = dbgen::SearchConfig<f64>;
pub type ScoredCandidate = dbgen::ScoredCandidate<f64>;

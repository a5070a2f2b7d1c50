//! Deterministic simulation of cooperating UAV and ground boid swarms that
//! search for targets while the UAVs relay ground communication, plus a
//! differential-evolution optimizer for the swarms' interaction weights.

pub mod connectivity;
pub mod dynamics;
pub mod environment;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod grid;
pub mod rng;
pub mod simulation;

pub use connectivity::{connectivity_fraction, CommGraph, UnionFind};
pub use dynamics::{AgentKind, AgentState, AirParams, GroundParams};
pub use environment::{Obstacle, Space, Target, TargetStream};
pub use error::{EvolveError, InvalidConfig, MetricsError, SimError};
pub use evolution::{Chromosome, DeConfig, Evaluation, EvolutionReport, Gene, GeneSpec, GenerationRecord};
pub use geometry::{Side, Vec2};
pub use simulation::{run, SimConfig, SimMetrics, World};

//! Stochastic simulation and analysis of gossip diffusion on networks where
//! the persuasion strength depends on the global fraction of adopters.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: interaction graphs, random generators and metrics
//!   (spectral radius, bottleneck ratio).
//! * [`persuasion`]: the persuasion function and its assumption checks.
//! * [`dynamics`]: exact event-driven simulation of the node-level jump process.
//! * [`birthdeath`]: birth–death chains on the lattice `{0, 1/N, …, 1}`,
//!   including the mean-field, bottleneck lower-bound and degree upper-bound
//!   rate families, plus exact hitting probabilities.
//! * [`meanfield`]: the deterministic drift, critical rate, equilibria and
//!   hydrodynamic ODE.
//! * [`bounds`]: the linearised dominating process, its moment ODEs and the
//!   general-graph thresholds.
//! * [`experiments`]: seeded, parallel Monte Carlo sweeps with CSV output.

pub mod birthdeath;
pub mod bounds;
pub mod dynamics;
pub mod experiments;
mod fenwick;
pub mod graph;
pub mod meanfield;
pub mod persuasion;
pub mod rng;
pub mod trajectory;

pub use birthdeath::{BirthDeathChain, ChainError, ChainKind};
pub use dynamics::{DynamicsError, NodeStateConfig};
pub use graph::{Graph, GraphError, GraphMetrics};
pub use persuasion::{Persuasion, PersuasionError, SsaReport};
pub use trajectory::{Sample, SampleOptions, Stride, Trajectory};

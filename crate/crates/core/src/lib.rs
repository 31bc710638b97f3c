//! Placement of virtual mobile-core functions (MME, HSS, PCRF, SGW, PGW) and
//! routing of control and data service chains over a metro network, with the
//! goal of minimizing total bandwidth consumed.
//!
//! The crate is organised bottom-up:
//! * [`model`]: topology, function catalog, applications, traffic flows;
//! * [`chains`]: service chains composed from signaling templates and data paths;
//! * [`ilp`]: the integer program, one builder per constraint family;
//! * [`solve`]: MPS export plus an external solver driver, an exhaustive
//!   oracle for tiny instances and a greedy fallback;
//! * [`verify`]: independent solution checker;
//! * [`experiments`]: scenario generation and replica sweeps.

pub mod chains;
pub mod error;
pub mod experiments;
pub mod ilp;
pub mod model;
pub mod problem;
pub mod solve;
pub mod verify;

pub use chains::{ChainPosition, ServiceChain, TemplateSet};
pub use error::{ChainError, ExperimentError, IlpError, ModelError, SolveError};
pub use model::{NodeId, Topology, VnfCatalog, VnfId};
pub use problem::{CapacityMode, ModelOptions, PlacementProblem};

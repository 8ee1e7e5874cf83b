//! Toolkit for singularly perturbed linear systems: exact slow/fast
//! decomposition, decentralized leader-follower gain synthesis, and
//! closed-loop formation simulation for both continuous and discrete time.

pub mod cli;
pub mod decompose;
pub mod fixtures;
pub mod matlib;
pub mod protocol;
pub mod sim;

pub use decompose::{ChangDecomposition, PartitionedLinearModel, SystemKind};
pub use matlib::{ComplexSpectrum, Matrix, Vector};
pub use protocol::{CommGraph, SynchronizationGains};
pub use sim::{ConvergenceMetrics, Scenario, TrajectoryLog};

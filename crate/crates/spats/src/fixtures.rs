//! Bundled aircraft longitudinal-motion models and the three-agent
//! communication graph used by the regression suite and the examples.

use crate::decompose::{partition_full_model, PartitionedLinearModel, SystemKind};
use crate::matlib::{Matrix, Vector};
use crate::protocol::{build_graph, CommGraph};

/// Perturbation parameter shared by both aircraft models.
pub const EPSILON: f64 = 1.0 / 30.0;

/// Continuous-time longitudinal dynamics, states `[u, theta, q, alpha]`,
/// inputs `[delta_e, delta_T]`.
pub fn aircraft_continuous_full() -> (Matrix, Matrix) {
    let a = Matrix::from_row_slice(
        4,
        4,
        &[
            -0.015, -0.0805, -0.0011666, 0.0, //
            0.0, 0.0, 0.0, 0.03333, //
            -2.28, 0.0, -0.84, 1.0, //
            0.6, 0.0, -4.8, -0.49,
        ],
    );
    let b = Matrix::from_row_slice(
        4,
        2,
        &[
            -9.16e-4, 7.416e-4, //
            0.0, 0.0, //
            -0.11, 0.0, //
            -8.7, 0.0,
        ],
    );
    (a, b)
}

/// The same aircraft sampled at 1 s.
pub fn aircraft_discrete_full() -> (Matrix, Matrix) {
    let a = Matrix::from_row_slice(
        4,
        4,
        &[
            0.9847, -0.0799, 9.054e-4, -1.076e-3, //
            0.04159, 0.9990, -0.03586, 0.01268, //
            -0.5466, 0.04492, -0.3299, 0.1932, //
            2.662, -0.1004, -0.9245, -0.2633,
        ],
    );
    let b = Matrix::from_row_slice(
        4,
        2,
        &[
            0.002893, 7.361e-4, //
            -0.08706, 9.341e-6, //
            -1.984, -4.138e-4, //
            -3.194, 9.254e-4,
        ],
    );
    (a, b)
}

pub fn continuous_model() -> PartitionedLinearModel {
    let (a, b) = aircraft_continuous_full();
    partition_full_model(&a, &b, 2, 2, EPSILON, SystemKind::Continuous).unwrap()
}

pub fn discrete_model() -> PartitionedLinearModel {
    let (a, b) = aircraft_discrete_full();
    partition_full_model(&a, &b, 2, 2, EPSILON, SystemKind::Discrete).unwrap()
}

/// Three followers: agents 2 and 3 sense agent 1; agents 1 and 2 are pinned
/// to the leader.
pub fn formation_graph() -> CommGraph {
    let adjacency = Matrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let pinning = Vector::from_vec(vec![1.0, 1.0, 0.0]);
    build_graph(&adjacency, &pinning).unwrap()
}

/// Leader and follower initial states of the continuous experiment.
pub fn continuous_initial_states() -> (Vector, Vec<Vector>) {
    (
        Vector::from_vec(vec![0.0, 1.0, 0.0, 0.5]),
        vec![
            Vector::from_vec(vec![0.0, -0.5, 0.0, 1.0]),
            Vector::from_vec(vec![0.0, 2.5, 0.0, 0.0]),
            Vector::from_vec(vec![0.0, 0.0, 0.0, 0.0]),
        ],
    )
}

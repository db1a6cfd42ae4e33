//! Certified globally optimal inverse kinematics for general 7-revolute-joint
//! serial manipulators.
//!
//! The pipeline: model the manipulator by Denavit-Hartenberg parameters,
//! rewrite the inverse-kinematics equations as polynomial constraints in the
//! cosines and sines of the joint angles, reduce those constraints to degree-2
//! generators with a Gröbner basis, relax the resulting polynomial
//! optimization problem to a semidefinite program via moment matrices, solve
//! it with an embedded primal-dual interior-point method, and recover joint
//! angles (with a global-optimality certificate) or a proof of infeasibility.
//!
//! See the `examples/` directory for runnable entry points covering each
//! stage, and the `polyik` binary for the batch-experiment CLI.

pub mod poly;
pub mod groebner;
pub mod kinematics;
pub mod config;
pub mod pop;
pub mod lasserre;
pub mod sdp;
pub mod extract;
pub mod harness;

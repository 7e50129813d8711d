//! Measurement planning for elastostatic calibration of a 3-link spatial
//! anthropomorphic manipulator with rigid links and compliant joints.
//!
//! The pipeline, bottom-up:
//!
//! * [`kinematics`]: forward kinematics, translational Jacobian, Cartesian stiffness.
//! * [`elasto`]: deflection model `Δp = A(q, F) k`, reduced experiment
//!   parameterization, information matrix.
//! * [`identification`]: least-squares compliance estimate and its covariance.
//! * [`criterion`]: expected squared compensation error at a test pose.
//! * [`optimizer`]: multistart search for plans minimizing that criterion.
//! * [`montecarlo`]: noisy virtual experiments validating the analytic results.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod criterion;
pub mod elasto;
pub mod error;
pub mod identification;
pub mod kinematics;
pub mod linalg;
pub mod montecarlo;
pub mod optimizer;
pub mod scalar;
pub mod table1;

pub use criterion::{criterion_closed_form, d_coefficients, repeated_pose_bound, test_pose_criterion, DCoefficients, TestPose};
pub use elasto::{
    deflection, force_from_angle, information_matrix, observation_matrix, observation_matrix_reduced, observation_matrix_test,
    ComplianceVector, ExperimentPlan, ExperimentPose, InformationMatrix, ReducedInformation, Wrench,
};
pub use error::{CalibrationError, Result};
pub use identification::{
    covariance, covariance_closed_form, estimate_compliances, CalibrationObservation, ComplianceEstimate, CovarianceMatrix,
    NoiseModel,
};
pub use kinematics::{AuxLengths, JointConfig, ManipulatorGeometry};
pub use linalg::{Mat3, Vec3};
pub use montecarlo::{run_trials, simulate_observations, EmpiricalStats, TrialConfig};
pub use optimizer::{canonicalize_pose, optimize_plan, OptimizationResult, OptimizerOptions};
pub use scalar::Real;

pub type Geometry = ManipulatorGeometry<f64>;
pub type Joints = JointConfig<f64>;
pub type Force = Wrench<f64>;
pub type Compliances = ComplianceVector<f64>;
pub type Pose = ExperimentPose<f64>;
pub type Plan = ExperimentPlan<f64>;
pub type Test = TestPose<f64>;
pub type Information = InformationMatrix<f64>;
pub type Covariance = CovarianceMatrix<f64>;
pub type Observation = CalibrationObservation<f64>;
pub type Options = OptimizerOptions<f64>;
pub type Optimum = OptimizationResult<f64>;
pub type Trials = TrialConfig<f64>;
pub type Stats = EmpiricalStats<f64>;

/// Single-precision geometry, for embedded or GPU-adjacent callers.
pub type Geometry32 = ManipulatorGeometry<f32>;
pub type Plan32 = ExperimentPlan<f32>;
pub type Test32 = TestPose<f32>;

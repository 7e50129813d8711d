//! Test-pose optimality criterion.
//!
//! For a user-specified test configuration `q⁰` loaded by `F⁰`, the
//! compliance error left after calibration produces a deflection prediction
//! error `δp = A⁰ δk`. Its expected squared norm,
//! `O_t = σ² trace(A⁰ M⁻¹ A⁰ᵀ)`, is a weighted trace of the parameter
//! covariance and has a direct physical meaning: the mean squared
//! end-effector compensation error at the task pose.
//!
//! [`test_pose_criterion`] evaluates it through the general observation path
//! and is the reference. [`criterion_closed_form`] is the specialization for
//! reduced plans used inside the optimizer.

use crate::elasto::{observation_matrix, observation_matrix_test, ExperimentPlan, ExperimentPose, InformationMatrix, ReducedInformation, Wrench};
use crate::error::{CalibrationError, Result};
use crate::identification::check_identifiable;
use crate::kinematics::{JointConfig, ManipulatorGeometry};
use crate::linalg::{dot, Mat3};
use crate::scalar::{wrap_angle, Real};

/// Configuration and task loading at which compensation accuracy matters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestPose<T> {
    pub q: JointConfig<T>,
    pub force: Wrench<T>,
}

impl<T: Real> TestPose<T> {
    pub fn new(q: JointConfig<T>, force: Wrench<T>) -> Result<Self> {
        if !q.is_finite() || !force.is_finite() {
            return Err(CalibrationError::InvalidInput("test pose must be finite".into()));
        }
        if !(force.magnitude() > T::zero()) {
            return Err(CalibrationError::NonPositiveForce(0.0));
        }
        Ok(Self { q, force })
    }

    /// The same pose rotated about the base axis, force included.
    pub fn rotated_z(&self, phi: T) -> Self {
        let mut q = self.q;
        q.q1 = q.q1 + phi;
        Self { q, force: self.force.rotated_z(phi) }
    }

    /// Reduced calibration experiment equivalent to measuring at the test
    /// pose itself, with its force magnitude. `None` when the force has a
    /// component normal to the arm's vertical plane.
    pub fn as_experiment(&self) -> Option<(ExperimentPose<T>, T)> {
        let aligned = self.rotated_z(-self.q.q1);
        let [fx, fy, fz] = aligned.force.0;
        let magnitude = self.force.magnitude();
        if fx.abs() > T::lit(1e-12) * magnitude {
            return None;
        }
        Some((ExperimentPose::new(self.q.q2, self.q.q3, wrap_angle(fz.atan2(fy))), magnitude))
    }
}

/// Inner products of the test-pose observation columns:
/// `d1 = |A₁⁰|²`, `d2 = |A₃⁰|²`, `d3 = |A₂⁰|²`, `d4 = A₂⁰·A₃⁰`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DCoefficients<T> {
    pub d1: T,
    pub d2: T,
    pub d3: T,
    pub d4: T,
}

pub fn d_coefficients<T: Real>(geom: &ManipulatorGeometry<T>, test: &TestPose<T>) -> DCoefficients<T> {
    let a0 = observation_matrix_test(geom, test);
    let (c1, c2, c3) = (a0.column(0), a0.column(1), a0.column(2));
    DCoefficients { d1: dot(&c1, &c1), d2: dot(&c3, &c3), d3: dot(&c2, &c2), d4: dot(&c2, &c3) }
}

/// `σ² trace(A⁰ M⁻¹ A⁰ᵀ)` for an arbitrary information matrix.
pub fn weighted_trace<T: Real>(info: &Mat3<T>, test_observation: &Mat3<T>, sigma: T) -> Result<T> {
    check_identifiable(info)?;
    let chol = info.cholesky().ok_or(CalibrationError::UnidentifiablePlan {
        condition: f64::INFINITY,
        null_direction: [0.0; 3],
        unobservable: Vec::new(),
    })?;
    let mut total = T::zero();
    for i in 0..3 {
        let row = test_observation.row(i);
        total = total + dot(&row, &chol.cholesky_solve(&row));
    }
    Ok(sigma * sigma * total)
}

/// Expected squared compensation error at the test pose, through the
/// general observation path.
pub fn test_pose_criterion<T: Real>(
    geom: &ManipulatorGeometry<T>,
    plan: &ExperimentPlan<T>,
    test: &TestPose<T>,
    sigma: T,
) -> Result<T> {
    let info = InformationMatrix::from_experiments(geom, &plan.general_experiments());
    let a0 = observation_matrix(geom, &test.q, &test.force);
    weighted_trace(&info.matrix, &a0, sigma)
}

/// Closed form of the criterion for reduced plans, in units of `σ²/F0²`.
pub fn criterion_closed_form<T: Real>(d: &DCoefficients<T>, a11: T, a22: T, a33: T, a23: T) -> Result<T> {
    let det = a22 * a33 - a23 * a23;
    if !(a11 > T::zero()) || !(det > T::zero()) {
        let unobservable = if !(a11 > T::zero()) { vec![0] } else { vec![1, 2] };
        return Err(CalibrationError::UnidentifiablePlan {
            condition: f64::INFINITY,
            null_direction: [0.0; 3],
            unobservable,
        });
    }
    let two = T::lit(2.0);
    Ok(d.d1 / a11 + (d.d2 * a22 + d.d3 * a33 - two * d.d4 * a23) / det)
}

/// Closed-form criterion with the `σ²/F0²` scaling applied.
pub fn criterion_from_reduced<T: Real>(d: &DCoefficients<T>, info: &ReducedInformation<T>, sigma: T, force_magnitude: T) -> Result<T> {
    let bracket = criterion_closed_form(d, info.a11, info.a22, info.a33, info.a23)?;
    Ok(sigma * sigma / (force_magnitude * force_magnitude) * bracket)
}

/// Criterion value when every experiment repeats the test pose: `n σ² / m`.
pub fn repeated_pose_bound<T: Real>(parameters: usize, experiments: usize, sigma: T) -> T {
    assert!(parameters >= 1 && experiments >= 1, "counts must be positive");
    T::from_count(parameters) * sigma * sigma / T::from_count(experiments)
}

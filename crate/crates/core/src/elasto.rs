//! Elastostatic observation model.
//!
//! With rigid links and compliant actuated joints, the end-effector deflection
//! under an external force is linear in the joint compliances:
//! `Δp = J diag(k) Jᵀ F = A(q, F) k`, where column `n` of the observation
//! matrix `A` is `Jₙ (Jₙᵀ F)`.
//!
//! Two evaluation paths are kept side by side. The general path accepts any
//! configuration and any force. The reduced path fixes the base angle to zero
//! and keeps the force in the arm's vertical plane, parameterized by its
//! magnitude and an angle `α` measured from the +y axis towards +z; rotating
//! a calibration pose about the base axis together with its force does not
//! change `AᵀA`, so this loses no information.

use crate::criterion::TestPose;
use crate::error::{CalibrationError, Result};
use crate::kinematics::{JointConfig, ManipulatorGeometry};
use crate::linalg::{dot, scale, Mat3, Vec3};
use crate::scalar::Real;

/// Joint compliances `(k1, k2, k3)` in rad/(N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplianceVector<T>(pub [T; 3]);

impl<T: Real> ComplianceVector<T> {
    pub fn new(k: [T; 3]) -> Self {
        Self(k)
    }

    pub fn is_physical(&self) -> bool {
        self.0.iter().all(|&k| k > T::zero())
    }
}

/// External force `(Fx, Fy, Fz)` in newtons.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench<T>(pub [T; 3]);

impl<T: Real> Wrench<T> {
    pub fn new(f: [T; 3]) -> Self {
        Self(f)
    }

    pub fn magnitude(&self) -> T {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|f| f.is_finite())
    }

    /// Rotation about the vertical base axis by `phi`.
    pub fn rotated_z(&self, phi: T) -> Self {
        let (s, c) = phi.sin_cos();
        let [x, y, z] = self.0;
        Self([c * x - s * y, s * x + c * y, z])
    }
}

/// One calibration experiment in reduced form: base angle zero, force
/// `F0·(0, cos α, sin α)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExperimentPose<T> {
    pub q2: T,
    pub q3: T,
    pub alpha: T,
}

impl<T: Real> ExperimentPose<T> {
    pub fn new(q2: T, q3: T, alpha: T) -> Self {
        Self { q2, q3, alpha }
    }

    pub fn from_degrees(q2: T, q3: T, alpha: T) -> Self {
        Self::new(q2.to_radians(), q3.to_radians(), alpha.to_radians())
    }

    pub fn to_degrees(&self) -> [T; 3] {
        [self.q2.to_degrees(), self.q3.to_degrees(), self.alpha.to_degrees()]
    }

    pub fn joint_config(&self) -> JointConfig<T> {
        JointConfig::new(T::zero(), self.q2, self.q3)
    }

    pub fn is_finite(&self) -> bool {
        self.q2.is_finite() && self.q3.is_finite() && self.alpha.is_finite()
    }
}

/// Ordered set of calibration experiments sharing a force magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan<T> {
    poses: Vec<ExperimentPose<T>>,
    force_magnitude: T,
}

impl<T: Real> ExperimentPlan<T> {
    pub fn new(poses: Vec<ExperimentPose<T>>, force_magnitude: T) -> Result<Self> {
        if poses.is_empty() {
            return Err(CalibrationError::InvalidInput("a plan needs at least one experiment".into()));
        }
        if !(force_magnitude > T::zero()) || !force_magnitude.is_finite() {
            return Err(CalibrationError::NonPositiveForce(force_magnitude.to_f64_lossy()));
        }
        if let Some(i) = poses.iter().position(|p| !p.is_finite()) {
            return Err(CalibrationError::InvalidInput(format!("experiment {} has a non-finite angle", i + 1)));
        }
        Ok(Self { poses, force_magnitude })
    }

    pub fn poses(&self) -> &[ExperimentPose<T>] {
        &self.poses
    }

    pub fn force_magnitude(&self) -> T {
        self.force_magnitude
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// The plan executed `times` times over, pose order preserved per block.
    pub fn repeated(&self, times: usize) -> Self {
        assert!(times >= 1, "repetition count must be at least 1");
        let mut poses = Vec::with_capacity(self.poses.len() * times);
        for _ in 0..times {
            poses.extend_from_slice(&self.poses);
        }
        Self { poses, force_magnitude: self.force_magnitude }
    }

    pub fn with_pose(&self, pose: ExperimentPose<T>) -> Self {
        let mut poses = self.poses.clone();
        poses.push(pose);
        Self { poses, force_magnitude: self.force_magnitude }
    }

    pub fn map_poses(&self, f: impl Fn(&ExperimentPose<T>) -> ExperimentPose<T>) -> Self {
        Self { poses: self.poses.iter().map(f).collect(), force_magnitude: self.force_magnitude }
    }

    /// `(q, F)` pairs for the general observation path.
    pub fn general_experiments(&self) -> Vec<(JointConfig<T>, Wrench<T>)> {
        self.poses
            .iter()
            .map(|p| (p.joint_config(), force_from_angle_unchecked(self.force_magnitude, p.alpha)))
            .collect()
    }
}

/// Entries of the information matrix of a reduced plan, without the `F0²`
/// prefactor. The `(1,2)` and `(1,3)` entries vanish identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedInformation<T> {
    pub a11: T,
    pub a22: T,
    pub a33: T,
    pub a23: T,
}

impl<T: Real> ReducedInformation<T> {
    /// Closed-form sums over the experiments of a plan.
    pub fn from_plan(geom: &ManipulatorGeometry<T>, poses: &[ExperimentPose<T>]) -> Self {
        let (l2, l3) = (geom.l2, geom.l3);
        let l3_sq = l3 * l3;
        let two = T::lit(2.0);
        let mut out = Self { a11: T::zero(), a22: T::zero(), a33: T::zero(), a23: T::zero() };
        for p in poses {
            let l_c = geom.aux_lengths(p.q2, p.q3).l_c;
            let c23 = (p.q2 + p.q3).cos();
            let (sa, ca) = p.alpha.sin_cos();
            let (sa2, ca2) = (sa * sa, ca * ca);
            let lc2 = l_c * l_c;
            out.a11 = out.a11 + lc2 * lc2 * ca2;
            out.a22 = out.a22 + lc2 * (l2 * l2 + l3_sq + two * l2 * l3 * p.q3.cos()) * sa2;
            out.a33 = out.a33 + l3_sq * l3_sq * c23 * c23 * sa2;
            out.a23 = out.a23 + l3_sq * l_c * c23 * (l3 + l2 * p.q3.cos()) * sa2;
        }
        out
    }

    /// Determinant of the `(k2, k3)` block.
    pub fn block_determinant(&self) -> T {
        self.a22 * self.a33 - self.a23 * self.a23
    }

    /// Eigenvalue-based condition number of the full (block-diagonal) matrix.
    pub fn condition_number(&self) -> T {
        let half = T::lit(0.5);
        let mean = (self.a22 + self.a33) * half;
        let dev = ((self.a22 - self.a33) * half).hypot(self.a23);
        let lo = (mean - dev).min(self.a11);
        let hi = (mean + dev).max(self.a11);
        if lo <= T::zero() {
            T::infinity()
        } else {
            hi / lo
        }
    }
}

/// Information matrix `Σ AᵢᵀAᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationMatrix<T> {
    pub matrix: Mat3<T>,
    /// Present when built from a reduced plan; scaled by `1/F0²`.
    pub reduced: Option<ReducedInformation<T>>,
}

impl<T: Real> InformationMatrix<T> {
    /// General path: `Σ AᵢᵀAᵢ` over arbitrary `(q, F)` experiments.
    pub fn from_experiments(geom: &ManipulatorGeometry<T>, experiments: &[(JointConfig<T>, Wrench<T>)]) -> Self {
        let matrix = experiments
            .iter()
            .fold(Mat3::zeros(), |acc, (q, f)| acc + observation_matrix(geom, q, f).gram());
        Self { matrix, reduced: None }
    }
}

pub fn force_from_angle<T: Real>(magnitude: T, alpha: T) -> Result<Wrench<T>> {
    if !(magnitude > T::zero()) {
        return Err(CalibrationError::NonPositiveForce(magnitude.to_f64_lossy()));
    }
    Ok(force_from_angle_unchecked(magnitude, alpha))
}

fn force_from_angle_unchecked<T: Real>(magnitude: T, alpha: T) -> Wrench<T> {
    let (s, c) = alpha.sin_cos();
    Wrench([T::zero(), magnitude * c, magnitude * s])
}

/// Column `n` is `Jₙ (Jₙᵀ F)`.
pub fn observation_matrix<T: Real>(geom: &ManipulatorGeometry<T>, q: &JointConfig<T>, force: &Wrench<T>) -> Mat3<T> {
    let j = geom.jacobian(q);
    let cols: [Vec3<T>; 3] = core::array::from_fn(|n| {
        let jn = j.column(n);
        scale(&jn, dot(&jn, &force.0))
    });
    Mat3::from_columns(&cols[0], &cols[1], &cols[2])
}

/// End-effector deflection `J diag(k) Jᵀ F` (m).
pub fn deflection<T: Real>(
    geom: &ManipulatorGeometry<T>,
    q: &JointConfig<T>,
    k: &ComplianceVector<T>,
    force: &Wrench<T>,
) -> Vec3<T> {
    let j = geom.jacobian(q);
    let joint_torque = j.tr_mul_vec(&force.0);
    let joint_deflection = [k.0[0] * joint_torque[0], k.0[1] * joint_torque[1], k.0[2] * joint_torque[2]];
    j.mul_vec(&joint_deflection)
}

/// Observation matrix of a reduced experiment, written out entry by entry.
pub fn observation_matrix_reduced<T: Real>(
    geom: &ManipulatorGeometry<T>,
    pose: &ExperimentPose<T>,
    force_magnitude: T,
) -> Mat3<T> {
    let aux = geom.aux_lengths(pose.q2, pose.q3);
    let (s23, c23) = (pose.q2 + pose.q3).sin_cos();
    let (sa, ca) = pose.alpha.sin_cos();
    let l3_sq = geom.l3 * geom.l3;
    let zero = T::zero();
    Mat3::from_rows([
        [zero, -aux.l_s * aux.l_c * sa, -l3_sq * c23 * s23 * sa],
        [aux.l_c * aux.l_c * ca, zero, zero],
        [zero, aux.l_c * aux.l_c * sa, l3_sq * c23 * c23 * sa],
    ])
    .scaled(force_magnitude)
}

/// Observation matrix `A⁰` at a test pose, assembled column by column from
/// the closed-form expressions for this arm.
pub fn observation_matrix_test<T: Real>(geom: &ManipulatorGeometry<T>, test: &TestPose<T>) -> Mat3<T> {
    let q = &test.q;
    let [fx, fy, fz] = test.force.0;
    let aux = geom.aux_lengths(q.q2, q.q3);
    let (l_c, l_s) = (aux.l_c, aux.l_s);
    let (s1, c1) = q.q1.sin_cos();
    let (s23, c23) = (q.q2 + q.q3).sin_cos();
    let l3 = geom.l3;

    let w1 = l_c * l_c * (fx * s1 - fy * c1);
    let a1 = [w1 * s1, -w1 * c1, T::zero()];

    let w2 = fx * l_s * c1 + fy * l_s * s1 - fz * l_c;
    let a2 = scale(&[l_s * c1, l_s * s1, -l_c], w2);

    let w3 = fx * l3 * s23 * c1 + fy * l3 * s23 * s1 - fz * l3 * c23;
    let a3 = scale(&[l3 * s23 * c1, l3 * s23 * s1, -l3 * c23], w3);

    Mat3::from_columns(&a1, &a2, &a3)
}

/// Information matrix of a reduced plan, with the closed-form entries cached.
pub fn information_matrix<T: Real>(geom: &ManipulatorGeometry<T>, plan: &ExperimentPlan<T>) -> InformationMatrix<T> {
    let f0 = plan.force_magnitude();
    let matrix = plan
        .poses()
        .iter()
        .fold(Mat3::zeros(), |acc, p| acc + observation_matrix_reduced(geom, p, f0).gram());
    InformationMatrix { matrix, reduced: Some(ReducedInformation::from_plan(geom, plan.poses())) }
}

//! Geometric model of the 3-link spatial anthropomorphic arm.
//!
//! Joint 1 rotates about the vertical base axis, joints 2 and 3 are the
//! shoulder and elbow pitch joints. Only the translational part of the
//! Jacobian is modelled; end-effector orientation does not enter the
//! elastostatic observation model.

use crate::error::{CalibrationError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::{wrap_angle, Real};
use crate::elasto::ComplianceVector;

/// Link lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulatorGeometry<T> {
    pub l1: T,
    pub l2: T,
    pub l3: T,
}

/// Joint angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointConfig<T> {
    pub q1: T,
    pub q2: T,
    pub q3: T,
}

/// Horizontal reach `l_c` and vertical reach `l_s` of the arm in its own
/// vertical plane, measured from the shoulder joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxLengths<T> {
    pub l_c: T,
    pub l_s: T,
}

impl<T: Real> JointConfig<T> {
    pub fn new(q1: T, q2: T, q3: T) -> Self {
        Self { q1, q2, q3 }
    }

    pub fn from_degrees(q1: T, q2: T, q3: T) -> Self {
        Self::new(q1.to_radians(), q2.to_radians(), q3.to_radians())
    }

    pub fn is_finite(&self) -> bool {
        self.q1.is_finite() && self.q2.is_finite() && self.q3.is_finite()
    }

    /// Same configuration with every angle wrapped into `(-π, π]`.
    pub fn normalized(&self) -> Self {
        Self::new(wrap_angle(self.q1), wrap_angle(self.q2), wrap_angle(self.q3))
    }
}

impl<T: Real> ManipulatorGeometry<T> {
    pub fn new(l1: T, l2: T, l3: T) -> Result<Self> {
        let finite = l1.is_finite() && l2.is_finite() && l3.is_finite();
        if !finite || l1 < T::zero() || l2 <= T::zero() || l3 <= T::zero() {
            return Err(CalibrationError::InvalidInput(format!(
                "link lengths must satisfy l1 >= 0, l2 > 0, l3 > 0 (got {l1}, {l2}, {l3})"
            )));
        }
        Ok(Self { l1, l2, l3 })
    }

    pub fn aux_lengths(&self, q2: T, q3: T) -> AuxLengths<T> {
        let q23 = q2 + q3;
        AuxLengths {
            l_c: self.l2 * q2.cos() + self.l3 * q23.cos(),
            l_s: self.l2 * q2.sin() + self.l3 * q23.sin(),
        }
    }

    pub fn forward_kinematics(&self, q: &JointConfig<T>) -> Vec3<T> {
        let aux = self.aux_lengths(q.q2, q.q3);
        [aux.l_c * q.q1.cos(), aux.l_c * q.q1.sin(), self.l1 + aux.l_s]
    }

    /// Translational Jacobian `∂p/∂q` (m/rad).
    pub fn jacobian(&self, q: &JointConfig<T>) -> Mat3<T> {
        let aux = self.aux_lengths(q.q2, q.q3);
        let (s1, c1) = q.q1.sin_cos();
        let (s23, c23) = (q.q2 + q.q3).sin_cos();
        let l3 = self.l3;
        Mat3::from_rows([
            [-aux.l_c * s1, -aux.l_s * c1, -l3 * s23 * c1],
            [aux.l_c * c1, -aux.l_s * s1, -l3 * s23 * s1],
            [T::zero(), aux.l_c, l3 * c23],
        ])
    }

    /// Jacobian, rejecting configurations with `|det J|` below
    /// [`singularity_tolerance`](Self::singularity_tolerance).
    pub fn jacobian_checked(&self, q: &JointConfig<T>) -> Result<Mat3<T>> {
        let j = self.jacobian(q);
        let det = j.determinant();
        let tolerance = self.singularity_tolerance();
        if !(det.abs() >= tolerance) {
            return Err(CalibrationError::SingularConfiguration {
                det: det.abs().to_f64_lossy(),
                tolerance: tolerance.to_f64_lossy(),
            });
        }
        Ok(j)
    }

    /// Singularity threshold on `|det J|`, scaled by the arm size.
    pub fn singularity_tolerance(&self) -> T {
        T::lit(1e-9) * self.l2 * self.l3 * (self.l2 + self.l3)
    }

    /// Cartesian stiffness `Kc = J⁻ᵀ diag(1/k) J⁻¹` (N/m).
    pub fn cartesian_stiffness(&self, q: &JointConfig<T>, k: &ComplianceVector<T>) -> Result<Mat3<T>> {
        if k.0.iter().any(|&c| !(c > T::zero())) {
            return Err(CalibrationError::InvalidInput(
                "joint compliances must be positive to form a stiffness matrix".into(),
            ));
        }
        let j = self.jacobian_checked(q)?;
        let j_inv = j.inverse().ok_or(CalibrationError::SingularConfiguration {
            det: 0.0,
            tolerance: self.singularity_tolerance().to_f64_lossy(),
        })?;
        let joint_stiffness = Mat3::diagonal(&[T::one() / k.0[0], T::one() / k.0[1], T::one() / k.0[2]]);
        Ok((j_inv.transpose() * joint_stiffness * j_inv).symmetrized())
    }
}

//! Least-squares compliance identification and its analytic covariance.

use crate::elasto::{information_matrix, observation_matrix, ComplianceVector, ExperimentPlan, Wrench};
use crate::error::{CalibrationError, Result};
use crate::kinematics::{JointConfig, ManipulatorGeometry};
use crate::linalg::{least_squares, Mat3, SymmetricEigen, Vec3};
use crate::scalar::Real;

/// Information matrices with a larger eigenvalue ratio are treated as singular.
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

/// Null-direction components at least this large name a joint as unobservable.
const UNOBSERVABLE_COMPONENT: f64 = 0.05;

/// One measured experiment: configuration, applied force, measured deflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationObservation<T> {
    pub q: JointConfig<T>,
    pub force: Wrench<T>,
    pub deflection: Vec3<T>,
}

/// I.i.d. zero-mean measurement noise with standard deviation `sigma` (m)
/// on each Cartesian coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T> {
    pub sigma: T,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(CalibrationError::InvalidInput(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { sigma })
    }
}

/// Covariance of the compliance estimate, (rad/(N·m))².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix<T>(pub Mat3<T>);

impl<T: Real> CovarianceMatrix<T> {
    /// Per-joint standard deviations `δk_j = √C[j,j]`.
    pub fn std_devs(&self) -> [T; 3] {
        core::array::from_fn(|j| self.0[(j, j)].max(T::zero()).sqrt())
    }
}

/// Least-squares estimate. Negative entries are kept as-is: under noise the
/// unbiased estimator may legitimately produce them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplianceEstimate<T> {
    pub compliances: ComplianceVector<T>,
    pub has_negative: bool,
}

/// Fails with [`CalibrationError::UnidentifiablePlan`] when the information
/// matrix is singular or too ill-conditioned to invert reliably.
pub fn check_identifiable<T: Real>(info: &Mat3<T>) -> Result<SymmetricEigen<T>> {
    let eigen = info.symmetric_eigen();
    let condition = eigen.condition_number();
    if !condition.is_finite() || condition > T::lit(MAX_CONDITION_NUMBER) || !info.is_finite() {
        let v = eigen.vectors[0];
        let null_direction = [v[0].to_f64_lossy(), v[1].to_f64_lossy(), v[2].to_f64_lossy()];
        let unobservable = (0..3).filter(|&j| null_direction[j].abs() >= UNOBSERVABLE_COMPONENT).collect();
        return Err(CalibrationError::UnidentifiablePlan {
            condition: condition.to_f64_lossy(),
            null_direction,
            unobservable,
        });
    }
    Ok(eigen)
}

/// `k̂ = (Σ AᵢᵀAᵢ)⁻¹ Σ Aᵢᵀ Δpᵢ`, computed by orthogonal decomposition of the
/// stacked regressor.
pub fn estimate_compliances<T: Real>(
    geom: &ManipulatorGeometry<T>,
    observations: &[CalibrationObservation<T>],
) -> Result<ComplianceEstimate<T>> {
    if observations.is_empty() {
        return Err(CalibrationError::InvalidInput("at least one observation is required".into()));
    }
    let mut info = Mat3::zeros();
    let mut regressor = Vec::with_capacity(3 * observations.len());
    let mut rhs = Vec::with_capacity(3 * observations.len());
    for obs in observations {
        let a = observation_matrix(geom, &obs.q, &obs.force);
        info = info + a.gram();
        for i in 0..3 {
            regressor.push(a.row(i));
            rhs.push(obs.deflection[i]);
        }
    }
    check_identifiable(&info)?;
    let k = least_squares(&regressor, &rhs).ok_or_else(|| {
        // QR found a vanishing pivot the eigenvalue test let through.
        let e = info.symmetric_eigen();
        let v = e.vectors[0];
        CalibrationError::UnidentifiablePlan {
            condition: f64::INFINITY,
            null_direction: [v[0].to_f64_lossy(), v[1].to_f64_lossy(), v[2].to_f64_lossy()],
            unobservable: (0..3).filter(|&j| v[j].to_f64_lossy().abs() >= UNOBSERVABLE_COMPONENT).collect(),
        }
    })?;
    let compliances = ComplianceVector(k);
    Ok(ComplianceEstimate { has_negative: k.iter().any(|&x| x < T::zero()), compliances })
}

/// `σ² (Σ AᵢᵀAᵢ)⁻¹` for a reduced plan.
pub fn covariance<T: Real>(
    geom: &ManipulatorGeometry<T>,
    plan: &ExperimentPlan<T>,
    noise: &NoiseModel<T>,
) -> Result<CovarianceMatrix<T>> {
    covariance_from_information(&information_matrix(geom, plan).matrix, noise.sigma)
}

pub fn covariance_from_information<T: Real>(info: &Mat3<T>, sigma: T) -> Result<CovarianceMatrix<T>> {
    check_identifiable(info)?;
    let inv = info.spd_inverse().ok_or(CalibrationError::UnidentifiablePlan {
        condition: f64::INFINITY,
        null_direction: [0.0; 3],
        unobservable: Vec::new(),
    })?;
    Ok(CovarianceMatrix(inv.scaled(sigma * sigma)))
}

/// Block-diagonal closed form of the covariance of a reduced plan, from the
/// information sums `a11, a22, a33, a23` (without the `F0²` factor).
pub fn covariance_closed_form<T: Real>(a11: T, a22: T, a33: T, a23: T, sigma: T, force_magnitude: T) -> Result<CovarianceMatrix<T>> {
    let det = a22 * a33 - a23 * a23;
    let largest = a11.max(a22).max(a33);
    let tol = T::lit(1.0 / MAX_CONDITION_NUMBER);
    if !(a11 > tol * largest) {
        return Err(CalibrationError::UnidentifiablePlan {
            condition: f64::INFINITY,
            null_direction: [1.0, 0.0, 0.0],
            unobservable: vec![0],
        });
    }
    if !(det > tol * a22 * a33) || !(a22 > T::zero()) || !(a33 > T::zero()) {
        let null = if a22 == T::zero() && a33 == T::zero() {
            vec![1, 2]
        } else {
            // Null vector of [[a22, a23], [a23, a33]].
            let (u, w) = if a22.abs() >= a33.abs() { (-a23, a22) } else { (a33, -a23) };
            let n = u.hypot(w);
            let comp = [T::zero(), u / n, w / n];
            (1..3).filter(|&j| comp[j].abs().to_f64_lossy() >= UNOBSERVABLE_COMPONENT).collect()
        };
        return Err(CalibrationError::UnidentifiablePlan {
            condition: f64::INFINITY,
            null_direction: [0.0; 3],
            unobservable: null,
        });
    }
    let factor = sigma * sigma / (force_magnitude * force_magnitude);
    let z = T::zero();
    Ok(CovarianceMatrix(
        Mat3::from_rows([
            [T::one() / a11, z, z],
            [z, a33 / det, -a23 / det],
            [z, -a23 / det, a22 / det],
        ])
        .scaled(factor),
    ))
}

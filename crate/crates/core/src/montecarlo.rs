//! Virtual calibration bench.
//!
//! Synthesizes noisy deflection measurements for a plan, identifies the
//! compliances with the least-squares estimator, and compares the empirical
//! spread of the estimates with the analytic covariance and test-pose
//! criterion. Noise is Gaussian, i.i.d. per Cartesian coordinate.
//!
//! Trial `t` draws from ChaCha stream `t` of the configured seed and the
//! per-trial results are reduced in trial order with compensated sums, so the
//! statistics are bit-identical for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::criterion::{test_pose_criterion, TestPose};
use crate::elasto::{observation_matrix, ComplianceVector, ExperimentPlan};
use crate::error::{CalibrationError, Result};
use crate::identification::{covariance, estimate_compliances, CalibrationObservation, CovarianceMatrix, NoiseModel};
use crate::kinematics::ManipulatorGeometry;
use crate::linalg::{norm_squared, Mat3};
use crate::scalar::{CompensatedSum, Real};

pub const DEFAULT_K_TRUE: [f64; 3] = [1.0e-6, 2.0e-6, 3.0e-6];

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig<T> {
    pub plan: ExperimentPlan<T>,
    pub test: TestPose<T>,
    pub k_true: ComplianceVector<T>,
    pub sigma: T,
    pub trials: usize,
    pub seed: u64,
}

impl<T: Real> TrialConfig<T> {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CalibrationError::InvalidInput("at least one trial is required".into()));
        }
        NoiseModel::new(self.sigma)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats<T> {
    pub trials: usize,
    pub mean_k: ComplianceVector<T>,
    /// Standard error of each component of `mean_k`.
    pub mean_k_std_error: [T; 3],
    pub empirical_cov: CovarianceMatrix<T>,
    /// Standard error of each entry of `empirical_cov`.
    pub cov_std_error: Mat3<T>,
    pub analytic_cov: CovarianceMatrix<T>,
    /// Mean of `|δp|²` at the test pose.
    pub empirical_ot: T,
    pub ot_std_error: T,
    pub analytic_ot: T,
    /// Trials whose estimate had at least one negative compliance.
    pub negative_estimates: usize,
}

/// `Δpᵢ = Aᵢ k_true + εᵢ` for every experiment of the plan, with `εᵢ` drawn
/// coordinate-wise from `N(0, σ²)`.
pub fn simulate_observations<T, R>(
    geom: &ManipulatorGeometry<T>,
    plan: &ExperimentPlan<T>,
    k_true: &ComplianceVector<T>,
    sigma: T,
    rng: &mut R,
) -> Vec<CalibrationObservation<T>>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    plan.general_experiments()
        .into_iter()
        .map(|(q, force)| {
            let exact = observation_matrix(geom, &q, &force).mul_vec(&k_true.0);
            let deflection = exact.map(|d| {
                let z: T = StandardNormal.sample(rng);
                d + sigma * z
            });
            CalibrationObservation { q, force, deflection }
        })
        .collect()
}

/// RNG stream used by trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-trial compliance error, squared test-pose error and negativity flag.
type Sample<T> = ([T; 3], T, bool);

pub fn run_trials<T>(geom: &ManipulatorGeometry<T>, cfg: &TrialConfig<T>) -> Result<EmpiricalStats<T>>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    cfg.validate()?;
    let noise = NoiseModel::new(cfg.sigma)?;
    // Unit-σ covariance keeps the identifiability check meaningful at σ = 0.
    covariance(geom, &cfg.plan, &NoiseModel { sigma: T::one() })?;
    let analytic_cov = covariance(geom, &cfg.plan, &noise)?;
    let analytic_ot = test_pose_criterion(geom, &cfg.plan, &cfg.test, cfg.sigma)?;
    let a0 = observation_matrix(geom, &cfg.test.q, &cfg.test.force);

    let per_trial: Vec<Result<Sample<T>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t as u64);
            let obs = simulate_observations(geom, &cfg.plan, &cfg.k_true, cfg.sigma, &mut rng);
            let est = estimate_compliances(geom, &obs)?;
            let dk: [T; 3] = core::array::from_fn(|j| est.compliances.0[j] - cfg.k_true.0[j]);
            let dp = a0.mul_vec(&dk);
            Ok((dk, norm_squared(&dp), est.has_negative))
        })
        .collect();
    let samples = per_trial.into_iter().collect::<Result<Vec<_>>>()?;

    let n = T::from_count(samples.len());
    let mean_of = |f: &dyn Fn(&Sample<T>) -> T| {
        let mut s = CompensatedSum::new();
        samples.iter().for_each(|x| s.add(f(x)));
        s.value() / n
    };
    let mean_dk: [T; 3] = core::array::from_fn(|j| mean_of(&|x| x.0[j]));
    let empirical_ot = mean_of(&|x| x.1);

    // Second pass: centered products for the covariance and its standard error.
    let denom = if samples.len() > 1 { T::from_count(samples.len() - 1) } else { T::one() };
    let mut cov = Mat3::zeros();
    let mut cov_se = Mat3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let prod = |x: &Sample<T>| (x.0[i] - mean_dk[i]) * (x.0[j] - mean_dk[j]);
            let mut s = CompensatedSum::new();
            samples.iter().for_each(|x| s.add(prod(x)));
            let c = s.value() / denom;
            let mean_prod = s.value() / n;
            let mut v = CompensatedSum::new();
            samples.iter().for_each(|x| {
                let d = prod(x) - mean_prod;
                v.add(d * d);
            });
            let se = (v.value() / denom / n).sqrt();
            cov[(i, j)] = c;
            cov[(j, i)] = c;
            cov_se[(i, j)] = se;
            cov_se[(j, i)] = se;
        }
    }
    let mean_k_std_error = core::array::from_fn(|j| (cov[(j, j)] / n).sqrt());

    let mut ot_var = CompensatedSum::new();
    samples.iter().for_each(|x| {
        let d = x.1 - empirical_ot;
        ot_var.add(d * d);
    });
    let ot_std_error = (ot_var.value() / denom / n).sqrt();

    Ok(EmpiricalStats {
        trials: samples.len(),
        mean_k: ComplianceVector(core::array::from_fn(|j| cfg.k_true.0[j] + mean_dk[j])),
        mean_k_std_error,
        empirical_cov: CovarianceMatrix(cov),
        cov_std_error: cov_se,
        analytic_cov,
        empirical_ot,
        ot_std_error,
        analytic_ot,
        negative_estimates: samples.iter().filter(|x| x.2).count(),
    })
}

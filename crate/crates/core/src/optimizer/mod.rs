//! Search for calibration plans minimizing the test-pose criterion.
//!
//! Each of the `m` experiments contributes three angles `(q2, q3, α)`, so the
//! search runs in `3m` dimensions over a smooth but multimodal landscape.
//! Starts are drawn uniformly within the bounds from per-start ChaCha
//! streams, refined by simplex descent, and reduced to the best value with
//! ties going to the lowest start index. The outcome depends only on the
//! inputs and the seed, never on how many worker threads ran the starts.

pub mod nelder_mead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::criterion::{criterion_closed_form, d_coefficients, test_pose_criterion, DCoefficients, TestPose};
use crate::elasto::{observation_matrix, ExperimentPlan, ExperimentPose, ReducedInformation};
use crate::error::{CalibrationError, Result};
use crate::identification::MAX_CONDITION_NUMBER;
use crate::kinematics::ManipulatorGeometry;
use crate::scalar::{wrap_angle, Real};

use nelder_mead::{minimize, SimplexOptions};

pub const DEFAULT_SEED: u64 = 20_120_917;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions<T> {
    /// Random starts drawn uniformly within `bounds`.
    pub starts: usize,
    /// Simplex iterations per start.
    pub max_iterations: usize,
    /// Relative objective spread at which a simplex counts as converged.
    pub objective_tolerance: T,
    pub seed: u64,
    /// Interval applied to every angle, radians.
    pub bounds: (T, T),
    /// Force magnitude of the calibration experiments (N).
    pub force_magnitude: T,
    /// Extra starting plans, evaluated before the random starts.
    pub warm_starts: Vec<Vec<ExperimentPose<T>>>,
}

impl<T: Real> Default for OptimizerOptions<T> {
    fn default() -> Self {
        Self {
            starts: 64,
            max_iterations: 2000,
            objective_tolerance: T::lit(1e-10),
            seed: DEFAULT_SEED,
            bounds: (-T::PI(), T::PI()),
            force_magnitude: T::one(),
            warm_starts: Vec::new(),
        }
    }
}

impl<T: Real> OptimizerOptions<T> {
    /// Defaults with the start count scaled to the problem size: 64 starts
    /// up to two experiments, 256 beyond.
    pub fn for_experiments(m: usize) -> Self {
        Self { starts: default_starts(m), ..Self::default() }
    }

    fn validate(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(CalibrationError::InvalidInput("the number of experiments must be at least 1".into()));
        }
        if self.starts + self.warm_starts.len() == 0 {
            return Err(CalibrationError::InvalidInput("at least one optimizer start is required".into()));
        }
        if !(self.objective_tolerance > T::zero()) {
            return Err(CalibrationError::InvalidInput("objective tolerance must be positive".into()));
        }
        let (lo, hi) = self.bounds;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(CalibrationError::InvalidInput("angle bounds must be a finite, non-empty interval".into()));
        }
        if !(self.force_magnitude > T::zero()) {
            return Err(CalibrationError::NonPositiveForce(self.force_magnitude.to_f64_lossy()));
        }
        if let Some(w) = self.warm_starts.iter().find(|w| w.len() != m) {
            return Err(CalibrationError::InvalidInput(format!(
                "warm start has {} experiments, expected {m}",
                w.len()
            )));
        }
        Ok(())
    }

    fn is_periodic(&self) -> bool {
        self.bounds.1 - self.bounds.0 >= T::TAU() * (T::one() - T::lit(1e-12))
    }
}

pub fn default_starts(m: usize) -> usize {
    if m <= 2 {
        64
    } else {
        256
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult<T> {
    /// Best plan found, each pose canonicalized.
    pub plan: ExperimentPlan<T>,
    /// Criterion of `plan` re-evaluated through the general path, units of σ².
    pub criterion_value: T,
    pub starts_converged: usize,
    pub best_start_index: usize,
}

/// Representative of a pose's symmetry class: `α` folded into
/// `(-π/2, π/2]` using the `α ~ α + π` equivalence, joint angles wrapped
/// into `(-π, π]`.
pub fn canonicalize_pose<T: Real>(pose: &ExperimentPose<T>) -> ExperimentPose<T> {
    let half_pi = T::FRAC_PI_2();
    let mut alpha = wrap_angle(pose.alpha);
    if alpha > half_pi {
        alpha = alpha - T::PI();
    } else if alpha <= -half_pi {
        alpha = alpha + T::PI();
    }
    ExperimentPose::new(wrap_angle(pose.q2), wrap_angle(pose.q3), alpha)
}

/// Fast objective used during the search: closed-form criterion in units of
/// σ², `+∞` for ill-conditioned plans.
struct Objective<'a, T> {
    geom: &'a ManipulatorGeometry<T>,
    d: DCoefficients<T>,
    scale: T,
    bounds: Option<(T, T)>,
}

impl<T: Real> Objective<'_, T> {
    fn poses(&self, x: &[T]) -> Vec<ExperimentPose<T>> {
        let clamp = |v: T| match self.bounds {
            Some((lo, hi)) => v.max(lo).min(hi),
            None => v,
        };
        x.chunks_exact(3).map(|c| ExperimentPose::new(clamp(c[0]), clamp(c[1]), clamp(c[2]))).collect()
    }

    fn value(&self, x: &[T]) -> T {
        let info = ReducedInformation::from_plan(self.geom, &self.poses(x));
        if !(info.condition_number() <= T::lit(MAX_CONDITION_NUMBER)) {
            return T::infinity();
        }
        match criterion_closed_form(&self.d, info.a11, info.a22, info.a33, info.a23) {
            Ok(v) if v.is_finite() && v > T::zero() => v * self.scale,
            _ => T::infinity(),
        }
    }
}

struct StartOutcome<T> {
    x: Vec<T>,
    f: T,
    converged: bool,
}

/// Multistart minimization of the test-pose criterion over `m` reduced
/// calibration experiments, with σ = 1.
pub fn optimize_plan<T: Real>(
    geom: &ManipulatorGeometry<T>,
    test: &TestPose<T>,
    m: usize,
    opts: &OptimizerOptions<T>,
) -> Result<OptimizationResult<T>> {
    opts.validate(m)?;

    let a0 = observation_matrix(geom, &test.q, &test.force);
    let condition = a0.gram().symmetric_eigen().condition_number();
    if !(condition <= T::lit(MAX_CONDITION_NUMBER)) {
        return Err(CalibrationError::DegenerateTestPose { condition: condition.to_f64_lossy() });
    }

    let objective = Objective {
        geom,
        d: d_coefficients(geom, test),
        scale: T::one() / (opts.force_magnitude * opts.force_magnitude),
        bounds: if opts.is_periodic() { None } else { Some(opts.bounds) },
    };
    let simplex = SimplexOptions {
        max_iterations: opts.max_iterations,
        f_tolerance: opts.objective_tolerance,
        x_tolerance: T::lit(1e-7),
        initial_step: (opts.bounds.1 - opts.bounds.0).min(T::TAU()) / T::lit(10.0),
        restarts: 3,
    };

    let warm = opts.warm_starts.len();
    let total = warm + opts.starts;
    let outcomes: Vec<StartOutcome<T>> = (0..total)
        .into_par_iter()
        .map(|index| {
            let x0: Vec<T> = if index < warm {
                opts.warm_starts[index].iter().flat_map(|p| [p.q2, p.q3, p.alpha]).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream((index - warm) as u64);
                let (lo, hi) = opts.bounds;
                (0..3 * m).map(|_| lo + (hi - lo) * T::lit(rng.random::<f64>())).collect()
            };
            let r = minimize(|x: &[T]| objective.value(x), &x0, &simplex);
            StartOutcome { converged: r.converged && r.f.is_finite(), x: r.x, f: r.f }
        })
        .collect();

    let mut best: Option<(usize, &StartOutcome<T>)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if !o.f.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| o.f < b.f) {
            best = Some((i, o));
        }
    }
    let (best_start_index, best) = best.ok_or(CalibrationError::NoConvergence)?;

    let poses = objective.poses(&best.x).iter().map(canonicalize_pose).collect();
    let plan = ExperimentPlan::new(poses, opts.force_magnitude)?;
    let criterion_value = test_pose_criterion(geom, &plan, test, T::one())?;
    Ok(OptimizationResult {
        plan,
        criterion_value,
        starts_converged: outcomes.iter().filter(|o| o.converged).count(),
        best_start_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasto::Wrench;
    use crate::kinematics::JointConfig;

    fn geom() -> ManipulatorGeometry<f64> {
        ManipulatorGeometry::new(0.75, 1.25, 1.10).unwrap()
    }

    fn test_pose() -> TestPose<f64> {
        let n = (0.29f64.powi(2) + 0.96f64.powi(2)).sqrt();
        TestPose::new(JointConfig::from_degrees(0.0, 60.0, -45.0), Wrench::new([0.0, 0.29 / n, -0.96 / n])).unwrap()
    }

    #[test]
    fn canonicalization_examples() {
        let p = canonicalize_pose(&ExperimentPose::<f64>::from_degrees(10.0, -20.0, 200.0));
        assert!((p.alpha.to_degrees() - 20.0).abs() < 1e-9);
        let p = canonicalize_pose(&ExperimentPose::<f64>::from_degrees(43.2, -57.3, 22.9));
        assert!((p.alpha.to_degrees() - 22.9).abs() < 1e-12);
        assert!((p.q2.to_degrees() - 43.2).abs() < 1e-12);
        let p = canonicalize_pose(&ExperimentPose::<f64>::from_degrees(370.0, 0.0, 0.0));
        assert!((p.q2.to_degrees() - 10.0).abs() < 1e-9);
        let p = canonicalize_pose(&ExperimentPose::<f64>::from_degrees(0.0, 0.0, -90.0));
        assert!((p.alpha.to_degrees() - 90.0).abs() < 1e-9);
    }

    #[test]
    fn frozen_start_at_test_pose_returns_bound() {
        let test = test_pose();
        let (pose, f0) = test.as_experiment().unwrap();
        let opts = OptimizerOptions {
            starts: 0,
            max_iterations: 0,
            force_magnitude: f0,
            warm_starts: vec![vec![pose]],
            ..OptimizerOptions::default()
        };
        let r = optimize_plan(&geom(), &test, 1, &opts).unwrap();
        assert!((r.criterion_value - 3.0).abs() < 1e-10);
        assert_eq!(r.best_start_index, 0);
    }

    #[test]
    fn rejects_bad_requests() {
        let g = geom();
        let t = test_pose();
        assert!(matches!(optimize_plan(&g, &t, 0, &OptimizerOptions::default()), Err(CalibrationError::InvalidInput(_))));
        let none = OptimizerOptions { starts: 0, ..OptimizerOptions::default() };
        assert!(optimize_plan(&g, &t, 1, &none).is_err());
        // Fully stretched, radially loaded arm: A⁰ has rank one.
        let degenerate = TestPose::new(JointConfig::new(0.0, 0.0, 0.0), Wrench::new([1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(
            optimize_plan(&g, &degenerate, 1, &OptimizerOptions::default()),
            Err(CalibrationError::DegenerateTestPose { .. })
        ));
    }

    #[test]
    fn single_experiment_optimum_and_canonical_form() {
        let g = geom();
        let t = test_pose();
        let opts = OptimizerOptions { starts: 16, ..OptimizerOptions::for_experiments(1) };
        let r = optimize_plan(&g, &t, 1, &opts).unwrap();
        assert!(r.criterion_value < 1.93, "{}", r.criterion_value);
        assert!(r.criterion_value <= 3.0);
        let p = r.plan.poses()[0];
        assert_eq!(canonicalize_pose(&p), p);
        assert!(r.starts_converged >= 1);
    }

    #[test]
    fn bounded_search_respects_bounds() {
        let g = geom();
        let t = test_pose();
        let opts = OptimizerOptions { starts: 8, bounds: (-1.0, 1.0), ..OptimizerOptions::default() };
        let r = optimize_plan(&g, &t, 1, &opts).unwrap();
        let p = r.plan.poses()[0];
        for v in [p.q2, p.q3] {
            assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn warm_start_with_extra_pose_is_monotone() {
        let g = geom();
        let t = test_pose();
        let one = optimize_plan(&g, &t, 1, &OptimizerOptions { starts: 16, ..OptimizerOptions::default() }).unwrap();
        let mut warm = one.plan.poses().to_vec();
        warm.push(ExperimentPose::new(0.3, 0.3, 0.3));
        let opts = OptimizerOptions { starts: 8, warm_starts: vec![warm], ..OptimizerOptions::default() };
        let two = optimize_plan(&g, &t, 2, &opts).unwrap();
        assert!(two.criterion_value <= one.criterion_value + 1e-9);
    }
}

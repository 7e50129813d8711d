//! Reference case: a 3-link arm with `l = (0.75, 1.25, 1.10)` m,
//! test configuration `q⁰ = (0°, 60°, −45°)` loaded along `(0, 0.29, −0.96)`,
//! and the eleven calibration plans evaluated against it.
//!
//! The printed force angles of the optimized plans are measured from the +z
//! axis towards +y, i.e. the force is `F0·(0, sin α, cos α)`; they are
//! converted to this crate's convention (from +y towards +z) by
//! [`printed_pose`]. The test-configuration rows use the test pose itself.

use crate::criterion::TestPose;
use crate::elasto::{ExperimentPlan, ExperimentPose, Wrench};
use crate::kinematics::{JointConfig, ManipulatorGeometry};
use crate::scalar::Real;

pub const LINK_LENGTHS: [f64; 3] = [0.75, 1.25, 1.10];
pub const TEST_CONFIG_DEG: [f64; 3] = [0.0, 60.0, -45.0];
pub const TEST_FORCE_DIRECTION: [f64; 3] = [0.0, 0.29, -0.96];

/// How a reference plan is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    /// `m` measurements at the test configuration under the test loading.
    RepeatedTest(usize),
    /// `m` repetitions of the printed single-experiment optimum.
    RepeatedOpt1(usize),
    /// The printed optimum for `m` experiments.
    Optimal(usize),
}

impl PlanKind {
    pub fn experiments(&self) -> usize {
        match *self {
            PlanKind::RepeatedTest(m) | PlanKind::RepeatedOpt1(m) | PlanKind::Optimal(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub label: &'static str,
    pub kind: PlanKind,
    /// Criterion value in units of σ².
    pub performance: f64,
    /// `(q2, q3, α)` in degrees as printed.
    pub configurations: &'static [[f64; 3]],
    /// Identification accuracy in units of σ.
    pub delta_k: [f64; 3],
}

const TEST_PRINTED: &[[f64; 3]] = &[[60.0, 45.0, -73.3]];
const OPT1: &[[f64; 3]] = &[[43.2, -57.3, 22.9]];
const OPT2: &[[f64; 3]] = &[[5.5, -6.8, 26.3], [93.1, -101.2, 3.3]];
const OPT3: &[[f64; 3]] = &[[173.3, 19.3, 0.5], [-7.1, 14.7, -24.9], [-49.3, -125.0, 2.1]];
const OPT4: &[[f64; 3]] = &[[28.3, -39.1, 9.7], [4.6, -12.6, 22.4], [-3.4, -4.8, -37.4], [146.8, -150.6, -5.2]];

pub const ROWS: [ReferenceRow; 11] = [
    ReferenceRow { label: "Test Conf.", kind: PlanKind::RepeatedTest(1), performance: 3.00, configurations: TEST_PRINTED, delta_k: [1.22, 0.70, 2.19] },
    ReferenceRow { label: "Opt.1 Conf.", kind: PlanKind::Optimal(1), performance: 1.92, configurations: OPT1, delta_k: [0.66, 0.52, 1.81] },
    ReferenceRow { label: "2xTest Conf.", kind: PlanKind::RepeatedTest(2), performance: 1.50, configurations: TEST_PRINTED, delta_k: [0.86, 0.49, 1.55] },
    ReferenceRow { label: "2xOpt.1 Conf.", kind: PlanKind::RepeatedOpt1(2), performance: 0.96, configurations: OPT1, delta_k: [0.47, 0.37, 1.28] },
    ReferenceRow { label: "Opt.2 Conf.", kind: PlanKind::Optimal(2), performance: 0.80, configurations: OPT2, delta_k: [0.41, 0.30, 0.96] },
    ReferenceRow { label: "3xTest Conf.", kind: PlanKind::RepeatedTest(3), performance: 1.00, configurations: TEST_PRINTED, delta_k: [0.71, 0.40, 1.27] },
    ReferenceRow { label: "3xOpt.1 Conf.", kind: PlanKind::RepeatedOpt1(3), performance: 0.64, configurations: OPT1, delta_k: [0.38, 0.30, 1.05] },
    ReferenceRow { label: "Opt.3 Conf.", kind: PlanKind::Optimal(3), performance: 0.51, configurations: OPT3, delta_k: [0.32, 0.23, 0.83] },
    ReferenceRow { label: "4xTest Conf.", kind: PlanKind::RepeatedTest(4), performance: 0.75, configurations: TEST_PRINTED, delta_k: [0.61, 0.35, 1.10] },
    ReferenceRow { label: "4xOpt.1 Conf.", kind: PlanKind::RepeatedOpt1(4), performance: 0.48, configurations: OPT1, delta_k: [0.33, 0.26, 0.91] },
    ReferenceRow { label: "Opt.4 Conf.", kind: PlanKind::Optimal(4), performance: 0.39, configurations: OPT4, delta_k: [0.25, 0.21, 0.78] },
];

pub fn row(kind: PlanKind) -> Option<&'static ReferenceRow> {
    ROWS.iter().find(|r| r.kind == kind)
}

pub fn geometry<T: Real>() -> ManipulatorGeometry<T> {
    let [l1, l2, l3] = LINK_LENGTHS;
    ManipulatorGeometry::new(T::lit(l1), T::lit(l2), T::lit(l3)).expect("reference geometry is valid")
}

/// Reference test pose with a unit force along the reference direction.
pub fn test_pose<T: Real>() -> TestPose<T> {
    let [q1, q2, q3] = TEST_CONFIG_DEG;
    let norm = TEST_FORCE_DIRECTION.iter().map(|f| f * f).sum::<f64>().sqrt();
    let force = TEST_FORCE_DIRECTION.map(|f| T::lit(f / norm));
    TestPose::new(JointConfig::from_degrees(T::lit(q1), T::lit(q2), T::lit(q3)), Wrench::new(force))
        .expect("reference test pose is valid")
}

/// Converts a printed `(q2, q3, α)` row in degrees, with `α` measured from
/// the +z axis, to a pose in this crate's convention.
pub fn printed_pose<T: Real>(deg: [f64; 3]) -> ExperimentPose<T> {
    ExperimentPose::from_degrees(T::lit(deg[0]), T::lit(deg[1]), T::lit(90.0 - deg[2]))
}

/// The calibration plan behind a reference row, unit force magnitude.
pub fn plan<T: Real>(kind: PlanKind) -> ExperimentPlan<T> {
    let test = test_pose::<T>();
    match kind {
        PlanKind::RepeatedTest(m) => {
            let (pose, f0) = test.as_experiment().expect("reference force lies in the arm plane");
            ExperimentPlan::new(vec![pose], f0).expect("valid plan").repeated(m)
        }
        PlanKind::RepeatedOpt1(m) => ExperimentPlan::new(vec![printed_pose(OPT1[0])], T::one()).expect("valid plan").repeated(m),
        PlanKind::Optimal(_) => {
            let printed = row(kind).expect("optimal rows exist for m = 1..4").configurations;
            ExperimentPlan::new(printed.iter().map(|&c| printed_pose(c)).collect(), T::one()).expect("valid plan")
        }
    }
}

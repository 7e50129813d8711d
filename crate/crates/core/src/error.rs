use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("force magnitude must be positive, got {0}")]
    NonPositiveForce(f64),

    #[error("kinematic singularity: |det J| = {det:.3e} below tolerance {tolerance:.3e}")]
    SingularConfiguration { det: f64, tolerance: f64 },

    #[error("{}", describe_unidentifiable(*.condition, .unobservable))]
    UnidentifiablePlan {
        /// Condition number of the information matrix (`inf` when singular).
        condition: f64,
        /// Null direction of the information matrix in joint space.
        null_direction: [f64; 3],
        /// Zero-based joint indices carrying the null direction.
        unobservable: Vec<usize>,
    },

    #[error("test pose is degenerate: its observation matrix is rank deficient (condition {condition:.3e})")]
    DegenerateTestPose { condition: f64 },

    #[error("no optimizer start produced a finite objective")]
    NoConvergence,
}

fn describe_unidentifiable(condition: f64, unobservable: &[usize]) -> String {
    let joints: Vec<String> = unobservable.iter().map(|j| format!("k{}", j + 1)).collect();
    let what = match joints.len() {
        0 => "compliances".to_string(),
        1 => format!("joint {} compliance ({}) is unobservable", unobservable[0] + 1, joints[0]),
        _ => format!("compliances {} are not separately observable", joints.join(", ")),
    };
    format!("unidentifiable plan: {what}; information matrix condition number {condition:.3e}")
}

pub type Result<T, E = CalibrationError> = core::result::Result<T, E>;

//! TOML run configuration.
//!
//! Angles are degrees, lengths metres, forces newtons. Every section except
//! `geometry` and `test_pose` is optional.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stiffcal_core::montecarlo::DEFAULT_K_TRUE;
use stiffcal_core::optimizer::{default_starts, DEFAULT_SEED};
use stiffcal_core::{ExperimentPlan, ExperimentPose, Geometry, Joints, Options, Plan, Test, TestPose, Wrench};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    pub test_pose: TestPoseSection,
    pub plan: Option<PlanSection>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestPoseSection {
    /// `(q1, q2, q3)`, degrees.
    pub q_deg: [f64; 3],
    /// Test wrench, N.
    pub force: [f64; 3],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaReference {
    /// `α` measured from +y towards +z: `F = F0 (0, cos α, sin α)`.
    #[default]
    Y,
    /// `α` measured from +z towards +y: `F = F0 (0, sin α, cos α)`.
    Z,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub label: Option<String>,
    /// Calibration force magnitude, N. Defaults to the test force magnitude.
    pub force_magnitude: Option<f64>,
    #[serde(default)]
    pub alpha_reference: AlphaReference,
    /// `(q2, q3, α)` per experiment, degrees.
    #[serde(default)]
    pub poses_deg: Vec<[f64; 3]>,
    /// Number of times the pose list is repeated.
    pub repeat: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub m: Option<usize>,
    pub starts: Option<usize>,
    pub seed: Option<u64>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    /// Angle search interval, degrees.
    pub bounds_deg: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub trials: Option<usize>,
    /// Measurement noise std per coordinate, m.
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    /// True compliances, rad/(N·m).
    pub k_true: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn finite(field: &str, v: &[f64]) -> Result<(), CliError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let g = &self.geometry;
        for (name, v) in [("geometry.l1", g.l1), ("geometry.l2", g.l2), ("geometry.l3", g.l3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("link length must be positive, got {v}")));
            }
        }
        finite("test_pose.q_deg", &self.test_pose.q_deg)?;
        finite("test_pose.force", &self.test_pose.force)?;
        if self.test_pose.force.iter().all(|f| *f == 0.0) {
            return Err(invalid("test_pose.force", "must be nonzero"));
        }
        if let Some(plan) = &self.plan {
            if let Some(f0) = plan.force_magnitude {
                if !(f0.is_finite() && f0 > 0.0) {
                    return Err(invalid("plan.force_magnitude", format!("must be positive, got {f0}")));
                }
            }
            for (i, p) in plan.poses_deg.iter().enumerate() {
                finite(&format!("plan.poses_deg[{i}]"), p)?;
            }
            if plan.repeat == Some(0) {
                return Err(invalid("plan.repeat", "must be at least 1"));
            }
        }
        let o = &self.optimizer;
        if o.m == Some(0) {
            return Err(invalid("optimizer.m", "must be at least 1"));
        }
        if let Some(t) = o.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(invalid("optimizer.tolerance", "must be positive"));
            }
        }
        if let Some([lo, hi]) = o.bounds_deg {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid("optimizer.bounds_deg", "must be a finite interval with lower < upper"));
            }
        }
        let s = &self.simulation;
        if s.trials == Some(0) {
            return Err(invalid("simulation.trials", "must be at least 1"));
        }
        if let Some(sigma) = s.sigma {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(invalid("simulation.sigma", "must be non-negative"));
            }
        }
        if let Some(k) = s.k_true {
            finite("simulation.k_true", &k)?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry, CliError> {
        let g = &self.geometry;
        Geometry::new(g.l1, g.l2, g.l3).map_err(|e| invalid("geometry", e))
    }

    pub fn test_pose(&self) -> Result<Test, CliError> {
        let [q1, q2, q3] = self.test_pose.q_deg;
        TestPose::new(Joints::from_degrees(q1, q2, q3), Wrench::new(self.test_pose.force)).map_err(|e| invalid("test_pose", e))
    }

    /// Calibration force magnitude: `plan.force_magnitude`, else the test force magnitude.
    pub fn force_magnitude(&self) -> f64 {
        self.plan
            .as_ref()
            .and_then(|p| p.force_magnitude)
            .unwrap_or_else(|| Wrench::new(self.test_pose.force).magnitude())
    }

    pub fn plan_label(&self) -> String {
        self.plan.as_ref().and_then(|p| p.label.clone()).unwrap_or_else(|| "plan".to_string())
    }

    /// The explicit plan of the `[plan]` section, if it lists any poses.
    pub fn plan(&self) -> Result<Option<Plan>, CliError> {
        let Some(section) = &self.plan else { return Ok(None) };
        if section.poses_deg.is_empty() {
            return Ok(None);
        }
        let poses = section
            .poses_deg
            .iter()
            .map(|&[q2, q3, a]| {
                let alpha = match section.alpha_reference {
                    AlphaReference::Y => a,
                    AlphaReference::Z => 90.0 - a,
                };
                ExperimentPose::from_degrees(q2, q3, alpha)
            })
            .collect();
        let plan = ExperimentPlan::new(poses, self.force_magnitude()).map_err(|e| invalid("plan", e))?;
        Ok(Some(plan.repeated(section.repeat.unwrap_or(1))))
    }

    pub fn optimizer_options(&self, m: usize) -> Options {
        let o = &self.optimizer;
        let mut opts = Options::for_experiments(m);
        opts.starts = o.starts.unwrap_or(default_starts(m));
        opts.seed = o.seed.unwrap_or(DEFAULT_SEED);
        if let Some(it) = o.max_iterations {
            opts.max_iterations = it;
        }
        if let Some(t) = o.tolerance {
            opts.objective_tolerance = t;
        }
        if let Some([lo, hi]) = o.bounds_deg {
            opts.bounds = (lo.to_radians(), hi.to_radians());
        }
        opts.force_magnitude = self.force_magnitude();
        opts
    }

    pub fn k_true(&self) -> [f64; 3] {
        self.simulation.k_true.unwrap_or(DEFAULT_K_TRUE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[geometry]
l1 = 0.75
l2 = 1.25
l3 = 1.10

[test_pose]
q_deg = [0.0, 60.0, -45.0]
force = [0.0, 0.29, -0.96]
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = RunConfig::from_toml(BASE).unwrap();
        assert!(cfg.plan().unwrap().is_none());
        assert!((cfg.force_magnitude() - (0.29f64.powi(2) + 0.96f64.powi(2)).sqrt()).abs() < 1e-15);
        assert_eq!(cfg.optimizer_options(3).starts, 256);
    }

    #[test]
    fn plan_with_z_reference() {
        let text = format!("{BASE}\n[plan]\nforce_magnitude = 1.0\nalpha_reference = \"z\"\nposes_deg = [[43.2, -57.3, 22.9]]\nrepeat = 2\n");
        let plan = RunConfig::from_toml(&text).unwrap().plan().unwrap().unwrap();
        assert_eq!(plan.len(), 2);
        assert!((plan.poses()[0].alpha.to_degrees() - 67.1).abs() < 1e-12);
    }

    #[test]
    fn field_paths_in_errors() {
        let bad = BASE.replace("l2 = 1.25", "l2 = -1.0");
        let err = RunConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("geometry.l2"), "{err}");

        let unknown = format!("{BASE}\n[optimizer]\nstart = 3\n");
        let err = RunConfig::from_toml(&unknown).unwrap_err().to_string();
        assert!(err.contains("start"), "{err}");

        let zero = format!("{BASE}\n[optimizer]\nm = 0\n");
        assert!(RunConfig::from_toml(&zero).unwrap_err().to_string().contains("optimizer.m"));
    }

    #[test]
    fn degree_round_trip() {
        for d in [-179.9, -45.0, 0.1, 22.9, 173.3] {
            let p = ExperimentPose::<f64>::from_degrees(d, d, d);
            let back = ExperimentPose::<f64>::from_degrees(p.to_degrees()[0], 0.0, 0.0);
            assert!((back.q2 - p.q2).abs() < 1e-12);
        }
    }
}

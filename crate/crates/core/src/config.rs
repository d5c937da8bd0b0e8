//! Run configuration: one JSON document shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::Basis;
use crate::diagnostics::DiagnosticSettings;
use crate::eos::{solve_radial_star, EquationOfState, RadialStarProfile, DEFAULT_GAMMA_EXCLUSION};
use crate::equilibrium::{
    EquilibriumProblem, MagneticCurrentFunction, ModelParams, ParameterGuards, SolverSettings,
};
use crate::error::{Result, StarError};
use crate::geometry::DEFAULT_TRUST_RADIUS;
use crate::quadrature::QuadratureSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EosConfig {
    pub gamma: f64,
    pub exclusion: f64,
    pub allow_four_thirds: bool,
    pub radius: f64,
    /// Table size of the radial solve.
    pub radial_grid: usize,
}

impl Default for EosConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            exclusion: DEFAULT_GAMMA_EXCLUSION,
            allow_four_thirds: false,
            radius: 1.0,
            radial_grid: 2048,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub ns: usize,
    pub nmu: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { ns: 24, nmu: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub omega2: Vec<f64>,
    pub epsilon: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            omega2: vec![0.0, 0.01, 0.02],
            epsilon: vec![0.0, 0.025, 0.05],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub newton_tol: f64,
    pub max_iter: usize,
    pub trust_radius: f64,
    /// Gauss points per piece of the singular quadrature; sized from the
    /// radial grid when absent.
    pub quad_points: Option<usize>,
    pub quad_grading: f64,
    pub omega2_max: f64,
    pub epsilon_max: f64,
    /// Multiplies every acceptance threshold of `verify`.
    pub verify_scale: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let g = ParameterGuards::default();
        Self {
            newton_tol: 1e-9,
            max_iter: 20,
            trust_radius: DEFAULT_TRUST_RADIUS,
            quad_points: None,
            quad_grading: QuadratureSettings::for_radial_degree(0).grading,
            omega2_max: g.omega2_max,
            epsilon_max: g.epsilon_max,
            verify_scale: 1.0,
        }
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub eos: EosConfig,
    /// Coefficients of `k(ψ)`, lowest degree first.
    pub k: Vec<f64>,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub tolerances: ToleranceConfig,
    pub diagnostics: DiagnosticSettings,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eos: EosConfig::default(),
            k: vec![1.0, 1.0],
            grid: GridConfig::default(),
            sweep: SweepConfig::default(),
            tolerances: ToleranceConfig::default(),
            diagnostics: DiagnosticSettings::default(),
            output_dir: PathBuf::from("out"),
            seed: 20240607,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(StarError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| StarError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StarError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.eos()?;
        positive("eos.radius", self.eos.radius)?;
        let t = &self.tolerances;
        for (n, v) in [
            ("newton_tol", t.newton_tol),
            ("trust_radius", t.trust_radius),
            ("quad_grading", t.quad_grading),
            ("omega2_max", t.omega2_max),
            ("epsilon_max", t.epsilon_max),
            ("verify_scale", t.verify_scale),
        ] {
            positive(n, v)?;
        }
        if t.quad_points.is_some_and(|p| p < 2) || t.max_iter == 0 {
            return Err(StarError::Config("quad_points >= 2 and max_iter >= 1 required".into()));
        }
        let d = &self.diagnostics;
        for (n, v) in [
            ("diagnostics.spacing", d.spacing),
            ("diagnostics.dump_spacing", d.dump_spacing),
            ("diagnostics.dump_extent", d.dump_extent),
            ("diagnostics.momentum_tol", d.momentum_tol),
            ("diagnostics.noise_factor", d.noise_factor),
            ("diagnostics.mass_tol", d.mass_tol),
            ("diagnostics.psi_decay_radius", d.psi_decay_radius),
            ("diagnostics.psi_decay_ratio", d.psi_decay_ratio),
        ] {
            positive(n, v)?;
        }
        Basis::new(self.grid.ns, self.grid.nmu)?;
        MagneticCurrentFunction::new(self.k.clone())?;
        for (name, list) in [("omega2", &self.sweep.omega2), ("epsilon", &self.sweep.epsilon)] {
            if list.first() != Some(&0.0) {
                return Err(StarError::Config(format!("sweep.{name} must start at 0")));
            }
            if list.iter().any(|v| !v.is_finite()) {
                return Err(StarError::Config(format!("sweep.{name} has a non-finite entry")));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn eos(&self) -> Result<EquationOfState> {
        EquationOfState::guarded(self.eos.gamma, self.eos.exclusion, self.eos.allow_four_thirds).map_err(|e| match e {
            StarError::DegenerateGamma { .. } => StarError::Config(e.to_string()),
            other => other,
        })
    }

    pub fn k(&self) -> Result<MagneticCurrentFunction> {
        MagneticCurrentFunction::new(self.k.clone())
    }

    pub fn basis(&self) -> Result<Basis> {
        Basis::new(self.grid.ns, self.grid.nmu)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let t = &self.tolerances;
        SolverSettings {
            quadrature: Some(QuadratureSettings {
                points: t
                    .quad_points
                    .unwrap_or(QuadratureSettings::for_radial_degree(self.grid.ns).points),
                grading: t.quad_grading,
            }),
            trust_radius: t.trust_radius,
            newton_tol: t.newton_tol,
            max_iter: t.max_iter,
            guards: ParameterGuards {
                omega2_max: t.omega2_max,
                epsilon_max: t.epsilon_max,
            },
            well_balanced: true,
        }
    }

    pub fn profile(&self) -> Result<RadialStarProfile> {
        solve_radial_star(&self.eos()?, self.eos.radius, self.eos.radial_grid)
    }

    /// The discretized problem. Requires `radius == 1`.
    pub fn problem(&self) -> Result<EquilibriumProblem> {
        if self.eos.radius != 1.0 {
            return Err(StarError::Config("equilibria are computed for radius 1".into()));
        }
        EquilibriumProblem::new(self.profile()?, self.basis()?, self.solver_settings())
    }

    pub fn params(&self, problem: &EquilibriumProblem, omega2: f64, epsilon: f64) -> Result<ModelParams> {
        Ok(problem.params(omega2, epsilon, self.k()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg = RunConfig::from_json(r#"{"eos": {"gamma": 1.8}, "seed": 3}"#).unwrap();
        assert_eq!(cfg.eos.gamma, 1.8);
        assert_eq!(cfg.grid, GridConfig::default());
        assert_ne!(cfg.hash(), RunConfig::default().hash());
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"eos": {"gamma": 1.1}}"#,
            r#"{"eos": {"gamma": 1.3333333333333333}}"#,
            r#"{"tolerances": {"newton_tol": -1}}"#,
            r#"{"sweep": {"omega2": [0.01, 0.02]}}"#,
            r#"{"k": [1, 2, 3, 4, 5, 6, 7, 8]}"#,
            r#"{"unknown": 1}"#,
            "not json",
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(StarError::Config(_))), "{text}");
        }
    }

    #[test]
    fn override_admits_four_thirds() {
        let cfg = RunConfig::from_json(r#"{"eos": {"gamma": 1.3333333333333333, "allow_four_thirds": true}}"#).unwrap();
        assert!(cfg.eos().is_ok());
    }
}

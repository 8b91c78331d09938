//! Experiment configuration: TOML file, command-line overrides, validation.

use crate::meshspec::MeshSpec;
use dvflow::dynamics::{Stepper, Viscosity};
use dvflow::mesh::Family;
use dvflow::recon::Extrusion;
use dvflow::verify::{Reference, DEFAULT_PERTURBATION};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Invalid configuration value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: &str, reason: impl Into<String>) -> Self {
        ConfigError { field: field.to_string(), reason: reason.into() }
    }
}

type Check = Result<(), ConfigError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subcommand: String,
    pub seed: u64,
    /// Mesh specification string (see `meshspec`).
    pub mesh: String,
    pub problem: ProblemConfig,
    pub integration: IntegrationConfig,
    pub study: StudySection,
    pub invariants: InvariantsSection,
    pub eigen: EigenSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            subcommand: String::new(),
            seed: 1,
            mesh: "torus:equilateral:16".into(),
            problem: ProblemConfig::default(),
            integration: IntegrationConfig::default(),
            study: StudySection::default(),
            invariants: InvariantsSection::default(),
            eigen: EigenSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// `tg2d`, `tg2d-mean`, `abc3d` or `square-noslip`.
    pub reference: String,
    pub viscosity: Viscosity,
    /// Mean stream of `tg2d-mean`.
    pub mean_flow: f64,
    /// Body-force potential `Phi = g z` (last coordinate) entering the
    /// recovered pressure; bounded domains only.
    pub gravity: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig { reference: "tg2d".into(), viscosity: Viscosity::None, mean_flow: 0.5, gravity: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    pub t_end: f64,
    pub dt: f64,
    pub tol: f64,
    pub stepper: Stepper,
    pub extrusion: Extrusion,
    /// Diagnostics every `cadence` steps.
    pub cadence: usize,
    /// Advected loops as `[x, y, radius]` in the horizontal plane.
    pub loops: Vec<[f64; 3]>,
    /// Write the recovered pressure at the final time.
    pub pressure: bool,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig { t_end: 1.0, dt: 1e-2, tol: 1e-13, stepper: Stepper::ImplicitMidpoint, extrusion: Extrusion::DualCell, cadence: 1, loops: Vec::new(), pressure: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub family: Family,
    pub resolutions: Vec<usize>,
    pub perturbation: f64,
    /// Viscosities of a convergence study; more than one value enables the
    /// nu-uniformity report.
    pub nus: Vec<f64>,
    pub t_end: f64,
    /// `dt = min(dt_max, dt_c h^2)`.
    pub dt_c: f64,
    pub dt_max: f64,
    pub tol: f64,
    /// Evaluation time of the truncation error.
    pub t: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection { family: Family::Equilateral, resolutions: vec![8, 16, 32, 64], perturbation: DEFAULT_PERTURBATION, nus: vec![0.0], t_end: 1.0, dt_c: 0.5, dt_max: 0.05, tol: 1e-13, t: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvariantsSection {
    pub trials: usize,
}

impl Default for InvariantsSection {
    fn default() -> Self {
        InvariantsSection { trials: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSection {
    pub wanted: usize,
    /// Random mean-zero pressures for the inf-sup quotient.
    pub samples: usize,
}

impl Default for EigenSection {
    fn default() -> Self {
        EigenSection { wanted: 1, samples: 20 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for output files; reports go to stdout only when unset.
    pub dir: Option<PathBuf>,
    /// Also write the complex (mesh-audit).
    pub write_mesh: bool,
}

pub const REFERENCES: [&str; 4] = ["tg2d", "tg2d-mean", "abc3d", "square-noslip"];

fn positive(field: &str, x: f64) -> Check {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite, got {x}")))
    }
}

fn nonnegative(field: &str, x: f64) -> Check {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be nonnegative and finite, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::new("config", e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn mesh_spec(&self) -> Result<MeshSpec, ConfigError> {
        self.mesh.parse().map_err(|e: dvflow::Error| ConfigError::new("mesh", e.to_string()))
    }

    /// Reference solution at viscosity `nu`.
    pub fn reference(&self, nu: f64) -> Result<Reference, ConfigError> {
        let r = match self.problem.reference.as_str() {
            "tg2d" => Reference::TaylorGreen { nu },
            "tg2d-mean" => Reference::MeanFlowTaylorGreen { nu, u0: self.problem.mean_flow },
            "abc3d" => Reference::Abc { nu, a: 1.0, b: 1.0, c: 1.0 },
            "square-noslip" => Reference::SquareNoSlip,
            other => return Err(ConfigError::new("problem.reference", format!("unknown reference `{other}`; expected one of {REFERENCES:?}"))),
        };
        Ok(r)
    }

    /// Check every field used by the selected subcommand.
    pub fn validate(&self) -> Check {
        let sub = self.subcommand.as_str();
        let spec = self.mesh_spec()?;
        self.reference(0.0)?;
        self.problem.viscosity.validate().map_err(|e| ConfigError::new("problem.viscosity", e.to_string()))?;
        nonnegative("problem.gravity", self.problem.gravity.abs())?;
        if self.problem.gravity != 0.0 && matches!(spec, MeshSpec::Torus { .. } | MeshSpec::Prism { .. }) {
            return Err(ConfigError::new("problem.gravity", "a potential g z is not periodic; use a bounded mesh"));
        }
        let i = &self.integration;
        nonnegative("integration.t_end", i.t_end)?;
        positive("integration.dt", i.dt)?;
        if !(i.tol >= 1e-14 && i.tol.is_finite()) {
            return Err(ConfigError::new("integration.tol", format!("must be at least 1e-14, got {}", i.tol)));
        }
        if i.cadence == 0 {
            return Err(ConfigError::new("integration.cadence", "must be at least 1"));
        }
        for (k, l) in i.loops.iter().enumerate() {
            positive(&format!("integration.loops[{k}].radius"), l[2])?;
        }
        let s = &self.study;
        if ["converge", "truncation"].contains(&sub) {
            if s.resolutions.len() < dvflow::verify::MIN_FIT_POINTS {
                return Err(ConfigError::new("study.resolutions", format!("need at least {} resolutions", dvflow::verify::MIN_FIT_POINTS)));
            }
            if s.resolutions.iter().any(|&n| n < 4) {
                return Err(ConfigError::new("study.resolutions", "every resolution must be at least 4"));
            }
            if self.problem.reference == "square-noslip" {
                return Err(ConfigError::new("problem.reference", "studies need an exact solution"));
            }
        }
        if !(0.0..0.3).contains(&s.perturbation) {
            return Err(ConfigError::new("study.perturbation", "must lie in [0, 0.3)"));
        }
        if s.nus.is_empty() {
            return Err(ConfigError::new("study.nus", "need at least one viscosity"));
        }
        for (k, nu) in s.nus.iter().enumerate() {
            nonnegative(&format!("study.nus[{k}]"), *nu)?;
        }
        nonnegative("study.t_end", s.t_end)?;
        nonnegative("study.t", s.t)?;
        positive("study.dt_c", s.dt_c)?;
        positive("study.dt_max", s.dt_max)?;
        if !(s.tol >= 1e-14 && s.tol.is_finite()) {
            return Err(ConfigError::new("study.tol", "must be at least 1e-14"));
        }
        if self.invariants.trials == 0 {
            return Err(ConfigError::new("invariants.trials", "must be at least 1"));
        }
        if self.eigen.wanted == 0 {
            return Err(ConfigError::new("eigen.wanted", "must be at least 1"));
        }
        if sub == "export-operators" && self.output.dir.is_none() {
            return Err(ConfigError::new("output.dir", "export-operators writes files and needs --out"));
        }
        Ok(())
    }
}

/// `none`, `isotropic:<nu>`, `anisotropic:<nu_h>,<nu_v>` or `smagorinsky:<cs>`.
pub fn parse_viscosity(s: &str) -> Result<Viscosity, ConfigError> {
    let err = || ConfigError::new("problem.viscosity", format!("cannot parse `{s}`"));
    let (kind, args) = s.split_once(':').unwrap_or((s, ""));
    let nums: Vec<f64> = if args.is_empty() { Vec::new() } else { args.split(',').map(|t| t.trim().parse().map_err(|_| err())).collect::<Result<_, _>>()? };
    match (kind, nums.as_slice()) {
        ("none", []) => Ok(Viscosity::None),
        ("isotropic", [nu]) => Ok(Viscosity::Isotropic { nu: *nu }),
        ("anisotropic", [nu_h, nu_v]) => Ok(Viscosity::Anisotropic { nu_h: *nu_h, nu_v: *nu_v }),
        ("smagorinsky", [cs]) => Ok(Viscosity::Smagorinsky { cs: *cs }),
        _ => Err(err()),
    }
}

pub fn parse_list<T: std::str::FromStr>(field: &str, s: &str) -> Result<Vec<T>, ConfigError> {
    s.split(',').map(|t| t.trim().parse().map_err(|_| ConfigError::new(field, format!("cannot parse `{t}`")))).collect()
}

//! Experiment configuration: defaults, file loading, validation.
//!
//! Config files are flat TOML. All angles are in radians; the couplings
//! `g_se` and `g_ee` are the dimensionless products of coupling strength
//! and interaction time.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{BoundMode, NormKind};
use crate::model::{CouplingConfig, EnvModel, Stage};
use crate::register::{DensityMatrix, Label};

/// When the mutual information between the system and the current
/// subenvironment is sampled: after the s-e interaction but before the e-e
/// one (the default), or after both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiHook {
    PreEe,
    PostEe,
}

/// A pure qubit state on the Bloch sphere:
/// `cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    pub theta: f64,
    pub phi: f64,
}

impl PureState {
    pub fn named(name: &str) -> Result<PureState> {
        let state = match name {
            "zero" => PureState { theta: 0.0, phi: 0.0 },
            "one" => PureState {
                theta: std::f64::consts::PI,
                phi: 0.0,
            },
            "plus" => PureState {
                theta: std::f64::consts::FRAC_PI_2,
                phi: 0.0,
            },
            "minus" => PureState {
                theta: std::f64::consts::FRAC_PI_2,
                phi: std::f64::consts::PI,
            },
            _ => {
                return Err(Error::Config(format!(
                    "unknown state `{name}` (expected zero|one|plus|minus or theta,phi)"
                )))
            }
        };
        Ok(state)
    }

    /// Antipodal point on the Bloch sphere (the orthogonal pure state).
    pub fn antipode(&self) -> PureState {
        PureState {
            theta: std::f64::consts::PI - self.theta,
            phi: self.phi + std::f64::consts::PI,
        }
    }

    pub fn density(&self, label: Label) -> Result<DensityMatrix> {
        let amp0 = Complex64::new((self.theta / 2.0).cos(), 0.0);
        let amp1 = Complex64::from_polar((self.theta / 2.0).sin(), self.phi);
        DensityMatrix::pure_qubit(amp0, amp1, label)
    }
}

impl FromStr for PureState {
    type Err = Error;

    fn from_str(s: &str) -> Result<PureState> {
        if let Some((theta, phi)) = s.split_once(',') {
            let parse = |v: &str, name: &str| {
                v.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("state: cannot parse {name} from `{v}`"))
                })
            };
            return Ok(PureState {
                theta: parse(theta, "theta")?,
                phi: parse(phi, "phi")?,
            });
        }
        PureState::named(s.trim())
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.theta, self.phi)
    }
}

impl fmt::Display for EnvModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvModel::Separate { j } => write!(f, "separate:{j}"),
            EnvModel::Collective { r } => write!(f, "collective:{r}"),
            EnvModel::Consecutive { stages } => {
                write!(f, "consecutive:")?;
                for (i, s) in stages.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}={}", s.range, s.strength)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for EnvModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<EnvModel> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("env_model: expected kind:spec, got `{s}`")))?;
        let model = match kind {
            "separate" => EnvModel::Separate {
                j: rest.trim().parse().map_err(|_| {
                    Error::Config(format!("env_model: bad separate distance `{rest}`"))
                })?,
            },
            "collective" => EnvModel::Collective {
                r: rest.trim().parse().map_err(|_| {
                    Error::Config(format!("env_model: bad collective range `{rest}`"))
                })?,
            },
            "consecutive" => {
                let stages = rest
                    .split(',')
                    .map(|part| {
                        let (j, g) = part.split_once('=').ok_or_else(|| {
                            Error::Config(format!(
                                "env_model: consecutive stage `{part}` must be range=strength"
                            ))
                        })?;
                        Ok(Stage {
                            range: j.trim().parse().map_err(|_| {
                                Error::Config(format!("env_model: bad stage range `{j}`"))
                            })?,
                            strength: g.trim().parse().map_err(|_| {
                                Error::Config(format!("env_model: bad stage strength `{g}`"))
                            })?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                EnvModel::Consecutive { stages }
            }
            _ => {
                return Err(Error::Config(format!(
                    "env_model: unknown kind `{kind}` (separate|collective|consecutive)"
                )))
            }
        };
        model.validate()?;
        Ok(model)
    }
}

/// Coupling grid for [`crate::cli`] sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub g_ee_min: f64,
    pub g_ee_max: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn grid(&self) -> Vec<f64> {
        let span = self.g_ee_max - self.g_ee_min;
        (0..self.steps)
            .map(|i| self.g_ee_min + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: String,
    pub format: OutputFormat,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub g_se: f64,
    pub g_ee: f64,
    pub env_model: EnvModel,
    pub collisions: usize,
    pub initial_pair: (PureState, PureState),
    pub env_init: PureState,
    pub bound_mode: BoundMode,
    pub mi_hook: MiHook,
    pub norm: NormKind,
    pub sweep: Option<SweepSpec>,
    pub output: Option<OutputSpec>,
}

pub const DEFAULT_G_SE: f64 = 0.05;
/// Separate models saturate within a few thousand collisions; collective
/// ones take roughly an order of magnitude longer.
pub const DEFAULT_COLLISIONS_SEPARATE: usize = 3000;
pub const DEFAULT_COLLISIONS_COLLECTIVE: usize = 20000;

impl ExperimentConfig {
    /// Defaults everywhere except the couplings' environment model and
    /// `g_ee`, which have no sensible universal value.
    pub fn new(env_model: EnvModel, g_ee: f64) -> Self {
        let collisions = default_collisions(&env_model);
        ExperimentConfig {
            g_se: DEFAULT_G_SE,
            g_ee,
            env_model,
            collisions,
            initial_pair: (
                PureState::named("plus").unwrap(),
                PureState::named("minus").unwrap(),
            ),
            env_init: PureState::named("zero").unwrap(),
            bound_mode: BoundMode::PostErasure,
            mi_hook: MiHook::PreEe,
            norm: NormKind::Trace,
            sweep: None,
            output: None,
        }
    }

    pub fn coupling(&self) -> CouplingConfig {
        CouplingConfig {
            g_se: self.g_se,
            g_ee: self.g_ee,
            env_model: self.env_model.clone(),
        }
    }

    pub fn initial_pair_states(&self) -> Result<(DensityMatrix, DensityMatrix)> {
        Ok((
            self.initial_pair.0.density(Label::Sys)?,
            self.initial_pair.1.density(Label::Sys)?,
        ))
    }

    pub fn env_init_state(&self, label: Label) -> Result<DensityMatrix> {
        self.env_init.density(label)
    }

    /// Collect every violated field into one error.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !self.g_se.is_finite() {
            problems.push("g_se: must be finite".to_string());
        }
        if !self.g_ee.is_finite() {
            problems.push("g_ee: must be finite".to_string());
        }
        if let Err(e) = self.env_model.validate() {
            problems.push(e.to_string());
        }
        if self.collisions < 1 {
            problems.push("collisions: must be at least 1".to_string());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.steps < 2 {
                problems.push("sweep.steps: must be at least 2".to_string());
            }
            if !(sweep.g_ee_min.is_finite() && sweep.g_ee_max.is_finite())
                || sweep.g_ee_min > sweep.g_ee_max
            {
                problems.push("sweep: g_ee_min must not exceed g_ee_max".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

pub fn default_collisions(env_model: &EnvModel) -> usize {
    match env_model {
        EnvModel::Collective { .. } => DEFAULT_COLLISIONS_COLLECTIVE,
        _ => DEFAULT_COLLISIONS_SEPARATE,
    }
}

/// On-disk form of the configuration; every field optional so that CLI
/// flags can fill the gaps.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub g_se: Option<f64>,
    pub g_ee: Option<f64>,
    pub env_model: Option<String>,
    pub collisions: Option<usize>,
    pub initial_pair: Option<[String; 2]>,
    pub env_init: Option<String>,
    pub bound_mode: Option<BoundMode>,
    pub mi_hook: Option<MiHook>,
    pub norm: Option<NormKind>,
    pub sweep: Option<SweepSpec>,
    pub output: Option<OutputSpec>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Overlay `other` on top of `self` (fields present in `other` win).
    pub fn merged(mut self, other: ConfigFile) -> ConfigFile {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            g_se, g_ee, env_model, collisions, initial_pair, env_init, bound_mode, mi_hook,
            norm, sweep, output
        );
        self
    }

    /// Resolve into a validated [`ExperimentConfig`]. Missing mandatory
    /// fields and parse failures are all reported together, by name.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut problems: Vec<String> = Vec::new();

        let env_model = match &self.env_model {
            None => {
                problems.push("env_model: missing".to_string());
                None
            }
            Some(text) => match text.parse::<EnvModel>() {
                Ok(m) => Some(m),
                Err(e) => {
                    problems.push(e.to_string());
                    None
                }
            },
        };
        if self.g_ee.is_none() && !matches!(env_model, Some(EnvModel::Consecutive { .. })) {
            problems.push("g_ee: missing".to_string());
        }

        let parse_state = |text: &str, field: &str, problems: &mut Vec<String>| {
            match text.parse::<PureState>() {
                Ok(s) => Some(s),
                Err(e) => {
                    problems.push(format!("{field}: {e}"));
                    None
                }
            }
        };
        let initial_pair = self.initial_pair.as_ref().map(|[a, b]| {
            (
                parse_state(a, "initial_pair[0]", &mut problems),
                parse_state(b, "initial_pair[1]", &mut problems),
            )
        });
        let env_init = self
            .env_init
            .as_ref()
            .and_then(|s| parse_state(s, "env_init", &mut problems));

        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        let env_model = env_model.expect("checked above");

        let mut config = ExperimentConfig::new(env_model, self.g_ee.unwrap_or(0.0));
        if let Some(g_se) = self.g_se {
            config.g_se = g_se;
        }
        if let Some(collisions) = self.collisions {
            config.collisions = collisions;
        }
        if let Some((Some(a), Some(b))) = initial_pair {
            config.initial_pair = (a, b);
        }
        if let Some(env_init) = env_init {
            config.env_init = env_init;
        }
        if let Some(bound_mode) = self.bound_mode {
            config.bound_mode = bound_mode;
        }
        if let Some(mi_hook) = self.mi_hook {
            config.mi_hook = mi_hook;
        }
        if let Some(norm) = self.norm {
            config.norm = norm;
        }
        config.sweep = self.sweep;
        config.output = self.output.clone();
        config.validate()?;
        Ok(config)
    }
}

#[doc(hidden)]
pub mod test_support {
    use super::*;

    /// Shorthand used across the test suites: defaults plus the given model
    /// and coupling, with an explicit collision count.
    pub fn config_with(env_model: EnvModel, g_ee: f64, collisions: usize) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(env_model, g_ee);
        config.collisions = collisions;
        config
    }
}

use std::path::PathBuf;

use clap::ValueEnum;
use scale_iter::bruno::{ScheduleExponent, SequenceSpec};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bruno,
    Tame,
    Schedule,
    Morse,
    Circle,
    Newton,
    Drive,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bruno => "bruno",
            Command::Tame => "tame",
            Command::Schedule => "schedule",
            Command::Morse => "morse",
            Command::Circle => "circle",
            Command::Newton => "newton",
            Command::Drive => "drive",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// One experiment: the command, its parameters, where to write and the
/// seed for randomized sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self, CliError> {
        serde_json::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Parameters decoded for `command`.
    pub fn params(&self, command: Command) -> Result<Params, CliError> {
        let v = Value::Object(self.parameters.clone());
        let decode = |e: serde_json::Error| CliError::Config(format!("{} parameters: {e}", command.name()));
        Ok(match command {
            Command::Bruno => Params::Bruno(BrunoParams::from_map(&self.parameters)?),
            Command::Tame => Params::Tame(serde_json::from_value(v).map_err(decode)?),
            Command::Schedule => Params::Schedule(serde_json::from_value(v).map_err(decode)?),
            Command::Morse => Params::Morse(serde_json::from_value(v).map_err(decode)?),
            Command::Circle => Params::Circle(serde_json::from_value(v).map_err(decode)?),
            Command::Newton => Params::Newton(serde_json::from_value(v).map_err(decode)?),
            Command::Drive => Params::Drive(serde_json::from_value(v).map_err(decode)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Bruno(BrunoParams),
    Tame(TameParams),
    Schedule(ScheduleParams),
    Morse(MorseParams),
    Circle(CircleParams),
    Newton(NewtonParams),
    Drive(DriveParams),
}

/// The sequence fields sit next to the run settings, e.g.
/// `{"kind": "constant", "value": 1, "horizon": 64}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrunoParams {
    #[serde(default = "default_bruno_horizon")]
    pub horizon: usize,
    #[serde(default = "default_bruno_tol")]
    pub tol: f64,
    /// Start of a quadratic orbit `u_{n+1} = a_n u_n^2`.
    pub u0: Option<f64>,
    #[serde(default = "default_orbit_steps")]
    pub steps: usize,
    /// Random starts checked against the threshold `1 / a_pi`.
    #[serde(default)]
    pub samples: usize,
    #[serde(skip)]
    pub sequence: Option<SequenceSpec>,
}

const BRUNO_KEYS: [&str; 5] = ["horizon", "tol", "u0", "steps", "samples"];

impl BrunoParams {
    fn from_map(map: &Map<String, Value>) -> Result<Self, CliError> {
        let (own, seq): (Map<String, Value>, Map<String, Value>) =
            map.clone().into_iter().partition(|(k, _)| BRUNO_KEYS.contains(&k.as_str()));
        let mut p: BrunoParams = serde_json::from_value(Value::Object(own))
            .map_err(|e| CliError::Config(format!("bruno parameters: {e}")))?;
        p.sequence = Some(
            serde_json::from_value(Value::Object(seq))
                .map_err(|e| CliError::Config(format!("bruno sequence: {e}")))?,
        );
        Ok(p)
    }

    pub fn sequence(&self) -> &SequenceSpec {
        self.sequence.as_ref().expect("sequence decoded with the parameters")
    }
}

fn default_bruno_horizon() -> usize {
    64
}

fn default_bruno_tol() -> f64 {
    1e-6
}

fn default_orbit_steps() -> usize {
    30
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TameParams {
    pub a: SequenceSpec,
    pub b: SequenceSpec,
    #[serde(default = "default_orbit_steps")]
    pub horizon: usize,
    /// Also search the largest admissible `x0` and run the mixed orbit.
    #[serde(default)]
    pub orbit: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalFactorSpec {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleParams {
    pub t: f64,
    pub rho: SequenceSpec,
    pub steps: usize,
    #[serde(default)]
    pub exponent: ScheduleExponent,
    /// Local factor checked against its geometric bound along the schedule.
    pub factor: Option<LocalFactorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseParams {
    pub steps: usize,
    pub truncation: usize,
    /// Coefficients of `f0` as `"p/q"` strings; defaults to `x^2/2 + x^3`.
    pub f0: Option<Vec<String>>,
    #[serde(default = "default_morse_radius")]
    pub radius: f64,
}

fn default_morse_radius() -> f64 {
    0.25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleParams {
    pub eps: f64,
    pub steps: usize,
    /// Defaults to `2^(steps + 1)`.
    pub cap: Option<usize>,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_order")]
    pub order: usize,
}

fn default_width() -> f64 {
    0.5
}

fn default_order() -> usize {
    16
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arithmetic {
    #[default]
    Exact,
    Float,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonParams {
    pub truncation: usize,
    /// Coefficients of the target as `"p/q"` strings.
    pub y: Vec<String>,
    /// Coefficients of the start; defaults to `1`.
    pub x0: Option<Vec<String>>,
    #[serde(default = "default_newton_steps")]
    pub steps: usize,
    #[serde(default)]
    pub mode: Arithmetic,
    #[serde(default)]
    pub defect: usize,
    #[serde(default = "default_width")]
    pub radius: f64,
}

fn default_newton_steps() -> usize {
    12
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriveParams {
    /// Scalar surrogate `x -> lambda_n x^2` along the perturbative schedule.
    Contraction {
        a: SequenceSpec,
        alpha: f64,
        beta: f64,
        b: SequenceSpec,
        /// Found by halving from 1 when absent.
        t: Option<f64>,
        x0: f64,
        steps: usize,
    },
    /// Scalar surrogate `x -> (M_n x^2 + N_n x) / 2` along the KAM schedule.
    Kam {
        a: SequenceSpec,
        b: SequenceSpec,
        #[serde(default = "unit")]
        k: f64,
        #[serde(default = "unit")]
        q: f64,
        #[serde(default = "unit")]
        l: f64,
        #[serde(default = "unit")]
        m: f64,
        eps: f64,
        c_phase_exponent: f64,
        t: f64,
        x0: f64,
        steps: usize,
    },
}

//! JSON files read and written by the commands.

use std::fs;
use std::path::Path;

use riskauction_core::{Error, Instance, Mechanism, Utility};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::commands::CliError;

/// Utility as written in an instance file. `beta` may sit here or at the top
/// level of the file and defaults to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum UtilitySpec {
    Exponential {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    Linear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<f64>,
    },
    Quadratic {
        #[serde(rename = "L")]
        shift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub values: Vec<f64>,
    pub pmf: Vec<f64>,
    /// Explicit payment grid; otherwise `z_max` and `grid_size` give an
    /// evenly spaced grid from 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payments: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    pub n: usize,
    pub utility: UtilitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

fn field_error(field: &str, message: impl Into<String>) -> CliError {
    CliError::Input(format!("instance field `{field}`: {}", message.into()))
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        let utility = match *inst.utility() {
            Utility::Exponential { alpha, beta } => UtilitySpec::Exponential { alpha, beta: Some(beta) },
            Utility::Linear { slope } => UtilitySpec::Linear { slope: Some(slope) },
            Utility::Quadratic { beta, shift } => UtilitySpec::Quadratic { shift, beta: Some(beta) },
        };
        InstanceFile {
            values: inst.values().to_vec(),
            pmf: inst.pmf().to_vec(),
            payments: Some(inst.payments().to_vec()),
            z_max: None,
            grid_size: None,
            n: inst.n(),
            utility,
            beta: None,
        }
    }

    fn payments(&self) -> Result<Vec<f64>, CliError> {
        match (&self.payments, self.z_max, self.grid_size) {
            (Some(p), None, None) => Ok(p.clone()),
            (None, Some(z), Some(size)) => {
                if size < 2 {
                    return Err(field_error("grid_size", format!("needs at least 2 points, got {size}")));
                }
                Ok((0..size).map(|j| z * j as f64 / (size - 1) as f64).collect())
            }
            (Some(_), _, _) => Err(field_error("payments", "give either payments or z_max with grid_size, not both")),
            (None, None, _) => Err(field_error("payments", "missing; give payments or z_max with grid_size")),
            (None, Some(_), None) => Err(field_error("grid_size", "required with z_max")),
        }
    }

    pub fn to_instance(&self) -> Result<Instance, CliError> {
        let beta = |inner: Option<f64>| -> Result<f64, CliError> {
            match (inner, self.beta) {
                (Some(_), Some(_)) => Err(field_error("beta", "given both in utility and at top level")),
                (Some(b), None) | (None, Some(b)) => Ok(b),
                (None, None) => Ok(1.0),
            }
        };
        let utility = match self.utility {
            UtilitySpec::Exponential { alpha, beta: b } => Utility::exponential(alpha, beta(b)?),
            UtilitySpec::Linear { slope } => {
                if self.beta.is_some() {
                    return Err(field_error("beta", "linear utility takes `slope`"));
                }
                Utility::linear(slope.unwrap_or(1.0))
            }
            UtilitySpec::Quadratic { shift, beta: b } => Utility::quadratic(beta(b)?, shift),
        };
        let payments = self.payments()?;
        Instance::new(self.values.clone(), self.pmf.clone(), payments, self.n, utility).map_err(|e| match e {
            Error::InvalidInstance { field, message } => field_error(field, message),
            other => CliError::Input(other.to_string()),
        })
    }
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{what} file {}: {e}", path.display())))
}

pub fn read_instance(path: &Path) -> Result<Instance, CliError> {
    read_json::<InstanceFile>(path, "instance")?.to_instance()
}

pub fn read_mechanism(path: &Path) -> Result<Mechanism, CliError> {
    read_json(path, "mechanism")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

//! Experiment configuration. Every key is optional; unknown keys are
//! rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use dyadlab_core::grid::{make_grid, DyadicGrid};
use dyadlab_core::ValueSpace;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub dim: usize,
    pub levels: usize,
    pub shift: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            dim: 1,
            levels: 3,
            shift: Vec::new(),
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> LabResult<DyadicGrid> {
        Ok(make_grid(self.dim, self.levels, &self.shift)?)
    }
}

/// Values in `ℓ^q_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValueSpec {
    pub n: usize,
    pub q: f64,
}

impl Default for ValueSpec {
    fn default() -> Self {
        ValueSpec { n: 1, q: 2.0 }
    }
}

impl ValueSpec {
    pub fn space(&self) -> LabResult<ValueSpace> {
        let s = ValueSpace::Vector {
            n: self.n,
            q: self.q,
        };
        s.validate()?;
        Ok(s)
    }
}

/// A symbol given inline: `n_out × n_in` row-major blocks per finest cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSymbol {
    pub n_out: usize,
    pub n_in: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<InlineSymbol>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_shifts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sphere_points: Option<usize>,
    /// `exact` or `monte-carlo`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    /// Built-in kernel name or path to a kernel header file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_level: Option<usize>,
    /// Minimal far-field radius in support sides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmax: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cz_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Symmetry-check tolerance for kernels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Far-field tail tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<f64>,
    /// Cauchy tolerance of the weak boundedness quadrature.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wbp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub values: ValueSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    pub params: Params,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> LabResult<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configs serialize");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn p(&self) -> f64 {
        self.params.p.unwrap_or(2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"grid": {"dim": 1, "levles": 2}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"sed": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"params": {"fixtur": "x"}}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"grid": {"levels": 2}, "seed": 9}"#).unwrap();
        assert_eq!((c.grid.dim, c.grid.levels, c.seed), (1, 2, 9));
    }

    #[test]
    fn json_round_trip() {
        let mut c = ExperimentConfig::default();
        c.params.p = Some(1.0 / 3.0 + 1.0);
        c.params.n_list = Some(vec![1, 2, 16]);
        c.params.symbol = Some(InlineSymbol {
            n_out: 1,
            n_in: 1,
            values: vec![0.1, -7.25e-300],
        });
        c.grid.shift = vec![0.3];
        c.tolerances.tol = Some(1e-7);
        c.output = Some(PathBuf::from("out/x"));
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }
}

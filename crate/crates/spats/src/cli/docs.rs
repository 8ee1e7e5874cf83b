//! JSON document schemas for models, graphs, weights and scenarios, plus
//! their conversion into core types.

use super::CliError;
use crate::decompose::{self, PartitionedLinearModel, SystemKind};
use crate::matlib::{Matrix, Vector};
use crate::protocol::{self, CommGraph, CouplingChoice, SynthesisWeights};
use crate::sim::{Horizon, Scenario};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Matrix, CliError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::Input(format!("{what} must be a non-empty matrix")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Input(format!("{what} has ragged rows")));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullBlocks {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionedBlocks {
    #[serde(rename = "A1")]
    pub a1: Vec<Vec<f64>>,
    #[serde(rename = "A2")]
    pub a2: Vec<Vec<f64>>,
    #[serde(rename = "A3")]
    pub a3: Vec<Vec<f64>>,
    #[serde(rename = "A4")]
    pub a4: Vec<Vec<f64>>,
    #[serde(rename = "B1")]
    pub b1: Vec<Vec<f64>>,
    #[serde(rename = "B2")]
    pub b2: Vec<Vec<f64>>,
}

/// Plant description: either full matrices or pre-partitioned blocks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub name: String,
    pub kind: String,
    pub epsilon: f64,
    /// Free-form note, e.g. the exact rational behind the decimal epsilon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_note: Option<String>,
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<FullBlocks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitioned: Option<PartitionedBlocks>,
}

impl ModelDocument {
    pub fn kind(&self) -> Result<SystemKind, CliError> {
        match self.kind.as_str() {
            "continuous" => Ok(SystemKind::Continuous),
            "discrete" => Ok(SystemKind::Discrete),
            other => Err(CliError::Input(format!(
                "kind must be \"continuous\" or \"discrete\", got {other:?}"
            ))),
        }
    }

    pub fn to_model(&self, epsilon_override: Option<f64>) -> Result<PartitionedLinearModel, CliError> {
        let kind = self.kind()?;
        let epsilon = epsilon_override.unwrap_or(self.epsilon);
        match (&self.full, &self.partitioned) {
            (Some(full), None) => {
                let a = matrix_from_rows(&full.a, "A")?;
                let b = matrix_from_rows(&full.b, "B")?;
                if b.ncols() != self.m {
                    return Err(CliError::Input(format!(
                        "B has {} columns but m = {}",
                        b.ncols(),
                        self.m
                    )));
                }
                Ok(decompose::partition_full_model(&a, &b, self.n1, self.n2, epsilon, kind)?)
            }
            (None, Some(p)) => {
                let model = PartitionedLinearModel::new(
                    kind,
                    matrix_from_rows(&p.a1, "A1")?,
                    matrix_from_rows(&p.a2, "A2")?,
                    matrix_from_rows(&p.a3, "A3")?,
                    matrix_from_rows(&p.a4, "A4")?,
                    matrix_from_rows(&p.b1, "B1")?,
                    matrix_from_rows(&p.b2, "B2")?,
                    epsilon,
                )?;
                if model.n1 != self.n1 || model.n2 != self.n2 || model.n_inputs != self.m {
                    return Err(CliError::Input(
                        "declared n1/n2/m disagree with the block dimensions".into(),
                    ));
                }
                Ok(model)
            }
            _ => Err(CliError::Input(
                "exactly one of \"full\" or \"partitioned\" must be present".into(),
            )),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&raw)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDocument {
    pub adjacency: Vec<Vec<f64>>,
    pub pinning: Vec<f64>,
}

impl GraphDocument {
    pub fn to_graph(&self) -> Result<CommGraph, CliError> {
        let adjacency = matrix_from_rows(&self.adjacency, "adjacency")?;
        let pinning = Vector::from_vec(self.pinning.clone());
        Ok(protocol::build_graph(&adjacency, &pinning)?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&raw)?)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WeightsDocument {
    #[serde(rename = "Q_s", default, skip_serializing_if = "Option::is_none")]
    pub q_s: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Q_f", default, skip_serializing_if = "Option::is_none")]
    pub q_f: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R_s", default, skip_serializing_if = "Option::is_none")]
    pub r_s: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R_f", default, skip_serializing_if = "Option::is_none")]
    pub r_f: Option<Vec<Vec<f64>>>,
}

impl WeightsDocument {
    pub fn to_weights(
        &self,
        kind: SystemKind,
        n1: usize,
        n2: usize,
        m: usize,
    ) -> Result<SynthesisWeights, CliError> {
        let mut w = SynthesisWeights::defaults(kind, n1, n2, m);
        if let Some(q) = &self.q_s {
            w.q_slow = matrix_from_rows(q, "Q_s")?;
        }
        if let Some(q) = &self.q_f {
            w.q_fast = matrix_from_rows(q, "Q_f")?;
        }
        if let Some(r) = &self.r_s {
            w.r_slow = matrix_from_rows(r, "R_s")?;
        }
        if let Some(r) = &self.r_f {
            w.r_fast = matrix_from_rows(r, "R_f")?;
        }
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&raw)?)
    }
}

/// Coupling specification: `"auto"`, a single gain, or a per-subsystem pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    Single(f64),
    Pair { c_s: f64, c_f: f64 },
    Keyword(String),
}

impl CouplingSpec {
    pub fn to_choice(&self) -> Result<CouplingChoice, CliError> {
        match self {
            CouplingSpec::Single(c) => Ok(CouplingChoice::Single(*c)),
            CouplingSpec::Pair { c_s, c_f } => Ok(CouplingChoice::Pair {
                c_s: *c_s,
                c_f: *c_f,
            }),
            CouplingSpec::Keyword(k) if k == "auto" => Ok(CouplingChoice::Auto),
            CouplingSpec::Keyword(k) => Err(CliError::Input(format!(
                "coupling must be \"auto\", a number, or {{c_s, c_f}}, got {k:?}"
            ))),
        }
    }

    /// Parses a command-line value: `auto`, a float, or a rational `p/q`.
    pub fn parse_arg(raw: &str) -> Result<Self, CliError> {
        let raw = raw.trim();
        if raw == "auto" {
            return Ok(CouplingSpec::Keyword("auto".into()));
        }
        if let Some((num, den)) = raw.split_once('/') {
            let p: f64 = num
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("bad coupling value {raw:?}")))?;
            let q: f64 = den
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("bad coupling value {raw:?}")))?;
            if q == 0.0 {
                return Err(CliError::Input("coupling denominator is zero".into()));
            }
            return Ok(CouplingSpec::Single(p / q));
        }
        let c: f64 = raw
            .parse()
            .map_err(|_| CliError::Input(format!("bad coupling value {raw:?}")))?;
        Ok(CouplingSpec::Single(c))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path(String),
    Inline(Box<ModelDocument>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitsDocument {
    pub leader: Vec<f64>,
    pub followers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json_path: Option<String>,
    #[serde(default)]
    pub plot: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelRef,
    pub graph: GraphDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSpec>,
    pub inits: InitsDocument,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settle_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputsDocument>,
}

impl ScenarioDocument {
    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let doc: ScenarioDocument = serde_json::from_str(&raw)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((doc, base))
    }

    /// Builds the runnable scenario; `base_dir` anchors relative model paths.
    pub fn to_scenario(&self, base_dir: &Path, newton_tol: f64) -> Result<Scenario, CliError> {
        let model = match &self.model {
            ModelRef::Path(rel) => {
                let path = base_dir.join(rel);
                ModelDocument::load(&path)?.to_model(None)?
            }
            ModelRef::Inline(doc) => doc.to_model(None)?,
        };
        if self.inits.followers.is_empty() {
            return Err(CliError::Input("scenario needs at least one follower".into()));
        }
        let graph = self.graph.to_graph()?;
        let decomp = decompose::decompose_with(&model, newton_tol, decompose::NEWTON_MAX_ITER)?;
        let weights = self
            .weights
            .clone()
            .unwrap_or_default()
            .to_weights(model.kind, model.n1, model.n2, model.n_inputs)?;
        let choice = match &self.coupling {
            Some(spec) => spec.to_choice()?,
            None => CouplingChoice::Auto,
        };
        let gains = protocol::synthesize(model.kind, &decomp, &graph, &weights, choice)?;
        let horizon = match model.kind {
            SystemKind::Continuous => Horizon::Seconds(self.horizon),
            SystemKind::Discrete => {
                if self.horizon <= 0.0 || self.horizon.fract() != 0.0 {
                    return Err(CliError::Input(
                        "discrete horizon must be a positive whole number of steps".into(),
                    ));
                }
                Horizon::Steps(self.horizon as usize)
            }
        };
        Ok(Scenario {
            leader_init: Vector::from_vec(self.inits.leader.clone()),
            follower_inits: self
                .inits
                .followers
                .iter()
                .map(|f| Vector::from_vec(f.clone()))
                .collect(),
            model,
            decomp,
            graph,
            gains,
            horizon,
            step: self.step,
            settle_threshold: self.settle_threshold.unwrap_or(1e-2),
        })
    }
}

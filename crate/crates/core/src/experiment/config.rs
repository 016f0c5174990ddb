use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::approximator::{Architecture, ModelKind};
use crate::dbaw::{GammaSchedule, TaskMap, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::pde::{BatchCounts, ProblemDef, ProblemKind};
use crate::trainer::{TrainConfig, Weighting};

/// Environment variable naming the directory that relative output paths
/// are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "PIKAN_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingKind {
    Fixed,
    Dbaw,
}

/// Everything needed to reproduce one training run.
///
/// Optional fields whose defaults depend on the problem or model (`widths`,
/// `eval_grid`, `weights`, `output_dir`, `label`) are filled in by
/// [`ExperimentConfig::resolve`]; a resolved config has every one of them set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    #[serde(default = "defaults::model")]
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<usize>>,
    #[serde(default = "defaults::grid_size")]
    pub grid_size: usize,
    #[serde(default = "defaults::degree")]
    pub degree: usize,
    #[serde(default = "defaults::weighting")]
    pub weighting: WeightingKind,
    /// Fixed weights per task (`r`, `ic`, `bc`); unit weights by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<TaskMap<f64>>,
    #[serde(default = "defaults::gamma_max")]
    pub gamma_max: f64,
    #[serde(default = "defaults::gamma_min")]
    pub gamma_min: f64,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::lr")]
    pub lr_theta: f64,
    #[serde(default = "defaults::lr")]
    pub lr_sigma: f64,
    #[serde(default = "defaults::n_r")]
    pub n_r: usize,
    #[serde(default = "defaults::n_edge")]
    pub n_bc: usize,
    #[serde(default = "defaults::n_edge")]
    pub n_ic: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_grid: Option<[usize; 2]>,
    #[serde(default = "defaults::eval_every")]
    pub eval_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_clip: Option<f64>,
    #[serde(default)]
    pub smoothness: f64,
    #[serde(default = "defaults::chunk_size")]
    pub chunk_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Method name used in comparison tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

mod defaults {
    use crate::approximator::ModelKind;

    use super::WeightingKind;

    pub fn model() -> ModelKind {
        ModelKind::Kan
    }
    pub fn grid_size() -> usize {
        20
    }
    pub fn degree() -> usize {
        4
    }
    pub fn weighting() -> WeightingKind {
        WeightingKind::Dbaw
    }
    pub fn gamma_max() -> f64 {
        100.0
    }
    pub fn gamma_min() -> f64 {
        1.0
    }
    pub fn alpha() -> f64 {
        1e-4
    }
    pub fn epsilon() -> f64 {
        super::DEFAULT_EPSILON
    }
    pub fn epochs() -> usize {
        50_000
    }
    pub fn lr() -> f64 {
        1e-3
    }
    pub fn n_r() -> usize {
        5000
    }
    pub fn n_edge() -> usize {
        400
    }
    pub fn eval_every() -> usize {
        100
    }
    pub fn chunk_size() -> usize {
        64
    }
}

/// Every key accepted at the top level of a config file.
pub const CONFIG_KEYS: &[&str] = &[
    "problem",
    "model",
    "widths",
    "grid_size",
    "degree",
    "weighting",
    "weights",
    "gamma_max",
    "gamma_min",
    "alpha",
    "epsilon",
    "epochs",
    "lr_theta",
    "lr_sigma",
    "n_r",
    "n_bc",
    "n_ic",
    "seed",
    "eval_grid",
    "eval_every",
    "grad_clip",
    "smoothness",
    "chunk_size",
    "output_dir",
    "label",
];

fn parse_error(e: serde_json::Error) -> Error {
    Error::ConfigParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn check_keys(value: &Value) -> Result<()> {
    let obj = value.as_object().ok_or_else(|| Error::ConfigParse {
        line: 1,
        column: 1,
        message: "config must be a JSON object".into(),
    })?;
    for key in obj.keys() {
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::UnknownKey(key.clone()));
        }
    }
    Ok(())
}

/// Default hidden widths: the PIKAN and PINN architectures of the benchmark
/// tables.
pub fn default_widths(model: ModelKind) -> Vec<usize> {
    match model {
        ModelKind::Kan => vec![2, 20, 20, 20, 1],
        ModelKind::Mlp => vec![2, 64, 64, 64, 64, 64, 64, 1],
    }
}

impl ExperimentConfig {
    /// Config for `problem` with plain defaults. Problem- and model-dependent
    /// fields (widths, grid, label, output directory) stay unset until
    /// [`resolve`](Self::resolve), so they follow any later edits.
    pub fn new(problem: ProblemKind) -> Self {
        let mut obj = serde_json::Map::new();
        obj.insert("problem".into(), Value::String(problem.name().into()));
        Self::from_value(Value::Object(obj)).expect("defaults are valid")
    }

    /// Parses config text. Syntax and type errors carry line and column;
    /// unknown keys are reported by name. The result is not yet resolved.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(parse_error)?;
        check_keys(&value)?;
        serde_json::from_str(text).map_err(parse_error)
    }

    /// Builds a config from a JSON value (e.g. a parsed file with CLI
    /// overrides merged in).
    pub fn from_value(value: Value) -> Result<Self> {
        check_keys(&value)?;
        serde_json::from_value(value).map_err(|e| Error::constraint("config", e.to_string()))
    }

    /// Fills problem-dependent defaults and validates every field.
    pub fn resolve(mut self) -> Result<Self> {
        let problem = ProblemDef::from_kind(self.problem);
        let widths = self.widths.get_or_insert_with(|| default_widths(self.model));
        if widths.len() < 2 || widths[0] != 2 || *widths.last().expect("non-empty") != 1 {
            return Err(Error::constraint(
                "widths",
                format!("must start with the input dimension 2 and end with 1, got {widths:?}"),
            ));
        }
        if widths.contains(&0) {
            return Err(Error::constraint("widths", "every layer needs at least one unit"));
        }
        self.eval_grid.get_or_insert_with(|| problem.default_grid());
        if self.weighting == WeightingKind::Fixed {
            let weights = self
                .weights
                .get_or_insert_with(|| TaskMap::from_pairs(problem.tasks().iter().map(|&t| (t, 1.0))));
            for &t in problem.tasks() {
                match weights.get(t) {
                    Some(w) if w.is_finite() && *w >= 0.0 => {}
                    Some(_) => {
                        return Err(Error::constraint(
                            "weights",
                            format!("weight for `{t}` must be finite and non-negative"),
                        ))
                    }
                    None => {
                        return Err(Error::constraint(
                            "weights",
                            format!("missing weight for task `{t}`"),
                        ))
                    }
                }
            }
            if let Some(extra) = weights.tasks().find(|t| !problem.tasks().contains(t)) {
                return Err(Error::constraint(
                    "weights",
                    format!("{} has no `{extra}` loss", self.problem),
                ));
            }
        }
        if self.model == ModelKind::Kan {
            if self.grid_size == 0 {
                return Err(Error::constraint("grid_size", "must be positive"));
            }
            if self.degree > crate::bspline::MAX_DEGREE {
                return Err(Error::constraint(
                    "degree",
                    format!("at most {} is supported", crate::bspline::MAX_DEGREE),
                ));
            }
        }
        self.schedule_checked()?;
        self.train_config().validate()?;
        let label = self
            .label
            .get_or_insert_with(|| default_label(self.model, self.weighting));
        if label.is_empty() {
            return Err(Error::constraint("label", "must not be empty"));
        }
        self.output_dir.get_or_insert_with(|| {
            PathBuf::from(format!(
                "{}_{}_{}_seed{}",
                self.problem,
                self.model,
                match self.weighting {
                    WeightingKind::Fixed => "fixed",
                    WeightingKind::Dbaw => "dbaw",
                },
                self.seed
            ))
        });
        Ok(self)
    }

    fn schedule_checked(&self) -> Result<GammaSchedule> {
        let s = GammaSchedule {
            gamma_max: self.gamma_max,
            gamma_min: self.gamma_min,
            alpha: self.alpha,
            epsilon: self.epsilon,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn problem_def(&self) -> ProblemDef {
        ProblemDef::from_kind(self.problem)
    }

    pub fn architecture(&self) -> Architecture {
        let problem = self.problem_def();
        Architecture {
            model: self.model,
            widths: self.widths.clone().unwrap_or_else(|| default_widths(self.model)),
            grid_size: self.grid_size,
            degree: self.degree,
            input_lo: problem.lo,
            input_hi: problem.hi,
        }
    }

    pub fn weighting(&self) -> Result<Weighting> {
        Ok(match self.weighting {
            WeightingKind::Dbaw => Weighting::Dbaw {
                schedule: self.schedule_checked()?,
            },
            WeightingKind::Fixed => match &self.weights {
                Some(w) => Weighting::Fixed { weights: *w },
                None => Weighting::unit(&self.problem_def()),
            },
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr_theta: self.lr_theta,
            lr_sigma: self.lr_sigma,
            counts: BatchCounts {
                n_r: self.n_r,
                n_bc: self.n_bc,
                n_ic: self.n_ic,
            },
            seed: self.seed,
            eval_every: self.eval_every,
            eval_grid: self
                .eval_grid
                .unwrap_or_else(|| self.problem_def().default_grid()),
            grad_clip: self.grad_clip,
            smoothness: self.smoothness,
            chunk_size: self.chunk_size,
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| default_label(self.model, self.weighting))
    }

    /// Run directory: `output_dir`, with relative paths placed under `root`.
    pub fn run_dir(&self, root: &Path) -> PathBuf {
        let dir = self.output_dir.clone().unwrap_or_default();
        if dir.is_absolute() {
            dir
        } else {
            root.join(dir)
        }
    }

    /// Pretty JSON of the config (the echo written next to run outputs).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Canonical content hash (SHA-256 of the compact JSON encoding without
    /// `output_dir`, which does not influence results).
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canon = self.clone();
        canon.output_dir = None;
        let bytes = serde_json::to_vec(&canon).expect("config serialises");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn default_label(model: ModelKind, weighting: WeightingKind) -> String {
    let base = match model {
        ModelKind::Kan => "PIKAN",
        ModelKind::Mlp => "PINN",
    };
    match weighting {
        WeightingKind::Fixed => base.to_string(),
        WeightingKind::Dbaw => format!("DBAW-{base}"),
    }
}

/// Reads, parses and resolves a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::parse(&fs::read_to_string(path)?)?.resolve()
}

/// Reads a config file (or starts from `{}`) and applies `key = value`
/// overrides. Values are parsed as JSON when possible and taken as strings
/// otherwise, so `--epochs 200` and `--problem helmholtz` both work.
pub fn load_with_overrides(path: Option<&Path>, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut value = match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            if overrides.is_empty() {
                // Type errors keep their position in the file.
                return ExperimentConfig::parse(&text)?.resolve();
            }
            let v: Value = serde_json::from_str(&text).map_err(parse_error)?;
            check_keys(&v)?;
            v
        }
        None => Value::Object(serde_json::Map::new()),
    };
    let obj = value.as_object_mut().ok_or_else(|| Error::ConfigParse {
        line: 1,
        column: 1,
        message: "config must be a JSON object".into(),
    })?;
    for (key, raw) in overrides {
        let key = key.replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::UnknownKey(key));
        }
        let parsed = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        obj.insert(key, parsed);
    }
    ExperimentConfig::from_value(value)?.resolve()
}

//! Dynamically bounded adaptive loss weighting.
//!
//! Each loss task `j` owns a trainable `log σ_j`. Its weight is
//!
//! ```text
//! λ_j = min( 1 / (σ_j² + 1/γ(t) + ε), γ(t) ),   γ(t) = γ_max·exp(−α t) + γ_min
//! ```
//!
//! and the total objective is `Σ_j λ_j L_j + log(σ_j² + 1/γ(t))`. The bound
//! `γ(t)` is a fixed schedule: it enters the tape as a constant.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

/// Loss components of a physics-informed objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "r")]
    Residual,
    #[serde(rename = "ic")]
    Initial,
    #[serde(rename = "bc")]
    Boundary,
}

impl Task {
    /// Fixed iteration order used everywhere (history columns, sums).
    pub const ALL: [Task; 3] = [Task::Residual, Task::Initial, Task::Boundary];

    pub fn label(self) -> &'static str {
        match self {
            Task::Residual => "r",
            Task::Initial => "ic",
            Task::Boundary => "bc",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A small map keyed by [`Task`], iterated in [`Task::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskMap<T> {
    slots: [Option<T>; 3],
}

impl<T> Default for TaskMap<T> {
    fn default() -> Self {
        Self {
            slots: [None, None, None],
        }
    }
}

impl<T> TaskMap<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Task, T)>) -> Self {
        let mut m = Self::new();
        for (k, v) in pairs {
            m.insert(k, v);
        }
        m
    }

    pub fn insert(&mut self, task: Task, value: T) -> Option<T> {
        self.slots[task.slot()].replace(value)
    }

    pub fn get(&self, task: Task) -> Option<&T> {
        self.slots[task.slot()].as_ref()
    }

    pub fn get_mut(&mut self, task: Task) -> Option<&mut T> {
        self.slots[task.slot()].as_mut()
    }

    pub fn contains(&self, task: Task) -> bool {
        self.slots[task.slot()].is_some()
    }

    pub fn len(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tasks(&self) -> impl Iterator<Item = Task> + '_ {
        Task::ALL.into_iter().filter(|t| self.contains(*t))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Task, &T)> + '_ {
        Task::ALL.into_iter().filter_map(|t| self.get(t).map(|v| (t, v)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(Task, &T) -> U) -> TaskMap<U> {
        TaskMap::from_pairs(self.iter().map(|(t, v)| (t, f(t, v))))
    }
}

impl<T> std::ops::Index<Task> for TaskMap<T> {
    type Output = T;

    /// Panics when `task` is absent.
    fn index(&self, task: Task) -> &T {
        self.get(task)
            .unwrap_or_else(|| panic!("task {task} missing from map"))
    }
}

impl<T: Serialize> Serialize for TaskMap<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.len()))?;
        for (t, v) in self.iter() {
            map.serialize_entry(&t, v)?;
        }
        map.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for TaskMap<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = std::collections::BTreeMap::<Task, T>::deserialize(d)?;
        Ok(Self::from_pairs(entries))
    }
}

/// Per-task scalar loss nodes on a tape.
pub type LossBundle = TaskMap<Var>;

/// `γ(t) = γ_max·exp(−α t) + γ_min` and the stabilising `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSchedule {
    pub gamma_max: f64,
    pub gamma_min: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

pub const DEFAULT_EPSILON: f64 = 1e-12;

impl Default for GammaSchedule {
    fn default() -> Self {
        Self {
            gamma_max: 100.0,
            gamma_min: 1.0,
            alpha: 1e-4,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl GammaSchedule {
    pub fn new(gamma_max: f64, gamma_min: f64, alpha: f64) -> Result<Self> {
        let s = Self {
            gamma_max,
            gamma_min,
            alpha,
            epsilon: DEFAULT_EPSILON,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_min > 0.0 && self.gamma_min.is_finite()) {
            return Err(Error::constraint("gamma_min", "must be positive and finite"));
        }
        if !(self.gamma_max > self.gamma_min) {
            return Err(Error::constraint("gamma_max", "must exceed gamma_min"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::constraint("alpha", "must be positive and finite"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::constraint("epsilon", "must be positive"));
        }
        Ok(())
    }

    /// Upper bound on every weight at epoch `t`.
    pub fn gamma(&self, t: usize) -> f64 {
        self.gamma_max * (-self.alpha * t as f64).exp() + self.gamma_min
    }
}

/// `γ(t)` for the schedule carried by `state`.
pub fn gamma_bound(t: usize, state: &DbawState) -> f64 {
    state.schedule.gamma(t)
}

/// `min(1/(σ² + 1/γ + ε), γ)` with `σ² = exp(2 log σ)`, evaluated with the
/// same operation sequence as the taped version.
pub fn clamped_weight(log_sigma: f64, gamma: f64, epsilon: f64) -> f64 {
    let s2 = (0.0 + 2.0 * log_sigma).exp();
    let denom = (1.0 / gamma + epsilon) + 1.0 * s2;
    let smooth = 1.0 / denom;
    if smooth < gamma {
        smooth
    } else {
        gamma
    }
}

/// Trainable log-variances plus the bound schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct DbawState {
    pub log_sigma: TaskMap<f64>,
    pub schedule: GammaSchedule,
}

impl DbawState {
    /// All `log σ_j` start at zero.
    pub fn new(tasks: &[Task], schedule: GammaSchedule) -> Result<Self> {
        schedule.validate()?;
        if tasks.is_empty() {
            return Err(Error::InvalidSize("at least one task is required".into()));
        }
        Ok(Self {
            log_sigma: TaskMap::from_pairs(tasks.iter().map(|&t| (t, 0.0))),
            schedule,
        })
    }

    pub fn tasks(&self) -> Vec<Task> {
        self.log_sigma.tasks().collect()
    }

    pub fn gamma(&self, t: usize) -> f64 {
        self.schedule.gamma(t)
    }

    /// `λ_j` for every task at epoch `t`.
    pub fn adaptive_weights(&self, t: usize) -> TaskMap<f64> {
        let gamma = self.gamma(t);
        self.log_sigma
            .map(|_, &ls| clamped_weight(ls, gamma, self.schedule.epsilon))
    }

    /// Flat `log σ` vector in task order.
    pub fn flat(&self) -> Vec<f64> {
        self.log_sigma.iter().map(|(_, v)| *v).collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let tasks = self.tasks();
        assert_eq!(tasks.len(), values.len());
        for (t, v) in tasks.into_iter().zip(values) {
            self.log_sigma.insert(t, *v);
        }
    }

    /// Registers each `log σ_j` as a trainable leaf, in task order.
    pub fn register(&self, tape: &mut Tape) -> TaskMap<Var> {
        let block = tape.register_params(&self.flat());
        let mut vars = TaskMap::new();
        for (i, t) in self.log_sigma.tasks().enumerate() {
            vars.insert(t, block.var(i));
        }
        vars
    }
}

fn lookup<T: Copy>(map: &TaskMap<T>, task: Task) -> Result<T> {
    map.get(task).copied().ok_or(Error::MissingTask(task))
}

/// `σ_j²` as a tape node.
fn variance(tape: &mut Tape, log_sigma: Var) -> Var {
    let twice = tape.affine(0.0, &[(2.0, log_sigma)]);
    tape.exp(twice)
}

/// `Σ_j [λ_j L_j + log(σ_j² + 1/γ(t))]`. Gradients reach both the losses and
/// every `log σ_j`; `γ(t)` is a constant.
pub fn adaptive_total_loss(
    tape: &mut Tape,
    bundle: &LossBundle,
    state: &DbawState,
    log_sigma: &TaskMap<Var>,
    t: usize,
) -> Result<Var> {
    let gamma = state.gamma(t);
    let eps = state.schedule.epsilon;
    let one = tape.constant(1.0);
    let cap = tape.constant(gamma);
    let mut weighted = Vec::with_capacity(bundle.len());
    let mut regs = Vec::with_capacity(bundle.len());
    for (task, &loss) in bundle.iter() {
        let ls = lookup(log_sigma, task)?;
        let s2 = variance(tape, ls);
        let denom = tape.affine(1.0 / gamma + eps, &[(1.0, s2)]);
        let smooth = tape.div(one, denom);
        let lambda = tape.min(smooth, cap);
        weighted.push((lambda, loss));
        let inner = tape.affine(1.0 / gamma, &[(1.0, s2)]);
        regs.push((1.0, tape.ln(inner)));
    }
    let data = tape.dot(&weighted);
    regs.insert(0, (1.0, data));
    Ok(tape.affine(0.0, &regs))
}

/// `Σ_j w_j L_j` with fixed weights.
pub fn fixed_total_loss(tape: &mut Tape, bundle: &LossBundle, weights: &TaskMap<f64>) -> Result<Var> {
    let mut terms = Vec::with_capacity(bundle.len());
    for (task, &loss) in bundle.iter() {
        terms.push((lookup(weights, task)?, loss));
    }
    Ok(tape.affine(0.0, &terms))
}

/// Homoscedastic-uncertainty objective `Σ_j [L_j/(2σ_j²) + ½ log σ_j²]`,
/// without the bound.
pub fn uncertainty_nll_loss(tape: &mut Tape, bundle: &LossBundle, log_sigma: &TaskMap<Var>) -> Result<Var> {
    let mut pairs = Vec::with_capacity(bundle.len());
    let mut logs = Vec::with_capacity(bundle.len() + 1);
    for (task, &loss) in bundle.iter() {
        let ls = lookup(log_sigma, task)?;
        let neg = tape.affine(0.0, &[(-2.0, ls)]);
        let inv = tape.exp(neg);
        pairs.push((inv, loss));
        // ½ log σ² = log σ.
        logs.push((1.0, ls));
    }
    let data = tape.dot(&pairs);
    logs.insert(0, (0.5, data));
    Ok(tape.affine(0.0, &logs))
}

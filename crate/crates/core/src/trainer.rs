//! Optimisation loop: Adam on the network parameters and, under adaptive
//! weighting, a second Adam on the per-task `log σ`.
//!
//! Each epoch draws a fresh batch, records the squared-error sums of every
//! task on small reusable tapes (one chunk of points at a time), and reduces
//! them onto a tiny head tape holding only the task means and `log σ`. One
//! reverse sweep of the head tape yields `∂L_total/∂L_j` and the `log σ`
//! gradient; the network gradient is `Σ_j (∂L_total/∂L_j) · ∇L_j`. The chunk
//! and task order are fixed, so runs are bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::{Approximator, KanNetwork, KanScratch, Network};
use crate::autodiff::{Arith, Jet2, OnTape, Tape};
use crate::dbaw::{adaptive_total_loss, fixed_total_loss, DbawState, GammaSchedule, Task, TaskMap};
use crate::error::{Error, Result};
use crate::pde::{sample_batch, task_sum_sq, BatchCounts, PointBatch, ProblemDef};

/// Bias-corrected Adam with `β₁ = 0.9`, `β₂ = 0.999`, `eps = 1e-8` by default.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One update of `params` in place. A non-finite gradient rejects the
    /// whole step and leaves both parameters and moments untouched.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!(
                "Adam holds {} moments, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::update`].
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    state.update(params, grads)
}

/// `‖pred − truth‖₂ / ‖truth‖₂`.
pub fn relative_l2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "relative L2 needs equal non-empty lengths, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let den: f64 = truth.iter().map(|t| t * t).sum();
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let num: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Weighting {
    /// Constant `λ_j`.
    Fixed { weights: TaskMap<f64> },
    /// Learned `log σ_j` clamped by the decaying bound.
    Dbaw { schedule: GammaSchedule },
}

impl Weighting {
    /// All fixed weights equal to one for the tasks of `problem`.
    pub fn unit(problem: &ProblemDef) -> Self {
        Weighting::Fixed {
            weights: TaskMap::from_pairs(problem.tasks().iter().map(|&t| (t, 1.0))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Weighting::Fixed { .. } => "fixed",
            Weighting::Dbaw { .. } => "dbaw",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr_theta: f64,
    pub lr_sigma: f64,
    pub counts: BatchCounts,
    pub seed: u64,
    /// Validate every this many epochs (and always after the last epoch).
    pub eval_every: usize,
    pub eval_grid: [usize; 2],
    /// Optional global-norm clip on the network gradient.
    pub grad_clip: Option<f64>,
    /// Weight of the spline-coefficient roughness penalty (KAN only).
    pub smoothness: f64,
    /// Points per tape chunk.
    pub chunk_size: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_theta > 0.0 && self.lr_theta.is_finite()) {
            return Err(Error::constraint("lr_theta", "must be positive and finite"));
        }
        if !(self.lr_sigma >= 0.0 && self.lr_sigma.is_finite()) {
            return Err(Error::constraint("lr_sigma", "must be non-negative and finite"));
        }
        if self.counts.n_r == 0 || self.counts.n_bc == 0 || self.counts.n_ic == 0 {
            return Err(Error::constraint("counts", "every batch count must be positive"));
        }
        if self.eval_every == 0 {
            return Err(Error::constraint("eval_every", "must be positive"));
        }
        if self.eval_grid[0] == 0 || self.eval_grid[1] == 0 {
            return Err(Error::constraint("eval_grid", "both dimensions must be positive"));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::constraint("grad_clip", "must be positive and finite"));
            }
        }
        if !(self.smoothness >= 0.0 && self.smoothness.is_finite()) {
            return Err(Error::constraint("smoothness", "must be non-negative and finite"));
        }
        if self.chunk_size == 0 {
            return Err(Error::constraint("chunk_size", "must be positive"));
        }
        Ok(())
    }
}

/// One history row.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// `γ(t)` under adaptive weighting.
    pub gamma: Option<f64>,
    pub lambdas: TaskMap<f64>,
    pub losses: TaskMap<f64>,
    pub log_sigma: TaskMap<f64>,
    pub total: f64,
    /// Validation relative L2 after this epoch's update, when evaluated.
    pub val_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub rows: Vec<EpochRecord>,
    /// `0` when no evaluated epoch improved on the initial parameters.
    pub best_epoch: usize,
    pub best_l2: f64,
    pub best_params: Vec<f64>,
    pub final_l2: f64,
    pub final_log_sigma: TaskMap<f64>,
}

/// Precomputed validation grid and reference values.
#[derive(Debug, Clone)]
pub struct Validator {
    pub points: Vec<[f64; 2]>,
    pub truth: Vec<f64>,
}

impl Validator {
    pub fn new(problem: &ProblemDef, shape: [usize; 2]) -> Self {
        let points = problem.grid_points(shape);
        let truth = points.iter().map(|&p| problem.solution(p)).collect();
        Self { points, truth }
    }

    pub fn predictions(&self, net: &Network) -> Vec<f64> {
        self.points.iter().map(|&p| net.eval(p)).collect()
    }

    pub fn relative_l2(&self, net: &Network) -> Result<f64> {
        relative_l2(&self.predictions(net), &self.truth)
    }
}

/// Scratch buffers reused across epochs.
struct Workspace {
    engine: TaskGradient,
    task_grads: Vec<Vec<f64>>,
    grad: Vec<f64>,
}

/// How [`TaskGradient`] differentiates the squared errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientPath {
    /// Record chunks of points on a general tape.
    Tape,
    /// Hand-fused KAN jet adjoint, one point at a time (KAN networks only).
    Fused,
}

/// The point error as a function of the model jet: a parameter-free
/// approximator whose six "parameters" are the jet components.
struct PinnedJet;

impl Approximator for PinnedJet {
    fn value<A: Arith>(&self, ctx: &mut A, _x: [f64; 2]) -> A::V {
        ctx.param(0)
    }

    fn jet<A: Arith>(&self, ctx: &mut A, _x: [f64; 2]) -> Jet2<A::V> {
        Jet2 {
            v: ctx.param(0),
            d1: [ctx.param(1), ctx.param(2)],
            d2: [ctx.param(3), ctx.param(4), ctx.param(5)],
        }
    }
}

/// Squared-error sums of one task over a batch together with their
/// parameter gradients, with buffers reused between calls.
pub struct TaskGradient {
    path: GradientPath,
    chunk_size: usize,
    tape: Tape,
    adj: Vec<f64>,
    kan: KanScratch,
    pin: Tape,
    pin_adj: Vec<f64>,
}

impl TaskGradient {
    /// The fastest path available for `net`.
    pub fn for_network(net: &Network, chunk_size: usize) -> Self {
        let path = match net {
            Network::Kan(_) => GradientPath::Fused,
            Network::Mlp(_) => GradientPath::Tape,
        };
        Self::with_path(path, chunk_size)
    }

    pub fn with_path(path: GradientPath, chunk_size: usize) -> Self {
        Self {
            path,
            chunk_size: chunk_size.max(1),
            tape: Tape::new(),
            adj: Vec::new(),
            kan: KanScratch::default(),
            pin: Tape::new(),
            pin_adj: Vec::new(),
        }
    }

    pub fn path(&self) -> GradientPath {
        self.path
    }

    /// `Σ_points err²` of `task` on `batch`; its gradient is added to `grad`.
    pub fn sum_sq(
        &mut self,
        problem: &ProblemDef,
        net: &Network,
        task: Task,
        batch: &PointBatch,
        grad: &mut [f64],
    ) -> Result<f64> {
        match (self.path, net) {
            (GradientPath::Fused, Network::Kan(kan)) => self.fused(problem, kan, task, batch, grad),
            (GradientPath::Fused, Network::Mlp(_)) => Err(Error::constraint(
                "gradient path",
                "the fused path is only available for KAN networks",
            )),
            (GradientPath::Tape, _) => self.taped(problem, net, task, batch, grad),
        }
    }

    fn taped(
        &mut self,
        problem: &ProblemDef,
        net: &Network,
        task: Task,
        batch: &PointBatch,
        grad: &mut [f64],
    ) -> Result<f64> {
        let n = batch.count(task);
        let mut sum = 0.0;
        let mut start = 0;
        while start < n {
            let end = (start + self.chunk_size).min(n);
            self.tape.clear();
            let s = {
                let mut ctx = OnTape::with_params(&mut self.tape, net.params());
                task_sum_sq(problem, net, &mut ctx, task, batch, start..end)
            };
            sum += self.tape.value(s);
            self.tape
                .accumulate_gradient(&[(s, 1.0)], &mut self.adj, grad, 1.0)?;
            start = end;
        }
        Ok(sum)
    }

    fn fused(
        &mut self,
        problem: &ProblemDef,
        kan: &KanNetwork,
        task: Task,
        batch: &PointBatch,
        grad: &mut [f64],
    ) -> Result<f64> {
        let mut sum = 0.0;
        let mut seed = [0.0; 6];
        for idx in 0..batch.count(task) {
            let x = match task {
                Task::Residual => batch.interior[idx],
                Task::Boundary => batch.boundary[idx].x,
                Task::Initial => batch.initial[idx].x,
            };
            let u = kan.jet_forward(&mut self.kan, x);
            self.pin.clear();
            let comps = [u.v, u.d1[0], u.d1[1], u.d2[0], u.d2[1], u.d2[2]];
            let s = {
                let mut ctx = OnTape::with_params(&mut self.pin, &comps);
                task_sum_sq(problem, &PinnedJet, &mut ctx, task, batch, idx..idx + 1)
            };
            sum += self.pin.value(s);
            seed.fill(0.0);
            self.pin
                .accumulate_gradient(&[(s, 1.0)], &mut self.pin_adj, &mut seed, 1.0)?;
            let seed_jet = Jet2 {
                v: seed[0],
                d1: [seed[1], seed[2]],
                d2: [seed[3], seed[4], seed[5]],
            };
            kan.jet_backward(&mut self.kan, &seed_jet, grad);
        }
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        Ok(sum)
    }
}

/// Per-epoch RNG: the run seed selects the key, the epoch the stream.
pub fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    rng
}

/// Runs `config.epochs` epochs on `net` in place; `on_epoch` sees each
/// history row as soon as it is complete.
pub fn train(
    problem: &ProblemDef,
    net: &mut Network,
    weighting: &Weighting,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord) -> Result<()>,
) -> Result<TrainRecord> {
    config.validate()?;
    let tasks = problem.tasks();
    let mut dbaw = match weighting {
        Weighting::Dbaw { schedule } => Some(DbawState::new(tasks, *schedule)?),
        Weighting::Fixed { weights } => {
            for &t in tasks {
                if !weights.contains(t) {
                    return Err(Error::MissingTask(t));
                }
            }
            None
        }
    };
    let validator = Validator::new(problem, config.eval_grid);
    let n_params = net.param_count();
    let mut adam_theta = AdamState::new(n_params, config.lr_theta);
    let mut adam_sigma = AdamState::new(tasks.len(), config.lr_sigma);
    let mut ws = Workspace {
        engine: TaskGradient::for_network(net, config.chunk_size),
        task_grads: vec![vec![0.0; n_params]; tasks.len()],
        grad: vec![0.0; n_params],
    };

    let initial_l2 = validator.relative_l2(net)?;
    let mut best_epoch = 0;
    let mut best_l2 = initial_l2;
    let mut best_params = net.params().to_vec();
    let mut last_l2 = initial_l2;
    let mut rows = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let batch = sample_batch(problem, config.counts, &mut epoch_rng(config.seed, epoch));

        // Per-task sums and their parameter gradients.
        let mut means = TaskMap::new();
        for (slot, &task) in tasks.iter().enumerate() {
            let n = batch.count(task);
            if n == 0 {
                return Err(Error::EmptyBatch(task.label()));
            }
            let g = &mut ws.task_grads[slot];
            g.iter_mut().for_each(|x| *x = 0.0);
            let sum = ws.engine.sum_sq(problem, net, task, &batch, g)?;
            means.insert(task, sum / n as f64);
        }

        // Head tape: total loss as a function of the task means and log σ.
        let mut head = Tape::new();
        let mean_block = head.register_params(&tasks.iter().map(|&t| means[t]).collect::<Vec<_>>());
        let bundle = TaskMap::from_pairs(tasks.iter().enumerate().map(|(i, &t)| (t, mean_block.var(i))));
        let (total_var, lambdas, gamma, sigma_vars) = match (&dbaw, weighting) {
            (Some(state), _) => {
                let ls = state.register(&mut head);
                let total = adaptive_total_loss(&mut head, &bundle, state, &ls, epoch)?;
                (
                    total,
                    state.adaptive_weights(epoch),
                    Some(state.gamma(epoch)),
                    true,
                )
            }
            (None, Weighting::Fixed { weights }) => {
                let total = fixed_total_loss(&mut head, &bundle, weights)?;
                let lambdas = TaskMap::from_pairs(tasks.iter().map(|&t| (t, weights[t])));
                (total, lambdas, None, false)
            }
            (None, Weighting::Dbaw { .. }) => unreachable!("state exists for adaptive runs"),
        };
        let head_grad = head.backward(total_var)?;
        let mut total = head.value(total_var);

        ws.grad.iter_mut().for_each(|x| *x = 0.0);
        for (slot, &task) in tasks.iter().enumerate() {
            let scale = head_grad[slot] / batch.count(task) as f64;
            for (g, tg) in ws.grad.iter_mut().zip(&ws.task_grads[slot]) {
                *g += scale * tg;
            }
        }
        if config.smoothness > 0.0 {
            total += net.smoothness_penalty(config.smoothness, &mut ws.grad);
        }
        if !total.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        if let Some(clip) = config.grad_clip {
            let norm = ws.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > clip {
                let s = clip / norm;
                ws.grad.iter_mut().for_each(|g| *g *= s);
            }
        }

        let log_sigma_before = dbaw.as_ref().map(|s| s.log_sigma).unwrap_or_default();
        adam_theta.update(net.params_mut(), &ws.grad)?;
        if let (Some(state), true) = (dbaw.as_mut(), sigma_vars) {
            let mut flat = state.flat();
            adam_sigma.update(&mut flat, &head_grad[tasks.len()..])?;
            state.set_flat(&flat);
        }

        let val_l2 = if epoch % config.eval_every == 0 || epoch == config.epochs {
            let l2 = validator.relative_l2(net)?;
            last_l2 = l2;
            if l2 < best_l2 {
                best_l2 = l2;
                best_epoch = epoch;
                best_params.copy_from_slice(net.params());
            }
            Some(l2)
        } else {
            None
        };

        let row = EpochRecord {
            epoch,
            gamma,
            lambdas,
            losses: means,
            log_sigma: log_sigma_before,
            total,
            val_l2,
        };
        on_epoch(&row)?;
        rows.push(row);
    }

    Ok(TrainRecord {
        rows,
        best_epoch,
        best_l2,
        best_params,
        final_l2: last_l2,
        final_log_sigma: dbaw.map(|s| s.log_sigma).unwrap_or_default(),
    })
}

//! Benchmark problems: Klein–Gordon, viscous Burgers and Helmholtz.
//!
//! Every problem lives on a 2-D box. Axis 0 is always the spatial `x`;
//! axis 1 is time `t` for the evolution problems and `y` for Helmholtz.

mod burgers;

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::Approximator;
use crate::autodiff::{Arith, Jet2};
use crate::dbaw::{Task, TaskMap};
use crate::error::{Error, Result};

pub use burgers::{burgers_reference, sin_pi, BurgersReference, GaussHermite, DEFAULT_HERMITE_NODES};

/// `u(x, t) = x cos(5πt) + (xt)³`.
pub fn kg_exact(x: f64, t: f64) -> f64 {
    x * (5.0 * PI * t).cos() + (x * t).powi(3)
}

/// `u_tt − u_xx + u³` of [`kg_exact`], derived in closed form.
pub fn kg_forcing(x: f64, t: f64) -> f64 {
    let u = kg_exact(x, t);
    -25.0 * PI * PI * x * (5.0 * PI * t).cos() + 6.0 * x.powi(3) * t - 6.0 * x * t.powi(3) + u.powi(3)
}

/// Analytic jet of [`kg_exact`] in `(x, t)`.
pub fn kg_exact_jet(x: f64, t: f64) -> Jet2<f64> {
    let (s, c) = (5.0 * PI * t).sin_cos();
    Jet2 {
        v: kg_exact(x, t),
        d1: [
            c + 3.0 * x * x * t.powi(3),
            -5.0 * PI * x * s + 3.0 * x.powi(3) * t * t,
        ],
        d2: [
            6.0 * x * t.powi(3),
            -5.0 * PI * s + 9.0 * x * x * t * t,
            -25.0 * PI * PI * x * c + 6.0 * x.powi(3) * t,
        ],
    }
}

/// `u_tt − u_xx + u³ − f`.
pub fn kg_residual<A: Arith>(ctx: &mut A, u: &Jet2<A::V>, forcing: f64) -> A::V {
    let cube = ctx.powi(u.v, 3);
    ctx.affine(-forcing, &[(1.0, u.d2[2]), (-1.0, u.d2[0]), (1.0, cube)])
}

/// `u_t + u u_x − ν u_xx`.
pub fn burgers_residual<A: Arith>(ctx: &mut A, u: &Jet2<A::V>, nu: f64) -> A::V {
    let adv = ctx.mul(u.v, u.d1[0]);
    ctx.affine(0.0, &[(1.0, u.d1[1]), (1.0, adv), (-nu, u.d2[0])])
}

/// `sin(a₁πx) sin(a₂πy)`.
pub fn helmholtz_exact(x: f64, y: f64, a1: f64, a2: f64) -> f64 {
    sin_pi(a1 * x) * sin_pi(a2 * y)
}

/// `(k² − (a₁π)² − (a₂π)²) · u`.
pub fn helmholtz_forcing(x: f64, y: f64, k: f64, a1: f64, a2: f64) -> f64 {
    (k * k - (a1 * PI).powi(2) - (a2 * PI).powi(2)) * helmholtz_exact(x, y, a1, a2)
}

/// Analytic jet of [`helmholtz_exact`] in `(x, y)`.
pub fn helmholtz_exact_jet(x: f64, y: f64, a1: f64, a2: f64) -> Jet2<f64> {
    let (sx, cx) = (sin_pi(a1 * x), (a1 * PI * x).cos());
    let (sy, cy) = (sin_pi(a2 * y), (a2 * PI * y).cos());
    let (w1, w2) = (a1 * PI, a2 * PI);
    Jet2 {
        v: sx * sy,
        d1: [w1 * cx * sy, w2 * sx * cy],
        d2: [-w1 * w1 * sx * sy, w1 * w2 * cx * cy, -w2 * w2 * sx * sy],
    }
}

/// `u_xx + u_yy + k² u − q`.
pub fn helmholtz_residual<A: Arith>(ctx: &mut A, u: &Jet2<A::V>, k: f64, q: f64) -> A::V {
    ctx.affine(-q, &[(1.0, u.d2[0]), (1.0, u.d2[2]), (k * k, u.v)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    #[serde(rename = "klein_gordon", alias = "kg", alias = "klein-gordon")]
    KleinGordon,
    #[serde(rename = "burgers")]
    Burgers,
    #[serde(rename = "helmholtz")]
    Helmholtz,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [
        ProblemKind::KleinGordon,
        ProblemKind::Burgers,
        ProblemKind::Helmholtz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::KleinGordon => "klein_gordon",
            ProblemKind::Burgers => "burgers",
            ProblemKind::Helmholtz => "helmholtz",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "klein_gordon" | "klein-gordon" | "kg" => Some(ProblemKind::KleinGordon),
            "burgers" => Some(ProblemKind::Burgers),
            "helmholtz" => Some(ProblemKind::Helmholtz),
            _ => None,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A segment of the boundary: coordinate `axis` pinned at `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub axis: usize,
    pub value: f64,
}

/// Fully specified benchmark problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDef {
    pub kind: ProblemKind,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    /// Burgers viscosity.
    pub nu: f64,
    /// Helmholtz wave number and mode numbers.
    pub k: f64,
    pub a1: f64,
    pub a2: f64,
    reference: Option<BurgersReference>,
}

impl ProblemDef {
    pub fn klein_gordon() -> Self {
        Self {
            kind: ProblemKind::KleinGordon,
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
            nu: 0.0,
            k: 0.0,
            a1: 0.0,
            a2: 0.0,
            reference: None,
        }
    }

    /// `ν = 0.01/π`, `u(x,0) = −sin(πx)`, `u(±1,t) = 0`, `t ∈ [0,1]`.
    pub fn burgers() -> Self {
        Self::burgers_with(0.01 / PI, DEFAULT_HERMITE_NODES).expect("default Burgers setup is valid")
    }

    pub fn burgers_with(nu: f64, hermite_nodes: usize) -> Result<Self> {
        Ok(Self {
            kind: ProblemKind::Burgers,
            lo: [-1.0, 0.0],
            hi: [1.0, 1.0],
            nu,
            k: 0.0,
            a1: 0.0,
            a2: 0.0,
            reference: Some(BurgersReference::new(nu, hermite_nodes)?),
        })
    }

    /// `k = 1`, `a₁ = 1`, `a₂ = 4` on `[−1,1]²`.
    pub fn helmholtz() -> Self {
        Self {
            kind: ProblemKind::Helmholtz,
            lo: [-1.0, -1.0],
            hi: [1.0, 1.0],
            nu: 0.0,
            k: 1.0,
            a1: 1.0,
            a2: 4.0,
            reference: None,
        }
    }

    pub fn from_kind(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::KleinGordon => Self::klein_gordon(),
            ProblemKind::Burgers => Self::burgers(),
            ProblemKind::Helmholtz => Self::helmholtz(),
        }
    }

    /// Loss terms in the fixed order used for weights and history columns.
    pub fn tasks(&self) -> &'static [Task] {
        match self.kind {
            ProblemKind::Helmholtz => &[Task::Residual, Task::Boundary],
            _ => &[Task::Residual, Task::Initial, Task::Boundary],
        }
    }

    pub fn axis_names(&self) -> [&'static str; 2] {
        match self.kind {
            ProblemKind::Helmholtz => ["x", "y"],
            _ => ["x", "t"],
        }
    }

    /// Boundary segments carrying Dirichlet data.
    pub fn boundary_edges(&self) -> Vec<BoundaryEdge> {
        let mut edges = vec![
            BoundaryEdge {
                axis: 0,
                value: self.lo[0],
            },
            BoundaryEdge {
                axis: 0,
                value: self.hi[0],
            },
        ];
        if self.kind == ProblemKind::Helmholtz {
            edges.push(BoundaryEdge {
                axis: 1,
                value: self.lo[1],
            });
            edges.push(BoundaryEdge {
                axis: 1,
                value: self.hi[1],
            });
        }
        edges
    }

    /// Exact solution (KG, Helmholtz) or quadrature reference (Burgers).
    pub fn solution(&self, p: [f64; 2]) -> f64 {
        match self.kind {
            ProblemKind::KleinGordon => kg_exact(p[0], p[1]),
            ProblemKind::Burgers => match &self.reference {
                Some(r) => r.eval(p[0], p[1]),
                None => burgers_reference(p[0], p[1], self.nu),
            },
            ProblemKind::Helmholtz => helmholtz_exact(p[0], p[1], self.a1, self.a2),
        }
    }

    /// Analytic solution jet where a closed form exists.
    pub fn exact_jet(&self, p: [f64; 2]) -> Option<Jet2<f64>> {
        match self.kind {
            ProblemKind::KleinGordon => Some(kg_exact_jet(p[0], p[1])),
            ProblemKind::Burgers => None,
            ProblemKind::Helmholtz => Some(helmholtz_exact_jet(p[0], p[1], self.a1, self.a2)),
        }
    }

    /// Dirichlet data on the boundary.
    pub fn boundary_value(&self, p: [f64; 2]) -> f64 {
        match self.kind {
            ProblemKind::KleinGordon => kg_exact(p[0], p[1]),
            ProblemKind::Burgers | ProblemKind::Helmholtz => 0.0,
        }
    }

    /// Initial displacement `h(x)` and, for second-order-in-time problems,
    /// initial velocity `g₂(x)`.
    pub fn initial_data(&self, x: f64) -> Option<(f64, Option<f64>)> {
        match self.kind {
            ProblemKind::KleinGordon => Some((kg_exact(x, 0.0), Some(0.0))),
            ProblemKind::Burgers => Some((-sin_pi(x), None)),
            ProblemKind::Helmholtz => None,
        }
    }

    pub fn forcing(&self, p: [f64; 2]) -> f64 {
        match self.kind {
            ProblemKind::KleinGordon => kg_forcing(p[0], p[1]),
            ProblemKind::Burgers => 0.0,
            ProblemKind::Helmholtz => helmholtz_forcing(p[0], p[1], self.k, self.a1, self.a2),
        }
    }

    /// PDE residual of the jet `u` at `p`.
    pub fn residual<A: Arith>(&self, ctx: &mut A, u: &Jet2<A::V>, p: [f64; 2]) -> A::V {
        match self.kind {
            ProblemKind::KleinGordon => kg_residual(ctx, u, kg_forcing(p[0], p[1])),
            ProblemKind::Burgers => burgers_residual(ctx, u, self.nu),
            ProblemKind::Helmholtz => {
                let q = helmholtz_forcing(p[0], p[1], self.k, self.a1, self.a2);
                helmholtz_residual(ctx, u, self.k, q)
            }
        }
    }

    /// Default evaluation grid shape (axis 0 × axis 1).
    pub fn default_grid(&self) -> [usize; 2] {
        match self.kind {
            ProblemKind::Helmholtz => [256, 256],
            _ => [256, 100],
        }
    }

    /// Tensor grid with inclusive endpoints, axis 0 outermost.
    pub fn grid_points(&self, shape: [usize; 2]) -> Vec<[f64; 2]> {
        let axis = |a: usize| -> Vec<f64> { linspace(self.lo[a], self.hi[a], shape[a]) };
        let (g0, g1) = (axis(0), axis(1));
        let mut pts = Vec::with_capacity(g0.len() * g1.len());
        for &x in &g0 {
            for &y in &g1 {
                pts.push([x, y]);
            }
        }
        pts
    }

    pub fn solution_grid(&self, shape: [usize; 2]) -> Vec<f64> {
        self.grid_points(shape)
            .into_iter()
            .map(|p| self.solution(p))
            .collect()
    }
}

/// `n` evenly spaced points on `[lo, hi]`; the endpoints are hit exactly.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub x: [f64; 2],
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialPoint {
    pub x: [f64; 2],
    pub value: f64,
    pub velocity: Option<f64>,
}

/// Collocation points for one optimisation step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointBatch {
    pub interior: Vec<[f64; 2]>,
    pub boundary: Vec<BoundaryPoint>,
    pub initial: Vec<InitialPoint>,
}

impl PointBatch {
    pub fn count(&self, task: Task) -> usize {
        match task {
            Task::Residual => self.interior.len(),
            Task::Initial => self.initial.len(),
            Task::Boundary => self.boundary.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchCounts {
    pub n_r: usize,
    pub n_bc: usize,
    pub n_ic: usize,
}

/// Splits `n` into `parts` near-equal shares, earlier parts taking the
/// remainder.
fn equal_shares(n: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|p| n / parts + usize::from(p < n % parts))
        .collect()
}

/// Uniform i.i.d. draws: interior points over the open box, boundary points
/// in equal shares per edge, initial points along `t = lo₁`.
pub fn sample_batch<R: Rng>(problem: &ProblemDef, counts: BatchCounts, rng: &mut R) -> PointBatch {
    let (lo, hi) = (problem.lo, problem.hi);
    let mut batch = PointBatch {
        interior: (0..counts.n_r)
            .map(|_| [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])])
            .collect(),
        ..PointBatch::default()
    };

    let edges = problem.boundary_edges();
    for (edge, n) in edges.iter().zip(equal_shares(counts.n_bc, edges.len())) {
        let free = 1 - edge.axis;
        for _ in 0..n {
            let mut x = [0.0; 2];
            x[edge.axis] = edge.value;
            x[free] = rng.random_range(lo[free]..=hi[free]);
            batch.boundary.push(BoundaryPoint {
                x,
                target: problem.boundary_value(x),
            });
        }
    }

    if problem.tasks().contains(&Task::Initial) {
        for _ in 0..counts.n_ic {
            let x = [rng.random_range(lo[0]..=hi[0]), lo[1]];
            let (value, velocity) = problem.initial_data(x[0]).expect("problem has initial data");
            batch.initial.push(InitialPoint { x, value, velocity });
        }
    }
    batch
}

/// Sum of squared errors of one task over `range` of that task's points.
/// The initial-condition task adds the velocity mismatch when the problem
/// prescribes one.
pub fn task_sum_sq<M, A>(
    problem: &ProblemDef,
    model: &M,
    ctx: &mut A,
    task: Task,
    batch: &PointBatch,
    range: Range<usize>,
) -> A::V
where
    M: Approximator,
    A: Arith,
{
    let mut errs: Vec<A::V> = Vec::with_capacity(2 * range.len());
    match task {
        Task::Residual => {
            for &p in &batch.interior[range] {
                let u = model.jet(ctx, p);
                errs.push(problem.residual(ctx, &u, p));
            }
        }
        Task::Boundary => {
            for bp in &batch.boundary[range] {
                let u = model.value(ctx, bp.x);
                errs.push(ctx.affine(-bp.target, &[(1.0, u)]));
            }
        }
        Task::Initial => {
            for ip in &batch.initial[range] {
                match ip.velocity {
                    Some(g2) => {
                        let u = model.jet(ctx, ip.x);
                        errs.push(ctx.affine(-ip.value, &[(1.0, u.v)]));
                        errs.push(ctx.affine(-g2, &[(1.0, u.d1[1])]));
                    }
                    None => {
                        let u = model.value(ctx, ip.x);
                        errs.push(ctx.affine(-ip.value, &[(1.0, u)]));
                    }
                }
            }
        }
    }
    ctx.dot_begin();
    for &e in &errs {
        ctx.dot_push(e, e);
    }
    ctx.dot_end()
}

/// Mean-squared loss per task of `problem` over the whole batch.
pub fn loss_terms<M, A>(
    problem: &ProblemDef,
    model: &M,
    ctx: &mut A,
    batch: &PointBatch,
) -> Result<TaskMap<A::V>>
where
    M: Approximator,
    A: Arith,
{
    let mut out = TaskMap::new();
    for &task in problem.tasks() {
        let n = batch.count(task);
        if n == 0 {
            return Err(Error::EmptyBatch(task.label()));
        }
        let s = task_sum_sq(problem, model, ctx, task, batch, 0..n);
        out.insert(task, ctx.affine(0.0, &[(1.0 / n as f64, s)]));
    }
    Ok(out)
}

/// The problem's own solution viewed as a parameter-free approximator,
/// using analytic jets where they exist.
pub struct ExactSolution<'a>(pub &'a ProblemDef);

impl Approximator for ExactSolution<'_> {
    fn value<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> A::V {
        ctx.constant(self.0.solution(x))
    }

    fn jet<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> Jet2<A::V> {
        let j = self
            .0
            .exact_jet(x)
            .expect("exact jets exist only for closed-form solutions");
        j.map(|v| ctx.constant(v))
    }
}

use crate::bspline::{KnotVector, LocalBasis};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Smooth scalar functions whose derivatives up to third order are known in
/// closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Tanh,
    Silu,
    Sin,
    Cos,
    Exp,
    Log,
}

impl UnaryFn {
    /// `f^(order)(x)` for `order <= 4`.
    pub fn eval(self, order: u8, x: f64) -> f64 {
        match self {
            UnaryFn::Tanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                match order {
                    0 => t,
                    1 => s,
                    2 => -2.0 * t * s,
                    3 => s * (6.0 * t * t - 2.0),
                    4 => s * (16.0 * t - 24.0 * t * t * t),
                    _ => panic!("tanh derivative order {order} not supported"),
                }
            }
            UnaryFn::Silu => {
                let sg = sigmoid(x);
                let d1 = sg * (1.0 - sg);
                let d2 = d1 * (1.0 - 2.0 * sg);
                let d3 = d2 * (1.0 - 2.0 * sg) - 2.0 * d1 * d1;
                match order {
                    0 => x * sg,
                    1 => sg + x * d1,
                    2 => 2.0 * d1 + x * d2,
                    3 => 3.0 * d2 + x * d3,
                    4 => {
                        let d4 = d3 * (1.0 - 2.0 * sg) - 6.0 * d1 * d2;
                        4.0 * d3 + x * d4
                    }
                    _ => panic!("silu derivative order {order} not supported"),
                }
            }
            UnaryFn::Sin => match order % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            },
            UnaryFn::Cos => match order % 4 {
                0 => x.cos(),
                1 => -x.sin(),
                2 => -x.cos(),
                _ => x.sin(),
            },
            UnaryFn::Exp => x.exp(),
            UnaryFn::Log => match order {
                0 => x.ln(),
                1 => 1.0 / x,
                2 => -1.0 / (x * x),
                3 => 2.0 / (x * x * x),
                4 => -6.0 / (x * x * x * x),
                _ => panic!("log derivative order {order} not supported"),
            },
        }
    }

    /// The function and its first three derivatives at `x`, sharing the transcendental evaluation.
    /// Each entry equals the corresponding [`UnaryFn::eval`] bit for bit.
    pub fn eval_through_third(self, x: f64) -> [f64; 4] {
        match self {
            UnaryFn::Tanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                [t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0)]
            }
            UnaryFn::Silu => {
                let sg = sigmoid(x);
                let d1 = sg * (1.0 - sg);
                let d2 = d1 * (1.0 - 2.0 * sg);
                let d3 = d2 * (1.0 - 2.0 * sg) - 2.0 * d1 * d1;
                [x * sg, sg + x * d1, 2.0 * d1 + x * d2, 3.0 * d2 + x * d3]
            }
            f => [f.eval(0, x), f.eval(1, x), f.eval(2, x), f.eval(3, x)],
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Operations accepted by [`Tape::record`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Square,
    PowI(i32),
    Min,
    Tanh,
    Silu,
    Sin,
    Cos,
    Exp,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Square,
    PowI(i32),
    Min,
    /// `f^(order)(x)`.
    Unary(UnaryFn, u8),
    /// `constant + Σ partial_i · x_i`; the coefficients are the stored partials.
    Affine(f64),
    /// `Σ a_k · b_k` over operand pairs.
    Dot,
    /// `Σ_r c_r · B^(deriv)_{first+r}(x)`, operands `[x, c_first, ...]`.
    Spline {
        knots: u32,
        deriv: u8,
    },
}

/// Contiguous run of parameter leaves registered on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamBlock {
    /// Position of the first parameter in the tape's gradient vector.
    pub offset: usize,
    first_node: u32,
    pub len: usize,
}

impl ParamBlock {
    pub fn var(&self, i: usize) -> Var {
        debug_assert!(i < self.len);
        Var(self.first_node + i as u32)
    }
}

/// Append-only Wengert list. Every node stores its value and the local
/// partial derivative with respect to each operand, so reverse accumulation
/// is a single sweep over the flat operand/partial arrays.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    values: Vec<f64>,
    offsets: Vec<u32>,
    operands: Vec<u32>,
    partials: Vec<f64>,
    params: Vec<u32>,
    knots: Vec<KnotVector>,
    open_dot: Option<(u32, f64)>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize, edges: usize) -> Self {
        Self {
            ops: Vec::with_capacity(nodes),
            values: Vec::with_capacity(nodes),
            offsets: Vec::with_capacity(nodes),
            operands: Vec::with_capacity(edges),
            partials: Vec::with_capacity(edges),
            ..Default::default()
        }
    }

    /// Drops every node while keeping the allocations for reuse.
    pub fn clear(&mut self) {
        self.ops.clear();
        self.values.clear();
        self.offsets.clear();
        self.operands.clear();
        self.partials.clear();
        self.params.clear();
        self.knots.clear();
        self.open_dot = None;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of stored operand edges.
    pub fn edge_count(&self) -> usize {
        self.operands.len()
    }

    pub fn value(&self, v: Var) -> f64 {
        self.values[v.index()]
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    #[inline]
    fn push(&mut self, op: Op, value: f64) -> Var {
        debug_assert!(self.open_dot.is_none(), "node recorded inside an open dot");
        let id = self.values.len() as u32;
        self.ops.push(op);
        self.values.push(value);
        self.offsets.push(self.operands.len() as u32);
        Var(id)
    }

    /// Edge range of node `n`.
    #[inline]
    fn range(&self, n: usize) -> (usize, usize) {
        let lo = self.offsets[n] as usize;
        let hi = match self.offsets.get(n + 1) {
            Some(&h) => h as usize,
            None => self.operands.len(),
        };
        (lo, hi)
    }

    #[inline]
    fn edge(&mut self, operand: Var, partial: f64) {
        self.operands.push(operand.0);
        self.partials.push(partial);
    }

    /// A leaf that receives no gradient.
    pub fn constant(&mut self, value: f64) -> Var {
        self.push(Op::Leaf, value)
    }

    /// A single trainable leaf.
    pub fn param(&mut self, value: f64) -> Var {
        self.register_params(&[value]).var(0)
    }

    /// Registers a block of trainable leaves; gradients returned by
    /// [`Tape::backward`] follow registration order.
    pub fn register_params(&mut self, values: &[f64]) -> ParamBlock {
        let block = ParamBlock {
            offset: self.params.len(),
            first_node: self.values.len() as u32,
            len: values.len(),
        };
        for &v in values {
            let var = self.push(Op::Leaf, v);
            self.params.push(var.0);
        }
        block
    }

    /// Records one primitive operation on existing nodes.
    pub fn record(&mut self, prim: Primitive, operands: &[Var]) -> Var {
        let arity = match prim {
            Primitive::Add | Primitive::Sub | Primitive::Mul | Primitive::Div | Primitive::Min => 2,
            _ => 1,
        };
        assert_eq!(operands.len(), arity, "{prim:?} takes {arity} operand(s)");
        let a = operands[0];
        let va = self.value(a);
        match prim {
            Primitive::Add => self.add(a, operands[1]),
            Primitive::Sub => self.sub(a, operands[1]),
            Primitive::Mul => self.mul(a, operands[1]),
            Primitive::Div => self.div(a, operands[1]),
            Primitive::Min => self.min(a, operands[1]),
            Primitive::Neg => {
                let out = self.push(Op::Neg, -va);
                self.edge(a, -1.0);
                out
            }
            Primitive::Square => {
                let out = self.push(Op::Square, va * va);
                self.edge(a, 2.0 * va);
                out
            }
            Primitive::PowI(n) => self.powi(a, n),
            Primitive::Tanh => self.unary(UnaryFn::Tanh, 0, a),
            Primitive::Silu => self.unary(UnaryFn::Silu, 0, a),
            Primitive::Sin => self.unary(UnaryFn::Sin, 0, a),
            Primitive::Cos => self.unary(UnaryFn::Cos, 0, a),
            Primitive::Exp => self.unary(UnaryFn::Exp, 0, a),
            Primitive::Log => self.unary(UnaryFn::Log, 0, a),
        }
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.push(Op::Add, self.value(a) + self.value(b));
        self.edge(a, 1.0);
        self.edge(b, 1.0);
        out
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.push(Op::Sub, self.value(a) - self.value(b));
        self.edge(a, 1.0);
        self.edge(b, -1.0);
        out
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let out = self.push(Op::Mul, va * vb);
        self.edge(a, vb);
        self.edge(b, va);
        out
    }

    /// Division; a zero divisor yields a non-finite node rather than a panic.
    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let q = va / vb;
        let out = self.push(Op::Div, q);
        self.edge(a, 1.0 / vb);
        self.edge(b, -q / vb);
        out
    }

    /// `min(a, b)`; ties resolve to `b`, so a binding clamp passes no
    /// gradient to `a`.
    pub fn min(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let take_a = va < vb;
        let out = self.push(Op::Min, if take_a { va } else { vb });
        self.edge(a, if take_a { 1.0 } else { 0.0 });
        self.edge(b, if take_a { 0.0 } else { 1.0 });
        out
    }

    pub fn powi(&mut self, a: Var, n: i32) -> Var {
        let va = self.value(a);
        let out = self.push(Op::PowI(n), va.powi(n));
        let d = if n == 0 { 0.0 } else { n as f64 * va.powi(n - 1) };
        self.edge(a, d);
        out
    }

    /// `f^(order)(x)` as a node whose partial is `f^(order+1)(x)`.
    pub fn unary(&mut self, f: UnaryFn, order: u8, x: Var) -> Var {
        let vx = self.value(x);
        let out = self.push(Op::Unary(f, order), f.eval(order, vx));
        self.edge(x, f.eval(order + 1, vx));
        out
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(UnaryFn::Tanh, 0, x)
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(UnaryFn::Exp, 0, x)
    }

    /// Natural log; non-positive arguments give non-finite values.
    pub fn ln(&mut self, x: Var) -> Var {
        self.unary(UnaryFn::Log, 0, x)
    }

    /// `constant + Σ coeff_i · x_i`.
    pub fn affine(&mut self, constant: f64, terms: &[(f64, Var)]) -> Var {
        let mut acc = constant;
        for &(c, v) in terms {
            acc += c * self.value(v);
        }
        let out = self.push(Op::Affine(constant), acc);
        for &(c, v) in terms {
            self.edge(v, c);
        }
        out
    }

    /// Starts a streamed `Σ a_k b_k` node; finish with [`Tape::dot_end`].
    pub fn dot_begin(&mut self) {
        debug_assert!(self.open_dot.is_none());
        self.open_dot = Some((self.operands.len() as u32, 0.0));
    }

    #[inline]
    pub fn dot_push(&mut self, a: Var, b: Var) {
        let (va, vb) = (self.values[a.index()], self.values[b.index()]);
        match self.open_dot.as_mut() {
            Some((_, acc)) => *acc += va * vb,
            None => panic!("dot_push without dot_begin"),
        }
        self.edge(a, vb);
        self.edge(b, va);
    }

    pub fn dot_end(&mut self) -> Var {
        let (start, acc) = self.open_dot.take().expect("dot_end without dot_begin");
        // The edges were streamed before the node itself.
        let id = self.values.len() as u32;
        self.ops.push(Op::Dot);
        self.values.push(acc);
        self.offsets.push(start);
        Var(id)
    }

    pub fn dot(&mut self, pairs: &[(Var, Var)]) -> Var {
        self.dot_begin();
        for &(a, b) in pairs {
            self.dot_push(a, b);
        }
        self.dot_end()
    }

    /// Index of `kv` in the tape's knot registry, registering it if new.
    pub fn knots_id(&mut self, kv: &KnotVector) -> u32 {
        if let Some(i) = self.knots.iter().position(|k| k == kv) {
            return i as u32;
        }
        self.knots.push(kv.clone());
        (self.knots.len() - 1) as u32
    }

    /// `Σ_r c_r · B^(deriv)_{first+r}(x)` for the active basis at `x`, where
    /// `basis` was evaluated at `value(x)` with derivatives up to
    /// `deriv + 1`.
    pub fn spline(
        &mut self,
        knots: u32,
        x: Var,
        basis: &LocalBasis,
        deriv: usize,
        coeff: impl Fn(usize) -> Var,
    ) -> Var {
        debug_assert!(deriv < crate::bspline::MAX_TRACKED_DERIV);
        let value = basis.combine(deriv, |i| self.values[coeff(i).index()]);
        let dx = basis.combine(deriv + 1, |i| self.values[coeff(i).index()]);
        let out = self.push(
            Op::Spline {
                knots,
                deriv: deriv as u8,
            },
            value,
        );
        self.edge(x, dx);
        for r in 0..basis.len {
            self.edge(coeff(basis.first + r), basis.ders[deriv][r]);
        }
        out
    }

    /// Adjoint of every node for the given output seeds.
    pub fn adjoints(&self, seeds: &[(Var, f64)]) -> Vec<f64> {
        let mut adj = Vec::new();
        self.sweep(seeds, &mut adj);
        adj
    }

    fn sweep(&self, seeds: &[(Var, f64)], adj: &mut Vec<f64>) {
        adj.clear();
        adj.resize(self.values.len(), 0.0);
        let mut last = 0;
        for &(v, s) in seeds {
            adj[v.index()] += s;
            last = last.max(v.index() + 1);
        }
        for n in (0..last).rev() {
            let a = adj[n];
            if a == 0.0 {
                continue;
            }
            let (lo, hi) = self.range(n);
            for e in lo..hi {
                adj[self.operands[e] as usize] += a * self.partials[e];
            }
        }
    }

    /// Adds `scale ·` the parameter gradient of `Σ seed · node` into `grad`,
    /// using `adj` as scratch space. Non-finite contributions are rejected
    /// before `grad` is touched.
    pub fn accumulate_gradient(
        &self,
        seeds: &[(Var, f64)],
        adj: &mut Vec<f64>,
        grad: &mut [f64],
        scale: f64,
    ) -> Result<()> {
        assert_eq!(grad.len(), self.params.len(), "gradient buffer size");
        self.sweep(seeds, adj);
        if let Some(index) = self.params.iter().position(|&p| !adj[p as usize].is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        for (g, &p) in grad.iter_mut().zip(&self.params) {
            *g += scale * adj[p as usize];
        }
        Ok(())
    }

    /// Gradient of `Σ seed · node` with respect to every registered
    /// parameter, in registration order.
    pub fn gradient_seeded(&self, seeds: &[(Var, f64)]) -> Result<Vec<f64>> {
        let adj = self.adjoints(seeds);
        let grad: Vec<f64> = self.params.iter().map(|&p| adj[p as usize]).collect();
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        Ok(grad)
    }

    /// Reverse accumulation from a scalar loss node.
    pub fn backward(&self, loss: Var) -> Result<Vec<f64>> {
        self.gradient_seeded(&[(loss, 1.0)])
    }

    /// Recomputes every node from the stored leaf values.
    pub fn replay(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = Vec::with_capacity(self.values.len());
        for (n, op) in self.ops.iter().enumerate() {
            let (lo, hi) = self.range(n);
            let args = &self.operands[lo..hi];
            let coef = &self.partials[lo..hi];
            let x = |i: usize| vals[args[i] as usize];
            let v = match *op {
                Op::Leaf => self.values[n],
                Op::Add => x(0) + x(1),
                Op::Sub => x(0) - x(1),
                Op::Mul => x(0) * x(1),
                Op::Div => x(0) / x(1),
                Op::Neg => -x(0),
                Op::Square => x(0) * x(0),
                Op::PowI(k) => x(0).powi(k),
                Op::Min => {
                    if x(0) < x(1) {
                        x(0)
                    } else {
                        x(1)
                    }
                }
                Op::Unary(f, order) => f.eval(order, x(0)),
                Op::Affine(c0) => {
                    let mut acc = c0;
                    for i in 0..args.len() {
                        acc += coef[i] * x(i);
                    }
                    acc
                }
                Op::Dot => {
                    let mut acc = 0.0;
                    for k in 0..args.len() / 2 {
                        acc += x(2 * k) * x(2 * k + 1);
                    }
                    acc
                }
                Op::Spline { knots, deriv } => {
                    let kv = &self.knots[knots as usize];
                    let basis = kv.local_basis(x(0), deriv as usize + 1);
                    let start = basis.first;
                    basis.combine(deriv as usize, |i| x(1 + i - start))
                }
            };
            vals.push(v);
        }
        vals
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Operand indices of node `v`; every entry is smaller than `v`.
    pub fn operands_of(&self, v: Var) -> &[u32] {
        let (lo, hi) = self.range(v.index());
        &self.operands[lo..hi]
    }
}

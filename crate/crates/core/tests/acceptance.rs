//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Positional arguments act as a filter on the criterion keys (`c1` … `c8`,
//! or words such as `training`), so `cargo test -p pikan-core --test
//! acceptance -- c3 c5` runs just those two. The full-scale run (criterion 7)
//! only executes when `PIKAN_FULL_SCALE=1` is set.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

use pikan::approximator::{kan_param_count, mlp_param_count, Architecture, ModelKind, Network};
use pikan::autodiff::{OnTape, Tape};
use pikan::bspline::KnotVector;
use pikan::dbaw::{adaptive_total_loss, uncertainty_nll_loss, DbawState, GammaSchedule, Task, TaskMap};
use pikan::experiment::{run_experiment, run_experiment_with, ExperimentConfig, WeightingKind};
use pikan::pde::{linspace, ProblemDef, ProblemKind};

struct Verdict {
    passed: bool,
    skipped: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        skipped: false,
        detail: detail.into(),
    }
}

fn skipped(detail: impl Into<String>) -> Verdict {
    Verdict {
        passed: true,
        skipped: true,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

const CRITERIA: &[Criterion] = &[
    ("c1_param_counts", "parameter-count exactness", param_counts),
    ("c2_differentiation", "differentiation suite", differentiation),
    ("c3_splines", "spline suite", splines),
    ("c4_dbaw", "adaptive weighting suite", dbaw_suite),
    (
        "c5_references",
        "exact-solution residuals and Burgers reference",
        references,
    ),
    ("c6_training", "desk-scale training", desk_training),
    ("c7_full_scale", "full-scale reproduction", full_scale),
    ("c8_determinism", "determinism", determinism),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for &(key, name, check) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| key.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let tag = match (v.skipped, v.passed) {
            (true, _) => "SKIP",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        println!(
            "{tag} {key} {name}: {} [{:.1}s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// 1. Parameter counts
// ---------------------------------------------------------------------------

fn param_counts() -> Verdict {
    let kan = Architecture {
        model: ModelKind::Kan,
        widths: vec![2, 20, 20, 20, 1],
        grid_size: 20,
        degree: 4,
        input_lo: [-1.0, -1.0],
        input_hi: [1.0, 1.0],
    };
    let mlp = Architecture {
        model: ModelKind::Mlp,
        widths: vec![2, 64, 64, 64, 64, 64, 64, 1],
        ..kan.clone()
    };
    let kan_net = Network::seeded(&kan, 0).unwrap();
    let mlp_net = Network::seeded(&mlp, 0).unwrap();
    let counts = [
        kan_param_count(&kan.widths, 20, 4),
        kan_net.param_count(),
        kan_net.params().len(),
        mlp_param_count(&mlp.widths),
        mlp_net.param_count(),
        mlp_net.params().len(),
    ];
    verdict(
        counts[..3].iter().all(|&c| c == 22_360) && counts[3..].iter().all(|&c| c == 21_057),
        format!("KAN {} / MLP {}", counts[1], counts[4]),
    )
}

// ---------------------------------------------------------------------------
// 2. Differentiation
// ---------------------------------------------------------------------------

fn random_arch(rng: &mut ChaCha8Rng, model: ModelKind) -> Architecture {
    let (lo, hi) = ([-1.0, 0.0], [1.0, 1.0]);
    match model {
        ModelKind::Kan => Architecture {
            model,
            widths: vec![2, rng.random_range(2..=5), rng.random_range(2..=5), 1],
            grid_size: rng.random_range(3..=8),
            degree: rng.random_range(3..=5),
            input_lo: lo,
            input_hi: hi,
        },
        ModelKind::Mlp => Architecture {
            model,
            widths: vec![2, rng.random_range(3..=10), rng.random_range(3..=10), 1],
            grid_size: 0,
            degree: 0,
            input_lo: lo,
            input_hi: hi,
        },
    }
}

/// Relative error with a unit floor on the denominator.
fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Mean over `xs` of `(u + u_t/2 − Δu/10)²`: touches every jet component.
fn jet_loss(net: &Network, xs: &[[f64; 2]]) -> f64 {
    xs.iter()
        .map(|&x| {
            let j = net.eval_jet(x);
            let e = j.v + 0.5 * j.d1[1] - 0.1 * (j.d2[0] + j.d2[2]);
            e * e
        })
        .sum::<f64>()
        / xs.len() as f64
}

fn taped_jet_loss_gradient(net: &Network, xs: &[[f64; 2]]) -> Vec<f64> {
    let mut tape = Tape::new();
    let mut ctx = OnTape::with_params(&mut tape, net.params());
    let jets: Vec<_> = xs.iter().map(|&x| net.forward_jet(&mut ctx, x)).collect();
    let mut squares = Vec::new();
    for j in jets {
        let e = tape.affine(
            0.0,
            &[(1.0, j.v), (0.5, j.d1[1]), (-0.1, j.d2[0]), (-0.1, j.d2[2])],
        );
        squares.push((1.0 / xs.len() as f64, tape.mul(e, e)));
    }
    let loss = tape.affine(0.0, &squares);
    tape.backward(loss).unwrap()
}

fn differentiation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_grad, mut worst_jet) = (0.0f64, 0.0f64);
    let mut params_checked = 0;
    for model in [ModelKind::Kan, ModelKind::Mlp] {
        for _ in 0..5 {
            let arch = random_arch(&mut rng, model);
            let net = Network::seeded(&arch, rng.random()).unwrap();
            let xs: Vec<[f64; 2]> = (0..8)
                .map(|_| [rng.random_range(-0.95..0.95), rng.random_range(0.05..0.95)])
                .collect();

            let grad = taped_jet_loss_gradient(&net, &xs);
            let h = 1e-6;
            for k in 0..net.param_count() {
                let mut p = net.clone();
                p.params_mut()[k] += h;
                let up = jet_loss(&p, &xs);
                p.params_mut()[k] -= 2.0 * h;
                let fd = (up - jet_loss(&p, &xs)) / (2.0 * h);
                worst_grad = worst_grad.max(rel(grad[k], fd));
            }
            params_checked += net.param_count();

            for _ in 0..20 {
                let x = [rng.random_range(-0.9..0.9), rng.random_range(0.1..0.9)];
                worst_jet = worst_jet.max(jet_fd_error(&net, x));
            }
        }
    }
    verdict(
        worst_grad < 1e-5 && worst_jet < 1e-5,
        format!(
            "worst parameter-gradient error {worst_grad:.2e} over {params_checked} parameters, \
             worst input-derivative error {worst_jet:.2e} (limit 1e-5)"
        ),
    )
}

/// Largest relative error of the five jet derivatives against central
/// differences (step 1e-4 for first order, Richardson-extrapolated steps
/// 1e-3 and 5e-4 for second order).
fn jet_fd_error(net: &Network, x: [f64; 2]) -> f64 {
    let j = net.eval_jet(x);
    let f = |dx: f64, dy: f64| net.eval([x[0] + dx, x[1] + dy]);
    let h = 1e-4;
    let c = f(0.0, 0.0);
    let rich = |d: &dyn Fn(f64) -> f64| (4.0 * d(5e-4) - d(1e-3)) / 3.0;
    let dxx = |s: f64| (f(s, 0.0) - 2.0 * c + f(-s, 0.0)) / (s * s);
    let dyy = |s: f64| (f(0.0, s) - 2.0 * c + f(0.0, -s)) / (s * s);
    let dxy = |s: f64| (f(s, s) - f(s, -s) - f(-s, s) + f(-s, -s)) / (4.0 * s * s);
    [
        rel(j.d1[0], (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h)),
        rel(j.d1[1], (f(0.0, h) - f(0.0, -h)) / (2.0 * h)),
        rel(j.d2[0], rich(&dxx)),
        rel(j.d2[1], rich(&dxy)),
        rel(j.d2[2], rich(&dyy)),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// 3. Splines
// ---------------------------------------------------------------------------

fn splines() -> Verdict {
    let (mut unity, mut deriv, mut zero_sum) = (0.0f64, 0.0f64, 0.0f64);
    for (lo, hi, g, k) in [
        (-1.0, 1.0, 20, 4),
        (-1.0, 1.0, 10, 3),
        (0.0, 1.0, 5, 5),
        (-2.0, 3.0, 7, 2),
    ] {
        let kv = KnotVector::new(lo, hi, g, k).unwrap();
        let n = kv.basis_count();
        let dense = |x: f64, d: usize| {
            let b = kv.local_basis(x, d);
            let mut out = vec![0.0; n];
            out[b.first..b.first + b.len].copy_from_slice(&b.ders[d][..b.len]);
            out
        };
        for i in 0..1000 {
            let x = lo + (hi - lo) * i as f64 / 999.0;
            let b = kv.local_basis(x, k.min(2));
            unity = unity.max((b.ders[0][..b.len].iter().sum::<f64>() - 1.0).abs());
            for d in 1..=k.min(2) {
                zero_sum = zero_sum.max(b.ders[d][..b.len].iter().sum::<f64>().abs());
            }
            // Central differences of the order below, away from the clamped ends.
            let h = 1e-6 * (hi - lo);
            if x - h < lo || x + h > hi {
                continue;
            }
            for d in 1..=k.min(2) {
                let (up, down, exact) = (dense(x + h, d - 1), dense(x - h, d - 1), dense(x, d));
                for r in 0..n {
                    deriv = deriv.max(rel(exact[r], (up[r] - down[r]) / (2.0 * h)));
                }
            }
        }
    }
    verdict(
        unity < 1e-12 && deriv < 1e-6 && zero_sum < 1e-10,
        format!(
            "partition of unity {unity:.1e} (limit 1e-12), derivative vs differences {deriv:.1e} \
             (limit 1e-6), derivative sums {zero_sum:.1e} (limit 1e-10)"
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. Adaptive weighting
// ---------------------------------------------------------------------------

fn dbaw_suite() -> Verdict {
    let schedule = GammaSchedule::default();
    let mut notes = Vec::new();
    let mut ok = true;

    let g0 = schedule.gamma(0);
    let start_ok = g0 == schedule.gamma_max + schedule.gamma_min;
    let monotone = (0..200_000).all(|t| schedule.gamma(t + 1) < schedule.gamma(t));
    ok &= start_ok && monotone;
    notes.push(format!(
        "γ(0)={g0}, strictly decreasing over 2e5 epochs: {monotone}"
    ));

    // Full desk run: every logged weight stays within (0, γ(t)].
    let root = tempdir().unwrap();
    let mut cfg = desk_config(ProblemKind::KleinGordon, WeightingKind::Dbaw, 0, 2000);
    cfg.n_r = 500;
    cfg.eval_grid = Some([64, 32]);
    let mut violations = 0usize;
    let mut rows = 0usize;
    run_experiment_with(&cfg, root.path(), |row| {
        rows += 1;
        let gamma = row.gamma.expect("adaptive run logs γ");
        if gamma != schedule.gamma(row.epoch) {
            violations += 1;
        }
        for (_, &l) in row.lambdas.iter() {
            if !(l > 0.0 && l <= gamma) {
                violations += 1;
            }
        }
    })
    .unwrap();
    ok &= violations == 0 && rows == 2000;
    notes.push(format!("{rows}-epoch run, {violations} bound violations"));

    // log σ gradients against finite differences at random states.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tasks = [Task::Residual, Task::Initial, Task::Boundary];
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut state = DbawState::new(&tasks, schedule).unwrap();
        state.set_flat(&[
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ]);
        let losses: Vec<f64> = (0..3).map(|_| rng.random_range(1e-3..5.0)).collect();
        let t = rng.random_range(0..50_000);
        let (_, grad) = adaptive_total(&state, &losses, t);
        for i in 0..3 {
            let h = 1e-6;
            let mut flat = state.flat();
            flat[i] += h;
            let mut plus = state.clone();
            plus.set_flat(&flat);
            flat[i] -= 2.0 * h;
            let mut minus = state.clone();
            minus.set_flat(&flat);
            let fd = (adaptive_total(&plus, &losses, t).0 - adaptive_total(&minus, &losses, t).0) / (2.0 * h);
            worst = worst.max((grad[i] - fd).abs() / fd.abs().max(1e-8));
        }
    }
    ok &= worst < 1e-6;
    notes.push(format!("log σ gradient error {worst:.1e} (limit 1e-6)"));

    // With a huge bound the weighted parts equal twice the uncertainty form.
    let huge = GammaSchedule::new(1e12 - 1.0, 1.0, 1e-4).unwrap();
    let mut worst_limit = 0.0f64;
    for _ in 0..20 {
        let ls: f64 = rng.random_range(-3.0..3.0);
        let loss: f64 = rng.random_range(1e-3..10.0);
        let mut state = DbawState::new(&[Task::Residual], huge).unwrap();
        state.set_flat(&[ls]);
        let adaptive_weighted = adaptive_total(&state, &[loss], 0).0 - (f64::exp(2.0 * ls) + 1e-12).ln();
        let mut tape = Tape::new();
        let l = tape.constant(loss);
        let bundle = TaskMap::from_pairs([(Task::Residual, l)]);
        let vars = state.register(&mut tape);
        let nll = uncertainty_nll_loss(&mut tape, &bundle, &vars).unwrap();
        let nll_weighted = tape.value(nll) - ls;
        worst_limit = worst_limit.max((adaptive_weighted - 2.0 * nll_weighted).abs() / (2.0 * nll_weighted));
    }
    ok &= worst_limit < 1e-6;
    notes.push(format!("γ=1e12 limit difference {worst_limit:.1e} (limit 1e-6)"));
    verdict(ok, notes.join("; "))
}

fn adaptive_total(state: &DbawState, losses: &[f64], t: usize) -> (f64, Vec<f64>) {
    let mut tape = Tape::new();
    let tasks = state.tasks();
    let bundle = TaskMap::from_pairs(
        tasks
            .iter()
            .zip(losses)
            .map(|(&task, &l)| (task, tape.constant(l))),
    );
    let vars = state.register(&mut tape);
    let total = adaptive_total_loss(&mut tape, &bundle, state, &vars, t).unwrap();
    (tape.value(total), tape.backward(total).unwrap())
}

// ---------------------------------------------------------------------------
// 5. Reference solutions
// ---------------------------------------------------------------------------

fn references() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for kind in [ProblemKind::KleinGordon, ProblemKind::Helmholtz] {
        let problem = ProblemDef::from_kind(kind);
        for _ in 0..100 {
            let p = [
                rng.random_range(problem.lo[0]..problem.hi[0]),
                rng.random_range(problem.lo[1]..problem.hi[1]),
            ];
            let jet = problem.exact_jet(p).unwrap();
            let mut ctx = pikan::autodiff::Plain::new(&[]);
            worst = worst.max(problem.residual(&mut ctx, &jet, p).abs());
        }
    }
    let problem = ProblemDef::burgers();
    let xs = linspace(-1.0, 1.0, 256);
    let ts = linspace(0.0, 1.0, 100);
    let fd = crank_nicolson_burgers(problem.nu, 4096, 1e-4, &xs, &ts);
    let (mut num, mut den) = (0.0, 0.0);
    for (j, &t) in ts.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            num += (problem.solution([x, t]) - fd[j][i]).powi(2);
            den += fd[j][i].powi(2);
        }
    }
    let burgers = (num / den).sqrt();
    verdict(
        worst < 1e-6 && burgers < 1e-3,
        format!(
            "max |residual| {worst:.1e} over 200 points (limit 1e-6); Burgers quadrature vs \
             Crank–Nicolson relative L2 {burgers:.1e} on 256×100 (limit 1e-3)"
        ),
    )
}

/// Crank–Nicolson finite-difference solution of the viscous Burgers problem
/// (`u(x,0) = −sin πx`, homogeneous Dirichlet ends) on `cells` uniform cells,
/// sampled at `xs × ts` by linear interpolation in space and time. Advection
/// uses the current Picard iterate as transport velocity; two iterations per
/// step.
fn crank_nicolson_burgers(nu: f64, cells: usize, dt: f64, xs: &[f64], ts: &[f64]) -> Vec<Vec<f64>> {
    let dx = 2.0 / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|i| -1.0 + i as f64 * dx).collect();
    let mut u: Vec<f64> = grid.iter().map(|&x| -(PI * x).sin()).collect();
    u[0] = 0.0;
    u[cells] = 0.0;
    let sample = |u: &[f64]| -> Vec<f64> {
        xs.iter()
            .map(|&x| {
                let s = ((x + 1.0) / dx).floor().clamp(0.0, (cells - 1) as f64) as usize;
                let w = (x - grid[s]) / dx;
                (1.0 - w) * u[s] + w * u[s + 1]
            })
            .collect()
    };
    let mut out = Vec::with_capacity(ts.len());
    let mut ti = 0;
    while ti < ts.len() && ts[ti] <= 0.0 {
        out.push(sample(&u));
        ti += 1;
    }
    let (a, d) = (dt / (4.0 * dx), nu * dt / (2.0 * dx * dx));
    let n = cells - 1;
    let mut rhs = vec![0.0; n];
    let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut c, mut r) = (vec![0.0; n], vec![0.0; n]);
    let mut step = 0usize;
    while ti < ts.len() {
        for i in 1..cells {
            let adv = u[i] * (u[i + 1] - u[i - 1]);
            let dif = u[i + 1] - 2.0 * u[i] + u[i - 1];
            rhs[i - 1] = u[i] - a * adv + d * dif;
        }
        let mut iter = u.clone();
        for _ in 0..2 {
            for i in 1..cells {
                let v = iter[i];
                sub[i - 1] = -a * v - d;
                diag[i - 1] = 1.0 + 2.0 * d;
                sup[i - 1] = a * v - d;
            }
            // Thomas algorithm.
            c[0] = sup[0] / diag[0];
            r[0] = rhs[0] / diag[0];
            for k in 1..n {
                let m = diag[k] - sub[k] * c[k - 1];
                c[k] = sup[k] / m;
                r[k] = (rhs[k] - sub[k] * r[k - 1]) / m;
            }
            for k in (0..n - 1).rev() {
                r[k] -= c[k] * r[k + 1];
            }
            iter[1..cells].copy_from_slice(&r);
        }
        let (t0, t1) = (step as f64 * dt, (step + 1) as f64 * dt);
        while ti < ts.len() && ts[ti] <= t1 + 1e-12 {
            let w = ((ts[ti] - t0) / dt).clamp(0.0, 1.0);
            let (s0, s1) = (sample(&u), sample(&iter));
            out.push(s0.iter().zip(&s1).map(|(p, q)| (1.0 - w) * p + w * q).collect());
            ti += 1;
        }
        u = iter;
        step += 1;
    }
    out
}

// ---------------------------------------------------------------------------
// 6 & 7. Training
// ---------------------------------------------------------------------------

/// The desk-scale KAN: widths [2,10,10,1], G=10, k=4, 2000 residual points,
/// everything else at its default.
fn desk_config(problem: ProblemKind, weighting: WeightingKind, seed: u64, epochs: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(problem);
    c.model = ModelKind::Kan;
    c.widths = Some(vec![2, 10, 10, 1]);
    c.grid_size = 10;
    c.degree = 4;
    c.n_r = 2000;
    c.weighting = weighting;
    c.seed = seed;
    c.epochs = epochs;
    c.resolve().unwrap()
}

fn desk_training() -> Verdict {
    let root = tempdir().unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for (problem, limit) in [(ProblemKind::Helmholtz, 5e-2), (ProblemKind::KleinGordon, 1e-1)] {
        let mean = |weighting| {
            let best: Vec<f64> = (0..3)
                .map(|seed| {
                    let out =
                        run_experiment(&desk_config(problem, weighting, seed, 3000), root.path()).unwrap();
                    eprintln!(
                        "  {problem} {} seed {seed}: best {:.3e} at epoch {}, final {:.3e}, {:.0}s",
                        out.summary.label,
                        out.summary.best_l2,
                        out.summary.best_epoch,
                        out.summary.final_l2,
                        out.summary.wall_time_s
                    );
                    out.summary.best_l2
                })
                .collect();
            best.iter().sum::<f64>() / best.len() as f64
        };
        let dbaw = mean(WeightingKind::Dbaw);
        let fixed = mean(WeightingKind::Fixed);
        let reaches = dbaw < limit;
        let trend = dbaw <= 2.0 * fixed;
        ok &= reaches && trend;
        notes.push(format!(
            "{problem}: DBAW mean best {dbaw:.2e} (limit {limit:.0e}), fixed {fixed:.2e} (ratio {:.2}, limit 2)",
            dbaw / fixed
        ));
    }
    verdict(ok, notes.join("; "))
}

/// Published errors of the adaptive KAN at full scale; a run passes when it
/// lands within one order of magnitude.
fn full_scale() -> Verdict {
    if std::env::var("PIKAN_FULL_SCALE").as_deref() != Ok("1") {
        return skipped("not gated; set PIKAN_FULL_SCALE=1 to run 50,000 epochs per problem");
    }
    let root = tempdir().unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for (problem, published) in [
        (ProblemKind::KleinGordon, 8.88e-4),
        (ProblemKind::Burgers, 4.70e-4),
        (ProblemKind::Helmholtz, 4.17e-4),
    ] {
        let out = run_experiment(&ExperimentConfig::new(problem), root.path()).unwrap();
        let best = out.summary.best_l2;
        ok &= best < 10.0 * published;
        notes.push(format!("{problem}: {best:.2e} vs {published:.2e}"));
    }
    verdict(ok, notes.join("; "))
}

// ---------------------------------------------------------------------------
// 8. Determinism
// ---------------------------------------------------------------------------

fn determinism() -> Verdict {
    let root = tempdir().unwrap();
    let mut identical = true;
    let mut sizes = Vec::new();
    for (problem, weighting) in [
        (ProblemKind::Burgers, WeightingKind::Dbaw),
        (ProblemKind::Helmholtz, WeightingKind::Fixed),
    ] {
        let mut cfg = desk_config(problem, weighting, 7, 60);
        cfg.n_r = 300;
        cfg.eval_every = 10;
        cfg.eval_grid = Some([32, 32]);
        let mut histories = Vec::new();
        for run in ["first", "second"] {
            cfg.output_dir = Some(format!("{problem}_{run}").into());
            let out = run_experiment(&cfg, root.path()).unwrap();
            histories.push(fs::read(out.dir.join("history.csv")).unwrap());
        }
        identical &= histories[0] == histories[1];
        sizes.push(histories[0].len());
    }
    verdict(
        identical,
        format!("history.csv byte-identical across repeated runs ({sizes:?} bytes)"),
    )
}

//! Quick self-test of the numerical building blocks, run by the `check`
//! command. Each check is small enough to finish in well under a second.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approximator::{kan_param_count, mlp_param_count, Architecture, ModelKind, Network};
use crate::autodiff::{OnTape, Tape};
use crate::bspline::KnotVector;
use crate::dbaw::{adaptive_total_loss, DbawState, GammaSchedule, Task, TaskMap};
use crate::pde::{ExactSolution, ProblemDef, ProblemKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst < tol,
        detail: format!("worst {worst:.3e} (tolerance {tol:.0e})"),
    }
}

/// Runs every check and reports each outcome.
pub fn self_check() -> Vec<CheckOutcome> {
    vec![
        param_counts(),
        partition_of_unity(),
        jet_vs_finite_differences(),
        gradient_vs_finite_differences(),
        log_sigma_gradient(),
        exact_residuals(),
    ]
}

fn param_counts() -> CheckOutcome {
    let kan = kan_param_count(&[2, 20, 20, 20, 1], 20, 4);
    let mlp = mlp_param_count(&[2, 64, 64, 64, 64, 64, 64, 1]);
    CheckOutcome {
        name: "parameter counts",
        passed: kan == 22_360 && mlp == 21_057,
        detail: format!("KAN {kan}, MLP {mlp}"),
    }
}

fn partition_of_unity() -> CheckOutcome {
    let kv = KnotVector::new(-1.0, 1.0, 20, 4).expect("valid knots");
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let x = -1.0 + 2.0 * i as f64 / 999.0;
        let b = kv.local_basis(x, 1);
        let s0: f64 = b.ders[0][..b.len].iter().sum();
        let s1: f64 = b.ders[1][..b.len].iter().sum();
        worst = worst.max((s0 - 1.0).abs()).max(s1.abs());
    }
    outcome("spline partition of unity", worst, 1e-10)
}

fn small_arch(model: ModelKind) -> Architecture {
    Architecture {
        model,
        widths: vec![2, 4, 3, 1],
        grid_size: 6,
        degree: 3,
        input_lo: [0.0, 0.0],
        input_hi: [1.0, 1.0],
    }
}

fn jet_vs_finite_differences() -> CheckOutcome {
    let mut worst = 0.0f64;
    for model in [ModelKind::Kan, ModelKind::Mlp] {
        let net = Network::seeded(&small_arch(model), 5).expect("valid architecture");
        let x = [0.37, 0.61];
        let jet = net.eval_jet(x);
        let h = 1e-4;
        let f = |dx: f64, dy: f64| net.eval([x[0] + dx, x[1] + dy]);
        let fd1 = [
            (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h),
            (f(0.0, h) - f(0.0, -h)) / (2.0 * h),
        ];
        let fxx = (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h);
        let fyy = (f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h);
        let fxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        let pairs = [
            (jet.d1[0], fd1[0]),
            (jet.d1[1], fd1[1]),
            (jet.d2[0], fxx),
            (jet.d2[1], fxy),
            (jet.d2[2], fyy),
        ];
        for (a, b) in pairs {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    outcome("input derivatives vs finite differences", worst, 1e-5)
}

fn gradient_vs_finite_differences() -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for model in [ModelKind::Kan, ModelKind::Mlp] {
        let net = Network::seeded(&small_arch(model), 9).expect("valid architecture");
        let x = [0.52, 0.28];
        let mut tape = Tape::new();
        let mut ctx = OnTape::with_params(&mut tape, net.params());
        let j = net.forward_jet(&mut ctx, x);
        let loss = tape.affine(0.0, &[(1.0, j.v), (0.5, j.d1[0]), (0.25, j.d2[2])]);
        let grad = tape.backward(loss).expect("finite gradient");
        let functional = |n: &Network| {
            let j = n.eval_jet(x);
            j.v + 0.5 * j.d1[0] + 0.25 * j.d2[2]
        };
        for _ in 0..10 {
            let k = rng.random_range(0..net.param_count());
            let h = 1e-6;
            let (mut plus, mut minus) = (net.clone(), net.clone());
            plus.params_mut()[k] += h;
            minus.params_mut()[k] -= h;
            let fd = (functional(&plus) - functional(&minus)) / (2.0 * h);
            worst = worst.max((grad[k] - fd).abs() / fd.abs().max(1.0));
        }
    }
    outcome("parameter gradients vs finite differences", worst, 1e-5)
}

fn log_sigma_gradient() -> CheckOutcome {
    let tasks = [Task::Residual, Task::Initial, Task::Boundary];
    let mut state = DbawState::new(&tasks, GammaSchedule::default()).expect("valid schedule");
    state.set_flat(&[0.3, -0.4, 0.1]);
    let losses = [2.0, 0.5, 0.02];
    let t = 10;
    let eval = |st: &DbawState| -> (f64, Vec<f64>) {
        let mut tape = Tape::new();
        let block = tape.register_params(&losses);
        let bundle = TaskMap::from_pairs(tasks.iter().enumerate().map(|(i, &t)| (t, block.var(i))));
        let ls = st.register(&mut tape);
        let total = adaptive_total_loss(&mut tape, &bundle, st, &ls, t).expect("complete bundle");
        let g = tape.backward(total).expect("finite gradient");
        (tape.value(total), g[tasks.len()..].to_vec())
    };
    let (_, grad) = eval(&state);
    let mut worst = 0.0f64;
    for i in 0..tasks.len() {
        let h = 1e-6;
        let mut plus = state.clone();
        let mut flat = plus.flat();
        flat[i] += h;
        plus.set_flat(&flat);
        let mut minus = state.clone();
        flat[i] -= 2.0 * h;
        minus.set_flat(&flat);
        let fd = (eval(&plus).0 - eval(&minus).0) / (2.0 * h);
        worst = worst.max((grad[i] - fd).abs() / fd.abs().max(1.0));
    }
    outcome("log-variance gradient vs finite differences", worst, 1e-6)
}

fn exact_residuals() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for kind in [ProblemKind::KleinGordon, ProblemKind::Helmholtz] {
        let problem = ProblemDef::from_kind(kind);
        let exact = ExactSolution(&problem);
        for _ in 0..100 {
            let p = [
                rng.random_range(problem.lo[0]..problem.hi[0]),
                rng.random_range(problem.lo[1]..problem.hi[1]),
            ];
            let mut ctx = crate::autodiff::Plain::new(&[]);
            let u = crate::approximator::Approximator::jet(&exact, &mut ctx, p);
            worst = worst.max(problem.residual(&mut ctx, &u, p).abs());
        }
    }
    outcome("exact-solution residuals", worst, 1e-6)
}

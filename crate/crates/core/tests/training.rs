use pikan::approximator::{Architecture, ModelKind, Network};
use pikan::dbaw::{GammaSchedule, Task, TaskMap};
use pikan::pde::{sample_batch, BatchCounts, ProblemDef};
use pikan::trainer::{
    adam_step, epoch_rng, relative_l2, train, AdamState, GradientPath, TaskGradient, TrainConfig, Validator,
    Weighting,
};
use pikan::Error;

fn small_kan(problem: &ProblemDef) -> Architecture {
    Architecture {
        model: ModelKind::Kan,
        widths: vec![2, 4, 4, 1],
        grid_size: 5,
        degree: 3,
        input_lo: problem.lo,
        input_hi: problem.hi,
    }
}

fn small_mlp(problem: &ProblemDef) -> Architecture {
    Architecture {
        model: ModelKind::Mlp,
        widths: vec![2, 8, 8, 1],
        grid_size: 0,
        degree: 0,
        input_lo: problem.lo,
        input_hi: problem.hi,
    }
}

fn config(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        lr_theta: 1e-3,
        lr_sigma: 1e-3,
        counts: BatchCounts {
            n_r: 64,
            n_bc: 32,
            n_ic: 32,
        },
        seed,
        eval_every: 5,
        eval_grid: [12, 10],
        grad_clip: None,
        smoothness: 0.0,
        chunk_size: 16,
    }
}

#[test]
fn adam_leaves_parameters_alone_on_zero_gradients() {
    let mut st = AdamState::new(3, 1e-3);
    let mut p = vec![1.0, -2.0, 0.5];
    adam_step(&mut st, &mut p, &[0.0; 3]).unwrap();
    assert_eq!(p, vec![1.0, -2.0, 0.5]);
}

#[test]
fn first_adam_step_moves_by_the_learning_rate() {
    let mut st = AdamState::new(1, 1e-3);
    let mut p = vec![0.0];
    st.update(&mut p, &[1.0]).unwrap();
    // m̂ = 1, v̂ = 1, so Δ = −lr / (1 + eps).
    assert!((p[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-18);
}

#[test]
fn adam_on_a_quadratic_follows_the_scalar_recurrence() {
    let mut st = AdamState::new(1, 0.1);
    let mut p = vec![1.0];
    // Independent scalar recurrence of bias-corrected Adam.
    let (mut q, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
    let mut trace = vec![1.0f64];
    for t in 1..=100 {
        let grad = [2.0 * p[0]];
        st.update(&mut p, &grad).unwrap();
        let g = 2.0 * q;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        let mh = m / (1.0 - 0.9f64.powi(t));
        let vh = v / (1.0 - 0.999f64.powi(t));
        q -= 0.1 * mh / (vh.sqrt() + 1e-8);
        assert!((p[0] - q).abs() < 1e-14, "step {t}: {} vs {q}", p[0]);
        trace.push(q.abs());
    }
    // Steady descent until the first overshoot of the minimum, then damped
    // oscillation that ends well inside 0.1.
    assert!(trace[..11].windows(2).all(|w| w[1] < w[0]));
    assert!(p[0].abs() < 0.1);
    assert!(trace[80..].iter().all(|&a| a < 0.02));
}

#[test]
fn adam_rejects_non_finite_gradients_without_side_effects() {
    let mut st = AdamState::new(2, 1e-3);
    let mut p = vec![1.0, 2.0];
    st.update(&mut p, &[0.5, -0.5]).unwrap();
    let before = (st.clone(), p.clone());
    let err = st.update(&mut p, &[f64::NAN, 1.0]).unwrap_err();
    assert!(matches!(err, Error::NonFiniteGradient { index: 0 }));
    assert_eq!(st, before.0);
    assert_eq!(p, before.1);
    assert!(matches!(st.update(&mut p, &[1.0]), Err(Error::ShapeMismatch(_))));
}

#[test]
fn relative_l2_examples() {
    assert_eq!(relative_l2(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert!((relative_l2(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
    assert!((relative_l2(&[3.0, 0.0], &[3.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
    assert!(matches!(relative_l2(&[1.0], &[0.0]), Err(Error::ZeroDenominator)));
    assert!(matches!(
        relative_l2(&[1.0], &[1.0, 2.0]),
        Err(Error::ShapeMismatch(_))
    ));
}

#[test]
fn zero_epochs_keep_the_initial_network() {
    let problem = ProblemDef::helmholtz();
    let mut net = Network::seeded(&small_kan(&problem), 3).unwrap();
    let start = net.clone();
    let rec = train(
        &problem,
        &mut net,
        &Weighting::unit(&problem),
        &config(0, 3),
        |_| Ok(()),
    )
    .unwrap();
    assert!(rec.rows.is_empty());
    assert_eq!(rec.best_epoch, 0);
    assert_eq!(rec.best_params, start.params());
    let l2 = Validator::new(&problem, [12, 10]).relative_l2(&start).unwrap();
    assert_eq!(rec.best_l2, l2);
    assert_eq!(rec.final_l2, l2);
}

#[test]
fn fixed_weight_training_reduces_the_loss() {
    let problem = ProblemDef::helmholtz();
    let mut net = Network::seeded(&small_kan(&problem), 7).unwrap();
    let mut cfg = config(200, 7);
    cfg.lr_theta = 1e-2;
    let rec = train(&problem, &mut net, &Weighting::unit(&problem), &cfg, |_| Ok(())).unwrap();
    let first = rec.rows.first().unwrap().total;
    let last = rec.rows.last().unwrap().total;
    assert!(last < first, "{last} >= {first}");
    assert!(rec
        .rows
        .iter()
        .all(|r| r.gamma.is_none() && r.lambdas[Task::Residual] == 1.0));
}

#[test]
fn adaptive_weights_respect_the_decaying_bound() {
    let problem = ProblemDef::klein_gordon();
    let mut net = Network::seeded(&small_kan(&problem), 1).unwrap();
    let schedule = GammaSchedule::new(50.0, 1.0, 0.05).unwrap();
    let mut cfg = config(60, 1);
    cfg.lr_sigma = 0.05;
    let rec = train(
        &problem,
        &mut net,
        &Weighting::Dbaw { schedule },
        &cfg,
        |_| Ok(()),
    )
    .unwrap();
    let mut prev = f64::INFINITY;
    for row in &rec.rows {
        let g = row.gamma.unwrap();
        assert!(g < prev);
        assert_eq!(g, schedule.gamma(row.epoch));
        for (_, &lam) in row.lambdas.iter() {
            assert!(lam > 0.0 && lam <= g);
        }
        prev = g;
    }
    // The learned log σ actually moved.
    assert!(rec.final_log_sigma.iter().any(|(_, &v)| v.abs() > 1e-3));
}

#[test]
fn identical_runs_are_bit_identical() {
    for (problem, dbaw) in [(ProblemDef::burgers(), true), (ProblemDef::klein_gordon(), false)] {
        let run = || {
            let mut net = Network::seeded(&small_kan(&problem), 11).unwrap();
            let w = if dbaw {
                Weighting::Dbaw {
                    schedule: GammaSchedule::default(),
                }
            } else {
                Weighting::unit(&problem)
            };
            let rec = train(&problem, &mut net, &w, &config(8, 11), |_| Ok(())).unwrap();
            (rec, net)
        };
        let (a, na) = run();
        let (b, nb) = run();
        assert_eq!(a, b);
        assert_eq!(na, nb);
    }
}

#[test]
fn best_snapshot_reproduces_its_error() {
    let problem = ProblemDef::helmholtz();
    let arch = small_kan(&problem);
    let mut net = Network::seeded(&arch, 5).unwrap();
    let mut cfg = config(30, 5);
    cfg.lr_theta = 1e-2;
    let rec = train(&problem, &mut net, &Weighting::unit(&problem), &cfg, |_| Ok(())).unwrap();
    let mut best = Network::zeros(&arch).unwrap();
    best.params_mut().copy_from_slice(&rec.best_params);
    let l2 = Validator::new(&problem, cfg.eval_grid)
        .relative_l2(&best)
        .unwrap();
    assert!((l2 - rec.best_l2).abs() <= 1e-12);
    let evaluated: Vec<f64> = rec.rows.iter().filter_map(|r| r.val_l2).collect();
    assert_eq!(evaluated.len(), 6);
    assert!(evaluated.iter().all(|&v| v >= rec.best_l2));
}

#[test]
fn network_and_log_sigma_optimisers_are_independent() {
    // With lr_sigma = 0 the log σ never move, whatever the network does.
    let problem = ProblemDef::helmholtz();
    let mut net = Network::seeded(&small_kan(&problem), 2).unwrap();
    let mut cfg = config(10, 2);
    cfg.lr_sigma = 0.0;
    let w = Weighting::Dbaw {
        schedule: GammaSchedule::default(),
    };
    let rec = train(&problem, &mut net, &w, &cfg, |_| Ok(())).unwrap();
    assert!(rec
        .rows
        .iter()
        .all(|r| r.log_sigma.iter().all(|(_, &v)| v == 0.0)));
    assert!(rec.final_log_sigma.iter().all(|(_, &v)| v == 0.0));
    assert_ne!(
        net.params(),
        Network::seeded(&small_kan(&problem), 2).unwrap().params()
    );
}

#[test]
fn huge_bound_reduces_to_unit_weights() {
    let problem = ProblemDef::klein_gordon();
    let arch = small_kan(&problem);
    let schedule = GammaSchedule::new(2e12, 1e12, 1e-4).unwrap();
    let mut cfg = config(10, 9);
    cfg.lr_sigma = 0.0;
    let mut a = Network::seeded(&arch, 9).unwrap();
    let mut b = a.clone();
    let ra = train(&problem, &mut a, &Weighting::Dbaw { schedule }, &cfg, |_| Ok(())).unwrap();
    let rb = train(&problem, &mut b, &Weighting::unit(&problem), &cfg, |_| Ok(())).unwrap();
    for (x, y) in ra.rows.iter().zip(&rb.rows) {
        for &t in problem.tasks() {
            let (lx, ly) = (x.losses[t], y.losses[t]);
            assert!(
                (lx - ly).abs() <= 1e-9 * ly.abs().max(1e-12),
                "epoch {} {t}: {lx} vs {ly}",
                x.epoch
            );
            assert!((x.lambdas[t] - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn fused_and_taped_task_gradients_agree() {
    for problem in [
        ProblemDef::klein_gordon(),
        ProblemDef::burgers(),
        ProblemDef::helmholtz(),
    ] {
        let net = Network::seeded(&small_kan(&problem), 4).unwrap();
        let batch = sample_batch(
            &problem,
            BatchCounts {
                n_r: 40,
                n_bc: 20,
                n_ic: 20,
            },
            &mut epoch_rng(4, 1),
        );
        let mut fused = TaskGradient::for_network(&net, 16);
        assert_eq!(fused.path(), GradientPath::Fused);
        let mut taped = TaskGradient::with_path(GradientPath::Tape, 16);
        for &task in problem.tasks() {
            let mut gf = vec![0.0; net.param_count()];
            let mut gt = vec![0.0; net.param_count()];
            let sf = fused.sum_sq(&problem, &net, task, &batch, &mut gf).unwrap();
            let st = taped.sum_sq(&problem, &net, task, &batch, &mut gt).unwrap();
            assert!(
                (sf - st).abs() <= 1e-11 * st.abs().max(1.0),
                "{task}: {sf} vs {st}"
            );
            let scale = gt.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1.0);
            for (i, (x, y)) in gf.iter().zip(&gt).enumerate() {
                assert!((x - y).abs() <= 1e-10 * scale, "{task} param {i}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn fused_path_refuses_mlps() {
    let problem = ProblemDef::helmholtz();
    let net = Network::seeded(&small_mlp(&problem), 1).unwrap();
    let batch = sample_batch(
        &problem,
        BatchCounts {
            n_r: 4,
            n_bc: 4,
            n_ic: 4,
        },
        &mut epoch_rng(1, 1),
    );
    let mut eng = TaskGradient::with_path(GradientPath::Fused, 8);
    let mut g = vec![0.0; net.param_count()];
    assert!(eng
        .sum_sq(&problem, &net, Task::Residual, &batch, &mut g)
        .is_err());
    assert_eq!(TaskGradient::for_network(&net, 8).path(), GradientPath::Tape);
}

#[test]
fn mlp_training_runs_on_the_tape_path() {
    let problem = ProblemDef::burgers();
    let mut net = Network::seeded(&small_mlp(&problem), 3).unwrap();
    let rec = train(
        &problem,
        &mut net,
        &Weighting::unit(&problem),
        &config(5, 3),
        |_| Ok(()),
    )
    .unwrap();
    assert_eq!(rec.rows.len(), 5);
    assert!(rec.rows.iter().all(|r| r.total.is_finite()));
}

#[test]
fn fixed_weights_must_cover_every_task() {
    let problem = ProblemDef::klein_gordon();
    let mut net = Network::seeded(&small_kan(&problem), 3).unwrap();
    let w = Weighting::Fixed {
        weights: TaskMap::from_pairs([(Task::Residual, 1.0)]),
    };
    assert!(matches!(
        train(&problem, &mut net, &w, &config(1, 1), |_| Ok(())),
        Err(Error::MissingTask(_))
    ));
}

#[test]
fn callback_errors_stop_training() {
    let problem = ProblemDef::helmholtz();
    let mut net = Network::seeded(&small_kan(&problem), 3).unwrap();
    let mut seen = 0;
    let out = train(
        &problem,
        &mut net,
        &Weighting::unit(&problem),
        &config(10, 1),
        |r| {
            seen = r.epoch;
            if r.epoch == 3 {
                Err(Error::InvalidSize("stop".into()))
            } else {
                Ok(())
            }
        },
    );
    assert!(out.is_err());
    assert_eq!(seen, 3);
}

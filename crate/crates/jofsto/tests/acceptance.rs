//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its elapsed time. Heavy fixtures (the comparative experiment) are built
//! once and shared.

use jofsto::baselines::{random_select, train_baseline, BaselineConfig};
use jofsto::data::{
    rician, simulate, simulate_with_noise_channels, AcquisitionScheme, Dataset, SplitSpec,
    DEFAULT_SNR,
};
use jofsto::linalg::Matrix;
use jofsto::metrics::{mse, seed_stability, RunSummary};
use jofsto::nn::{mse_loss, Activation, DenseNet};
use jofsto::trainer::{
    infer, joint_gradients, joint_loss, train, train_with_hook, Batch, JointContext, NetConfig,
    Schedule, StepArtifact, TrainConfig,
};
use jofsto::Real;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

fn pass(criterion: &str, detail: &str, started: Instant) {
    println!(
        "criterion {criterion}: PASS ({detail}; {:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient suite.
// ---------------------------------------------------------------------------

/// Relative error with a dead-zone guard: gradients whose analytic and
/// numeric values both round to zero (dead ReLU paths) are skipped by the
/// caller.
fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs())
}

/// Central finite difference over one network parameter.
fn fd_param(
    net: &mut DenseNet<f64>,
    li: usize,
    idx: usize,
    h: f64,
    eval: &dyn Fn(&DenseNet<f64>) -> f64,
) -> f64 {
    let n_weights = net.layers()[li].weights.data().len();
    let read = |net: &DenseNet<f64>| {
        if idx < n_weights {
            net.layers()[li].weights.data()[idx]
        } else {
            net.layers()[li].biases[idx - n_weights]
        }
    };
    let orig = read(net);
    let write = |net: &mut DenseNet<f64>, v: f64| {
        if idx < n_weights {
            net.layers_mut()[li].weights.data_mut()[idx] = v;
        } else {
            net.layers_mut()[li].biases[idx - n_weights] = v;
        }
    };
    write(net, orig + h);
    let up = eval(net);
    write(net, orig - h);
    let down = eval(net);
    write(net, orig);
    (up - down) / (2.0 * h)
}

/// Smallest |pre-activation| over every ReLU unit of a forward pass; used to
/// reject cases where a finite-difference step would cross the kink.
fn min_relu_preactivation(net: &DenseNet<f64>, inputs: &Matrix<f64>) -> f64 {
    let mut min = f64::INFINITY;
    let mut current = inputs.clone();
    for (li, layer) in net.layers().iter().enumerate() {
        let last = li + 1 == net.layers().len();
        let mut next = Matrix::zeros(current.rows(), layer.weights.rows());
        for r in 0..current.rows() {
            for o in 0..layer.weights.rows() {
                let mut z = layer.biases[o];
                for (k, &x) in current.row(r).iter().enumerate() {
                    z += layer.weights.get(o, k) * x;
                }
                if !last {
                    min = min.min(z.abs());
                }
                next.set(
                    r,
                    o,
                    if last {
                        net.output_activation().apply(z)
                    } else {
                        Activation::Relu.apply(z)
                    },
                );
            }
        }
        current = next;
    }
    min
}

fn random_net(rng: &mut StdRng, input: usize, output: usize, act: Activation) -> DenseNet<f64> {
    let hidden = rng.gen_range(1..=3usize);
    let mut dims = vec![input];
    for _ in 0..hidden.saturating_sub(1) {
        dims.push(rng.gen_range(2..=16));
    }
    dims.push(output);
    DenseNet::new(&dims, act, rng).unwrap()
}

fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix<f64> {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.gen_range(lo..hi);
    }
    m
}

#[test]
fn criterion_1_gradient_suite() {
    let started = Instant::now();
    let h = 1e-4;
    let kink_guard = 10.0 * h;
    let mut rng = StdRng::seed_from_u64(0xACC1);

    // Part A: 20 random small nets, every parameter checked against central
    // finite differences of mse(forward(x)).
    let mut nets_checked = 0usize;
    let mut params_checked = 0usize;
    while nets_checked < 20 {
        let input = rng.gen_range(2..=6usize);
        let output = rng.gen_range(1..=4usize);
        let act = if rng.gen_bool(0.5) { Activation::Identity } else { Activation::TwoSigmoid };
        let net = random_net(&mut rng, input, output, act);
        let rows = rng.gen_range(2..=8);
        let x = random_matrix(&mut rng, rows, input, -1.0, 1.0);
        let target = random_matrix(&mut rng, x.rows(), output, -1.0, 1.0);
        if min_relu_preactivation(&net, &x) < kink_guard {
            continue; // finite differences would straddle a ReLU kink
        }
        nets_checked += 1;

        let (pred, cache) = net.forward(&x).unwrap();
        let (_, grad_out) = mse_loss(&pred, &target).unwrap();
        let (grads, _) = net.backward(&cache, &grad_out).unwrap();

        let eval = |net: &DenseNet<f64>| {
            let p = net.predict(&x).unwrap();
            mse_loss(&p, &target).unwrap().0
        };
        let mut probe = net.clone();
        for li in 0..net.layers().len() {
            let n_weights = net.layers()[li].weights.data().len();
            for idx in 0..n_weights + net.layers()[li].biases.len() {
                let analytic = if idx < n_weights {
                    grads.weights[li].data()[idx]
                } else {
                    grads.biases[li][idx - n_weights]
                };
                let numeric = fd_param(&mut probe, li, idx, h, &eval);
                if analytic.abs() < 1e-9 && numeric.abs() < 1e-9 {
                    continue;
                }
                let rel = rel_err(analytic, numeric);
                assert!(
                    rel < 1e-4,
                    "net {nets_checked} layer {li} param {idx}: analytic {analytic} vs numeric {numeric} (rel {rel})"
                );
                params_checked += 1;
            }
        }
    }

    // Part B: the full composite graph (scoring + blend + mask + task),
    // finite differences over every parameter of both networks.
    let mut composites_checked = 0usize;
    while composites_checked < 3 {
        let channels = rng.gen_range(3..=5usize);
        let targets = rng.gen_range(1..=3usize);
        let scoring = random_net(&mut rng, channels, channels, Activation::TwoSigmoid);
        let task = random_net(&mut rng, channels, targets, Activation::Identity);
        let inputs = random_matrix(&mut rng, 5, channels, 0.0, 1.0);
        let batch = Batch::new(
            inputs,
            random_matrix(&mut rng, 5, targets, -1.0, 1.0),
            (0..5).collect(),
        )
        .unwrap();
        let population: Vec<f64> = (0..channels).map(|_| rng.gen_range(0.5..1.5)).collect();
        let mask: Vec<f64> = (0..channels).map(|_| rng.gen_range(0.2..1.0)).collect();
        let fill: Vec<f64> = (0..channels).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ctx = JointContext {
            population_score: &population,
            score_alpha: 0.5,
            mask: &mask,
            fill: &fill,
            use_scoring: true,
        };
        if min_relu_preactivation(&scoring, &batch.inputs) < kink_guard {
            continue;
        }
        let grads = joint_gradients(&scoring, &task, &batch, &ctx).unwrap();
        let scoring_grads = grads.scoring.as_ref().unwrap();
        composites_checked += 1;

        // Perturb the scoring net with the task net fixed, and vice versa.
        let mut s_probe = scoring.clone();
        let eval_scoring =
            |net: &DenseNet<f64>| joint_loss(net, &task, &batch, &ctx).unwrap();
        for li in 0..scoring.layers().len() {
            let n_weights = scoring.layers()[li].weights.data().len();
            for idx in 0..n_weights + scoring.layers()[li].biases.len() {
                let analytic = if idx < n_weights {
                    scoring_grads.weights[li].data()[idx]
                } else {
                    scoring_grads.biases[li][idx - n_weights]
                };
                let numeric = fd_param(&mut s_probe, li, idx, h, &eval_scoring);
                if analytic.abs() < 1e-9 && numeric.abs() < 1e-9 {
                    continue;
                }
                let rel = rel_err(analytic, numeric);
                assert!(rel < 1e-4, "composite scoring layer {li} idx {idx}: {analytic} vs {numeric}");
                params_checked += 1;
            }
        }
        let mut t_probe = task.clone();
        let eval_task =
            |net: &DenseNet<f64>| joint_loss(&scoring, net, &batch, &ctx).unwrap();
        for li in 0..task.layers().len() {
            let n_weights = task.layers()[li].weights.data().len();
            for idx in 0..n_weights + task.layers()[li].biases.len() {
                let analytic = if idx < n_weights {
                    grads.task.weights[li].data()[idx]
                } else {
                    grads.task.biases[li][idx - n_weights]
                };
                let numeric = fd_param(&mut t_probe, li, idx, h, &eval_task);
                if analytic.abs() < 1e-9 && numeric.abs() < 1e-9 {
                    continue;
                }
                let rel = rel_err(analytic, numeric);
                assert!(rel < 1e-4, "composite task layer {li} idx {idx}: {analytic} vs {numeric}");
                params_checked += 1;
            }
        }
    }

    assert!(params_checked > 500, "too few parameters exercised: {params_checked}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "gradient suite took {elapsed:?}");
    pass(
        "1 (gradient suite)",
        &format!("{params_checked} parameters over 20 nets + 3 composite graphs"),
        started,
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: phase invariants on a toy run.
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_phase_invariants() {
    let started = Instant::now();
    let scheme = AcquisitionScheme::default_grid(16).unwrap();
    let mut dataset = simulate(&scheme, 2_000, DEFAULT_SNR, 5).unwrap();
    dataset.assign_split(SplitSpec::Counts(1_600, 400, 0), 5).unwrap();
    dataset.prepare().unwrap();

    let (e1, e2, e3) = (5usize, 8usize, 11usize);
    let config = TrainConfig {
        schedule: Schedule {
            c_list: vec![16, 8, 4],
            e1,
            e2,
            e3,
            patience: 3,
            batch_size: 256,
            learning_rate: 1e-3,
            seed: 3,
        },
        scoring_net: NetConfig { hidden_layers: 1, units: 16 },
        task_net: NetConfig { hidden_layers: 1, units: 16 },
        use_scoring_net: true,
        eval_test: false,
        run_dir: None,
    };

    // Independent per-epoch expectations, recomputed from the annealing
    // update rules.
    let expect_score_alpha = |step: usize, epoch: usize| -> f64 {
        if step == 1 {
            1.0
        } else if epoch <= e1 {
            0.5
        } else {
            let k = (epoch - e1).min(e2 - e1) as f64;
            (0.5 - 2.0 * k / (e2 - e1) as f64).max(0.0)
        }
    };
    let expect_mask_alpha = |epoch: usize| -> f64 {
        let k = (epoch - e2).min(e3 - e2) as f64;
        (1.0 - k / (e3 - e2) as f64).max(0.0)
    };

    struct StepTrace {
        masks: Vec<(usize, Vec<Real>)>,
        scoring_fps: Vec<(usize, f64, u64)>,
    }
    let mut traces: BTreeMap<usize, StepTrace> = BTreeMap::new();

    let artifacts = train_with_hook(&dataset, &config, &mut |ev| {
        let exp_s = expect_score_alpha(ev.step_index, ev.epoch);
        assert!(
            (ev.score_alpha - exp_s).abs() < 1e-12,
            "step {} epoch {}: score alpha {} expected {exp_s}",
            ev.step_index,
            ev.epoch,
            ev.score_alpha
        );
        if ev.step_index > 1 && ev.epoch > e2 && ev.epoch <= e3 {
            let exp_m = expect_mask_alpha(ev.epoch);
            assert!(
                (ev.mask_alpha - exp_m).abs() < 1e-12,
                "step {} epoch {}: mask alpha {} expected {exp_m}",
                ev.step_index,
                ev.epoch,
                ev.mask_alpha
            );
        }
        if ev.epoch >= e3 || ev.step_index == 1 {
            assert_eq!(ev.mask_alpha, 0.0, "mask alpha must be exactly 0 from e3 on");
            assert!(
                ev.mask.iter().all(|&m| m == 0.0 || m == 1.0),
                "mask must be binary from e3 on"
            );
        }
        let trace = traces.entry(ev.step_index).or_insert_with(|| StepTrace {
            masks: Vec::new(),
            scoring_fps: Vec::new(),
        });
        trace.masks.push((ev.epoch, ev.mask.to_vec()));
        trace
            .scoring_fps
            .push((ev.epoch, ev.score_alpha, ev.scoring_fingerprint));
    })
    .unwrap();

    // Mask cardinalities at step ends and nested supports.
    let cards: Vec<usize> = artifacts.iter().map(|a| a.cardinality()).collect();
    assert_eq!(cards, vec![16, 8, 4]);
    let selections: Vec<Vec<usize>> = artifacts.iter().map(|a| a.selected()).collect();
    assert!(selections[2].iter().all(|c| selections[1].contains(c)));
    assert!(selections[1].iter().all(|c| selections[0].contains(c)));

    // Scoring network frozen over every stretch where the blend weight is
    // zero (its gradient is structurally zero there).
    for trace in traces.values() {
        for pair in trace.scoring_fps.windows(2) {
            let (_, alpha_prev, fp_prev) = pair[0];
            let (epoch, alpha_now, fp_now) = pair[1];
            if alpha_prev == 0.0 && alpha_now == 0.0 {
                assert_eq!(
                    fp_prev, fp_now,
                    "scoring parameters changed across zero-alpha epoch {epoch}"
                );
            }
        }
    }

    // Direct instrumentation: at zero blend weight the scoring gradients of
    // the composite graph are exactly zero.
    let rows: Vec<usize> = dataset.split.train[..64].to_vec();
    let batch = Batch::new(
        Matrix::gather_rows(&dataset.x, &rows),
        Matrix::gather_rows(&dataset.y, &rows),
        rows.clone(),
    )
    .unwrap();
    let mut rng = StdRng::seed_from_u64(1);
    let scoring = DenseNet::<Real>::new(&[16, 16, 16], Activation::TwoSigmoid, &mut rng).unwrap();
    let task = DenseNet::<Real>::new(&[16, 16, 3], Activation::Identity, &mut rng).unwrap();
    let mask: Vec<Real> = artifacts[1].mask.iter().map(|&m| m as Real).collect();
    let ctx = JointContext {
        population_score: &artifacts[1].population_score,
        score_alpha: 0.0,
        mask: &mask,
        fill: &artifacts[1].fill,
        use_scoring: true,
    };
    let grads = joint_gradients(&scoring, &task, &batch, &ctx).unwrap();
    assert!(grads.scoring.unwrap().all_zero(), "scoring gradient not exactly zero");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "phase invariants took {elapsed:?}");
    pass("2 (phase invariants)", "alpha trajectories, binary masks, nested supports, frozen scorer", started);
}

// ---------------------------------------------------------------------------
// Criterion 3: selection correctness against an exhaustive oracle.
// ---------------------------------------------------------------------------

const INFORMATIVE: [usize; 4] = [0, 2, 4, 6];
const NOISE: [usize; 4] = [1, 3, 5, 7];

fn eight_channel_scheme() -> AcquisitionScheme {
    AcquisitionScheme::new(
        Matrix::from_rows(&[
            vec![0.3],
            vec![0.6],
            vec![0.9],
            vec![1.3],
            vec![1.7],
            vec![2.0],
            vec![2.6],
            vec![2.9],
        ]),
        None,
    )
    .unwrap()
}

fn eight_channel_dataset(n_train: usize, n_val: usize, seed: u64) -> Dataset {
    let scheme = eight_channel_scheme();
    let mut dataset =
        simulate_with_noise_channels(&scheme, &NOISE, n_train + n_val, DEFAULT_SNR, seed).unwrap();
    dataset
        .assign_split(SplitSpec::Counts(n_train, n_val, 0), seed)
        .unwrap();
    dataset.prepare().unwrap();
    dataset
}

fn selection_run(dataset: &Dataset, seed: u64) -> StepArtifact {
    let config = TrainConfig {
        schedule: Schedule {
            c_list: vec![8, 4],
            e1: 10,
            e2: 14,
            e3: 18,
            patience: 5,
            batch_size: 256,
            learning_rate: 3e-3,
            seed,
        },
        scoring_net: NetConfig { hidden_layers: 1, units: 32 },
        task_net: NetConfig { hidden_layers: 1, units: 32 },
        use_scoring_net: true,
        eval_test: false,
        run_dir: None,
    };
    train(dataset, &config).unwrap().pop().unwrap()
}

#[test]
fn criterion_3_selection_oracle() {
    let started = Instant::now();
    let dataset = eight_channel_dataset(4_000, 800, 21);

    // JOFSTO selection across 5 seeds.
    let mut hits = 0usize;
    for seed in 1..=5u64 {
        let artifact = selection_run(&dataset, seed);
        let selected = artifact.selected();
        let overlap = selected.iter().filter(|c| INFORMATIVE.contains(c)).count();
        println!("  seed {seed}: selected {selected:?} ({overlap}/4 informative)");
        if overlap >= 3 {
            hits += 1;
        }
    }
    assert!(hits >= 4, "only {hits}/5 seeds selected >= 3 informative channels");

    // Exhaustive 4-subset retraining oracle on a 500-row miniature: rank
    // channels by the mean validation loss of the oracle runs containing
    // them; the informative channels must rank strictly above the noise
    // channels.
    let mini = eight_channel_dataset(400, 100, 33);
    let extract = |rows: &[usize], keep: &[usize]| {
        let mut out = Matrix::zeros(rows.len(), keep.len());
        for (r, &i) in rows.iter().enumerate() {
            for (j, &c) in keep.iter().enumerate() {
                out.set(r, j, mini.x.get(i, c));
            }
        }
        out
    };
    let train_y = Matrix::gather_rows(&mini.y, &mini.split.train);
    let val_y = Matrix::gather_rows(&mini.y, &mini.split.val);
    let mut with_sum = [0.0f64; 8];
    let mut with_count = [0usize; 8];
    let mut oracle_runs = 0usize;
    for a in 0..8usize {
        for b in (a + 1)..8 {
            for c in (b + 1)..8 {
                for d in (c + 1)..8 {
                    let keep = [a, b, c, d];
                    let tx = extract(&mini.split.train, &keep);
                    let vx = extract(&mini.split.val, &keep);
                    let mut rng = StdRng::seed_from_u64(77);
                    let mut net =
                        DenseNet::<Real>::new(&[4, 24, 3], Activation::Identity, &mut rng)
                            .unwrap();
                    let mut opt = jofsto::nn::AdamState::new(&net, 3e-3);
                    for _ in 0..300 {
                        let (pred, cache) = net.forward(&tx).unwrap();
                        let (_, grad) = mse_loss(&pred, &train_y).unwrap();
                        let (grads, _) = net.backward(&cache, &grad).unwrap();
                        jofsto::nn::adam_step(&mut net, &grads, &mut opt).unwrap();
                    }
                    let loss = mse_loss(&net.predict(&vx).unwrap(), &val_y).unwrap().0;
                    for &ch in &keep {
                        with_sum[ch] += loss;
                        with_count[ch] += 1;
                    }
                    oracle_runs += 1;
                }
            }
        }
    }
    assert_eq!(oracle_runs, 70);
    let mut ranked: Vec<(f64, usize)> = (0..8)
        .map(|c| (with_sum[c] / with_count[c] as f64, c))
        .collect();
    ranked.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let oracle_top: Vec<usize> = {
        let mut top: Vec<usize> = ranked[..4].iter().map(|&(_, c)| c).collect();
        top.sort_unstable();
        top
    };
    assert_eq!(
        oracle_top,
        INFORMATIVE.to_vec(),
        "oracle channel ranking {ranked:?} does not isolate the informative set"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 900.0, "selection oracle took {elapsed:?}");
    pass(
        "3 (selection correctness)",
        &format!("{hits}/5 seeds, oracle over 70 subsets agrees"),
        started,
    );
}

// ---------------------------------------------------------------------------
// Criteria 4 & 5: comparative ordering and ablation direction on the
// default surrogate dataset.
// ---------------------------------------------------------------------------

const COMPARE_BUDGETS: [usize; 4] = [32, 16, 8, 4];
const COMPARE_SEEDS: [u64; 3] = [1, 2, 3];

struct ComparativeFixture {
    dataset: Dataset,
    /// test MSE per (C, seed) for full JOFSTO.
    jofsto: BTreeMap<usize, Vec<f64>>,
    build_secs: f64,
}

fn comparative_net() -> NetConfig {
    NetConfig { hidden_layers: 1, units: 64 }
}

fn comparative_schedule(seed: u64) -> Schedule {
    Schedule {
        c_list: vec![64, 32, 16, 8, 4],
        e1: 12,
        e2: 16,
        e3: 20,
        patience: 6,
        batch_size: 1500,
        learning_rate: 1e-3,
        seed,
    }
}

fn comparative_fixture() -> &'static ComparativeFixture {
    static FIXTURE: OnceLock<ComparativeFixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let started = Instant::now();
        // The default surrogate dataset: dense decay grid with the standard
        // corrupted-channel stride, 20k/2k/2k split at SNR 50.
        let scheme = AcquisitionScheme::default_grid(64).unwrap();
        let corrupted = jofsto::data::default_corrupted_channels(64);
        let mut dataset =
            simulate_with_noise_channels(&scheme, &corrupted, 24_000, DEFAULT_SNR, 7).unwrap();
        dataset
            .assign_split(SplitSpec::Counts(20_000, 2_000, 2_000), 7)
            .unwrap();
        dataset.prepare().unwrap();

        let mut jofsto: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for &seed in &COMPARE_SEEDS {
            let config = TrainConfig {
                schedule: comparative_schedule(seed),
                scoring_net: comparative_net(),
                task_net: comparative_net(),
                use_scoring_net: true,
                eval_test: true,
                run_dir: None,
            };
            for artifact in train(&dataset, &config).unwrap().iter().skip(1) {
                jofsto
                    .entry(artifact.c_t)
                    .or_default()
                    .push(artifact.test_mse.unwrap());
            }
        }
        ComparativeFixture {
            dataset,
            jofsto,
            build_secs: started.elapsed().as_secs_f64(),
        }
    })
}

#[test]
fn criterion_4_comparative_ordering() {
    let started = Instant::now();
    let fixture = comparative_fixture();

    let mut random: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &c in &COMPARE_BUDGETS {
        for &seed in &COMPARE_SEEDS {
            let selected = random_select(64, c, seed.wrapping_mul(1000) + c as u64).unwrap();
            let config = BaselineConfig {
                net: comparative_net(),
                patience: 6,
                batch_size: 1500,
                learning_rate: 1e-3,
                seed,
                eval_test: true,
            };
            let result = train_baseline(&fixture.dataset, &selected, &config).unwrap();
            random.entry(c).or_default().push(result.test_mse().unwrap());
        }
    }

    for &c in &COMPARE_BUDGETS {
        let jofsto_mean: f64 =
            fixture.jofsto[&c].iter().sum::<f64>() / fixture.jofsto[&c].len() as f64;
        let random_mean: f64 = random[&c].iter().sum::<f64>() / random[&c].len() as f64;
        println!(
            "  C={c:<3} jofsto {:.6} vs random {:.6}",
            jofsto_mean, random_mean
        );
        assert!(
            jofsto_mean <= random_mean,
            "C={c}: jofsto mean {jofsto_mean} exceeds random mean {random_mean}"
        );
    }

    let elapsed = started.elapsed().as_secs_f64() + fixture.build_secs;
    assert!(elapsed < 1800.0, "comparative experiment took {elapsed}s");
    pass(
        "4 (comparative ordering)",
        "jofsto <= random at C in {32,16,8,4} over 3 seeds",
        started,
    );
}

#[test]
fn criterion_5_ablation_direction() {
    let started = Instant::now();
    let fixture = comparative_fixture();

    let mut ablated = Vec::new();
    for &seed in &COMPARE_SEEDS {
        let config = TrainConfig {
            schedule: Schedule {
                c_list: vec![64, 32, 16, 8],
                ..comparative_schedule(seed)
            },
            scoring_net: comparative_net(),
            task_net: comparative_net(),
            use_scoring_net: false,
            eval_test: true,
            run_dir: None,
        };
        let artifacts = train(&fixture.dataset, &config).unwrap();
        ablated.push(artifacts.last().unwrap().test_mse.unwrap());
    }
    let ablated_mean: f64 = ablated.iter().sum::<f64>() / ablated.len() as f64;
    let full_mean: f64 = fixture.jofsto[&8].iter().sum::<f64>() / fixture.jofsto[&8].len() as f64;
    println!("  C=8 full {:.6} vs no-scoring {:.6}", full_mean, ablated_mean);
    assert!(
        full_mean < ablated_mean,
        "ablation should be strictly worse: full {full_mean} vs ablated {ablated_mean}"
    );
    pass(
        "5 (ablation direction)",
        "no_scoring_net strictly worse at C=8 over 3 seeds",
        started,
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: seed-stability machinery.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_seed_stability() {
    let started = Instant::now();
    let dataset = eight_channel_dataset(1_500, 300, 44);

    let summary = |artifact: &StepArtifact, seed: u64| {
        let val_x = Matrix::gather_rows(&dataset.x, &dataset.split.val);
        let val_y = Matrix::gather_rows(&dataset.y, &dataset.split.val);
        let pred = infer(artifact, &val_x).unwrap();
        RunSummary {
            method: "jofsto".into(),
            c: artifact.c_t,
            seed,
            test_mse: mse(&pred, &val_y).unwrap(),
            selected: artifact.selected(),
            wall_time_secs: artifact.wall_time_secs,
        }
    };

    // Five seeded runs: the analysis machinery emits both statistics.
    let runs: Vec<RunSummary> = (11..=15u64)
        .map(|seed| summary(&selection_run(&dataset, seed), seed))
        .collect();
    let (std, jac) = seed_stability(&runs).unwrap();
    println!("  5 seeds: std {:.6} ({:.4} x100), mean pairwise jaccard {:.4}", std, std * 100.0, jac);
    assert!(std.is_finite() && std >= 0.0);
    assert!((0.0..=1.0).contains(&jac));

    // Identical seeds: exactly zero deviation, exactly unit overlap.
    let twin_a = summary(&selection_run(&dataset, 11), 11);
    let twin_b = summary(&selection_run(&dataset, 11), 11);
    assert_eq!(twin_a.test_mse, twin_b.test_mse, "identical seeds must agree bitwise");
    let (std2, jac2) = seed_stability(&[twin_a, twin_b]).unwrap();
    assert_eq!(std2, 0.0);
    assert_eq!(jac2, 1.0);

    pass("6 (seed stability)", "5-seed stats emitted; identical seeds give std=0, jaccard=1", started);
}

// ---------------------------------------------------------------------------
// Criterion 7: Rician noise statistics.
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_rician_statistics() {
    let started = Instant::now();
    let sigma = 0.02; // SNR 50 against unit signal
    let mut rng = StdRng::seed_from_u64(0x51CA);
    let draws = 1_000_000usize;
    let mut sum = 0.0f64;
    for _ in 0..draws {
        sum += rician(0.0, sigma, &mut rng);
    }
    let mean = sum / draws as f64;
    let expected = sigma * (std::f64::consts::PI / 2.0).sqrt();
    let rel = (mean - expected).abs() / expected;
    println!("  empirical {mean:.8} vs rayleigh {expected:.8} (rel {rel:.5})");
    assert!(rel < 0.01, "relative error {rel} exceeds 1%");
    pass("7 (rician statistics)", "noise-floor mean within 1% of sigma*sqrt(pi/2)", started);
}

// ---------------------------------------------------------------------------
// Criterion 8: infer/train equivalence and bit-exact persistence.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_persistence_and_infer_equivalence() {
    let started = Instant::now();
    let root = std::env::temp_dir().join(format!("jofsto-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).unwrap();

    let dataset = eight_channel_dataset(1_500, 300, 55);
    let run_dir = root.join("run");
    let config = TrainConfig {
        schedule: Schedule {
            c_list: vec![8, 4],
            e1: 6,
            e2: 9,
            e3: 12,
            patience: 4,
            batch_size: 256,
            learning_rate: 3e-3,
            seed: 9,
        },
        scoring_net: NetConfig { hidden_layers: 1, units: 24 },
        task_net: NetConfig { hidden_layers: 1, units: 24 },
        use_scoring_net: true,
        eval_test: false,
        run_dir: Some(run_dir.clone()),
    };
    let artifacts = train(&dataset, &config).unwrap();
    let live = &artifacts[1];

    // Reload the artifact purely from disk and compare bit-for-bit.
    let reloaded = StepArtifact::load(&run_dir.join("step_2")).unwrap();
    assert_eq!(reloaded.mask, live.mask);
    assert_eq!(reloaded.task_net, live.task_net);
    for (a, b) in live.population_score.iter().zip(&reloaded.population_score) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    for (a, b) in live.fill.iter().zip(&reloaded.fill) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(reloaded.best_val_loss, live.best_val_loss);

    // Inference from the reloaded artifact reproduces the logged validation
    // loss of the retained checkpoint.
    let val_x = Matrix::gather_rows(&dataset.x, &dataset.split.val);
    let val_y = Matrix::gather_rows(&dataset.y, &dataset.split.val);
    let pred = infer(&reloaded, &val_x).unwrap();
    let val_mse = mse(&pred, &val_y).unwrap();
    println!("  infer {val_mse:.9} vs logged {:.9}", reloaded.best_val_loss);
    assert!(
        (val_mse - reloaded.best_val_loss).abs() < 1e-6,
        "infer {val_mse} vs logged {}",
        reloaded.best_val_loss
    );

    // Remaining formats round-trip bit-exactly.
    let matrix_path = root.join("m.jfmx");
    jofsto::data::save_matrix(&matrix_path, &dataset.x).unwrap();
    let back = jofsto::data::load_matrix(&matrix_path).unwrap();
    assert_eq!(back.shape(), dataset.x.shape());
    for (a, b) in dataset.x.data().iter().zip(back.data()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }

    let scheme = eight_channel_scheme();
    let scheme_path = root.join("scheme.csv");
    jofsto::data::save_scheme(&scheme_path, &scheme).unwrap();
    assert_eq!(jofsto::data::load_scheme(&scheme_path).unwrap(), scheme);

    let split_path = root.join("splits.json");
    jofsto::data::save_split(&split_path, &dataset.split).unwrap();
    assert_eq!(jofsto::data::load_split(&split_path).unwrap(), dataset.split);

    let csv_path = root.join("m.csv");
    jofsto::data::save_matrix_csv(&csv_path, &dataset.y).unwrap();
    let back = jofsto::data::load_matrix_csv(&csv_path).unwrap();
    for (a, b) in dataset.y.data().iter().zip(back.data()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }

    pass("8 (persistence)", "artifact reload bit-exact; infer matches logged val loss", started);
}

// ---------------------------------------------------------------------------
// Criterion 9: normalization contract.
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_normalization_contract() {
    let started = Instant::now();
    let scheme = AcquisitionScheme::default_grid(12).unwrap();
    let mut dataset = simulate(&scheme, 3_000, DEFAULT_SNR, 13).unwrap();
    dataset
        .assign_split(SplitSpec::Counts(2_400, 300, 300), 13)
        .unwrap();
    let raw = dataset.x.clone();
    dataset.normalize().unwrap();
    let normalizers = dataset.normalizers.clone().unwrap();

    // Training-column 99th percentile is exactly 1 after normalization.
    let train_rows = Matrix::gather_rows(&dataset.x, &dataset.split.train);
    for c in 0..dataset.channels() {
        let mut col = train_rows.column(c);
        let p99 = jofsto::data::percentile_nearest_rank(&mut col, 99.0);
        assert_eq!(p99, 1.0, "channel {c}: post-normalization percentile {p99}");
    }

    // Validation and test columns are scaled by the training statistics.
    for &row in dataset.split.val.iter().chain(&dataset.split.test) {
        for (c, &norm) in normalizers.iter().enumerate() {
            let expected = raw.get(row, c) / norm;
            assert_eq!(
                dataset.x.get(row, c).to_bits(),
                expected.to_bits(),
                "row {row} channel {c}"
            );
        }
    }

    pass("9 (normalization contract)", "train p99 == 1; val/test scaled by training statistics", started);
}

use games_core::dataset::{DaySignal, Dims, MultiResolutionDataset};
use games_core::games::{
    assemble_block, embed_all, gradients, load_checkpoint, loss, save_checkpoint, train, GamesConfig, GamesError,
    GamesModel, Split,
};
use games_core::{Graph, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_day(rng: &mut ChaCha8Rng, d: Dims, idx: usize) -> DaySignal<f64> {
    let mut m = |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
    DaySignal {
        day_index: idx,
        electricity: m(d.n_e, d.t_e),
        wind_cf: m(d.n_e, d.t_w),
        solar_cf: m(d.n_e, d.t_s),
        gas: m(d.n_g, d.t_g),
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, &edges).unwrap()
}

/// Central differences of the batch loss against the analytic gradient.
fn max_relative_error(model: &GamesModel<f64>, days: &[DaySignal<f64>]) -> f64 {
    let analytic = gradients(model, days).unwrap();
    let analytic: Vec<Vec<f64>> = analytic.tensors().iter().map(|s| s.to_vec()).collect();
    let h = 1e-5;
    let batch_loss = |m: &GamesModel<f64>| -> f64 {
        // Loss of the whole batch with d = days.len().
        let refs: Vec<&DaySignal<f64>> = days.iter().collect();
        m.batch_loss(&games_core::games::Batch::new(m, &refs).unwrap()).unwrap()
    };
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for (ti, grad) in analytic.iter().enumerate() {
        for (k, &a) in grad.iter().enumerate() {
            let orig = probe.tensors_mut()[ti][k];
            probe.tensors_mut()[ti][k] = orig + h;
            let up = batch_loss(&probe);
            probe.tensors_mut()[ti][k] = orig - h;
            let down = batch_loss(&probe);
            probe.tensors_mut()[ti][k] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_e = rng.gen_range(1..=4);
        let n_g = rng.gen_range(1..=6 - n_e);
        let d = Dims {
            n_e,
            n_g,
            t_e: rng.gen_range(1..=3),
            t_w: rng.gen_range(1..=3),
            t_s: rng.gen_range(1..=2),
            t_g: rng.gen_range(1..=2),
        };
        let k = rng.gen_range(1..=3.min(d.channels() - 1));
        let config = GamesConfig { k, rng_seed: seed, ..Default::default() };
        let graph = random_graph(&mut rng, d.nodes());
        let mut model = GamesModel::new(d, graph, &config).unwrap();
        for t in model.tensors_mut() {
            for v in t.iter_mut() {
                *v += rng.gen_range(-0.1..0.1);
            }
        }
        let days: Vec<_> = (0..3).map(|i| random_day(&mut rng, d, i)).collect();
        let err = max_relative_error(&model, &days);
        assert!(err <= 1e-5, "seed {seed}: max relative error {err:e}");
    }
}

#[test]
fn theta_enc_gradient_matches_closed_form() {
    // Two nodes (one power, one gas), single output layer per head.
    // With Ŷ = tanh(H W + b), H = L Z Θd, Z = L X Θe, the encoder gradient is
    // (L X)ᵀ L (G Θdᵀ) where G stacks the per-head (2c ⊙ (Ŷ − Y) ⊙ (1 − Ŷ²)) Wᵀ.
    let d = Dims { n_e: 1, n_g: 1, t_e: 1, t_w: 1, t_s: 1, t_g: 1 };
    let graph = Graph::new(2, &[(0, 1)]).unwrap();
    let config = GamesConfig { k: 1, hidden_sizes: Some(vec![]), ..Default::default() };
    let model = GamesModel::new(d, graph, &config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let day = random_day(&mut rng, d, 0);

    let l = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
    assert!(l.dist2(&model.laplacian.matrix) < 1e-30);
    let x = assemble_block(&day, &d).unwrap();
    let lx = l.matmul(&x);
    let h = l.matmul(&lx.matmul(&model.theta_enc)).matmul(&model.theta_dec);
    let wp = &model.head_power.layers[0].weight;
    let wg = &model.head_gas.layers[0].weight;
    let yp = h.row_block(0, 1).matmul(wp).map(f64::tanh);
    let yg = h.row_block(1, 2).matmul(wg).map(f64::tanh);
    let scales = [1.0, config.alpha_w, config.alpha_s];
    let target_p = x.row_block(0, 1).col_block(0, 3);
    let gp = Matrix::from_fn(1, 3, |_, j| {
        2.0 * scales[j] * (yp[(0, j)] - target_p[(0, j)]) * (1.0 - yp[(0, j)].powi(2))
    });
    let gg = Matrix::from_fn(1, 1, |_, _| {
        2.0 * config.alpha_g * (yg[(0, 0)] - day.gas[(0, 0)]) * (1.0 - yg[(0, 0)].powi(2))
    });
    let g = Matrix::vstack(&gp.matmul_t(wp), &gg.matmul_t(wg));
    let expected = lx.t_matmul(&l.matmul(&g.matmul_t(&model.theta_dec)));

    let got = gradients(&model, &[day]).unwrap().theta_enc;
    assert!(got.dist2(&expected) < 1e-24, "{got:?} vs {expected:?}");
}

#[test]
fn final_bias_gradient_vanishes_at_stationary_point() {
    let d = Dims { n_e: 2, n_g: 1, t_e: 2, t_w: 1, t_s: 1, t_g: 1 };
    let graph = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
    let mut model: GamesModel<f64> = GamesModel::new(d, graph, &GamesConfig { k: 2, ..Default::default() }).unwrap();
    for l in [model.head_power.layers.last_mut().unwrap(), model.head_gas.layers.last_mut().unwrap()] {
        l.weight = Matrix::zeros(l.weight.rows(), l.weight.cols());
    }
    let g = gradients(&model, &[DaySignal::zeros(0, d)]).unwrap();
    assert!(g.head_power.layers.last().unwrap().bias.iter().all(|&v| v == 0.0));
    assert!(g.head_gas.layers.last().unwrap().bias.iter().all(|&v| v == 0.0));
}

#[test]
fn non_finite_parameters_are_reported() {
    let d = Dims { n_e: 1, n_g: 1, t_e: 1, t_w: 1, t_s: 1, t_g: 1 };
    let mut model = GamesModel::new(d, Graph::new(2, &[]).unwrap(), &GamesConfig { k: 1, ..Default::default() }).unwrap();
    model.theta_enc[(0, 0)] = f64::INFINITY;
    let err = gradients(&model, &[DaySignal::zeros(0, d)]).unwrap_err();
    assert!(matches!(err, GamesError::Overflow));
    assert_eq!(err.to_string(), "numerical overflow in forward pass");
}

fn smooth_dataset(days: usize, noise: f64, seed: u64) -> MultiResolutionDataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_e, n_g, hours) = (3, 2, 6);
    let power = Graph::new(n_e, &[(0, 1), (1, 2)]).unwrap();
    let gas = Graph::new(n_g, &[(0, 1)]).unwrap();
    let list = (0..days)
        .map(|k| {
            let season = (k as f64 / days as f64 * std::f64::consts::TAU).sin();
            let mut jitter = |base: f64| (base + noise * rng.gen_range(-1.0..1.0)).clamp(0.0, 1.0);
            DaySignal {
                day_index: k,
                electricity: Matrix::from_fn(n_e, hours, |i, h| {
                    100.0 * (1.0 + i as f64) * (1.0 + 0.3 * season) * (1.0 + 0.4 * (h as f64 / 3.0).sin())
                }),
                wind_cf: Matrix::from_fn(n_e, hours, |_, h| jitter(0.5 + 0.3 * season * (h as f64 / 6.0).cos())),
                solar_cf: Matrix::from_fn(n_e, hours, |_, h| jitter((0.6 * (h as f64 / 5.0 * 3.1).sin()).max(0.0))),
                gas: Matrix::from_fn(n_g, 1, |i, _| 500.0 * (1.0 + i as f64) * (1.2 - 0.5 * season)),
            }
        })
        .collect();
    MultiResolutionDataset::new(power, gas, vec![(0, 0), (2, 1)], list).unwrap()
}

#[test]
fn constant_landscape_stops_after_two_epochs() {
    let ds = smooth_dataset(6, 0.0, 0);
    let mut zero = ds.clone();
    for d in &mut zero.days {
        *d = DaySignal::zeros(d.day_index, ds.dims());
    }
    let split = Split::seeded(6, 0.2, 0).unwrap();
    let cfg = GamesConfig { patience: 1, max_epochs: 100, ..Default::default() };
    let (_, log) = train(&zero, &cfg, &split).unwrap();
    assert_eq!(log.entries.len(), 2);
    assert!(log.stopped_early);
    assert_eq!(log.best_epoch, 0);
}

#[test]
fn training_is_deterministic_and_returns_best_parameters() {
    let ds = smooth_dataset(20, 0.05, 4);
    let split = Split::seeded(ds.len(), 0.2, 9).unwrap();
    let cfg = GamesConfig { max_epochs: 150, patience: 20, learning_rate: 0.01, ..Default::default() };
    let (m1, log1) = train(&ds, &cfg, &split).unwrap();
    let (m2, log2) = train(&ds, &cfg, &split).unwrap();
    assert_eq!(log1, log2);
    assert_eq!(log1.to_csv(), log2.to_csv());
    assert_eq!(m1, m2);

    let min_val = log1.entries.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(log1.best_val_loss(), min_val);
    let norm = ds.normalize();
    let val: Vec<_> = split.validation.iter().map(|&p| norm.days[p].clone()).collect();
    let refs: Vec<_> = val.iter().collect();
    let recomputed = m1.batch_loss(&games_core::games::Batch::new(&m1, &refs).unwrap()).unwrap();
    assert_eq!(recomputed, min_val);
    assert!(log1.best().train_loss < log1.entries[0].train_loss);
}

#[test]
fn bad_splits_are_rejected() {
    let ds = smooth_dataset(4, 0.0, 0);
    let cfg = GamesConfig::default();
    let empty = Split { train: vec![0, 1], validation: vec![] };
    assert!(matches!(train(&ds, &cfg, &empty), Err(GamesError::BadSplit)));
    let overlap = Split { train: vec![0, 1], validation: vec![1] };
    assert!(matches!(train(&ds, &cfg, &overlap), Err(GamesError::BadSplit)));
}

#[test]
fn embeddings_cover_every_day_and_duplicates_coincide() {
    let mut ds = smooth_dataset(8, 0.1, 2);
    ds.days[5] = DaySignal { day_index: 5, ..ds.days[2].clone() };
    let split = Split::seeded(ds.len(), 0.25, 0).unwrap();
    let cfg = GamesConfig { max_epochs: 5, ..Default::default() };
    let (model, _) = train(&ds, &cfg, &split).unwrap();
    let emb = embed_all(&model, &ds).unwrap();
    assert_eq!(emb.len(), 8);
    assert_eq!(emb.day_indices, (0..8).collect::<Vec<_>>());
    assert_eq!(emb.embeddings[2], emb.embeddings[5]);
    assert_eq!(emb.embeddings[0].shape(), (5, 3));
    // Raw and pre-normalized inputs embed identically.
    assert_eq!(embed_all(&model, &ds.normalize()).unwrap(), emb);
}

#[test]
fn checkpoint_round_trip_and_validation() {
    let ds = smooth_dataset(6, 0.1, 3);
    let split = Split::seeded(ds.len(), 0.2, 0).unwrap();
    let (model, _) = train(&ds, &GamesConfig { max_epochs: 3, ..Default::default() }, &split).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&model, &path).unwrap();
    assert_eq!(load_checkpoint::<f64>(&path).unwrap(), model);

    let mut broken = model.clone();
    broken.theta_dec = Matrix::zeros(2, 2);
    save_checkpoint(&broken, &path).unwrap();
    assert!(matches!(load_checkpoint::<f64>(&path), Err(GamesError::Checkpoint { .. })));
}

#[test]
fn single_precision_model_trains() {
    let ds = smooth_dataset(10, 0.05, 1);
    let ds32 = MultiResolutionDataset::new(
        ds.power_graph.clone(),
        ds.gas_graph.clone(),
        ds.coupling_edges.clone(),
        ds.days
            .iter()
            .map(|d| DaySignal {
                day_index: d.day_index,
                electricity: d.electricity.cast(),
                wind_cf: d.wind_cf.cast(),
                solar_cf: d.solar_cf.cast(),
                gas: d.gas.cast(),
            })
            .collect(),
    )
    .unwrap();
    let split = Split::seeded(10, 0.2, 0).unwrap();
    let cfg = GamesConfig { max_epochs: 50, learning_rate: 0.01, ..Default::default() };
    let (model, log) = train::<f32>(&ds32, &cfg, &split).unwrap();
    assert!(log.best().train_loss < log.entries[0].train_loss);
    assert!(loss(&model, &ds32.normalize().days[0]).unwrap().is_finite());
}

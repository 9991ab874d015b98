use games_core::dataset::{DaySignal, MultiResolutionDataset};
use games_core::games::EmbeddingSet;
use games_core::repdays::{
    evaluate_objective, kmedoids, kmedoids_raw, rand_index, swap_improvement_pass, DistanceTable,
    RepresentativeDaySet, Source,
};
use games_core::{Graph, Matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set_of(points: &[Vec<f64>], rows: usize) -> EmbeddingSet<f64> {
    EmbeddingSet {
        day_indices: (0..points.len()).collect(),
        embeddings: points
            .iter()
            .map(|p| Matrix::from_vec(rows, p.len() / rows, p.clone()))
            .collect(),
    }
}

/// Optimal objective over every K-subset of days.
fn exhaustive(table: &DistanceTable, k: usize) -> f64 {
    let n = table.len();
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let cost: f64 = (0..n)
            .map(|j| pick.iter().map(|&m| table.get(m, j)).fold(f64::INFINITY, f64::min))
            .sum();
        best = best.min(cost);
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < n - k + i {
                break;
            }
        }
        pick[i] += 1;
        for r in i + 1..k {
            pick[r] = pick[r - 1] + 1;
        }
    }
}

#[test]
fn four_point_example_matches_enumeration() {
    let e = set_of(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0]], 1);
    let table = DistanceTable::from_embeddings(&e).unwrap();
    let opt = exhaustive(&table, 2);
    assert_eq!(opt, 2.0);
    assert_eq!(kmedoids(&e, 2, 0).unwrap().objective, opt);
}

#[test]
fn planted_blobs_are_recovered() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [[0.0, 0.0, 0.0], [50.0, 0.0, 10.0], [0.0, 60.0, -20.0]];
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..60 {
            let c = rng.gen_range(0..3);
            points.push(centers[c].iter().map(|&x| x + rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
            labels.push(c);
        }
        let e = set_of(&points, 3);
        let set = kmedoids(&e, 3, seed).unwrap();
        let ri = rand_index(&labels, &set.assignment);
        assert!(ri >= 0.95, "seed {seed}: Rand index {ri}");
    }
}

#[test]
fn identical_days_collapse() {
    let p = Graph::new(1, &[]).unwrap();
    let g = Graph::new(1, &[]).unwrap();
    let day = |k| DaySignal {
        day_index: k,
        electricity: Matrix::from_vec(1, 2, vec![5.0, 7.0]),
        wind_cf: Matrix::from_vec(1, 2, vec![0.1, 0.2]),
        solar_cf: Matrix::from_vec(1, 2, vec![0.0, 0.9]),
        gas: Matrix::from_vec(1, 1, vec![3.0]),
    };
    let ds = MultiResolutionDataset::new(p, g, vec![(0, 0)], (0..5).map(day).collect()).unwrap();
    let set = kmedoids_raw(&ds, 1, 0).unwrap();
    assert_eq!(set.objective, 0.0);
    assert_eq!(set.weights, vec![5]);
    assert_eq!(set.source, Source::Raw);
    assert_eq!(kmedoids_raw(&ds, 5, 0).unwrap().objective, 0.0);
}

#[test]
fn isometric_embeddings_reproduce_raw_clustering() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = Graph::new(2, &[(0, 1)]).unwrap();
    let g = Graph::new(1, &[]).unwrap();
    let days: Vec<_> = (0..12)
        .map(|k| DaySignal {
            day_index: k,
            electricity: Matrix::from_fn(2, 3, |_, _| rng.gen_range(0.0..100.0)),
            wind_cf: Matrix::from_fn(2, 3, |_, _| rng.gen_range(0.0..1.0)),
            solar_cf: Matrix::from_fn(2, 3, |_, _| rng.gen_range(0.0..1.0)),
            gas: Matrix::from_fn(1, 1, |_, _| rng.gen_range(0.0..50.0)),
        })
        .collect();
    let ds = MultiResolutionDataset::new(p, g, vec![], days).unwrap();
    // Identity "encoder": the embedding is the flattened normalized day.
    let norm = ds.normalize();
    let e = set_of(&norm.days.iter().map(|d| d.flatten()).collect::<Vec<_>>(), 1);
    let mut raw_obj = Vec::new();
    let mut emb_obj = Vec::new();
    for k in 1..=5 {
        let raw = kmedoids_raw(&ds, k, 0).unwrap();
        let emb = kmedoids(&e, k, 0).unwrap();
        assert_eq!(raw.medoids, emb.medoids);
        raw_obj.push(raw.objective);
        emb_obj.push(emb.objective);
    }
    for k in 1..5 {
        assert_eq!(raw_obj[k] < raw_obj[k - 1], emb_obj[k] < emb_obj[k - 1]);
    }
}

#[test]
fn json_round_trip() {
    let e = set_of(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0], vec![12.0]], 1);
    let set = kmedoids(&e, 2, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("days.json");
    set.write_json(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for key in ["medoids", "assignment", "weights", "objective", "\"embeddings\""] {
        assert!(text.contains(key), "missing {key}");
    }
    assert_eq!(RepresentativeDaySet::read_json(&path).unwrap(), set);
}

fn cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
    (3usize..9).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), n),
            1usize..=n,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn result_is_consistent_and_near_optimal((pts, k) in cloud()) {
        let e = set_of(&pts, 1);
        let set = kmedoids(&e, k, 0).unwrap();
        set.check().unwrap();
        let again = evaluate_objective(&set, &e).unwrap();
        prop_assert!((again - set.objective).abs() <= 1e-10 * (1.0 + again));
        // Every day sits with its nearest medoid.
        for (d, &m) in set.assignment.iter().enumerate() {
            for &other in &set.medoids {
                let dm = e.embeddings[d].dist2(&e.embeddings[m]);
                let dother = e.embeddings[d].dist2(&e.embeddings[other]);
                prop_assert!(dm < dother || (dm == dother && m <= other));
            }
        }
        // SWAP output is a fixed point.
        prop_assert_eq!(swap_improvement_pass(&set, &e).unwrap(), set.clone());
        let opt = exhaustive(&DistanceTable::from_embeddings(&e).unwrap(), k);
        prop_assert!(set.objective >= opt - 1e-9);
    }

    #[test]
    fn swap_never_increases_objective((pts, k) in cloud(), start in any::<u64>()) {
        let e = set_of(&pts, 1);
        let n = pts.len();
        let mut rng = ChaCha8Rng::seed_from_u64(start);
        let mut medoids: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            medoids.swap(i, rng.gen_range(0..=i));
        }
        medoids.truncate(k);
        medoids.sort_unstable();
        let table = DistanceTable::from_embeddings(&e).unwrap();
        let objective: f64 = (0..n)
            .map(|j| medoids.iter().map(|&m| table.get(m, j)).fold(f64::INFINITY, f64::min))
            .sum();
        let mut assignment = vec![0; n];
        for (j, a) in assignment.iter_mut().enumerate() {
            *a = *medoids
                .iter()
                .min_by(|&&x, &&y| table.get(x, j).total_cmp(&table.get(y, j)).then(x.cmp(&y)))
                .unwrap();
        }
        let weights = medoids.iter().map(|&m| assignment.iter().filter(|&&a| a == m).count()).collect();
        let start = RepresentativeDaySet { medoids, assignment, weights, objective, source: Source::Embeddings };
        let out = swap_improvement_pass(&start, &e).unwrap();
        prop_assert!(out.objective <= objective + 1e-12);
    }

    #[test]
    fn permuting_days_keeps_objective((pts, k) in cloud(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        // Continuous coordinates: distance ties (where lowest-index
        // tie-breaking depends on the order) have probability zero.
        let spread = pts.clone();
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| spread[i].clone()).collect();
        let a = kmedoids(&set_of(&spread, 1), k, 1).unwrap();
        let b = kmedoids(&set_of(&shuffled, 1), k, 1).unwrap();
        prop_assert!((a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective));
    }
}

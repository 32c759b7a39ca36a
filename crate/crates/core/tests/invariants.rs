use pcsm_core::dropping::{drop_points, run_drop};
use pcsm_core::experiments::{divisor_near, IterationRule};
use pcsm_core::io::{rank_colors, read_xyz, write_xyz};
use pcsm_core::stats::{average_ranks, spearman};
use pcsm_core::{
    load_checkpoint, save_checkpoint, Architecture, DropConfig, ModelParams, PointCloud, Scheme,
};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn arb_cloud(min: usize, max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), min..max)
}

fn small_model(seed: u64) -> ModelParams {
    let arch = Architecture {
        point_hidden: vec![8, 16],
        head_hidden: vec![8],
        ..Architecture::default()
    };
    ModelParams::init(&arch, 4, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drop_points_keeps_survivors_in_order(
        (pts, idx) in arb_cloud(2, 40).prop_flat_map(|p| {
            let n = p.len();
            (Just(p), subsequence((0..n).collect::<Vec<_>>(), 0..n))
        }),
        seed in any::<u64>(),
    ) {
        let mut idx = idx;
        let mut rng = seed;
        for i in (1..idx.len()).rev() {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            idx.swap(i, (rng >> 33) as usize % (i + 1));
        }
        let cloud = PointCloud::new(pts.clone());
        let (rest, map) = drop_points(&cloud, &idx).unwrap();
        prop_assert_eq!(rest.len(), pts.len() - idx.len());
        let expect: Vec<[f64; 3]> = (0..pts.len()).filter(|i| !idx.contains(i)).map(|i| pts[i]).collect();
        prop_assert_eq!(rest.points(), &expect[..]);
        for (i, m) in map.iter().enumerate() {
            match m {
                None => prop_assert!(idx.contains(&i)),
                Some(j) => prop_assert_eq!(rest.get(*j).unwrap(), &pts[i]),
            }
        }
    }

    #[test]
    fn every_scheme_drops_exactly_its_budget(
        pts in arb_cloud(12, 40),
        per in 1usize..4,
        t in 1usize..4,
        scheme_ix in 0usize..5,
        seed in any::<u64>(),
        label in 0usize..4,
    ) {
        let n = per * t;
        prop_assume!(n < pts.len());
        let model = small_model(seed % 16);
        let cloud = PointCloud::new(pts.clone());
        let config = DropConfig::new(Scheme::ALL[scheme_ix], n, t).with_seed(seed);
        let r = run_drop(&model, &cloud, label, &config).unwrap();
        prop_assert_eq!(r.dropped.len(), n);
        prop_assert_eq!(r.batches.len(), t);
        prop_assert!(r.batches.iter().all(|b| b.len() == per));
        prop_assert_eq!(r.losses.len(), t);
        prop_assert_eq!(r.predictions.len(), t);
        let mut sorted = r.dropped.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), n);
        let expect: Vec<[f64; 3]> = (0..pts.len()).filter(|i| !r.dropped.contains(i)).map(|i| pts[i]).collect();
        prop_assert_eq!(r.remaining.points(), &expect[..]);
        let again = run_drop(&model, &cloud, label, &config).unwrap();
        prop_assert_eq!(&again.dropped, &r.dropped);
        prop_assert_eq!(&again.losses, &r.losses);
    }

    #[test]
    fn logits_are_bitwise_permutation_invariant(pts in arb_cloud(1, 40), seed in any::<u64>(), rot in 0usize..40) {
        let model = small_model(seed % 16);
        let base = model.forward(&PointCloud::new(pts.clone())).unwrap().logits;
        let mut rev = pts.clone();
        rev.reverse();
        let r = rot % pts.len();
        rev.rotate_left(r);
        prop_assert_eq!(model.forward(&PointCloud::new(rev)).unwrap().logits, base);
    }

    #[test]
    fn default_rounds_always_divide_the_budget(n in 1usize..400, scheme_ix in 0usize..5) {
        let scheme = Scheme::ALL[scheme_ix];
        let t = IterationRule::Default.iterations(scheme, n);
        prop_assert!(t >= 1 && t <= n && n % t == 0);
        if matches!(scheme, Scheme::High | Scheme::Critical) && n % 5 == 0 {
            prop_assert_eq!(t, n / 5);
        }
    }

    #[test]
    fn divisor_near_is_a_closest_divisor(n in 1usize..1000, target in 0.0f64..1000.0) {
        let d = divisor_near(n, target);
        prop_assert_eq!(n % d, 0);
        let best = (1..=n).filter(|k| n % k == 0).map(|k| (k as f64 - target).abs()).fold(f64::INFINITY, f64::min);
        prop_assert_eq!((d as f64 - target).abs(), best);
    }

    #[test]
    fn average_ranks_sum_and_order(values in prop::collection::vec(-5i32..5, 1..50)) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        let r = average_ranks(&v);
        let n = v.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] < v[j] {
                    prop_assert!(r[i] < r[j]);
                } else if v[i] == v[j] {
                    prop_assert_eq!(r[i], r[j]);
                }
            }
        }
    }

    #[test]
    fn spearman_bounds_symmetry_and_monotone_invariance(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..60),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Some(s) = spearman(&a, &b) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&s));
            prop_assert_eq!(spearman(&b, &a), Some(s));
            let cubed: Vec<f64> = a.iter().map(|x| x * x * x + 1.0).collect();
            prop_assert!((spearman(&cubed, &b).unwrap() - s).abs() < 1e-12);
            prop_assert!((spearman(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_colors_run_red_to_blue(scores in prop::collection::vec(-10.0f64..10.0, 2..50)) {
        let colors = rank_colors(&scores);
        let top = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        let bottom = (0..scores.len()).fold(0, |b, i| if scores[i] < scores[b] { i } else { b });
        if scores[top] > scores[bottom] {
            let ties_top = scores.iter().filter(|&&s| s == scores[top]).count();
            let ties_bottom = scores.iter().filter(|&&s| s == scores[bottom]).count();
            if ties_top == 1 {
                prop_assert_eq!(colors[top], [255, 0, 0]);
            }
            if ties_bottom == 1 {
                prop_assert_eq!(colors[bottom], [0, 0, 255]);
            }
        }
        for i in 0..scores.len() {
            prop_assert_eq!(colors[i][1], 0);
            for j in 0..scores.len() {
                if scores[i] > scores[j] {
                    prop_assert!(colors[i][0] >= colors[j][0] && colors[i][2] <= colors[j][2]);
                } else if scores[i] == scores[j] {
                    prop_assert_eq!(colors[i], colors[j]);
                }
            }
        }
    }

    #[test]
    fn xyz_round_trip_is_bitwise(pts in prop::collection::vec(prop::array::uniform3(-1e6f64..1e6), 1..30)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.xyz");
        write_xyz(&PointCloud::new(pts.clone()), &path).unwrap();
        prop_assert_eq!(read_xyz(&path).unwrap().into_points(), pts);
    }

    #[test]
    fn checkpoint_round_trip_preserves_logits(seed in any::<u64>(), pts in arb_cloud(1, 20)) {
        let model = small_model(seed);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&model, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        let cloud = PointCloud::new(pts);
        prop_assert_eq!(back.forward(&cloud).unwrap().logits, model.forward(&cloud).unwrap().logits);
    }
}

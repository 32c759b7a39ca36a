//! Point-dropping schemes and the leave-one-out contribution oracle.
//!
//! Every scheme removes `n` points in `T` rounds of `n/T`. Between rounds the
//! remaining cloud is re-examined from scratch, so later rounds see the
//! effect of earlier drops. Ties always go to the lower original index.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cloud::{check_index_set, distance, PointCloud};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::saliency::{saliency_scores, spherical_core, SaliencyConfig};

/// Largest cloud the leave-one-out oracle will accept.
pub const BRUTE_FORCE_MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Highest saliency scores first.
    High,
    /// Lowest saliency scores first.
    Low,
    Random,
    /// Points winning the most max-pooled features.
    Critical,
    /// Farthest from the spherical core.
    Furthest,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::High,
        Scheme::Low,
        Scheme::Random,
        Scheme::Critical,
        Scheme::Furthest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::High => "high",
            Scheme::Low => "low",
            Scheme::Random => "random",
            Scheme::Critical => "critical",
            Scheme::Furthest => "furthest",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" | "high-drop" => Ok(Scheme::High),
            "low" | "low-drop" => Ok(Scheme::Low),
            "random" | "rand" | "rand-drop" => Ok(Scheme::Random),
            "critical" => Ok(Scheme::Critical),
            "furthest" | "farthest" => Ok(Scheme::Furthest),
            other => Err(Error::structural(format!("unknown drop scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropConfig {
    pub scheme: Scheme,
    /// Total number of points to drop.
    pub n: usize,
    /// Number of rounds `T`; each round drops `n / T` points.
    pub iterations: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl DropConfig {
    pub fn new(scheme: Scheme, n: usize, iterations: usize) -> Self {
        DropConfig {
            scheme,
            n,
            iterations,
            alpha: 1.0,
            seed: 0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn per_iteration(&self) -> usize {
        self.n / self.iterations.max(1)
    }

    /// Checks `1 ≤ n < N`, `1 ≤ T ≤ n` and `T | n`.
    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.n == 0 {
            return Err(Error::structural("must drop at least one point"));
        }
        if self.n >= n_points {
            return Err(Error::structural(format!(
                "cannot drop {} of {n_points} points",
                self.n
            )));
        }
        if self.iterations == 0 || self.iterations > self.n {
            return Err(Error::structural(format!(
                "iterations must lie in [1, {}], got {}",
                self.n, self.iterations
            )));
        }
        if !self.n.is_multiple_of(self.iterations) {
            return Err(Error::structural(format!(
                "{} points cannot be split evenly over {} iterations",
                self.n, self.iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropResult {
    pub remaining: PointCloud,
    /// Original indices of the dropped points in drop order.
    pub dropped: Vec<usize>,
    /// Original indices dropped in each round.
    pub batches: Vec<Vec<usize>>,
    /// Loss of the remaining cloud after each round.
    pub losses: Vec<f64>,
    /// Predicted class of the remaining cloud after each round.
    pub predictions: Vec<usize>,
}

impl DropResult {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least one round")
    }

    pub fn final_prediction(&self) -> usize {
        *self.predictions.last().expect("at least one round")
    }
}

/// Removes `indices`, keeping survivors in order. The returned map sends each
/// old index to its new index, or `None` if it was dropped.
pub fn drop_points(
    cloud: &PointCloud,
    indices: &[usize],
) -> Result<(PointCloud, Vec<Option<usize>>)> {
    check_index_set(indices, cloud.len())?;
    if !cloud.is_empty() && indices.len() >= cloud.len() {
        return Err(Error::structural("cannot drop every point of a cloud"));
    }
    let mut keep = vec![true; cloud.len()];
    for &i in indices {
        keep[i] = false;
    }
    let mut mapping = vec![None; cloud.len()];
    let mut points = Vec::with_capacity(cloud.len() - indices.len());
    for (i, p) in cloud.points().iter().enumerate() {
        if keep[i] {
            mapping[i] = Some(points.len());
            points.push(*p);
        }
    }
    Ok((PointCloud::new(points), mapping))
}

/// Runs `config.iterations` rounds. `select` receives the current cloud and
/// the round size and returns current-cloud indices to drop.
fn iterate(
    model: &ModelParams,
    cloud: &PointCloud,
    label: usize,
    config: &DropConfig,
    mut select: impl FnMut(&PointCloud, usize) -> Result<Vec<usize>>,
) -> Result<DropResult> {
    cloud.ensure_nonempty()?;
    model.check_label(label)?;
    config.validate(cloud.len())?;
    let k = config.per_iteration();
    let mut current = cloud.clone();
    let mut original: Vec<usize> = (0..cloud.len()).collect();
    let mut result = DropResult {
        remaining: PointCloud::default(),
        dropped: Vec::with_capacity(config.n),
        batches: Vec::with_capacity(config.iterations),
        losses: Vec::with_capacity(config.iterations),
        predictions: Vec::with_capacity(config.iterations),
    };
    for _ in 0..config.iterations {
        let picked = select(&current, k)?;
        debug_assert_eq!(picked.len(), k);
        let (next, mapping) = drop_points(&current, &picked)?;
        let batch: Vec<usize> = picked.iter().map(|&i| original[i]).collect();
        original = original
            .iter()
            .zip(&mapping)
            .filter_map(|(&o, m)| m.map(|_| o))
            .collect();
        current = next;
        let (loss, pred) = model.loss_and_prediction(&current, label)?;
        result.dropped.extend_from_slice(&batch);
        result.batches.push(batch);
        result.losses.push(loss);
        result.predictions.push(pred.predicted_class);
    }
    result.remaining = current;
    Ok(result)
}

/// Indices of the `k` largest keys, ties to the lower index.
pub(crate) fn top_k_by(keys: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Iterative saliency-guided dropping (`High` or `Low` schemes). Each round
/// recomputes gradients, core and scores on the remaining points.
pub fn saliency_drop(
    model: &ModelParams,
    cloud: &PointCloud,
    label: usize,
    config: &DropConfig,
) -> Result<DropResult> {
    let sal = SaliencyConfig::with_alpha(config.alpha);
    let high = match config.scheme {
        Scheme::High => true,
        Scheme::Low => false,
        other => {
            return Err(Error::structural(format!(
                "saliency_drop needs the high or low scheme, got {other}"
            )))
        }
    };
    iterate(model, cloud, label, config, |current, k| {
        let map = saliency_scores(model, current, Some(label), &sal)?;
        let keys: Vec<f64> = if high {
            map.scores
        } else {
            map.scores.iter().map(|s| -s).collect()
        };
        Ok(top_k_by(&keys, k))
    })
}

/// How many pooled features each point wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalCounts {
    pub counts: Vec<usize>,
}

impl CriticalCounts {
    /// Indices with a nonzero count: the critical subset.
    pub fn critical_subset(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn critical_counts(model: &ModelParams, cloud: &PointCloud) -> Result<CriticalCounts> {
    let pred = model.forward(cloud)?;
    let mut counts = vec![0; cloud.len()];
    for &i in &pred.pool_argmax {
        counts[i] += 1;
    }
    Ok(CriticalCounts { counts })
}

/// Iterative critical-subset dropping: each round drops the points winning the
/// most pooled features. Points winning at least two features go first; if
/// there are too few, the round is filled from single-feature winners and then
/// from non-critical points by lowest index.
pub fn critical_drop(
    model: &ModelParams,
    cloud: &PointCloud,
    label: usize,
    config: &DropConfig,
) -> Result<DropResult> {
    iterate(model, cloud, label, config, |current, k| {
        let counts = critical_counts(model, current)?.counts;
        let mut order: Vec<usize> = (0..counts.len()).collect();
        // descending count, ascending index: c >= 2 first, then c == 1, then c == 0
        order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        order.truncate(k);
        Ok(order)
    })
}

/// Uniformly random dropping without replacement, seeded by `config.seed`.
pub fn rand_drop(
    model: &ModelParams,
    cloud: &PointCloud,
    label: usize,
    config: &DropConfig,
) -> Result<DropResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    iterate(model, cloud, label, config, |current, k| {
        Ok(rand::seq::index::sample(&mut rng, current.len(), k).into_vec())
    })
}

/// Drops the points farthest from the spherical core; the core is recomputed
/// at the start of every round.
pub fn furthest_drop(
    model: &ModelParams,
    cloud: &PointCloud,
    label: usize,
    config: &DropConfig,
) -> Result<DropResult> {
    iterate(model, cloud, label, config, |current, k| {
        furthest_selection(current, k)
    })
}

/// The `k` points farthest from the core of `cloud`.
pub fn furthest_selection(cloud: &PointCloud, k: usize) -> Result<Vec<usize>> {
    let core = spherical_core(cloud)?;
    let d: Vec<f64> = cloud.points().iter().map(|p| distance(p, &core)).collect();
    Ok(top_k_by(&d, k))
}

/// Dispatches on `config.scheme`.
pub fn run_drop(
    model: &ModelParams,
    cloud: &PointCloud,
    label: usize,
    config: &DropConfig,
) -> Result<DropResult> {
    match config.scheme {
        Scheme::High | Scheme::Low => saliency_drop(model, cloud, label, config),
        Scheme::Random => rand_drop(model, cloud, label, config),
        Scheme::Critical => critical_drop(model, cloud, label, config),
        Scheme::Furthest => furthest_drop(model, cloud, label, config),
    }
}

/// Drops every point with a negative saliency score in one round. At least
/// one point (the highest scoring) always survives.
pub fn drop_negative(
    model: &ModelParams,
    cloud: &PointCloud,
    label: usize,
    alpha: f64,
) -> Result<DropResult> {
    model.check_label(label)?;
    let map = saliency_scores(
        model,
        cloud,
        Some(label),
        &SaliencyConfig::with_alpha(alpha),
    )?;
    let mut negative: Vec<usize> = (0..cloud.len()).filter(|&i| map.scores[i] < 0.0).collect();
    if negative.len() == cloud.len() {
        let best = top_k_by(&map.scores, 1)[0];
        negative.retain(|&i| i != best);
    }
    let (remaining, _) = drop_points(cloud, &negative)?;
    let (loss, pred) = model.loss_and_prediction(&remaining, label)?;
    Ok(DropResult {
        remaining,
        dropped: negative.clone(),
        batches: vec![negative],
        losses: vec![loss],
        predictions: vec![pred.predicted_class],
    })
}

/// Leave-one-out contributions `L(X \ {x_i}) − L(X)`.
pub fn brute_force_contribution(
    model: &ModelParams,
    cloud: &PointCloud,
    label: usize,
) -> Result<Vec<f64>> {
    if cloud.len() < 2 {
        return Err(Error::structural(
            "need at least two points to leave one out",
        ));
    }
    if cloud.len() > BRUTE_FORCE_MAX_POINTS {
        return Err(Error::structural(format!(
            "brute-force contribution is limited to {BRUTE_FORCE_MAX_POINTS} points, got {}",
            cloud.len()
        )));
    }
    let base = model.loss(cloud, label)?;
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let (rest, _) = drop_points(cloud, &[i])?;
            Ok(model.loss(&rest, label)? - base)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Architecture;
    use rand::Rng;

    fn model() -> ModelParams {
        ModelParams::init(&Architecture::default(), 4, 7).unwrap()
    }

    fn random_cloud(seed: u64, n: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..n)
                .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect(),
        )
    }

    #[test]
    fn drop_points_basics() {
        let c = PointCloud::new(vec![[0.0; 3], [1.0; 3], [2.0; 3]]);
        let (same, map) = drop_points(&c, &[]).unwrap();
        assert_eq!(same, c);
        assert_eq!(map, vec![Some(0), Some(1), Some(2)]);
        let (rest, map) = drop_points(&c, &[0]).unwrap();
        assert_eq!(rest.points(), &[[1.0; 3], [2.0; 3]]);
        assert_eq!(map, vec![None, Some(0), Some(1)]);
        assert!(drop_points(&c, &[3]).is_err());
        assert!(drop_points(&c, &[1, 1]).is_err());
        assert!(drop_points(&c, &[0, 1, 2]).is_err());
    }

    #[test]
    fn drop_then_reinsert_restores_cloud() {
        let c = random_cloud(3, 20);
        let dropped = [17, 2, 9, 0];
        let (rest, map) = drop_points(&c, &dropped).unwrap();
        let mut rebuilt = vec![[f64::NAN; 3]; c.len()];
        for (old, new) in map.iter().enumerate() {
            if let Some(new) = new {
                rebuilt[old] = rest.points()[*new];
            }
        }
        for &i in &dropped {
            rebuilt[i] = c.points()[i];
        }
        assert_eq!(PointCloud::new(rebuilt), c);
    }

    #[test]
    fn config_validation() {
        assert!(DropConfig::new(Scheme::High, 10, 2).validate(20).is_ok());
        assert!(DropConfig::new(Scheme::High, 10, 3).validate(20).is_err());
        assert!(DropConfig::new(Scheme::High, 20, 1).validate(20).is_err());
        assert!(DropConfig::new(Scheme::High, 0, 1).validate(20).is_err());
        assert!(DropConfig::new(Scheme::High, 4, 5).validate(20).is_err());
        assert!(DropConfig::new(Scheme::High, 4, 0).validate(20).is_err());
    }

    #[test]
    fn scheme_parsing() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("rand".parse::<Scheme>().unwrap(), Scheme::Random);
        assert!("nope".parse::<Scheme>().is_err());
    }

    #[test]
    fn high_drop_single_point_is_argmax_score() {
        let m = model();
        let c = PointCloud::new(vec![
            [0.9, 0.1, -0.3],
            [-0.5, 0.7, 0.2],
            [0.1, -0.8, 0.6],
            [0.3, 0.3, 0.9],
        ]);
        let map = saliency_scores(&m, &c, Some(2), &SaliencyConfig::default()).unwrap();
        let best = top_k_by(&map.scores, 1)[0];
        let r = saliency_drop(&m, &c, 2, &DropConfig::new(Scheme::High, 1, 1)).unwrap();
        assert_eq!(r.dropped, vec![best]);
        let worst = top_k_by(&map.scores.iter().map(|s| -s).collect::<Vec<_>>(), 1)[0];
        let r = saliency_drop(&m, &c, 2, &DropConfig::new(Scheme::Low, 1, 1)).unwrap();
        assert_eq!(r.dropped, vec![worst]);
    }

    #[test]
    fn budget_and_records() {
        let m = model();
        let c = random_cloud(1, 40);
        for scheme in Scheme::ALL {
            let cfg = DropConfig::new(scheme, 12, 4).with_seed(5);
            let r = run_drop(&m, &c, 1, &cfg).unwrap();
            assert_eq!(r.dropped.len(), 12, "{scheme}");
            assert_eq!(r.batches.len(), 4);
            assert!(r.batches.iter().all(|b| b.len() == 3));
            assert_eq!(r.losses.len(), 4);
            assert_eq!(r.predictions.len(), 4);
            assert_eq!(r.remaining.len(), 28);
            let mut d = r.dropped.clone();
            d.sort();
            d.dedup();
            assert_eq!(d.len(), 12);
            // survivors are exactly the non-dropped originals, in order
            let keep: Vec<usize> = (0..40).filter(|i| !r.dropped.contains(i)).collect();
            assert_eq!(r.remaining, c.select(&keep).unwrap());
            // deterministic rerun
            assert_eq!(run_drop(&m, &c, 1, &cfg).unwrap(), r);
        }
    }

    #[test]
    fn n_at_least_cloud_size_is_rejected() {
        let m = model();
        let c = random_cloud(1, 5);
        for scheme in Scheme::ALL {
            let r = run_drop(&m, &c, 0, &DropConfig::new(scheme, 5, 1));
            assert!(matches!(r, Err(Error::Structural(_))));
        }
    }

    #[test]
    fn saliency_drop_rejects_other_schemes() {
        let m = model();
        let c = random_cloud(1, 5);
        assert!(saliency_drop(&m, &c, 0, &DropConfig::new(Scheme::Random, 1, 1)).is_err());
    }

    #[test]
    fn rand_drop_seeded() {
        let m = model();
        let c = random_cloud(2, 30);
        let cfg = DropConfig::new(Scheme::Random, 10, 2).with_seed(99);
        assert_eq!(
            rand_drop(&m, &c, 0, &cfg).unwrap().dropped,
            rand_drop(&m, &c, 0, &cfg).unwrap().dropped
        );
        let one = rand_drop(&m, &c, 0, &DropConfig::new(Scheme::Random, 29, 1)).unwrap();
        assert_eq!(one.remaining.len(), 1);
    }

    #[test]
    fn rand_drop_is_uniform() {
        let m = ModelParams::init(
            &Architecture {
                point_hidden: vec![4],
                pooled: 4,
                head_hidden: vec![4],
            },
            2,
            1,
        )
        .unwrap();
        let c = random_cloud(3, 10);
        let mut hits = [0usize; 10];
        let trials = 10_000;
        for seed in 0..trials {
            let r = rand_drop(
                &m,
                &c,
                0,
                &DropConfig::new(Scheme::Random, 1, 1).with_seed(seed),
            )
            .unwrap();
            hits[r.dropped[0]] += 1;
        }
        for h in hits {
            let f = h as f64 / trials as f64;
            assert!((f - 0.1).abs() <= 0.01, "frequency {f}");
        }
    }

    #[test]
    fn furthest_colinear_and_ties() {
        let m = model();
        let c = PointCloud::new(vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [10.0, 0.0, 0.0],
        ]);
        let r = furthest_drop(&m, &c, 0, &DropConfig::new(Scheme::Furthest, 1, 1)).unwrap();
        assert_eq!(r.dropped, vec![3]);
        let sym = PointCloud::new(vec![[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let r = furthest_drop(&m, &sym, 0, &DropConfig::new(Scheme::Furthest, 1, 1)).unwrap();
        assert_eq!(r.dropped, vec![0]);
    }

    /// Recomputes every distance after every single removal.
    fn furthest_oracle(cloud: &PointCloud, n: usize, t: usize) -> Vec<usize> {
        let mut alive: Vec<usize> = (0..cloud.len()).collect();
        let mut out = Vec::new();
        for _ in 0..t {
            let cur = cloud.select(&alive).unwrap();
            let mut axes: [Vec<f64>; 3] =
                std::array::from_fn(|j| cur.points().iter().map(|p| p[j]).collect());
            let core: [f64; 3] = std::array::from_fn(|j| {
                let v = &mut axes[j];
                v.sort_by(f64::total_cmp);
                let len = v.len();
                if len % 2 == 1 {
                    v[len / 2]
                } else {
                    (v[len / 2 - 1] + v[len / 2]) / 2.0
                }
            });
            for _ in 0..n / t {
                let mut best = 0;
                for pos in 1..alive.len() {
                    let d = distance(&cloud.points()[alive[pos]], &core);
                    let db = distance(&cloud.points()[alive[best]], &core);
                    if d > db {
                        best = pos;
                    }
                }
                out.push(alive.remove(best));
            }
        }
        out
    }

    #[test]
    fn furthest_matches_oracle() {
        let m = model();
        for seed in 0..20 {
            let c = random_cloud(100 + seed, 64);
            for (n, t) in [(10, 1), (12, 4), (20, 20)] {
                let r = furthest_drop(&m, &c, 0, &DropConfig::new(Scheme::Furthest, n, t)).unwrap();
                assert_eq!(r.dropped, furthest_oracle(&c, n, t));
            }
        }
    }

    #[test]
    fn critical_counts_basics() {
        let m = model();
        let single = PointCloud::new(vec![[0.2, 0.1, 0.3]]);
        assert_eq!(critical_counts(&m, &single).unwrap().counts, vec![64]);

        let c = random_cloud(5, 30);
        let counts = critical_counts(&m, &c).unwrap();
        assert_eq!(counts.total(), 64);
        assert!(counts.critical_subset().len() <= 64);

        let winner = counts
            .counts
            .iter()
            .enumerate()
            .max_by_key(|(i, &c)| (c, std::cmp::Reverse(*i)))
            .unwrap()
            .0;
        let mut dup = c.clone();
        dup.push(c.points()[winner]);
        let mut expected = counts.counts.clone();
        expected.push(0);
        assert_eq!(critical_counts(&m, &dup).unwrap().counts, expected);
    }

    #[test]
    fn critical_drop_takes_dominant_point_first() {
        let m = model();
        let c = random_cloud(6, 25);
        let counts = critical_counts(&m, &c).unwrap().counts;
        let mut order: Vec<usize> = (0..25).collect();
        order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        let r = critical_drop(&m, &c, 0, &DropConfig::new(Scheme::Critical, 1, 1)).unwrap();
        assert_eq!(r.dropped, vec![order[0]]);
    }

    #[test]
    fn critical_drop_fills_from_low_counts() {
        // Only a handful of points are critical; a large round must still be filled.
        let m = model();
        let c = random_cloud(8, 30);
        let crit = critical_counts(&m, &c).unwrap().critical_subset().len();
        let n = 29;
        assert!(n > crit);
        let r = critical_drop(&m, &c, 0, &DropConfig::new(Scheme::Critical, n, 1)).unwrap();
        assert_eq!(r.dropped.len(), n);
    }

    #[test]
    fn brute_force_zero_for_duplicates_and_non_critical() {
        let m = model();
        let base = random_cloud(9, 20);
        let mut c = base.clone();
        c.push(base.points()[3]);
        let contrib = brute_force_contribution(&m, &c, 1).unwrap();
        assert_eq!(contrib[20], 0.0);
        assert_eq!(contrib[3], 0.0);
        let counts = critical_counts(&m, &c).unwrap().counts;
        for (i, &cnt) in counts.iter().enumerate() {
            if cnt == 0 {
                assert_eq!(contrib[i], 0.0, "point {i}");
            }
        }
        assert!(brute_force_contribution(&m, &PointCloud::new(vec![[0.0; 3]]), 0).is_err());
    }

    #[test]
    fn drop_negative_keeps_a_survivor() {
        let m = model();
        let c = random_cloud(10, 30);
        let r = drop_negative(&m, &c, 2, 1.0).unwrap();
        assert!(!r.remaining.is_empty());
        let map = saliency_scores(&m, &c, Some(2), &SaliencyConfig::default()).unwrap();
        for &i in &r.dropped {
            assert!(map.scores[i] < 0.0);
        }
    }
}

//! Dataset-level experiments: robustness curves, shift/drop consistency,
//! parameter sweeps, cross-model transfer, and agreement with the
//! leave-one-out oracle. Clouds are processed in parallel; results are
//! collected in dataset order before any reduction, so the numbers do not
//! depend on the thread count.

use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cloud::{LabeledCloud, PointCloud};
use crate::dropping::{
    brute_force_contribution, critical_counts, drop_points, furthest_selection, run_drop, top_k_by,
    DropConfig, Scheme,
};
use crate::error::{Error, Result};
use crate::io::write_csv;
use crate::model::{evaluate_dataset, ModelParams};
use crate::saliency::{saliency_scores, shift_to_center, spherical_core, SaliencyConfig};
use crate::stats::{median, spearman};

/// Points dropped per round under the default rule for the iterative schemes.
pub const DEFAULT_ROUND_SIZE: usize = 5;

/// How the number of rounds `T` is chosen for a given budget `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IterationRule {
    /// `High` and `Critical` drop [`DEFAULT_ROUND_SIZE`] points per round;
    /// every other scheme uses a single round.
    #[default]
    Default,
    /// The same `T` for every scheme and budget.
    Fixed(usize),
    /// Aim for this many points per round for every scheme.
    RoundSize(usize),
}

impl IterationRule {
    pub fn iterations(self, scheme: Scheme, n: usize) -> usize {
        match self {
            IterationRule::Fixed(t) => t,
            IterationRule::RoundSize(s) => divisor_near(n, n as f64 / s.max(1) as f64),
            IterationRule::Default => match scheme {
                Scheme::High | Scheme::Critical => {
                    divisor_near(n, n as f64 / DEFAULT_ROUND_SIZE as f64)
                }
                Scheme::Low | Scheme::Random | Scheme::Furthest => 1,
            },
        }
    }
}

impl FromStr for IterationRule {
    type Err = Error;

    /// `default`, `T=<t>` (fixed rounds) or `per=<s>` (points per round).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |v: &str| {
            v.parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::structural(format!("bad iteration rule '{s}'")))
        };
        if s.eq_ignore_ascii_case("default") {
            Ok(IterationRule::Default)
        } else if let Some(v) = s.strip_prefix("T=").or_else(|| s.strip_prefix("t=")) {
            Ok(IterationRule::Fixed(parse(v)?))
        } else if let Some(v) = s.strip_prefix("per=") {
            Ok(IterationRule::RoundSize(parse(v)?))
        } else {
            Err(Error::structural(format!(
                "bad iteration rule '{s}' (expected default, T=<t> or per=<s>)"
            )))
        }
    }
}

/// The divisor of `n` closest to `target`; ties go to the larger divisor.
/// Returns 1 for `n == 0`.
pub fn divisor_near(n: usize, target: f64) -> usize {
    if n == 0 {
        return 1;
    }
    (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .min_by(|&a, &b| {
            let (da, db) = ((a as f64 - target).abs(), (b as f64 - target).abs());
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .unwrap()
}

/// Per-cloud seed so every cloud gets its own random stream.
pub fn cloud_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Settings shared by the dataset-level drop experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub rule: IterationRule,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            rule: IterationRule::Default,
            alpha: 1.0,
            seed: 0,
        }
    }
}

fn min_points(dataset: &[LabeledCloud]) -> Result<usize> {
    dataset
        .iter()
        .map(|s| s.cloud.len())
        .min()
        .ok_or_else(|| Error::structural("dataset is empty"))
}

fn check_budget(n: usize, dataset: &[LabeledCloud]) -> Result<()> {
    let smallest = min_points(dataset)?;
    if n >= smallest {
        return Err(Error::structural(format!(
            "cannot drop {n} points from a cloud with {smallest} points"
        )));
    }
    Ok(())
}

/// One drop experiment over a dataset: accuracy and mean loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropEvaluation {
    pub dropped: usize,
    pub iterations: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub mean_loss: f64,
}

fn summarize(dropped: usize, iterations: usize, outcomes: &[(f64, bool)]) -> DropEvaluation {
    let correct = outcomes.iter().filter(|o| o.1).count();
    DropEvaluation {
        dropped,
        iterations,
        correct,
        total: outcomes.len(),
        accuracy: correct as f64 / outcomes.len() as f64,
        mean_loss: outcomes.iter().map(|o| o.0).sum::<f64>() / outcomes.len() as f64,
    }
}

/// Drops `n` points from every cloud with `attacker` and scores the result
/// with `judge`. `n == 0` evaluates the clean clouds.
pub fn evaluate_drop(
    attacker: &ModelParams,
    judge: &ModelParams,
    dataset: &[LabeledCloud],
    scheme: Scheme,
    n: usize,
    iterations: usize,
    config: &ExperimentConfig,
) -> Result<DropEvaluation> {
    if n == 0 {
        let e = evaluate_dataset(judge, dataset)?;
        return Ok(DropEvaluation {
            dropped: 0,
            iterations: 0,
            correct: e.correct,
            total: e.total,
            accuracy: e.accuracy(),
            mean_loss: e.mean_loss,
        });
    }
    check_budget(n, dataset)?;
    let outcomes: Vec<(f64, bool)> = dataset
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let cfg = DropConfig::new(scheme, n, iterations)
                .with_alpha(config.alpha)
                .with_seed(cloud_seed(config.seed, i));
            let r = run_drop(attacker, &s.cloud, s.label, &cfg)?;
            let (loss, pred) = judge.loss_and_prediction(&r.remaining, s.label)?;
            Ok((loss, pred.predicted_class == s.label))
        })
        .collect::<Result<_>>()?;
    Ok(summarize(n, iterations, &outcomes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessCurve {
    pub scheme: Scheme,
    pub rows: Vec<DropEvaluation>,
}

/// Accuracy and mean loss after dropping each budget in `grid`.
pub fn robustness_curve(
    model: &ModelParams,
    dataset: &[LabeledCloud],
    scheme: Scheme,
    grid: &[usize],
    config: &ExperimentConfig,
) -> Result<RobustnessCurve> {
    if grid.is_empty() {
        return Err(Error::structural("drop grid is empty"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::structural("drop grid must be strictly increasing"));
    }
    check_budget(*grid.last().unwrap(), dataset)?;
    let rows = grid
        .iter()
        .map(|&n| {
            let t = config.rule.iterations(scheme, n);
            evaluate_drop(model, model, dataset, scheme, n, t, config)
        })
        .collect::<Result<_>>()?;
    Ok(RobustnessCurve { scheme, rows })
}

pub fn write_curves_csv(curves: &[RobustnessCurve], path: impl AsRef<Path>) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["scheme", "dropped", "iterations", "accuracy", "mean_loss"],
        |out| {
            for c in curves {
                for r in &c.rows {
                    out.push(vec![
                        c.scheme.to_string(),
                        r.dropped.to_string(),
                        r.iterations.to_string(),
                        r.accuracy.to_string(),
                        r.mean_loss.to_string(),
                    ]);
                }
            }
        },
    )
}

/// Picks `n` points of `cloud` in one pass, using the same criterion as the
/// corresponding drop scheme.
pub fn select_once(
    model: &ModelParams,
    cloud: &PointCloud,
    label: usize,
    scheme: Scheme,
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    if n > cloud.len() {
        return Err(Error::structural(format!(
            "cannot select {n} of {} points",
            cloud.len()
        )));
    }
    Ok(match scheme {
        Scheme::High | Scheme::Low => {
            let map = saliency_scores(
                model,
                cloud,
                Some(label),
                &SaliencyConfig::with_alpha(alpha),
            )?;
            let keys: Vec<f64> = if scheme == Scheme::High {
                map.scores
            } else {
                map.scores.iter().map(|s| -s).collect()
            };
            top_k_by(&keys, n)
        }
        Scheme::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, cloud.len(), n).into_vec()
        }
        Scheme::Critical => {
            let counts = critical_counts(model, cloud)?.counts;
            let keys: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            top_k_by(&keys, n)
        }
        Scheme::Furthest => furthest_selection(cloud, n)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub scheme: Scheme,
    pub n: usize,
    pub pairs: usize,
    pub agreements: usize,
}

impl ConsistencyRow {
    pub fn agreement(&self) -> f64 {
        self.agreements as f64 / self.pairs as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub n: usize,
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyReport {
    pub fn agreement(&self, scheme: Scheme) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme)
            .map(ConsistencyRow::agreement)
    }
}

/// The two variants compared by the consistency experiment: the cloud with
/// `indices` removed, and the cloud with those points moved onto the
/// spherical core of the original cloud.
pub fn drop_and_shift_variants(
    cloud: &PointCloud,
    indices: &[usize],
) -> Result<(PointCloud, PointCloud)> {
    let core = spherical_core(cloud)?;
    let (dropped, _) = drop_points(cloud, indices)?;
    let shifted = shift_to_center(cloud, indices, &core)?;
    Ok((dropped, shifted))
}

/// For each scheme, the fraction of clouds whose drop and shift variants
/// get the same predicted class, right or wrong.
pub fn shift_drop_consistency(
    model: &ModelParams,
    dataset: &[LabeledCloud],
    schemes: &[Scheme],
    n: usize,
    config: &ExperimentConfig,
) -> Result<ConsistencyReport> {
    if n > 0 {
        check_budget(n, dataset)?;
    } else if dataset.is_empty() {
        return Err(Error::structural("dataset is empty"));
    }
    let rows = schemes
        .iter()
        .map(|&scheme| {
            let agree: Vec<bool> = dataset
                .par_iter()
                .enumerate()
                .map(|(i, s)| {
                    if n == 0 {
                        return Ok(true);
                    }
                    let idx = select_once(
                        model,
                        &s.cloud,
                        s.label,
                        scheme,
                        n,
                        config.alpha,
                        cloud_seed(config.seed, i),
                    )?;
                    let (dropped, shifted) = drop_and_shift_variants(&s.cloud, &idx)?;
                    Ok(model.forward(&dropped)?.predicted_class
                        == model.forward(&shifted)?.predicted_class)
                })
                .collect::<Result<_>>()?;
            Ok(ConsistencyRow {
                scheme,
                n,
                pairs: agree.len(),
                agreements: agree.iter().filter(|&&a| a).count(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConsistencyReport { n, rows })
}

pub fn write_consistency_csv(report: &ConsistencyReport, path: impl AsRef<Path>) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["scheme", "n", "pairs", "agreements", "agreement"],
        |out| {
            for r in &report.rows {
                out.push(vec![
                    r.scheme.to_string(),
                    r.n.to_string(),
                    r.pairs.to_string(),
                    r.agreements.to_string(),
                    r.agreement().to_string(),
                ]);
            }
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Alpha,
    Budget,
    Iterations,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Alpha => "alpha",
            Study::Budget => "n",
            Study::Iterations => "T",
        }
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "alpha" => Ok(Study::Alpha),
            "n" => Ok(Study::Budget),
            "T" | "t" => Ok(Study::Iterations),
            other => Err(Error::structural(format!(
                "unknown study '{other}' (expected alpha, n or T)"
            ))),
        }
    }
}

pub const ALPHA_SWEEP: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const ITERATION_SWEEP: [usize; 5] = [1, 2, 5, 10, 20];
/// Fractions of the cloud dropped in the budget sweep.
pub const BUDGET_FRACTIONS: [f64; 7] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
/// Budget used by the alpha and iteration sweeps; divisible by every entry
/// of [`ITERATION_SWEEP`].
pub const DEFAULT_STUDY_BUDGET: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub study: Study,
    /// The swept value (alpha, budget, or T).
    pub value: f64,
    pub scheme: Scheme,
    pub result: DropEvaluation,
}

/// Budgets for the n-sweep: each fraction of the smallest cloud rounded
/// down to a multiple of [`DEFAULT_ROUND_SIZE`].
pub fn budget_grid(points: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = BUDGET_FRACTIONS
        .iter()
        .map(|f| ((f * points as f64) as usize / DEFAULT_ROUND_SIZE) * DEFAULT_ROUND_SIZE)
        .filter(|&n| n < points)
        .collect();
    grid.dedup();
    grid
}

/// Runs one parameter sweep. The alpha and iteration sweeps use high-drop at
/// budget `n`; the budget sweep compares high-drop against random dropping.
pub fn parameter_study(
    model: &ModelParams,
    dataset: &[LabeledCloud],
    study: Study,
    n: usize,
    config: &ExperimentConfig,
) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    match study {
        Study::Alpha => {
            let t = config.rule.iterations(Scheme::High, n);
            for alpha in ALPHA_SWEEP {
                let cfg = ExperimentConfig { alpha, ..*config };
                let result = evaluate_drop(model, model, dataset, Scheme::High, n, t, &cfg)?;
                rows.push(StudyRow {
                    study,
                    value: alpha,
                    scheme: Scheme::High,
                    result,
                });
            }
        }
        Study::Iterations => {
            for t in ITERATION_SWEEP {
                if !n.is_multiple_of(t) {
                    return Err(Error::structural(format!(
                        "budget {n} is not divisible by T = {t}"
                    )));
                }
                let result = evaluate_drop(model, model, dataset, Scheme::High, n, t, config)?;
                rows.push(StudyRow {
                    study,
                    value: t as f64,
                    scheme: Scheme::High,
                    result,
                });
            }
        }
        Study::Budget => {
            for budget in budget_grid(min_points(dataset)?) {
                for scheme in [Scheme::High, Scheme::Random] {
                    let t = config.rule.iterations(scheme, budget);
                    let result = evaluate_drop(model, model, dataset, scheme, budget, t, config)?;
                    rows.push(StudyRow {
                        study,
                        value: budget as f64,
                        scheme,
                        result,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_study_csv(rows: &[StudyRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv(
        path.as_ref(),
        &[
            "study",
            "value",
            "scheme",
            "dropped",
            "iterations",
            "accuracy",
            "mean_loss",
        ],
        |out| {
            for r in rows {
                out.push(vec![
                    r.study.name().to_string(),
                    r.value.to_string(),
                    r.scheme.to_string(),
                    r.result.dropped.to_string(),
                    r.result.iterations.to_string(),
                    r.result.accuracy.to_string(),
                    r.result.mean_loss.to_string(),
                ]);
            }
        },
    )
}

/// Model B evaluated on clean clouds, on clouds attacked by high-drop against
/// model A, and on randomly dropped clouds with the same budget.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub clean: DropEvaluation,
    pub transferred_high: DropEvaluation,
    pub random: DropEvaluation,
}

pub fn transfer(
    source: &ModelParams,
    target: &ModelParams,
    dataset: &[LabeledCloud],
    n: usize,
    config: &ExperimentConfig,
) -> Result<TransferReport> {
    if source.classes() != target.classes() {
        return Err(Error::format(format!(
            "models disagree on the class count: {} vs {}",
            source.classes(),
            target.classes()
        )));
    }
    let t_high = config.rule.iterations(Scheme::High, n);
    let t_rand = config.rule.iterations(Scheme::Random, n);
    Ok(TransferReport {
        clean: evaluate_drop(target, target, dataset, Scheme::High, 0, 0, config)?,
        transferred_high: evaluate_drop(source, target, dataset, Scheme::High, n, t_high, config)?,
        random: evaluate_drop(target, target, dataset, Scheme::Random, n, t_rand, config)?,
    })
}

pub fn write_transfer_csv(report: &TransferReport, path: impl AsRef<Path>) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["setting", "dropped", "iterations", "accuracy", "mean_loss"],
        |out| {
            for (name, r) in [
                ("clean", &report.clean),
                ("high-transfer", &report.transferred_high),
                ("random", &report.random),
            ] {
                out.push(vec![
                    name.to_string(),
                    r.dropped.to_string(),
                    r.iterations.to_string(),
                    r.accuracy.to_string(),
                    r.mean_loss.to_string(),
                ]);
            }
        },
    )
}

/// Spearman correlation between saliency scores and leave-one-out
/// contributions, one entry per cloud (`None` if either side is constant).
pub fn oracle_correlations(
    model: &ModelParams,
    dataset: &[LabeledCloud],
    alpha: f64,
) -> Result<Vec<Option<f64>>> {
    let sal = SaliencyConfig::with_alpha(alpha);
    dataset
        .iter()
        .map(|s| {
            let map = saliency_scores(model, &s.cloud, Some(s.label), &sal)?;
            let contrib = brute_force_contribution(model, &s.cloud, s.label)?;
            Ok(spearman(&map.scores, &contrib))
        })
        .collect()
}

/// Median of the defined correlations.
pub fn median_correlation(correlations: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = correlations.iter().flatten().copied().collect();
    median(&defined)
}

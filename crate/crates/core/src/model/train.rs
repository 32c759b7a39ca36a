use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{evaluate_dataset, Architecture, ModelParams};
use crate::autodiff::Tensor;
use crate::cloud::LabeledCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    /// Heavy-ball momentum with the given coefficient.
    Momentum(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub architecture: Architecture,
    /// Class count; defaults to one more than the largest label.
    pub classes: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.01,
            optimizer: Optimizer::Momentum(0.9),
            seed: 0,
            architecture: Architecture::default(),
            classes: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::structural("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::structural("batch size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::structural("learning rate must be positive"));
        }
        if let Optimizer::Momentum(m) = self.optimizer {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::structural("momentum must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: ModelParams,
    /// Mean training loss seen during each epoch.
    pub epoch_losses: Vec<f64>,
    /// Accuracy on the training set after the final epoch.
    pub train_accuracy: f64,
}

/// Minibatch training. Fully determined by the dataset and `config`: the
/// shuffle comes from the seed, and per-sample gradients are summed in
/// dataset order regardless of how many threads computed them.
pub fn train(dataset: &[LabeledCloud], config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::structural("training set is empty"));
    }
    let max_label = dataset.iter().map(|s| s.label).max().unwrap();
    let classes = config.classes.unwrap_or(max_label + 1);
    if max_label >= classes {
        return Err(Error::structural(format!(
            "label {max_label} out of range for k = {classes}"
        )));
    }

    let mut params = ModelParams::init(&config.architecture, classes, config.seed)?;
    let mut velocity: Vec<Tensor> = params
        .parameters()
        .map(|t| Tensor::zeros(t.shape().to_vec()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let model = &params;
            let per_sample: Vec<(f64, Vec<Tensor>)> = batch
                .par_iter()
                .map(|&i| model.parameter_gradients(&dataset[i].cloud, dataset[i].label))
                .collect::<Result<_>>()
                .map_err(|e| diverged(epoch, e))?;

            let scale = 1.0 / batch.len() as f64;
            let mut grads: Vec<Tensor> = per_sample[0].1.clone();
            loss_sum += per_sample[0].0;
            for (loss, g) in &per_sample[1..] {
                loss_sum += loss;
                for (acc, gi) in grads.iter_mut().zip(g) {
                    acc.add_assign(gi);
                }
            }
            if !loss_sum.is_finite() {
                return Err(Error::numeric(format!(
                    "training diverged in epoch {epoch}: loss is {loss_sum}"
                )));
            }

            for ((p, g), v) in params.parameters_mut().zip(&grads).zip(&mut velocity) {
                let pd = p.data_mut();
                match config.optimizer {
                    Optimizer::Sgd => {
                        for (w, &gw) in pd.iter_mut().zip(g.data()) {
                            *w -= config.learning_rate * scale * gw;
                        }
                    }
                    Optimizer::Momentum(mu) => {
                        for ((w, &gw), vel) in pd.iter_mut().zip(g.data()).zip(v.data_mut()) {
                            *vel = mu * *vel + scale * gw;
                            *w -= config.learning_rate * *vel;
                        }
                    }
                }
            }
            if !params.parameters().all(Tensor::all_finite) {
                return Err(Error::numeric(format!(
                    "training diverged in epoch {epoch}: weights became non-finite"
                )));
            }
        }
        epoch_losses.push(loss_sum / dataset.len() as f64);
    }

    let train_accuracy = evaluate_dataset(&params, dataset)?.accuracy();
    Ok(TrainReport {
        params,
        epoch_losses,
        train_accuracy,
    })
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::Numeric(msg) => Error::numeric(format!("training diverged in epoch {epoch}: {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;
    use rand::Rng;

    /// Two clusters at ±z: trivially separable by the pooled z feature.
    fn toy_set(per_class: usize, seed: u64) -> Vec<LabeledCloud> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..per_class * 2 {
            let label = i % 2;
            let z = if label == 0 { 1.0 } else { -1.0 };
            let pts = (0..16)
                .map(|_| {
                    [
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-0.3..0.3),
                        z + rng.random_range(-0.3..0.3),
                    ]
                })
                .collect();
            out.push(LabeledCloud::new(
                PointCloud::new(pts),
                label,
                format!("toy{i}"),
            ));
        }
        out
    }

    fn toy_config(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 20,
            batch_size: 8,
            learning_rate: 0.01,
            optimizer: Optimizer::Sgd,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let data = toy_set(20, 3);
        let report = train(&data, &toy_config(5)).unwrap();
        assert!(
            report.train_accuracy >= 0.99,
            "accuracy {}",
            report.train_accuracy
        );
        for w in report.epoch_losses.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-6,
                "loss increased: {:?}",
                report.epoch_losses
            );
        }
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let data = toy_set(6, 1);
        let cfg = TrainConfig {
            epochs: 2,
            optimizer: Optimizer::Momentum(0.9),
            ..toy_config(11)
        };
        let a = train(&data, &cfg).unwrap();
        let b = train(&data, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn rejects_empty_and_invalid() {
        assert!(matches!(
            train(&[], &toy_config(0)),
            Err(Error::Structural(_))
        ));
        let data = toy_set(2, 1);
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..toy_config(0)
        };
        assert!(train(&data, &bad).is_err());
        let bad = TrainConfig {
            epochs: 0,
            ..toy_config(0)
        };
        assert!(train(&data, &bad).is_err());
    }

    #[test]
    fn divergence_names_epoch() {
        let data = toy_set(4, 1);
        let cfg = TrainConfig {
            learning_rate: 1e200,
            epochs: 3,
            ..toy_config(0)
        };
        match train(&data, &cfg) {
            Err(Error::Numeric(msg)) => {
                let named = (1..=3).any(|e| msg.contains(&format!("diverged in epoch {e}:")));
                assert!(named, "{msg}");
            }
            other => panic!("expected numeric error, got {other:?}"),
        }
    }
}

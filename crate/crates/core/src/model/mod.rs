//! Mini PointNet: a shared per-point MLP, a feature-wise max over points, and
//! a small MLP head on the pooled features.
//!
//! ```text
//! x_i --[3→32 relu]--[32→64 relu]--[64→F relu]--> h(x_i)
//! u = max_i h(x_i)                    (argmax per feature recorded)
//! u --[F→64 relu]--[64→k]--> logits
//! ```
//!
//! A pooled feature that is zero for every point is a tie, and the lowest
//! index (point 0) is recorded as its winner.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use train::{train, Optimizer, TrainConfig, TrainReport};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::autodiff::{argmax_first, evaluate, Bindings, NodeId, Program, Tensor};
use crate::cloud::{LabeledCloud, Point, PointCloud};
use crate::error::{Error, Result};

/// Layer widths. The defaults are 3→32→64→64 per point and 64→64→k in the head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    /// Hidden widths of the per-point MLP, excluding the pooled width.
    pub point_hidden: Vec<usize>,
    /// Width of the max-pooled feature vector (F).
    pub pooled: usize,
    /// Hidden widths of the head.
    pub head_hidden: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            point_hidden: vec![32, 64],
            pooled: 64,
            head_hidden: vec![64],
        }
    }
}

impl Architecture {
    fn point_dims(&self) -> Vec<(usize, usize)> {
        chain_dims(3, &self.point_hidden, self.pooled)
    }

    fn head_dims(&self, classes: usize) -> Vec<(usize, usize)> {
        chain_dims(self.pooled, &self.head_hidden, classes)
    }
}

fn chain_dims(input: usize, hidden: &[usize], output: usize) -> Vec<(usize, usize)> {
    let mut widths = vec![input];
    widths.extend_from_slice(hidden);
    widths.push(output);
    widths.windows(2).map(|w| (w[0], w[1])).collect()
}

/// One affine layer: `weight: [in, out]`, `bias: [out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn input_width(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_width(&self) -> usize {
        self.weight.shape()[1]
    }
}

/// Weights of the classifier. Immutable once trained; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    classes: usize,
    point_layers: Vec<Dense>,
    head_layers: Vec<Dense>,
}

/// Output of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub predicted_class: usize,
    /// For each pooled feature, the index of the point that wins it.
    pub pool_argmax: Vec<usize>,
}

/// Loss of a cloud together with the gradient with respect to each point.
#[derive(Debug, Clone)]
pub struct PointGradients {
    pub loss: f64,
    /// The label the loss was computed against.
    pub label: usize,
    pub prediction: Prediction,
    pub gradients: Vec<Point>,
}

struct Graph {
    program: Program,
    points: NodeId,
    params: Vec<(NodeId, NodeId)>,
    pooled: NodeId,
    logits: NodeId,
    label: Option<NodeId>,
    loss: Option<NodeId>,
}

impl ModelParams {
    /// He-initialised weights, zero biases.
    pub fn init(arch: &Architecture, classes: usize, seed: u64) -> Result<Self> {
        if classes < 2 {
            return Err(Error::structural(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if arch.pooled == 0
            || arch
                .point_hidden
                .iter()
                .chain(&arch.head_hidden)
                .any(|&w| w == 0)
        {
            return Err(Error::structural("layer widths must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut make = |dims: Vec<(usize, usize)>| -> Vec<Dense> {
            dims.into_iter()
                .map(|(fan_in, fan_out)| {
                    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
                    let w = (0..fan_in * fan_out)
                        .map(|_| normal.sample(&mut rng))
                        .collect();
                    Dense {
                        weight: Tensor::matrix(fan_in, fan_out, w).unwrap(),
                        bias: Tensor::zeros(vec![fan_out]),
                    }
                })
                .collect()
        };
        let point_layers = make(arch.point_dims());
        let head_layers = make(arch.head_dims(classes));
        Ok(ModelParams {
            classes,
            point_layers,
            head_layers,
        })
    }

    /// Assembles a model from explicit layers, checking that widths chain.
    pub fn from_layers(
        classes: usize,
        point_layers: Vec<Dense>,
        head_layers: Vec<Dense>,
    ) -> Result<Self> {
        if point_layers.is_empty() || head_layers.is_empty() {
            return Err(Error::structural(
                "need at least one per-point and one head layer",
            ));
        }
        let mut expected_in = 3;
        for (i, layer) in point_layers.iter().chain(&head_layers).enumerate() {
            if layer.weight.shape().len() != 2 || layer.bias.len() != layer.output_width() {
                return Err(Error::structural(format!(
                    "layer {i} has inconsistent weight/bias shapes"
                )));
            }
            if layer.input_width() != expected_in {
                return Err(Error::structural(format!(
                    "layer {i} expects {} inputs, previous layer produces {expected_in}",
                    layer.input_width()
                )));
            }
            expected_in = layer.output_width();
        }
        if expected_in != classes {
            return Err(Error::structural(format!(
                "head produces {expected_in} logits but k = {classes}"
            )));
        }
        let model = ModelParams {
            classes,
            point_layers,
            head_layers,
        };
        if !model.parameters().all(Tensor::all_finite) {
            return Err(Error::numeric("model weights contain non-finite values"));
        }
        Ok(model)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Width F of the pooled feature vector.
    pub fn pooled_width(&self) -> usize {
        self.point_layers.last().map_or(0, Dense::output_width)
    }

    pub fn point_layers(&self) -> &[Dense] {
        &self.point_layers
    }

    pub fn head_layers(&self) -> &[Dense] {
        &self.head_layers
    }

    pub fn architecture(&self) -> Architecture {
        let n = self.point_layers.len();
        Architecture {
            point_hidden: self.point_layers[..n - 1]
                .iter()
                .map(Dense::output_width)
                .collect(),
            pooled: self.pooled_width(),
            head_hidden: self.head_layers[..self.head_layers.len() - 1]
                .iter()
                .map(Dense::output_width)
                .collect(),
        }
    }

    /// Weight then bias for every layer, per-point layers first.
    pub fn parameters(&self) -> impl Iterator<Item = &Tensor> {
        self.point_layers
            .iter()
            .chain(&self.head_layers)
            .flat_map(|l| [&l.weight, &l.bias])
    }

    pub(crate) fn parameters_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.point_layers
            .iter_mut()
            .chain(&mut self.head_layers)
            .flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    /// Fails with a format error unless the model has exactly `expected` classes.
    pub fn ensure_classes(&self, expected: usize) -> Result<()> {
        if self.classes == expected {
            Ok(())
        } else {
            Err(Error::format(format!(
                "model has k = {} classes, expected {expected}",
                self.classes
            )))
        }
    }

    pub fn check_label(&self, label: usize) -> Result<()> {
        if label < self.classes {
            Ok(())
        } else {
            Err(Error::structural(format!(
                "label {label} out of range for k = {}",
                self.classes
            )))
        }
    }

    fn graph(&self, with_loss: bool) -> Graph {
        let mut p = Program::new();
        let points = p.input("points");
        let mut params = Vec::new();
        let mut h = points;
        let n_point = self.point_layers.len();
        for i in 0..n_point {
            let w = p.param(format!("point{i}.weight"));
            let b = p.param(format!("point{i}.bias"));
            params.push((w, b));
            h = p.affine(h, w, b);
            h = p.relu(h);
        }
        let pooled = p.max_pool(h);
        let mut z = pooled;
        let n_head = self.head_layers.len();
        for i in 0..n_head {
            let w = p.param(format!("head{i}.weight"));
            let b = p.param(format!("head{i}.bias"));
            params.push((w, b));
            z = p.affine(z, w, b);
            if i + 1 < n_head {
                z = p.relu(z);
            }
        }
        let (label, loss) = if with_loss {
            let y = p.label("label");
            (Some(y), Some(p.softmax_cross_entropy(z, y)))
        } else {
            (None, None)
        };
        Graph {
            program: p,
            points,
            params,
            pooled,
            logits: z,
            label,
            loss,
        }
    }

    fn bind<'a>(&'a self, graph: &Graph, points: Tensor) -> Bindings<'a> {
        let mut b = Bindings::new().owned(graph.points, points);
        for ((w, bias), layer) in graph
            .params
            .iter()
            .zip(self.point_layers.iter().chain(&self.head_layers))
        {
            b = b.tensor(*w, &layer.weight).tensor(*bias, &layer.bias);
        }
        b
    }

    fn prediction(tape: &crate::autodiff::Tape<'_, '_>, graph: &Graph) -> Result<Prediction> {
        let logits = tape.value(graph.logits)?.data().to_vec();
        let probabilities = softmax(&logits);
        let predicted_class = argmax_first(&logits);
        Ok(Prediction {
            logits,
            probabilities,
            predicted_class,
            pool_argmax: tape.argmax(graph.pooled)?.to_vec(),
        })
    }

    pub fn forward(&self, cloud: &PointCloud) -> Result<Prediction> {
        let graph = self.graph(false);
        let tape = evaluate(&graph.program, self.bind(&graph, cloud.to_tensor()?))?;
        Self::prediction(&tape, &graph)
    }

    /// Cross-entropy `-ln p(label | cloud)`.
    pub fn loss(&self, cloud: &PointCloud, label: usize) -> Result<f64> {
        self.check_label(label)?;
        let graph = self.graph(true);
        let bindings = self
            .bind(&graph, cloud.to_tensor()?)
            .label(graph.label.unwrap(), label);
        let tape = evaluate(&graph.program, bindings)?;
        Ok(tape.value(graph.loss.unwrap())?.data()[0])
    }

    /// Loss and prediction from a single forward pass.
    pub fn loss_and_prediction(
        &self,
        cloud: &PointCloud,
        label: usize,
    ) -> Result<(f64, Prediction)> {
        self.check_label(label)?;
        let graph = self.graph(true);
        let bindings = self
            .bind(&graph, cloud.to_tensor()?)
            .label(graph.label.unwrap(), label);
        let tape = evaluate(&graph.program, bindings)?;
        let loss = tape.value(graph.loss.unwrap())?.data()[0];
        Ok((loss, Self::prediction(&tape, &graph)?))
    }

    /// One forward and one backward pass: loss and ∇_{x_i} L for every point.
    /// With `label == None` the model's own predicted class is used.
    pub fn point_gradients(
        &self,
        cloud: &PointCloud,
        label: Option<usize>,
    ) -> Result<PointGradients> {
        if let Some(l) = label {
            self.check_label(l)?;
        }
        let graph = self.graph(true);
        let y = graph.label.unwrap();
        let bindings = self.bind(&graph, cloud.to_tensor()?);
        let bindings = match label {
            Some(l) => bindings.label(y, l),
            None => bindings.predicted_label(y),
        };
        let tape = evaluate(&graph.program, bindings)?;
        let loss_node = graph.loss.unwrap();
        let loss = tape.value(loss_node)?.data()[0];
        let used = tape.resolved_label(loss_node)?;
        let mut grads = tape.backward(loss_node)?;
        let g = grads
            .take(graph.points)
            .expect("points leaf has a gradient");
        let gradients = g
            .data()
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        Ok(PointGradients {
            loss,
            label: used,
            prediction: Self::prediction(&tape, &graph)?,
            gradients,
        })
    }

    /// Loss and gradients for every parameter tensor, in [`Self::parameters`] order.
    pub fn parameter_gradients(
        &self,
        cloud: &PointCloud,
        label: usize,
    ) -> Result<(f64, Vec<Tensor>)> {
        self.check_label(label)?;
        let graph = self.graph(true);
        let bindings = self
            .bind(&graph, cloud.to_tensor()?)
            .label(graph.label.unwrap(), label);
        let tape = evaluate(&graph.program, bindings)?;
        let loss_node = graph.loss.unwrap();
        let loss = tape.value(loss_node)?.data()[0];
        let mut grads = tape.backward(loss_node)?;
        let out = graph
            .params
            .iter()
            .flat_map(|(w, b)| [*w, *b])
            .map(|node| grads.take(node).expect("parameter leaf has a gradient"))
            .collect();
        Ok((loss, out))
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Accuracy and mean loss of `model` over `dataset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub correct: usize,
    pub total: usize,
    pub mean_loss: f64,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

pub fn evaluate_dataset(model: &ModelParams, dataset: &[LabeledCloud]) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::structural("dataset is empty"));
    }
    let rows: Vec<(f64, bool)> = dataset
        .par_iter()
        .map(|s| {
            let (loss, p) = model.loss_and_prediction(&s.cloud, s.label)?;
            Ok((loss, p.predicted_class == s.label))
        })
        .collect::<Result<_>>()?;
    let correct = rows.iter().filter(|r| r.1).count();
    let mean_loss = rows.iter().map(|r| r.0).sum::<f64>() / rows.len() as f64;
    Ok(Evaluation {
        correct,
        total: rows.len(),
        mean_loss,
    })
}

/// Fraction of clouds whose predicted class equals their label.
pub fn accuracy(model: &ModelParams, dataset: &[LabeledCloud]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::structural("dataset is empty"));
    }
    let correct = dataset
        .par_iter()
        .map(|s| {
            Ok(usize::from(
                model.forward(&s.cloud)?.predicted_class == s.label,
            ))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / dataset.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(seed: u64, n: usize) -> PointCloud {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..n)
                .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect(),
        )
    }

    #[test]
    fn default_architecture_shapes() {
        let m = ModelParams::init(&Architecture::default(), 8, 1).unwrap();
        assert_eq!(m.pooled_width(), 64);
        assert_eq!(m.classes(), 8);
        let shapes: Vec<_> = m.parameters().map(|t| t.shape().to_vec()).collect();
        assert_eq!(
            shapes,
            vec![
                vec![3, 32],
                vec![32],
                vec![32, 64],
                vec![64],
                vec![64, 64],
                vec![64],
                vec![64, 64],
                vec![64],
                vec![64, 8],
                vec![8]
            ]
        );
        assert_eq!(m.architecture(), Architecture::default());
    }

    #[test]
    fn forward_rejects_empty_cloud() {
        let m = ModelParams::init(&Architecture::default(), 4, 1).unwrap();
        assert!(matches!(
            m.forward(&PointCloud::default()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = ModelParams::init(&Architecture::default(), 5, 3).unwrap();
        let p = m.forward(&cloud(2, 40)).unwrap();
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.probabilities.iter().all(|&v| v >= 0.0));
        assert!(p.pool_argmax.iter().all(|&i| i < 40));
        assert_eq!(p.pool_argmax.len(), 64);
    }

    #[test]
    fn loss_rejects_bad_label() {
        let m = ModelParams::init(&Architecture::default(), 3, 1).unwrap();
        assert!(matches!(m.loss(&cloud(1, 8), 3), Err(Error::Structural(_))));
    }

    #[test]
    fn uniform_logits_loss_is_ln_k() {
        // Zero head output weights make every logit equal to the (zero) bias.
        let mut m = ModelParams::init(&Architecture::default(), 8, 1).unwrap();
        let last = m.head_layers.last_mut().unwrap();
        last.weight.data_mut().iter_mut().for_each(|v| *v = 0.0);
        let l = m.loss(&cloud(4, 16), 5).unwrap();
        assert!((l - 8f64.ln()).abs() < 1e-12);
        assert!((8f64.ln() - 2.0794).abs() < 1e-4);
    }

    #[test]
    fn confident_prediction_has_zero_loss() {
        let mut m = ModelParams::init(&Architecture::default(), 3, 1).unwrap();
        let last = m.head_layers.last_mut().unwrap();
        last.weight.data_mut().iter_mut().for_each(|v| *v = 0.0);
        last.bias.data_mut().copy_from_slice(&[0.0, 1000.0, 0.0]);
        assert_eq!(m.loss(&cloud(4, 16), 1).unwrap(), 0.0);
    }

    #[test]
    fn from_layers_validates_chain() {
        let m = ModelParams::init(&Architecture::default(), 4, 1).unwrap();
        let mut head = m.head_layers.clone();
        head.pop();
        assert!(ModelParams::from_layers(4, m.point_layers.clone(), head).is_err());
        assert!(ModelParams::from_layers(4, m.point_layers.clone(), m.head_layers.clone()).is_ok());
    }

    #[test]
    fn ensure_classes_is_format_error() {
        let m = ModelParams::init(&Architecture::default(), 8, 1).unwrap();
        assert!(m.ensure_classes(8).is_ok());
        assert!(matches!(m.ensure_classes(40), Err(Error::Format(_))));
    }

    #[test]
    fn predicted_label_gradient_matches_explicit_label() {
        let m = ModelParams::init(&Architecture::default(), 4, 9).unwrap();
        let c = cloud(5, 20);
        let unlabeled = m.point_gradients(&c, None).unwrap();
        let labeled = m
            .point_gradients(&c, Some(unlabeled.prediction.predicted_class))
            .unwrap();
        assert_eq!(unlabeled.label, unlabeled.prediction.predicted_class);
        assert_eq!(unlabeled.gradients, labeled.gradients);
        assert_eq!(unlabeled.loss, labeled.loss);
    }
}

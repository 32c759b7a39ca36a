//! Gradient-based saliency maps for 3D point clouds.
//!
//! The crate bundles a small reverse-mode differentiation engine, a compact
//! max-pooling point classifier built on it, per-point saliency scores
//! measured in spherical coordinates around a robust median center, several
//! point-dropping schemes driven by those scores, file formats, a synthetic
//! shape generator, and an experiment harness producing CSV tables.

pub mod autodiff;
pub mod cloud;
pub mod dropping;
pub mod error;
pub mod experiments;
pub mod io;
pub mod model;
pub mod saliency;
pub mod shapes;
pub mod stats;

pub use autodiff::Tensor;
pub use cloud::{LabeledCloud, Point, PointCloud};
pub use dropping::{
    brute_force_contribution, critical_counts, critical_drop, drop_negative, drop_points,
    furthest_drop, rand_drop, run_drop, saliency_drop, CriticalCounts, DropConfig, DropResult,
    Scheme,
};
pub use error::{Error, Result};
pub use model::{
    accuracy, evaluate_dataset, load_checkpoint, save_checkpoint, train, Architecture, Evaluation,
    ModelParams, Optimizer, Prediction, TrainConfig, TrainReport,
};
pub use saliency::{
    radial_gradient, saliency_scores, shift_to_center, spherical_core, SaliencyConfig, SaliencyMap,
};
pub use shapes::{generate_shapes, normalize_unit_sphere, ShapeClass, ShapeDatasets, ShapeSpec};

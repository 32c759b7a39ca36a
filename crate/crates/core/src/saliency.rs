//! Gradient-based point saliency.
//!
//! Dropping a point is approximated by sliding it toward the cloud's
//! spherical core (the per-axis median). The loss change under that slide is
//! read off the radial derivative `∂L/∂r_i`, obtained from the Cartesian
//! gradient by projecting onto the unit vector from the core to the point.
//! After the change of variable `ρ = r^{-α}` the score of point `i` is
//!
//! ```text
//! s_i = -(∂L/∂r_i) · r_i^{1+α}
//! ```
//!
//! so a large positive score marks a point whose removal would raise the loss.

use crate::cloud::{check_index_set, distance, Point, PointCloud};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Points closer than this to the core have no radial direction.
pub const DEFAULT_RADIUS_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaliencyConfig {
    pub alpha: f64,
    pub radius_floor: f64,
}

impl Default for SaliencyConfig {
    fn default() -> Self {
        SaliencyConfig {
            alpha: 1.0,
            radius_floor: DEFAULT_RADIUS_FLOOR,
        }
    }
}

impl SaliencyConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        SaliencyConfig {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::structural(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.radius_floor.is_nan() || self.radius_floor <= 0.0 {
            return Err(Error::structural("radius floor must be positive"));
        }
        Ok(())
    }
}

/// Position of a point relative to a core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoords {
    pub r: f64,
    /// Polar angle from +z, in `[0, π]`.
    pub psi: f64,
    /// Azimuth in the xy-plane, in `(-π, π]`.
    pub phi: f64,
    /// `r^{-α}`; undefined at the core.
    pub rho: Option<f64>,
}

impl SphericalCoords {
    pub fn of(point: &Point, core: &Point, alpha: f64) -> Self {
        let d = [point[0] - core[0], point[1] - core[1], point[2] - core[2]];
        let r = distance(point, core);
        let psi = if r > 0.0 {
            (d[2] / r).clamp(-1.0, 1.0).acos()
        } else {
            0.0
        };
        let phi = d[1].atan2(d[0]);
        SphericalCoords {
            r,
            psi,
            phi,
            rho: (r > 0.0).then(|| r.powf(-alpha)),
        }
    }

    pub fn to_cartesian(&self, core: &Point) -> Point {
        let s = self.psi.sin();
        [
            core[0] + self.r * s * self.phi.cos(),
            core[1] + self.r * s * self.phi.sin(),
            core[2] + self.r * self.psi.cos(),
        ]
    }
}

/// Whether the label a map was computed against came from the caller or
/// from the model's own prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    GroundTruth,
    Predicted,
}

/// Per-point saliency scores, index-aligned with the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub scores: Vec<f64>,
    pub radii: Vec<f64>,
    pub alpha: f64,
    pub core: Point,
    pub label: usize,
    pub label_source: LabelSource,
    /// Loss of the full cloud under `label`.
    pub loss: f64,
    pub predicted_class: usize,
}

impl SaliencyMap {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Rank of every point, 0 for the highest score. Ties go to the lower index.
    pub fn ranks(&self) -> Vec<usize> {
        score_ranks(&self.scores)
    }
}

/// Per-axis median of the coordinates. Even counts average the two middle values.
pub fn spherical_core(cloud: &PointCloud) -> Result<Point> {
    cloud.ensure_nonempty()?;
    let mut axis = Vec::with_capacity(cloud.len());
    let mut core = [0.0; 3];
    for (j, c) in core.iter_mut().enumerate() {
        axis.clear();
        axis.extend(cloud.points().iter().map(|p| p[j]));
        *c = median_in_place(&mut axis);
    }
    Ok(core)
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower_max + upper) / 2.0
    }
}

/// `∂L/∂r_i = Σ_j (∂L/∂x_ij)(x_ij − c_j) / r_i`, defined as 0 when `r_i < radius_floor`.
pub fn radial_gradient(
    cloud: &PointCloud,
    gradients: &[Point],
    core: &Point,
    radius_floor: f64,
) -> Result<Vec<f64>> {
    if gradients.len() != cloud.len() {
        return Err(Error::structural(format!(
            "{} gradients for {} points",
            gradients.len(),
            cloud.len()
        )));
    }
    Ok(cloud
        .points()
        .iter()
        .zip(gradients)
        .map(|(p, g)| {
            let r = distance(p, core);
            if r < radius_floor {
                0.0
            } else {
                (0..3).map(|j| g[j] * (p[j] - core[j])).sum::<f64>() / r
            }
        })
        .collect())
}

/// `s_i = −(∂L/∂r_i)·r_i^{1+α}` for every point.
pub fn scores_from_radial(radial: &[f64], radii: &[f64], config: &SaliencyConfig) -> Vec<f64> {
    radial
        .iter()
        .zip(radii)
        .map(|(&dr, &r)| {
            if r < config.radius_floor {
                0.0
            } else {
                -dr * r.powf(1.0 + config.alpha)
            }
        })
        .collect()
}

/// Saliency map of `cloud` from one forward and one backward pass.
///
/// Without a ground-truth `label`, the model's predicted class is used and
/// the map records [`LabelSource::Predicted`].
pub fn saliency_scores(
    model: &ModelParams,
    cloud: &PointCloud,
    label: Option<usize>,
    config: &SaliencyConfig,
) -> Result<SaliencyMap> {
    config.validate()?;
    let pg = model.point_gradients(cloud, label)?;
    let core = spherical_core(cloud)?;
    let radii: Vec<f64> = cloud.points().iter().map(|p| distance(p, &core)).collect();
    let radial = radial_gradient(cloud, &pg.gradients, &core, config.radius_floor)?;
    let scores = scores_from_radial(&radial, &radii, config);
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::numeric(format!(
            "saliency score of point {i} is not finite"
        )));
    }
    Ok(SaliencyMap {
        scores,
        radii,
        alpha: config.alpha,
        core,
        label: pg.label,
        label_source: if label.is_some() {
            LabelSource::GroundTruth
        } else {
            LabelSource::Predicted
        },
        loss: pg.loss,
        predicted_class: pg.prediction.predicted_class,
    })
}

/// Moves the selected points onto `core`, leaving the rest untouched.
pub fn shift_to_center(cloud: &PointCloud, indices: &[usize], core: &Point) -> Result<PointCloud> {
    check_index_set(indices, cloud.len())?;
    let mut points = cloud.points().to_vec();
    for &i in indices {
        points[i] = *core;
    }
    Ok(PointCloud::new(points))
}

/// Ranks with 0 for the largest value; ties go to the lower index.
pub fn score_ranks(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; scores.len()];
    for (rank, &i) in order.iter().enumerate() {
        ranks[i] = rank;
    }
    ranks
}

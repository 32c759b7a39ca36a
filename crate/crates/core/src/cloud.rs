//! Point clouds and labelled samples.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// An ordered list of 3D points. Order carries no meaning for the
/// classifier, but indices are how saliency scores and drops refer to points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        PointCloud { points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Point> {
        self.points.get(i)
    }

    pub fn ensure_nonempty(&self) -> Result<()> {
        if self.points.is_empty() {
            Err(Error::structural("point cloud is empty"))
        } else {
            Ok(())
        }
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self
            .points
            .iter()
            .position(|p| p.iter().any(|v| !v.is_finite()))
        {
            None => Ok(()),
            Some(i) => Err(Error::numeric(format!(
                "point {i} has a non-finite coordinate"
            ))),
        }
    }

    /// `[N, 3]` tensor view of the coordinates.
    pub fn to_tensor(&self) -> Result<Tensor> {
        self.ensure_nonempty()?;
        let data = self.points.iter().flat_map(|p| p.iter().copied()).collect();
        Tensor::matrix(self.points.len(), 3, data)
    }

    pub fn centroid(&self) -> Point {
        let n = self.points.len().max(1) as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for j in 0..3 {
                c[j] += p[j];
            }
        }
        c.map(|v| v / n)
    }

    /// Uniformly scales every point about `center`.
    pub fn scaled_about(&self, center: Point, factor: f64) -> PointCloud {
        self.map(|p| std::array::from_fn(|j| center[j] + factor * (p[j] - center[j])))
    }

    pub fn translated(&self, offset: Point) -> PointCloud {
        self.map(|p| std::array::from_fn(|j| p[j] + offset[j]))
    }

    pub fn map(&self, f: impl Fn(&Point) -> Point) -> PointCloud {
        PointCloud::new(self.points.iter().map(f).collect())
    }

    /// Copy of the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<PointCloud> {
        indices
            .iter()
            .map(|&i| {
                self.points.get(i).copied().ok_or_else(|| {
                    Error::structural(format!("index {i} out of range for {} points", self.len()))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(PointCloud::new)
    }

    pub fn push(&mut self, p: Point) {
        self.points.push(p);
    }
}

impl From<Vec<Point>> for PointCloud {
    fn from(points: Vec<Point>) -> Self {
        PointCloud::new(points)
    }
}

/// A cloud with its class label and a free-form provenance string.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub cloud: PointCloud,
    pub label: usize,
    pub source: String,
}

impl LabeledCloud {
    pub fn new(cloud: PointCloud, label: usize, source: impl Into<String>) -> Self {
        LabeledCloud {
            cloud,
            label,
            source: source.into(),
        }
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Validates that `indices` are distinct and all below `len`.
pub(crate) fn check_index_set(indices: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    for &i in indices {
        if i >= len {
            return Err(Error::structural(format!(
                "index {i} out of range for {len} points"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::structural(format!(
                "index {i} appears more than once"
            )));
        }
    }
    Ok(())
}

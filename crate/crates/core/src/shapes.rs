//! Synthetic shape dataset: eight primitive surfaces, uniformly sampled,
//! randomly turned about the vertical axis, jittered and normalised to the
//! unit sphere.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::cloud::{LabeledCloud, Point, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeClass {
    Sphere,
    Cube,
    Cylinder,
    Cone,
    Torus,
    Pyramid,
    CrossPlanes,
    Helix,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 8] = [
        ShapeClass::Sphere,
        ShapeClass::Cube,
        ShapeClass::Cylinder,
        ShapeClass::Cone,
        ShapeClass::Torus,
        ShapeClass::Pyramid,
        ShapeClass::CrossPlanes,
        ShapeClass::Helix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Sphere => "sphere",
            ShapeClass::Cube => "cube",
            ShapeClass::Cylinder => "cylinder",
            ShapeClass::Cone => "cone",
            ShapeClass::Torus => "torus",
            ShapeClass::Pyramid => "pyramid",
            ShapeClass::CrossPlanes => "cross-planes",
            ShapeClass::Helix => "helix",
        }
    }

    /// Draws `n` points uniformly from the surface, before any augmentation.
    pub fn sample(self, n: usize, rng: &mut impl Rng) -> Vec<Point> {
        match self {
            ShapeClass::Sphere => sample_sphere(n, rng),
            _ => (0..n).map(|_| self.sample_one(rng)).collect(),
        }
    }

    fn sample_one(self, rng: &mut impl Rng) -> Point {
        match self {
            ShapeClass::Sphere => unit_vector(rng),
            ShapeClass::Cube => {
                let face = rng.random_range(0..6);
                let axis = face / 2;
                let mut p: Point = std::array::from_fn(|_| rng.random_range(-0.5..=0.5));
                p[axis] = if face % 2 == 0 { 0.5 } else { -0.5 };
                p
            }
            ShapeClass::Cylinder => {
                let (r, h) = (0.5, 1.6);
                let lateral = TAU * r * h;
                let caps = 2.0 * PI * r * r;
                if rng.random::<f64>() * (lateral + caps) < lateral {
                    let a = rng.random_range(0.0..TAU);
                    [
                        r * a.cos(),
                        r * a.sin(),
                        rng.random_range(-h / 2.0..=h / 2.0),
                    ]
                } else {
                    let [x, y] = disk(r, rng);
                    let z = if rng.random::<bool>() {
                        h / 2.0
                    } else {
                        -h / 2.0
                    };
                    [x, y, z]
                }
            }
            ShapeClass::Cone => {
                let (r, h, base_z): (f64, f64, f64) = (0.6, 1.2, -0.4);
                let slant = (r * r + h * h).sqrt();
                let lateral = PI * r * slant;
                let base = PI * r * r;
                if rng.random::<f64>() * (lateral + base) < lateral {
                    // fraction of the way from apex to base; density grows linearly
                    let t = rng.random::<f64>().sqrt();
                    let a = rng.random_range(0.0..TAU);
                    [t * r * a.cos(), t * r * a.sin(), base_z + h * (1.0 - t)]
                } else {
                    let [x, y] = disk(r, rng);
                    [x, y, base_z]
                }
            }
            ShapeClass::Torus => {
                let (big, small) = (0.7, 0.25);
                loop {
                    let u = rng.random_range(0.0..TAU);
                    let v = rng.random_range(0.0..TAU);
                    // accept proportionally to the local area element
                    if rng.random::<f64>() * (big + small) <= big + small * v.cos() {
                        let ring = big + small * v.cos();
                        return [ring * u.cos(), ring * u.sin(), small * v.sin()];
                    }
                }
            }
            ShapeClass::Pyramid => {
                let (half, base_z, apex) = (0.6, -0.4, [0.0, 0.0, 0.8]);
                let corners = [
                    [-half, -half, base_z],
                    [half, -half, base_z],
                    [half, half, base_z],
                    [-half, half, base_z],
                ];
                let mut tris: Vec<[Point; 3]> = (0..4)
                    .map(|i| [corners[i], corners[(i + 1) % 4], apex])
                    .collect();
                tris.push([corners[0], corners[1], corners[2]]);
                tris.push([corners[0], corners[2], corners[3]]);
                let areas: Vec<f64> = tris.iter().map(triangle_area).collect();
                let tri = pick_weighted(&areas, rng);
                point_in_triangle(&tris[tri], rng)
            }
            ShapeClass::CrossPlanes => {
                let half = 0.8;
                let plane = rng.random_range(0..3);
                let mut p: Point = std::array::from_fn(|_| rng.random_range(-half..=half));
                p[plane] = 0.0;
                p
            }
            ShapeClass::Helix => {
                let (radius, turns, height, tube) = (0.6, 2.5, 1.6, 0.06);
                let t: f64 = rng.random();
                let theta = TAU * turns * t;
                let center = [
                    radius * theta.cos(),
                    radius * theta.sin(),
                    -height / 2.0 + height * t,
                ];
                // tangent and an orthonormal frame around it
                let tangent = normalize([
                    -radius * TAU * turns * theta.sin(),
                    radius * TAU * turns * theta.cos(),
                    height,
                ]);
                let inward = [-theta.cos(), -theta.sin(), 0.0];
                let binormal = cross(&tangent, &inward);
                let a = rng.random_range(0.0..TAU);
                std::array::from_fn(|j| {
                    center[j] + tube * (a.cos() * inward[j] + a.sin() * binormal[j])
                })
            }
        }
    }
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::structural(format!("unknown shape class '{s}'")))
    }
}

/// Antipodal pairs (plus one balanced triple for odd counts) so the sample
/// mean is exactly the sphere's centre.
fn sample_sphere(n: usize, rng: &mut impl Rng) -> Vec<Point> {
    let mut out = Vec::with_capacity(n);
    if n % 2 == 1 {
        if n == 1 {
            out.push(unit_vector(rng));
            return out;
        }
        let a = unit_vector(rng);
        let b = normalize(cross(&a, &unit_vector(rng)));
        let c = cross(&a, &b);
        for k in 0..3 {
            let ang = TAU * k as f64 / 3.0;
            out.push(std::array::from_fn(|j| ang.cos() * b[j] + ang.sin() * c[j]));
        }
    }
    while out.len() < n {
        let p = unit_vector(rng);
        out.push(p);
        out.push(p.map(|v| -v));
    }
    out
}

fn unit_vector(rng: &mut impl Rng) -> Point {
    loop {
        let v: Point = std::array::from_fn(|_| StandardNormal.sample(rng));
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if len > 1e-12 {
            return v.map(|c| c / len);
        }
    }
}

fn disk(r: f64, rng: &mut impl Rng) -> [f64; 2] {
    let rad = r * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..TAU);
    [rad * a.cos(), rad * a.sin()]
}

fn normalize(v: Point) -> Point {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|c| c / len)
}

fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn triangle_area(t: &[Point; 3]) -> f64 {
    let u: Point = std::array::from_fn(|j| t[1][j] - t[0][j]);
    let v: Point = std::array::from_fn(|j| t[2][j] - t[0][j]);
    let c = cross(&u, &v);
    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

pub(crate) fn point_in_triangle(t: &[Point; 3], rng: &mut impl Rng) -> Point {
    let s = rng.random::<f64>().sqrt();
    let u: f64 = rng.random();
    let (a, b, c) = (1.0 - s, s * (1.0 - u), s * u);
    std::array::from_fn(|j| a * t[0][j] + b * t[1][j] + c * t[2][j])
}

pub(crate) fn pick_weighted(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

/// Centres on the mean and scales so the farthest point is at radius 1.
/// A cloud whose points all coincide is only centred.
pub fn normalize_unit_sphere(cloud: &PointCloud) -> PointCloud {
    let c = cloud.centroid();
    let centred = cloud.map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]]);
    let max_r = centred
        .points()
        .iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
        .fold(0.0, f64::max);
    if max_r > 0.0 {
        centred.map(|p| p.map(|v| v / max_r))
    } else {
        centred
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub classes: Vec<ShapeClass>,
    pub points: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Standard deviation of per-coordinate Gaussian jitter.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for ShapeSpec {
    fn default() -> Self {
        ShapeSpec {
            classes: ShapeClass::ALL.to_vec(),
            points: 256,
            train_per_class: 200,
            test_per_class: 50,
            jitter: 0.01,
            seed: 0,
        }
    }
}

impl ShapeSpec {
    /// A small preset for smoke tests: 64 points, 20 training and 5 test
    /// clouds per class.
    pub fn tiny() -> Self {
        ShapeSpec {
            points: 64,
            train_per_class: 20,
            test_per_class: 5,
            ..ShapeSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::structural("shape spec has no classes"));
        }
        if self.points < 32 {
            return Err(Error::structural(format!(
                "need at least 32 points per cloud, got {}",
                self.points
            )));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::structural("jitter must be a nonnegative number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDatasets {
    pub train: Vec<LabeledCloud>,
    pub test: Vec<LabeledCloud>,
}

/// Generates both splits. Labels are positions in `spec.classes`. The two
/// splits draw from separate streams of the same seed, so they never share a
/// sample and each is reproducible on its own.
pub fn generate_shapes(spec: &ShapeSpec) -> Result<ShapeDatasets> {
    spec.validate()?;
    Ok(ShapeDatasets {
        train: generate_split(spec, "train", 0, spec.train_per_class),
        test: generate_split(spec, "test", 1, spec.test_per_class),
    })
}

fn generate_split(
    spec: &ShapeSpec,
    name: &str,
    stream: u64,
    per_class: usize,
) -> Vec<LabeledCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let jitter = Normal::new(0.0, spec.jitter).expect("validated jitter");
    let mut out = Vec::with_capacity(per_class * spec.classes.len());
    for i in 0..per_class {
        for (label, &class) in spec.classes.iter().enumerate() {
            let raw = class.sample(spec.points, &mut rng);
            let turn = rng.random_range(0.0..TAU);
            let (s, c) = turn.sin_cos();
            let pts = raw
                .into_iter()
                .map(|p| {
                    let q = [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]];
                    if spec.jitter > 0.0 {
                        q.map(|v| v + jitter.sample(&mut rng))
                    } else {
                        q
                    }
                })
                .collect();
            let cloud = normalize_unit_sphere(&PointCloud::new(pts));
            out.push(LabeledCloud::new(
                cloud,
                label,
                format!("{name}/{class}_{i:04}"),
            ));
        }
    }
    out
}

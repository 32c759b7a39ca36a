//! File formats: XYZ and OFF input, colored ASCII PLY output, dataset
//! bundles, and the CSV exports. Every writer goes through
//! [`write_atomic`], so a failed write never leaves a partial file behind.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::{LabeledCloud, Point, PointCloud};
use crate::dropping::DropResult;
use crate::error::{Error, Result};
use crate::saliency::SaliencyMap;
use crate::shapes::{pick_weighted, point_in_triangle, triangle_area};

/// Writes `path` through a temporary file in the same directory and renames
/// it into place once `write` succeeds.
pub fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<&mut File>) -> std::io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("'{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("'{tok}' is not finite")));
    }
    Ok(v)
}

/// Content lines with their 1-based line numbers; blank and `#` lines are skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// One point per line, three whitespace-separated decimals.
pub fn read_xyz(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut points = Vec::new();
    for (line, l) in content_lines(&text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(
                path,
                line,
                format!("expected 3 coordinates, found {}", toks.len()),
            ));
        }
        points.push([
            parse_f64(path, line, toks[0])?,
            parse_f64(path, line, toks[1])?,
            parse_f64(path, line, toks[2])?,
        ]);
    }
    if points.is_empty() {
        return Err(Error::format(format!(
            "{} contains no points",
            path.display()
        )));
    }
    Ok(PointCloud::new(points))
}

pub fn load_xyz(path: impl AsRef<Path>, label: usize) -> Result<LabeledCloud> {
    let path = path.as_ref();
    Ok(LabeledCloud::new(
        read_xyz(path)?,
        label,
        path.display().to_string(),
    ))
}

/// Coordinates in shortest round-trip decimal form.
pub fn write_xyz(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), |w| {
        for p in cloud.points() {
            writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
        }
        Ok(())
    })
}

/// Triangle mesh read from an OFF file. Polygons are fan-triangulated.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

pub fn read_off(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let last_line = text.lines().count();
    let mut lines = content_lines(&text);

    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected 'OFF' header"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(path, line, "missing 'OFF' header"))?
        .trim();
    // Some exporters glue the counts onto the header line.
    let (count_line, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| parse_err(path, last_line + 1, "missing vertex/face counts"))?
    } else {
        (line, rest)
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(path, count_line, format!("bad count '{t}'")))
        })
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(parse_err(
            path,
            count_line,
            "expected vertex and face counts",
        ));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| {
            parse_err(
                path,
                last_line + 1,
                format!("file ends after {k} of {nv} vertices"),
            )
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(path, line, "vertex needs 3 coordinates"));
        }
        vertices.push([
            parse_f64(path, line, toks[0])?,
            parse_f64(path, line, toks[1])?,
            parse_f64(path, line, toks[2])?,
        ]);
    }

    let mut triangles = Vec::with_capacity(nf);
    for k in 0..nf {
        let (line, l) = lines.next().ok_or_else(|| {
            parse_err(
                path,
                last_line + 1,
                format!("file ends after {k} of {nf} faces"),
            )
        })?;
        let toks: Vec<usize> = l
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_err(path, line, format!("bad face entry '{t}'")))
            })
            .collect::<Result<_>>()?;
        let arity = *toks
            .first()
            .ok_or_else(|| parse_err(path, line, "empty face"))?;
        if arity < 3 || toks.len() < arity + 1 {
            return Err(parse_err(
                path,
                line,
                "face needs at least 3 vertex indices",
            ));
        }
        let idx = &toks[1..=arity];
        if let Some(bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(parse_err(
                path,
                line,
                format!("vertex index {bad} out of range"),
            ));
        }
        for t in 1..arity - 1 {
            triangles.push([idx[0], idx[t], idx[t + 1]]);
        }
    }
    Ok(Mesh {
        vertices,
        triangles,
    })
}

impl Mesh {
    /// Area-weighted uniform surface sample. A mesh without faces yields its
    /// vertices unchanged.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Result<PointCloud> {
        if self.triangles.is_empty() {
            if self.vertices.is_empty() {
                return Err(Error::format("mesh has no vertices"));
            }
            return Ok(PointCloud::new(self.vertices.clone()));
        }
        let tris: Vec<[Point; 3]> = self
            .triangles
            .iter()
            .map(|t| t.map(|i| self.vertices[i]))
            .collect();
        let areas: Vec<f64> = tris.iter().map(triangle_area).collect();
        let total: f64 = areas.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::format("mesh has zero surface area"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(PointCloud::new(
            (0..n)
                .map(|_| point_in_triangle(&tris[pick_weighted(&areas, &mut rng)], &mut rng))
                .collect(),
        ))
    }
}

/// Reads an OFF mesh and samples `n` surface points from it.
pub fn load_off(path: impl AsRef<Path>, label: usize, n: usize, seed: u64) -> Result<LabeledCloud> {
    let path = path.as_ref();
    let cloud = read_off(path)?.sample_surface(n, seed)?;
    Ok(LabeledCloud::new(cloud, label, path.display().to_string()))
}

/// Loads `.xyz` or `.off` by extension.
pub fn load_cloud(path: impl AsRef<Path>, off_samples: usize, seed: u64) -> Result<PointCloud> {
    let path = path.as_ref();
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("off") => read_off(path)?.sample_surface(off_samples, seed),
        Some("ply") => Ok(read_ply(path)?.cloud),
        _ => read_xyz(path),
    }
}

/// Blue-to-red colour ramp over score rank: the highest score is pure red,
/// the lowest pure blue. Tied scores share their average rank, so a constant
/// map is uniformly the ramp midpoint.
pub fn rank_colors(scores: &[f64]) -> Vec<[u8; 3]> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut avg_rank = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mean = (start + end - 1) as f64 / 2.0;
        for &i in &order[start..end] {
            avg_rank[i] = mean;
        }
        start = end;
    }
    avg_rank
        .into_iter()
        .map(|r| {
            let heat = if n > 1 { 1.0 - r / (n - 1) as f64 } else { 0.5 };
            [
                (255.0 * heat).round() as u8,
                0,
                (255.0 * (1.0 - heat)).round() as u8,
            ]
        })
        .collect()
}

pub fn write_ply_colored(cloud: &PointCloud, scores: &[f64], path: impl AsRef<Path>) -> Result<()> {
    if scores.len() != cloud.len() {
        return Err(Error::structural(format!(
            "{} scores for {} points",
            scores.len(),
            cloud.len()
        )));
    }
    let colors = rank_colors(scores);
    write_atomic(path.as_ref(), |w| {
        writeln!(w, "ply")?;
        writeln!(w, "format ascii 1.0")?;
        writeln!(w, "comment colored by saliency rank, red = highest")?;
        writeln!(w, "element vertex {}", cloud.len())?;
        for axis in ["x", "y", "z"] {
            writeln!(w, "property double {axis}")?;
        }
        for c in ["red", "green", "blue"] {
            writeln!(w, "property uchar {c}")?;
        }
        writeln!(w, "end_header")?;
        for (p, c) in cloud.points().iter().zip(&colors) {
            writeln!(w, "{} {} {} {} {} {}", p[0], p[1], p[2], c[0], c[1], c[2])?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlyCloud {
    pub cloud: PointCloud,
    pub colors: Option<Vec<[u8; 3]>>,
}

/// Reads the vertex element of an ASCII PLY file.
pub fn read_ply(path: impl AsRef<Path>) -> Result<PlyCloud> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(path, 1, "missing 'ply' magic")),
    }
    // (name, count, property names)
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    loop {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "header has no end_header"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(parse_err(
                    path,
                    line,
                    format!("unsupported PLY format '{other}'"),
                ))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(path, line, "bad element count"))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, line, "property before element"))?;
                el.2.push(String::from("<list>"));
            }
            ["property", _ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, line, "property before element"))?;
                el.2.push(name.to_string());
            }
            ["end_header"] => break,
            _ => {
                return Err(parse_err(
                    path,
                    line,
                    format!("unrecognised header line '{l}'"),
                ))
            }
        }
    }

    let mut cloud = None;
    let mut colors = None;
    for (name, count, props) in &elements {
        let pos = |p: &str| props.iter().position(|q| q == p);
        let is_vertex = name == "vertex";
        let xyz = [pos("x"), pos("y"), pos("z")];
        let rgb = [pos("red"), pos("green"), pos("blue")];
        let mut pts = Vec::with_capacity(if is_vertex { *count } else { 0 });
        let mut cols = Vec::new();
        for k in 0..*count {
            let (line, l) = lines.next().ok_or_else(|| {
                parse_err(
                    path,
                    text.lines().count() + 1,
                    format!("{name} element ends after {k} of {count} rows"),
                )
            })?;
            if !is_vertex {
                continue;
            }
            let toks: Vec<&str> = l.split_whitespace().collect();
            let get = |i: Option<usize>| -> Result<f64> {
                let i = i.ok_or_else(|| parse_err(path, line, "vertex lacks x/y/z"))?;
                let t = toks
                    .get(i)
                    .ok_or_else(|| parse_err(path, line, "vertex row too short"))?;
                parse_f64(path, line, t)
            };
            pts.push([get(xyz[0])?, get(xyz[1])?, get(xyz[2])?]);
            if rgb.iter().all(Option::is_some) {
                let mut c = [0u8; 3];
                for (slot, idx) in c.iter_mut().zip(rgb) {
                    let t = toks
                        .get(idx.unwrap())
                        .ok_or_else(|| parse_err(path, line, "vertex row too short"))?;
                    *slot = t
                        .parse()
                        .map_err(|_| parse_err(path, line, "bad colour value"))?;
                }
                cols.push(c);
            }
        }
        if is_vertex {
            if !cols.is_empty() {
                colors = Some(cols);
            }
            cloud = Some(PointCloud::new(pts));
        }
    }
    let cloud =
        cloud.ok_or_else(|| Error::format(format!("{} has no vertex element", path.display())))?;
    Ok(PlyCloud { cloud, colors })
}

/// `index,x,y,z,r,score,rank` with rank 0 for the highest score.
pub fn write_saliency_csv(
    cloud: &PointCloud,
    map: &SaliencyMap,
    path: impl AsRef<Path>,
) -> Result<()> {
    if map.len() != cloud.len() {
        return Err(Error::structural(format!(
            "saliency map has {} entries for {} points",
            map.len(),
            cloud.len()
        )));
    }
    let ranks = map.ranks();
    write_csv(
        path.as_ref(),
        &["index", "x", "y", "z", "r", "score", "rank"],
        |out| {
            for (i, p) in cloud.points().iter().enumerate() {
                out.push(vec![
                    i.to_string(),
                    p[0].to_string(),
                    p[1].to_string(),
                    p[2].to_string(),
                    map.radii[i].to_string(),
                    map.scores[i].to_string(),
                    ranks[i].to_string(),
                ]);
            }
        },
    )
}

/// `iteration,dropped_original_indices,loss,predicted_class`, one row per round.
pub fn write_drop_csv(result: &DropResult, path: impl AsRef<Path>) -> Result<()> {
    write_csv(
        path.as_ref(),
        &[
            "iteration",
            "dropped_original_indices",
            "loss",
            "predicted_class",
        ],
        |out| {
            for (t, batch) in result.batches.iter().enumerate() {
                let joined = batch
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(";");
                out.push(vec![
                    (t + 1).to_string(),
                    joined,
                    result.losses[t].to_string(),
                    result.predictions[t].to_string(),
                ]);
            }
        },
    )
}

/// Builds all rows first, then writes them atomically.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl FnOnce(&mut Vec<Vec<String>>),
) -> Result<()> {
    let mut buf = Vec::new();
    rows(&mut buf);
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header).map_err(std::io::Error::other)?;
        for r in &buf {
            csv.write_record(r).map_err(std::io::Error::other)?;
        }
        csv.flush()
    })
}

pub const BUNDLE_LABELS: &str = "labels.csv";

/// Writes a directory of `.xyz` files plus `labels.csv` (`filename,label`).
pub fn write_bundle(dir: impl AsRef<Path>, samples: &[LabeledCloud]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let name = format!("{i:05}.xyz");
        write_xyz(&s.cloud, dir.join(&name))?;
        names.push((name, s.label));
    }
    write_csv(&dir.join(BUNDLE_LABELS), &["filename", "label"], |out| {
        for (n, l) in names {
            out.push(vec![n, l.to_string()]);
        }
    })
}

/// Reads a bundle in `labels.csv` order.
pub fn read_bundle(dir: impl AsRef<Path>) -> Result<Vec<LabeledCloud>> {
    let dir = dir.as_ref();
    let labels_path = dir.join(BUNDLE_LABELS);
    let file = File::open(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| parse_err(&labels_path, line, e.to_string()))?;
        if rec.len() != 2 {
            return Err(parse_err(&labels_path, line, "expected filename,label"));
        }
        let label: usize = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(&labels_path, line, format!("bad label '{}'", &rec[1])))?;
        let name = rec[0].trim();
        let cloud = load_cloud(dir.join(name), 1024, 0)?;
        out.push(LabeledCloud::new(cloud, label, name.to_string()));
    }
    if out.is_empty() {
        return Err(Error::format(format!(
            "{} lists no clouds",
            labels_path.display()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn xyz_basic_and_errors() {
        let d = tmp();
        let p = d.path().join("a.xyz");
        std::fs::write(&p, "0 0 0\n1 2 3\n").unwrap();
        let c = read_xyz(&p).unwrap();
        assert_eq!(c.points(), &[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]);

        std::fs::write(&p, "0 0 0\n1 2\n").unwrap();
        match read_xyz(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        std::fs::write(&p, "0 0 x\n").unwrap();
        assert!(matches!(read_xyz(&p), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&p, "\n# nothing\n").unwrap();
        assert!(matches!(read_xyz(&p), Err(Error::Format(_))));
    }

    const CUBE_OFF: &str = "OFF
8 6 0
-0.5 -0.5 -0.5
0.5 -0.5 -0.5
0.5 0.5 -0.5
-0.5 0.5 -0.5
-0.5 -0.5 0.5
0.5 -0.5 0.5
0.5 0.5 0.5
-0.5 0.5 0.5
4 0 3 2 1
4 4 5 6 7
4 0 1 5 4
4 2 3 7 6
4 1 2 6 5
4 0 4 7 3
";

    #[test]
    fn off_cube_samples_lie_on_surface() {
        let d = tmp();
        let p = d.path().join("cube.off");
        std::fs::write(&p, CUBE_OFF).unwrap();
        let mesh = read_off(&p).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.triangles.len(), 12);
        let c = load_off(&p, 3, 1024, 7).unwrap();
        assert_eq!(c.label, 3);
        assert_eq!(c.cloud.len(), 1024);
        for q in c.cloud.points() {
            assert!(q.iter().any(|v| (v.abs() - 0.5).abs() < 1e-9), "{q:?}");
            assert!(q.iter().all(|v| v.abs() <= 0.5 + 1e-12));
        }
        // all six faces get hit
        for axis in 0..3 {
            for sign in [-0.5, 0.5] {
                assert!(c
                    .cloud
                    .points()
                    .iter()
                    .any(|q| (q[axis] - sign).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn off_header_variants_and_errors() {
        let d = tmp();
        let p = d.path().join("m.off");
        std::fs::write(&p, "OFF3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(read_off(&p).unwrap().triangles, vec![[0, 1, 2]]);

        std::fs::write(&p, "OFF\n8 6 0\n0 0 0\n1 0 0\n").unwrap();
        match read_off(&p) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 5);
                assert!(message.contains("vertices"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        std::fs::write(&p, "PLY\n").unwrap();
        assert!(matches!(read_off(&p), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&p, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n").unwrap();
        assert!(matches!(read_off(&p), Err(Error::Parse { line: 6, .. })));
    }

    #[test]
    fn ramp_endpoints_and_midpoint() {
        assert_eq!(rank_colors(&[5.0, -1.0]), vec![[255, 0, 0], [0, 0, 255]]);
        assert_eq!(rank_colors(&[2.0; 4]), vec![[128, 0, 128]; 4]);
        assert_eq!(rank_colors(&[1.0]), vec![[128, 0, 128]]);
    }

    #[test]
    fn ply_round_trip_is_bitwise() {
        let d = tmp();
        let p = d.path().join("s.ply");
        let cloud = PointCloud::new(vec![
            [0.1, -0.2, 1.0 / 3.0],
            [1e-300, 123456.789, -0.0],
            [std::f64::consts::PI, 2.5e-8, 7.0],
        ]);
        let scores = [0.5, -2.0, 3.0];
        write_ply_colored(&cloud, &scores, &p).unwrap();
        let back = read_ply(&p).unwrap();
        for (a, b) in cloud.points().iter().zip(back.cloud.points()) {
            for j in 0..3 {
                assert_eq!(a[j].to_bits(), b[j].to_bits());
            }
        }
        assert_eq!(back.colors.unwrap(), rank_colors(&scores));
        assert!(write_ply_colored(&cloud, &scores[..2], &p).is_err());
    }

    #[test]
    fn bundle_round_trip() {
        let d = tmp();
        let samples = vec![
            LabeledCloud::new(
                PointCloud::new(vec![[0.1, 0.2, 0.3], [1.0 / 7.0, 2.0, -3.5]]),
                2,
                "a",
            ),
            LabeledCloud::new(PointCloud::new(vec![[9.0, 8.0, 7.0]]), 0, "b"),
        ];
        write_bundle(d.path().join("set"), &samples).unwrap();
        let back = read_bundle(d.path().join("set")).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in samples.iter().zip(&back) {
            assert_eq!(a.cloud, b.cloud);
            assert_eq!(a.label, b.label);
        }
    }

    #[test]
    fn atomic_write_into_missing_directory_fails_cleanly() {
        let d = tmp();
        let target = d.path().join("missing").join("out.csv");
        let r = write_csv(&target, &["a"], |_| {});
        assert!(matches!(r, Err(Error::Io { .. })));
        assert!(!target.exists());
    }
}

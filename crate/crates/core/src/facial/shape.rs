use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LANDMARKS: usize = 66;

pub type Point = [f64; 2];

/// Point distribution model: a mean shape plus a linear basis of local
/// deformations, stacked as `(x_0, y_0, x_1, y_1, ...)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeModel {
    mean: Vec<Point>,
    /// `2·LANDMARKS × m`, row-major.
    basis: Vec<f64>,
    m: usize,
}

impl ShapeModel {
    pub fn new(mean: Vec<Point>, basis: Vec<f64>, m: usize) -> Result<Self> {
        if mean.len() != LANDMARKS {
            return Err(Error::Dimension(format!(
                "mean shape has {} points, expected {LANDMARKS}",
                mean.len()
            )));
        }
        if m == 0 || basis.len() != 2 * LANDMARKS * m {
            return Err(Error::Dimension(format!(
                "basis has {} entries, expected {} rows of {m} columns",
                basis.len(),
                2 * LANDMARKS
            )));
        }
        if mean.iter().flatten().chain(&basis).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("shape model".into()));
        }
        Ok(ShapeModel { mean, basis, m })
    }

    /// The bundled demonstration model. Each basis column moves one group of
    /// landmarks along a single axis so that every default distance feature is
    /// its mean-shape value plus one coefficient.
    pub fn demo() -> Self {
        Self::parse(
            include_str!("../../data/demo_shape_model.csv"),
            "demo_shape_model.csv",
        )
        .expect("bundled shape model is valid")
    }

    pub fn mean_shape(&self) -> &[Point] {
        &self.mean
    }

    pub fn basis_dim(&self) -> usize {
        self.m
    }

    /// Basis entry for coordinate row `row` (`2·point + axis`) and column `k`.
    pub fn basis(&self, row: usize, k: usize) -> f64 {
        self.basis[row * self.m + k]
    }

    /// Parses the CSV layout: 66 `x,y` rows, then 132 rows of `m` basis values.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(format!("{source}:{}", i + 1), e))?;
            rows.push((i + 1, vals));
        }
        if rows.len() != 3 * LANDMARKS {
            return Err(Error::parse(
                source,
                format!("expected {} rows, found {}", 3 * LANDMARKS, rows.len()),
            ));
        }
        let mut mean = Vec::with_capacity(LANDMARKS);
        for (line, vals) in &rows[..LANDMARKS] {
            if vals.len() != 2 {
                return Err(Error::parse(
                    format!("{source}:{line}"),
                    "mean-shape row needs 2 values",
                ));
            }
            mean.push([vals[0], vals[1]]);
        }
        let m = rows[LANDMARKS].1.len();
        let mut basis = Vec::with_capacity(2 * LANDMARKS * m);
        for (line, vals) in &rows[LANDMARKS..] {
            if vals.len() != m {
                return Err(Error::parse(
                    format!("{source}:{line}"),
                    format!("basis row has {} values, expected {m}", vals.len()),
                ));
            }
            basis.extend_from_slice(vals);
        }
        Self::new(mean, basis, m)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        for p in &self.mean {
            writeln!(w, "{:?},{:?}", p[0], p[1]).map_err(io)?;
        }
        for row in self.basis.chunks(self.m) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", cells.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Local shape `x̂_i = x̄_i + Ψ_i q`. Scale, rotation and translation of the
/// frame play no part.
pub fn reconstruct_local_shape(model: &ShapeModel, q: &[f64]) -> Result<Vec<Point>> {
    if q.len() != model.m {
        return Err(Error::Dimension(format!(
            "coefficient vector has length {}, model has {} basis columns",
            q.len(),
            model.m
        )));
    }
    Ok(model
        .mean
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut out = *p;
            for (axis, v) in out.iter_mut().enumerate() {
                let row = &model.basis[(2 * i + axis) * model.m..(2 * i + axis + 1) * model.m];
                *v += row.iter().zip(q).map(|(b, c)| b * c).sum::<f64>();
            }
            out
        })
        .collect())
}

/// Landmark index pairs behind each distance feature. A feature with two pairs
/// (left and right) is the mean of the two distances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkConfig {
    pub obh: Vec<[usize; 2]>,
    pub ibh: Vec<[usize; 2]>,
    pub olh: Vec<[usize; 2]>,
    pub ilh: Vec<[usize; 2]>,
    pub eye_open: Vec<[usize; 2]>,
    pub lip_cdt: Vec<[usize; 2]>,
}

impl Default for LandmarkConfig {
    fn default() -> Self {
        serde_json::from_str(include_str!("../../data/landmarks.json"))
            .expect("bundled landmark config is valid")
    }
}

impl LandmarkConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn groups(&self) -> [(&'static str, &[[usize; 2]]); 6] {
        [
            ("obh", &self.obh),
            ("ibh", &self.ibh),
            ("olh", &self.olh),
            ("ilh", &self.ilh),
            ("eye_open", &self.eye_open),
            ("lip_cdt", &self.lip_cdt),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, pairs) in self.groups() {
            if pairs.is_empty() {
                return Err(Error::Config(format!(
                    "landmark feature {name} has no point pairs"
                )));
            }
            if let Some(bad) = pairs.iter().flatten().find(|&&i| i >= LANDMARKS) {
                return Err(Error::Config(format!(
                    "landmark feature {name}: index {bad} out of range 0..{LANDMARKS}"
                )));
            }
        }
        Ok(())
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// OBH, IBH, OLH, ILH, eye opening and lip-corner distance, in that order.
pub fn geometric_features(points: &[Point], config: &LandmarkConfig) -> Result<[f64; 6]> {
    if points.len() != LANDMARKS {
        return Err(Error::Dimension(format!(
            "{} points, expected {LANDMARKS}",
            points.len()
        )));
    }
    config.validate()?;
    let mut out = [0.0; 6];
    for (slot, (_, pairs)) in out.iter_mut().zip(config.groups()) {
        let total: f64 = pairs.iter().map(|&[a, b]| dist(points[a], points[b])).sum();
        *slot = total / pairs.len() as f64;
    }
    Ok(out)
}

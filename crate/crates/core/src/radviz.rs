//! Minmax scaling and the normalized radial map `Ψ(x; U) = Uᵀx / 1ᵀx`,
//! plus the [`Scene`] documents the pipeline emits.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchors::{circle_anchors, sphere_anchors, AnchorError, AnchorScheme, AnchorSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadvizError {
    #[error("data has {data} columns but there are {anchors} anchors")]
    AnchorDimensionMismatch { data: usize, anchors: usize },
    #[error("{method} needs at least {min} coordinates, got {got}")]
    TooFewCoordinates { method: Method, min: usize, got: usize },
    #[error("projection input must be finite and non-negative (row {row}, column {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("labels length {labels} does not match {rows} records")]
    LabelMismatch { labels: usize, rows: usize },
    #[error(transparent)]
    Anchors(#[from] AnchorError),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Radviz3d,
    Radviz2d,
    Viz3d,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Radviz3d => "radviz3d",
            Method::Radviz2d => "radviz2d",
            Method::Viz3d => "viz3d",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "radviz3d" => Ok(Method::Radviz3d),
            "radviz2d" => Ok(Method::Radviz2d),
            "viz3d" => Ok(Method::Viz3d),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxParams {
    pub fn constant_features(&self) -> Vec<usize> {
        (0..self.min.len()).filter(|&j| self.max[j] == self.min[j]).collect()
    }
}

/// Scales each column onto [0, 1]. Constant columns map to 0.5.
pub fn minmax_scale(data: &DMatrix<f64>) -> (DMatrix<f64>, MinMaxParams) {
    let (n, p) = data.shape();
    let mut min = Vec::with_capacity(p);
    let mut max = Vec::with_capacity(p);
    let mut out = DMatrix::zeros(n, p);
    for j in 0..p {
        let col = data.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for i in 0..n {
            out[(i, j)] = if hi > lo { (data[(i, j)] - lo) / (hi - lo) } else { 0.5 };
        }
        min.push(lo);
        max.push(hi);
    }
    (out, MinMaxParams { min, max })
}

/// Result of [`gradviz_project`]: points plus the records that had zero
/// total weight and were placed at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub points: DMatrix<f64>,
    pub origin_records: Vec<usize>,
}

/// Normalized radial map of each (non-negative) record onto the anchors.
pub fn gradviz_project(scaled: &DMatrix<f64>, anchors: &AnchorSet) -> Result<Projection, RadvizError> {
    let (n, p) = scaled.shape();
    if anchors.len() != p {
        return Err(RadvizError::AnchorDimensionMismatch { data: p, anchors: anchors.len() });
    }
    let d = anchors.dim();
    let mut points = DMatrix::zeros(n, d);
    let mut origin_records = Vec::new();
    for i in 0..n {
        let mut total = 0.0;
        for j in 0..p {
            let x = scaled[(i, j)];
            if !(x >= 0.0 && x.is_finite()) {
                return Err(RadvizError::NegativeEntry { row: i, col: j });
            }
            total += x;
        }
        if total == 0.0 {
            log::warn!("record {i} has zero total weight; placed at the origin");
            origin_records.push(i);
            continue;
        }
        for c in 0..d {
            let mut acc = 0.0;
            for j in 0..p {
                acc += scaled[(i, j)] * anchors.points[(j, c)];
            }
            points[(i, c)] = acc / total;
        }
    }
    Ok(Projection { points, origin_records })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneMetadata {
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    pub stages: Vec<String>,
    pub origin_records: Vec<usize>,
}

/// Projected points with labels and the anchors that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub method: Method,
    /// n×d with d = 2 (radviz2d) or 3.
    pub points: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub anchors: AnchorSet,
    pub anchor_names: Vec<String>,
    pub metadata: SceneMetadata,
}

/// Minmax-scales `data` and projects it with the anchors of `method`.
pub fn make_scene(data: &DMatrix<f64>, labels: &[usize], method: Method) -> Result<Scene, RadvizError> {
    let (n, k) = data.shape();
    if labels.len() != n {
        return Err(RadvizError::LabelMismatch { labels: labels.len(), rows: n });
    }
    let min = if method == Method::Radviz3d { 4 } else { 3 };
    if k < min {
        return Err(RadvizError::TooFewCoordinates { method, min, got: k });
    }
    let (scaled, _) = minmax_scale(data);
    let anchors = match method {
        Method::Radviz3d => sphere_anchors(k)?,
        Method::Radviz2d | Method::Viz3d => circle_anchors(k)?,
    };
    let proj = gradviz_project(&scaled, &anchors)?;
    let points = match method {
        Method::Viz3d => {
            let mut pts = DMatrix::zeros(n, 3);
            for i in 0..n {
                pts[(i, 0)] = proj.points[(i, 0)];
                pts[(i, 1)] = proj.points[(i, 1)];
                pts[(i, 2)] = scaled.row(i).sum() / k as f64;
            }
            pts
        }
        _ => proj.points,
    };
    Ok(Scene {
        method,
        points,
        labels: labels.to_vec(),
        anchors,
        anchor_names: (1..=k).map(|j| format!("x{j}")).collect(),
        metadata: SceneMetadata { origin_records: proj.origin_records, ..Default::default() },
    })
}

/// Float formatting used in every scene file: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn coord(m: &DMatrix<f64>, r: usize, c: usize) -> f64 {
    if c < m.ncols() {
        m[(r, c)]
    } else {
        0.0
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    method: Method,
    anchors: Vec<AnchorDoc>,
    points: Vec<PointDoc>,
    metadata: SceneMetadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnchorDoc {
    name: String,
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointDoc {
    x: f64,
    y: f64,
    z: f64,
    label: usize,
}

impl Scene {
    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// JSON document with fixed field order. 2D coordinates carry `z = 0`.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"method\": \"{}\",", self.method);
        s.push_str("  \"anchors\": [");
        for j in 0..self.anchors.len() {
            let a = &self.anchors.points;
            let _ = write!(
                s,
                "{}\n    {{\"name\": {}, \"x\": {}, \"y\": {}, \"z\": {}}}",
                if j == 0 { "" } else { "," },
                json_string(&self.anchor_names[j]),
                fmt_f64(coord(a, j, 0)),
                fmt_f64(coord(a, j, 1)),
                fmt_f64(coord(a, j, 2)),
            );
        }
        s.push_str("\n  ],\n  \"points\": [");
        for i in 0..self.points.nrows() {
            let p = &self.points;
            let _ = write!(
                s,
                "{}\n    {{\"x\": {}, \"y\": {}, \"z\": {}, \"label\": {}}}",
                if i == 0 { "" } else { "," },
                fmt_f64(coord(p, i, 0)),
                fmt_f64(coord(p, i, 1)),
                fmt_f64(coord(p, i, 2)),
                self.labels[i],
            );
        }
        let meta = serde_json::to_string(&self.metadata).expect("metadata serializes");
        let _ = write!(s, "\n  ],\n  \"metadata\": {meta}\n}}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self, RadvizError> {
        let doc: SceneDoc = serde_json::from_str(text).map_err(|e| RadvizError::InvalidScene(e.to_string()))?;
        let d = if doc.method == Method::Radviz2d { 2 } else { 3 };
        let ad = if doc.method == Method::Radviz3d { 3 } else { 2 };
        let p = doc.anchors.len();
        let min = if doc.method == Method::Radviz3d { 4 } else { 3 };
        if p < min {
            return Err(RadvizError::InvalidScene(format!("{p} anchors is too few for {}", doc.method)));
        }
        let mut apts = DMatrix::zeros(p, ad);
        let mut names = Vec::with_capacity(p);
        for (j, a) in doc.anchors.iter().enumerate() {
            let v = [a.x, a.y, a.z];
            for c in 0..ad {
                apts[(j, c)] = v[c];
            }
            let norm = apts.row(j).norm();
            if !((norm - 1.0).abs() <= 1e-9) {
                return Err(RadvizError::InvalidScene(format!("anchor {j} is not a unit vector")));
            }
            names.push(a.name.clone());
        }
        let n = doc.points.len();
        let mut pts = DMatrix::zeros(n, d);
        let mut labels = Vec::with_capacity(n);
        for (i, q) in doc.points.iter().enumerate() {
            let v = [q.x, q.y, q.z];
            if v.iter().any(|x| !x.is_finite()) {
                return Err(RadvizError::InvalidScene(format!("point {i} is not finite")));
            }
            for c in 0..d {
                pts[(i, c)] = v[c];
            }
            if q.label == 0 {
                return Err(RadvizError::InvalidScene("labels start at 1".into()));
            }
            labels.push(q.label);
        }
        let scheme = match (doc.method, p) {
            (Method::Radviz3d, 4 | 6 | 8 | 12 | 20) => AnchorScheme::Platonic,
            (Method::Radviz3d, _) => AnchorScheme::Fibonacci,
            _ => AnchorScheme::Circle,
        };
        Ok(Scene {
            method: doc.method,
            points: pts,
            labels,
            anchors: AnchorSet { points: apts, scheme },
            anchor_names: names,
            metadata: doc.metadata,
        })
    }

    /// Points CSV: `x,y,z,label`.
    pub fn points_csv(&self) -> String {
        let mut s = String::from("x,y,z,label\n");
        for i in 0..self.points.nrows() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_f64(coord(&self.points, i, 0)),
                fmt_f64(coord(&self.points, i, 1)),
                fmt_f64(coord(&self.points, i, 2)),
                self.labels[i]
            );
        }
        s
    }

    /// Anchors CSV: `name,x,y,z`.
    pub fn anchors_csv(&self) -> String {
        let mut s = String::from("name,x,y,z\n");
        let a = &self.anchors.points;
        for j in 0..self.anchors.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                self.anchor_names[j],
                fmt_f64(coord(a, j, 0)),
                fmt_f64(coord(a, j, 1)),
                fmt_f64(coord(a, j, 2))
            );
        }
        s
    }
}

/// `j,x,y,z` listing of an anchor set (circle anchors get `z = 0`).
pub fn anchors_csv(set: &AnchorSet) -> String {
    let mut s = String::from("j,x,y,z\n");
    for j in 0..set.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            j + 1,
            fmt_f64(coord(&set.points, j, 0)),
            fmt_f64(coord(&set.points, j, 1)),
            fmt_f64(coord(&set.points, j, 2))
        );
    }
    s
}

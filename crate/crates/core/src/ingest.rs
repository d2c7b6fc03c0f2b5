//! Labeled tabular datasets: CSV loading, feature-kind inference and the
//! validated [`Dataset`] every later stage consumes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default maximum number of distinct values for a feature to count as
/// discrete.
pub const DEFAULT_MAX_LEVELS: usize = 10;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("non-numeric or non-finite cell at data row {row}, column `{col}`")]
    NonNumericCell { row: usize, col: String },
    #[error("empty label at data row {0}")]
    EmptyLabel(usize),
    #[error("dataset has no records or no feature columns")]
    EmptyDataset,
    #[error("dataset needs at least 2 records, found {0}")]
    TooFewRecords(usize),
    #[error("kind override names unknown feature `{0}`")]
    UnknownOverrideName(String),
    #[error("kinds file line {line}: {reason}")]
    BadKindsLine { line: usize, reason: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Discrete,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Continuous => f.write_str("continuous"),
            FeatureKind::Discrete => f.write_str("discrete"),
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" => Ok(FeatureKind::Continuous),
            "discrete" => Ok(FeatureKind::Discrete),
            other => Err(format!("unknown feature kind `{other}`")),
        }
    }
}

/// An n×p table of finite values with group labels `1..=G`.
///
/// Fields are private so the invariants checked in [`Dataset::new`] hold for
/// the lifetime of the value.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: DMatrix<f64>,
    labels: Vec<usize>,
    kinds: Vec<FeatureKind>,
    names: Vec<String>,
    group_names: Vec<String>,
}

impl Dataset {
    /// Validates and assembles a dataset. `labels` must use `1..=G` with
    /// every group present; `group_names[g-1]` names group `g`.
    pub fn new(
        values: DMatrix<f64>,
        labels: Vec<usize>,
        kinds: Vec<FeatureKind>,
        names: Vec<String>,
        group_names: Vec<String>,
    ) -> Result<Self, IngestError> {
        let (n, p) = values.shape();
        if n == 0 || p == 0 {
            return Err(IngestError::EmptyDataset);
        }
        if n < 2 {
            return Err(IngestError::TooFewRecords(n));
        }
        if labels.len() != n || kinds.len() != p || names.len() != p {
            return Err(IngestError::Invalid(format!(
                "shape mismatch: {n}x{p} values, {} labels, {} kinds, {} names",
                labels.len(),
                kinds.len(),
                names.len()
            )));
        }
        if let Some(idx) = values.iter().position(|x| !x.is_finite()) {
            // column-major storage
            return Err(IngestError::NonNumericCell { row: idx % n + 1, col: names[idx / n].clone() });
        }
        let g = group_names.len();
        if g == 0 {
            return Err(IngestError::Invalid("no groups".into()));
        }
        let mut seen = vec![false; g];
        for &l in &labels {
            if l == 0 || l > g {
                return Err(IngestError::Invalid(format!("label {l} outside 1..={g}")));
            }
            seen[l - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(IngestError::Invalid(format!("group {} has no records", missing + 1)));
        }
        Ok(Self { values, labels, kinds, names, group_names })
    }

    /// Builds a dataset from integer labels already in `1..=G`, naming groups
    /// by their index and inferring feature kinds.
    pub fn from_parts(values: DMatrix<f64>, labels: Vec<usize>) -> Result<Self, IngestError> {
        let p = values.ncols();
        let g = labels.iter().copied().max().unwrap_or(0);
        let kinds = infer_feature_kinds(&values, DEFAULT_MAX_LEVELS);
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        let group_names = (1..=g).map(|i| i.to_string()).collect();
        Self::new(values, labels, kinds, names, group_names)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn groups(&self) -> usize {
        self.group_names.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.groups()];
        for &l in &self.labels {
            sizes[l - 1] += 1;
        }
        sizes
    }

    pub fn has_discrete(&self) -> bool {
        self.kinds.contains(&FeatureKind::Discrete)
    }

    /// Same records and labels with columns replaced.
    pub fn with_columns(
        &self,
        values: DMatrix<f64>,
        kinds: Vec<FeatureKind>,
        names: Vec<String>,
    ) -> Result<Self, IngestError> {
        Self::new(values, self.labels.clone(), kinds, names, self.group_names.clone())
    }

    /// Writes the dataset as CSV: feature columns then a `label` column
    /// holding the group names.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), IngestError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        header.push("label");
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.values.row(i).iter().map(|x| format_number(*x)).collect();
            rec.push(self.group_names[self.labels[i] - 1].clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest representation that parses back to the same f64.
pub(crate) fn format_number(x: f64) -> String {
    let s = format!("{x}");
    if s.parse::<f64>().ok() == Some(x) {
        s
    } else {
        format!("{x:e}")
    }
}

/// A feature is discrete iff it has at most `max_levels` distinct values.
pub fn infer_feature_kinds(values: &DMatrix<f64>, max_levels: usize) -> Vec<FeatureKind> {
    values
        .column_iter()
        .map(|col| {
            let mut v: Vec<f64> = col.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| a == b);
            if v.len() <= max_levels {
                FeatureKind::Discrete
            } else {
                FeatureKind::Continuous
            }
        })
        .collect()
}

/// Parses a kinds sidecar: one `name,kind` pair per line. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_kinds(text: &str) -> Result<BTreeMap<String, FeatureKind>, IngestError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, kind) = line.split_once(',').ok_or_else(|| IngestError::BadKindsLine {
            line: i + 1,
            reason: "expected `name,kind`".into(),
        })?;
        let kind: FeatureKind =
            kind.parse().map_err(|reason| IngestError::BadKindsLine { line: i + 1, reason })?;
        out.insert(name.trim().to_string(), kind);
    }
    Ok(out)
}

pub fn load_kinds(path: &Path) -> Result<BTreeMap<String, FeatureKind>, IngestError> {
    parse_kinds(&std::fs::read_to_string(path)?)
}

/// Parses CSV bytes. Labels are re-encoded to `1..=G` in order of first
/// appearance; feature order follows the header.
pub fn parse_csv<R: Read>(
    input: R,
    label_column: &str,
    kind_overrides: Option<&BTreeMap<String, FeatureKind>>,
) -> Result<Dataset, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    let label_idx = header
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| IngestError::MissingLabelColumn(label_column.to_string()))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    if names.is_empty() {
        return Err(IngestError::EmptyDataset);
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut group_names: Vec<String> = Vec::new();
    let mut codes: HashMap<String, usize> = HashMap::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        for (c, cell) in rec.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let col = if c < label_idx { c } else { c - 1 };
            let v: f64 = cell
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| IngestError::NonNumericCell { row, col: names[col].clone() })?;
            rows.push(v);
        }
        let raw = rec.get(label_idx).unwrap_or("").trim();
        if raw.is_empty() {
            return Err(IngestError::EmptyLabel(row));
        }
        let next = codes.len() + 1;
        let code = *codes.entry(raw.to_string()).or_insert_with(|| {
            group_names.push(raw.to_string());
            next
        });
        labels.push(code);
    }
    let n = labels.len();
    if n == 0 {
        return Err(IngestError::EmptyDataset);
    }
    let values = DMatrix::from_row_slice(n, names.len(), &rows);

    let mut kinds = infer_feature_kinds(&values, DEFAULT_MAX_LEVELS);
    if let Some(over) = kind_overrides {
        for (name, kind) in over {
            let j = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| IngestError::UnknownOverrideName(name.clone()))?;
            kinds[j] = *kind;
        }
    }
    Dataset::new(values, labels, kinds, names, group_names)
}

pub fn load_csv(
    path: &Path,
    label_column: &str,
    kind_overrides: Option<&BTreeMap<String, FeatureKind>>,
) -> Result<Dataset, IngestError> {
    let file = std::fs::File::open(path)?;
    parse_csv(std::io::BufReader::new(file), label_column, kind_overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_by_first_appearance() {
        let d = parse_csv("a,b,lab\n1,2,x\n3,4,y\n5,6,x\n".as_bytes(), "lab", None).unwrap();
        assert_eq!(d.groups(), 2);
        assert_eq!(d.labels(), &[1, 2, 1]);
        assert_eq!(d.group_names(), &["x".to_string(), "y".to_string()]);
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.values()[(2, 1)], 6.0);
    }

    #[test]
    fn label_column_anywhere() {
        let d = parse_csv("lab,a\nq,1\nr,2\n".as_bytes(), "lab", None).unwrap();
        assert_eq!(d.p(), 1);
        assert_eq!(d.values()[(1, 0)], 2.0);
    }

    #[test]
    fn blank_cell_rejected() {
        let err = parse_csv("a,b,lab\n1,,x\n3,4,y\n".as_bytes(), "lab", None).unwrap_err();
        assert!(matches!(err, IngestError::NonNumericCell { row: 1, ref col } if col == "b"));
    }

    #[test]
    fn nan_and_text_rejected() {
        assert!(matches!(
            parse_csv("a,lab\nNaN,x\n1,y\n".as_bytes(), "lab", None),
            Err(IngestError::NonNumericCell { .. })
        ));
        assert!(matches!(
            parse_csv("a,lab\n1,x\nabc,y\n".as_bytes(), "lab", None),
            Err(IngestError::NonNumericCell { row: 2, .. })
        ));
    }

    #[test]
    fn missing_label_and_empty() {
        assert!(matches!(
            parse_csv("a,b\n1,2\n".as_bytes(), "lab", None),
            Err(IngestError::MissingLabelColumn(_))
        ));
        assert!(matches!(parse_csv("a,lab\n".as_bytes(), "lab", None), Err(IngestError::EmptyDataset)));
        assert!(matches!(parse_csv("lab\nx\ny\n".as_bytes(), "lab", None), Err(IngestError::EmptyDataset)));
        assert!(matches!(
            parse_csv("a,lab\n1,x\n".as_bytes(), "lab", None),
            Err(IngestError::TooFewRecords(1))
        ));
    }

    #[test]
    fn override_precedence() {
        let csv = "a,b,lab\n1,0.5,x\n2,1.5,y\n3,2.5,x\n4,3.5,y\n";
        let mut over = BTreeMap::new();
        over.insert("a".to_string(), FeatureKind::Discrete);
        let d = parse_csv(csv.as_bytes(), "lab", Some(&over)).unwrap();
        let inferred = infer_feature_kinds(d.values(), DEFAULT_MAX_LEVELS);
        assert_eq!(d.kinds()[0], FeatureKind::Discrete);
        assert_eq!(d.kinds()[1], inferred[1]);

        over.insert("zzz".to_string(), FeatureKind::Continuous);
        assert!(matches!(
            parse_csv(csv.as_bytes(), "lab", Some(&over)),
            Err(IngestError::UnknownOverrideName(n)) if n == "zzz"
        ));
    }

    #[test]
    fn kind_inference() {
        let binary = DMatrix::from_column_slice(5, 1, &[0.0, 1.0, 1.0, 0.0, 1.0]);
        assert_eq!(infer_feature_kinds(&binary, 10), vec![FeatureKind::Discrete]);

        let many = DMatrix::from_fn(200, 1, |i, _| i as f64 * 0.37 + 0.01);
        assert_eq!(infer_feature_kinds(&many, 10), vec![FeatureKind::Continuous]);

        let ten = DMatrix::from_fn(50, 1, |i, _| (i % 10 + 1) as f64);
        assert_eq!(infer_feature_kinds(&ten, 10), vec![FeatureKind::Discrete]);
        assert_eq!(infer_feature_kinds(&ten, 9), vec![FeatureKind::Continuous]);
    }

    #[test]
    fn kinds_file() {
        let k = parse_kinds("# comment\na,discrete\n\n b , Continuous \n").unwrap();
        assert_eq!(k["a"], FeatureKind::Discrete);
        assert_eq!(k["b"], FeatureKind::Continuous);
        assert!(matches!(parse_kinds("a\n"), Err(IngestError::BadKindsLine { line: 1, .. })));
        assert!(matches!(parse_kinds("a,weird\n"), Err(IngestError::BadKindsLine { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let d = parse_csv("a,b,lab\n1.5,-2,x\n3,4e-3,y\n".as_bytes(), "lab", None).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = parse_csv(buf.as_slice(), "label", None).unwrap();
        assert_eq!(back.values(), d.values());
        assert_eq!(back.labels(), d.labels());
        assert_eq!(back.group_names(), d.group_names());
    }
}

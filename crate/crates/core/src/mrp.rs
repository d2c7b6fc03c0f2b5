//! Max-ratio projection.
//!
//! Directions maximize between-group over total sum of squares, subject to
//! being mutually uncorrelated (`v_iᵀ T v_j = 0`). They are the eigenvectors
//! of `T^{-1/2} B T^{-1/2}` mapped back through `T^{-1/2}` and normalized.
//! When groups are too small for `T` to be well conditioned, the data are
//! first projected onto the orthonormal matrix closest to all per-group
//! principal-component bases.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{max_abs, svd, sym_eig, NumericsError};

/// Relative eigenvalue floor below which `T` counts as singular.
pub const PD_THRESHOLD: f64 = 1e-10;
/// Cumulative eigenvalue share used to pick the number of directions.
pub const DEFAULT_VARIANCE_MASS: f64 = 0.90;
/// RadViz3D needs four anchors; fewer directions are padded up to this.
pub const MIN_DISPLAY_DIRECTIONS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MrpError {
    #[error("group {0} has fewer than 2 records")]
    DegenerateGroup(usize),
    #[error("max-ratio projection needs at least 2 groups")]
    TooFewGroups,
    #[error("total SSCP is singular; pre-reduce first")]
    SingularT,
    #[error("reduced total SSCP is still singular (rank {rank} of {dim})")]
    SingularReducedT { rank: usize, dim: usize },
    #[error("all matrices must share one shape; matrix {index} differs")]
    ShapeMismatch { index: usize },
    #[error("need at least one matrix")]
    Empty,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Total (`T`) and between-group (`B`) corrected SSCP matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SscpPair {
    pub total: DMatrix<f64>,
    pub between: DMatrix<f64>,
}

fn group_sizes(labels: &[usize]) -> Vec<usize> {
    let g = labels.iter().copied().max().unwrap_or(0);
    let mut sizes = vec![0; g];
    for &l in labels {
        sizes[l - 1] += 1;
    }
    sizes
}

fn check_labels(n: usize, labels: &[usize]) -> Result<Vec<usize>, MrpError> {
    if labels.len() != n {
        return Err(MrpError::Invalid(format!("{} labels for {n} records", labels.len())));
    }
    if labels.contains(&0) {
        return Err(MrpError::Invalid("labels start at 1".into()));
    }
    let sizes = group_sizes(labels);
    if let Some(empty) = sizes.iter().position(|&c| c == 0) {
        return Err(MrpError::Invalid(format!("group {} is empty", empty + 1)));
    }
    Ok(sizes)
}

fn group_means(data: &DMatrix<f64>, labels: &[usize], sizes: &[usize]) -> DMatrix<f64> {
    let mut means = DMatrix::zeros(sizes.len(), data.ncols());
    for (i, &l) in labels.iter().enumerate() {
        let mut row = means.row_mut(l - 1);
        row += data.row(i);
    }
    for (g, &c) in sizes.iter().enumerate() {
        let mut row = means.row_mut(g);
        row /= c as f64;
    }
    means
}

/// `T = Xᵀ(I − 11ᵀ/n)X` and `B = Σ_g n_g (m_g − m)(m_g − m)ᵀ`.
pub fn sscp(data: &DMatrix<f64>, labels: &[usize]) -> Result<SscpPair, MrpError> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(MrpError::Invalid("need at least 2 records".into()));
    }
    let sizes = check_labels(n, labels)?;
    let grand = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &grand;
    }
    let total = centered.transpose() * &centered;

    let means = group_means(data, labels, &sizes);
    let mut weighted = DMatrix::zeros(sizes.len(), p);
    for (g, &c) in sizes.iter().enumerate() {
        let diff = means.row(g) - &grand;
        weighted.set_row(g, &(diff * (c as f64).sqrt()));
    }
    let between = weighted.transpose() * &weighted;
    Ok(SscpPair { total: symmetrize(total), between: symmetrize(between) })
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

/// Orthonormal-column matrix minimizing `Σ_j ‖W − V_j‖²_F`: `W = P Qᵀ` from
/// the thin SVD `Σ_j V_j = P Λ Qᵀ`.
pub fn nearest_orthogonal(vs: &[DMatrix<f64>]) -> Result<DMatrix<f64>, MrpError> {
    let first = vs.first().ok_or(MrpError::Empty)?;
    let shape = first.shape();
    if shape.0 < shape.1 || shape.1 == 0 {
        return Err(MrpError::Invalid(format!("expected p >= q >= 1, got {}x{}", shape.0, shape.1)));
    }
    let mut sum = DMatrix::zeros(shape.0, shape.1);
    for (index, v) in vs.iter().enumerate() {
        if v.shape() != shape {
            return Err(MrpError::ShapeMismatch { index });
        }
        sum += v;
    }
    let dec = svd(&sum)?;
    Ok(&dec.u * dec.v.transpose())
}

/// `T^{-1/2}` from the eigendecomposition of `T`, or `SingularT`.
fn inverse_sqrt(total: &DMatrix<f64>) -> Result<DMatrix<f64>, MrpError> {
    let eig = sym_eig(total)?;
    let largest = eig.eigenvalues[0];
    let smallest = eig.eigenvalues[eig.eigenvalues.len() - 1];
    if !(largest > 0.0) || smallest <= PD_THRESHOLD * largest {
        return Err(MrpError::SingularT);
    }
    let d = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()));
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&d) * q.transpose())
}

fn rank(total: &DMatrix<f64>) -> Result<usize, MrpError> {
    let eig = sym_eig(total)?;
    let largest = eig.eigenvalues[0].max(0.0);
    Ok(eig.eigenvalues.iter().filter(|&&l| l > PD_THRESHOLD * largest).count())
}

/// The `k` leading max-ratio directions (unit-norm columns) and the full
/// descending spectrum of `T^{-1/2} B T^{-1/2}`.
pub fn max_ratio_directions(pair: &SscpPair, k: usize) -> Result<(DMatrix<f64>, DVector<f64>), MrpError> {
    let p = pair.total.nrows();
    if k == 0 || k > p {
        return Err(MrpError::Invalid(format!("k = {k} outside 1..={p}")));
    }
    let t_inv_sqrt = inverse_sqrt(&pair.total)?;
    let m = symmetrize(&t_inv_sqrt * &pair.between * &t_inv_sqrt);
    let eig = sym_eig(&m)?;
    let eigenvalues = eig.eigenvalues.map(|l| l.max(0.0));

    let mut directions = DMatrix::zeros(p, k);
    for j in 0..k {
        let v = &t_inv_sqrt * eig.eigenvectors.column(j);
        let v = v.normalize();
        let mut best = 0.0_f64;
        for x in v.iter() {
            if x.abs() > best.abs() {
                best = *x;
            }
        }
        let v = if best < 0.0 { -v } else { v };
        directions.set_column(j, &v);
    }
    Ok((directions, eigenvalues))
}

/// How many max-ratio directions to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KPolicy {
    /// Smallest count reaching `mass` of the eigenvalue sum, capped at
    /// G − 1, then padded with the next directions up to
    /// [`MIN_DISPLAY_DIRECTIONS`].
    Mass { mass: f64 },
    Fixed(usize),
}

impl Default for KPolicy {
    fn default() -> Self {
        KPolicy::Mass { mass: DEFAULT_VARIANCE_MASS }
    }
}

/// Number of directions to retain. The result lies in `[1, q]`.
pub fn choose_k(eigenvalues: &DVector<f64>, groups: usize, policy: KPolicy) -> usize {
    let q = eigenvalues.len();
    let k = match policy {
        KPolicy::Fixed(k) => k,
        KPolicy::Mass { mass } => {
            let total: f64 = eigenvalues.iter().sum();
            let mut reach = q;
            if total > 0.0 {
                let mut acc = 0.0;
                for (i, l) in eigenvalues.iter().enumerate() {
                    acc += l;
                    if acc >= mass * total * (1.0 - 1e-12) {
                        reach = i + 1;
                        break;
                    }
                }
            } else {
                reach = 1;
            }
            reach.min(groups.saturating_sub(1)).max(MIN_DISPLAY_DIRECTIONS)
        }
    };
    k.clamp(1, q)
}

/// Fitted projection: `x ↦ xᵀ W V`.
#[derive(Debug, Clone, PartialEq)]
pub struct MrpModel {
    /// p×q orthonormal columns, or the identity when no reduction was needed.
    pub pre_reduction: DMatrix<f64>,
    /// q×k unit-norm direction columns.
    pub directions: DMatrix<f64>,
    /// Full descending spectrum (length q).
    pub eigenvalues: DVector<f64>,
    pub k: usize,
    /// Directions beyond the G − 1 informative ones.
    pub padded: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MrpDoc {
    pre_reduction: Vec<Vec<f64>>,
    directions: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    k: usize,
    #[serde(default)]
    padded: usize,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, MrpError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(MrpError::Invalid(format!("{what} is not a non-empty rectangular matrix")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(MrpError::Invalid(format!("{what} has non-finite entries")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl MrpModel {
    /// Full p×k projection matrix `W V`.
    pub fn projection_matrix(&self) -> DMatrix<f64> {
        &self.pre_reduction * &self.directions
    }

    pub fn project(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>, MrpError> {
        if data.ncols() != self.pre_reduction.nrows() {
            return Err(MrpError::Invalid(format!(
                "data has {} columns, model expects {}",
                data.ncols(),
                self.pre_reduction.nrows()
            )));
        }
        Ok(data * self.projection_matrix())
    }

    pub fn to_json(&self) -> String {
        let doc = MrpDoc {
            pre_reduction: rows_of(&self.pre_reduction),
            directions: rows_of(&self.directions),
            eigenvalues: self.eigenvalues.iter().copied().collect(),
            k: self.k,
            padded: self.padded,
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MrpError> {
        let doc: MrpDoc = serde_json::from_str(text).map_err(|e| MrpError::Invalid(e.to_string()))?;
        let pre_reduction = from_rows(&doc.pre_reduction, "pre_reduction")?;
        let directions = from_rows(&doc.directions, "directions")?;
        let (p, q) = pre_reduction.shape();
        if p < q || directions.nrows() != q || directions.ncols() != doc.k || doc.eigenvalues.len() != q {
            return Err(MrpError::Invalid("inconsistent model dimensions".into()));
        }
        if doc.padded > doc.k || doc.eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(MrpError::Invalid("invalid eigenvalues or padding".into()));
        }
        Ok(Self {
            pre_reduction,
            directions,
            eigenvalues: DVector::from_vec(doc.eigenvalues),
            k: doc.k,
            padded: doc.padded,
        })
    }
}

/// Per-group principal axes: top `q` eigenvectors of each group's centered
/// scatter matrix.
fn group_bases(data: &DMatrix<f64>, labels: &[usize], sizes: &[usize], q: usize) -> Result<Vec<DMatrix<f64>>, MrpError> {
    let means = group_means(data, labels, sizes);
    let p = data.ncols();
    let mut bases = Vec::with_capacity(sizes.len());
    for (g, &size) in sizes.iter().enumerate() {
        let mut centered = DMatrix::zeros(size, p);
        let mut r = 0;
        for (i, &l) in labels.iter().enumerate() {
            if l == g + 1 {
                centered.set_row(r, &(data.row(i) - means.row(g)));
                r += 1;
            }
        }
        let scatter = symmetrize(centered.transpose() * &centered);
        let eig = sym_eig(&scatter)?;
        bases.push(eig.eigenvectors.columns(0, q).into_owned());
    }
    Ok(bases)
}

/// Fits the full projection and returns it with the projected n×k table.
pub fn mrp_fit(data: &DMatrix<f64>, labels: &[usize], policy: KPolicy) -> Result<(MrpModel, DMatrix<f64>), MrpError> {
    let (n, p) = data.shape();
    let sizes = check_labels(n, labels)?;
    let groups = sizes.len();
    if groups < 2 {
        return Err(MrpError::TooFewGroups);
    }
    if let Some(g) = sizes.iter().position(|&c| c < 2) {
        return Err(MrpError::DegenerateGroup(g + 1));
    }
    let smallest = *sizes.iter().min().expect("at least two groups");
    let q = p.min(smallest - 1);

    let pre_reduction = if q == p {
        DMatrix::identity(p, p)
    } else {
        nearest_orthogonal(&group_bases(data, labels, &sizes, q)?)?
    };
    let reduced = data * &pre_reduction;
    let pair = sscp(&reduced, labels)?;
    if max_abs(&pair.total) == 0.0 {
        return Err(MrpError::SingularReducedT { rank: 0, dim: q });
    }
    let (_, spectrum) = match max_ratio_directions(&pair, 1) {
        Ok(r) => r,
        Err(MrpError::SingularT) => {
            return Err(MrpError::SingularReducedT { rank: rank(&pair.total)?, dim: q });
        }
        Err(e) => return Err(e),
    };
    let k = choose_k(&spectrum, groups, policy);
    let (directions, eigenvalues) = max_ratio_directions(&pair, k)?;
    let padded = k.saturating_sub(groups - 1);
    let model = MrpModel { pre_reduction, directions, eigenvalues, k, padded };
    let projected = &reduced * &model.directions;
    Ok((model, projected))
}

//! Gaussianized distributional transform and per-coordinate screening.
//!
//! Each feature gets an empirical CDF table. A value `y` is mapped to
//! `Φ⁻¹(F(y−) + v·(F(y) − F(y−)))` where `v ~ Uniform(0, 1)` is drawn from a
//! counter-based stream keyed by `(seed, record, feature)`. Ties are spread
//! uniformly over the jump of the ECDF, so discrete features come out
//! marginally standard normal too.

use nalgebra::DMatrix;
use rand::distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{f_tail, norm_quantile};
use crate::rng;

/// Default false-discovery level for screening.
pub const DEFAULT_FDR_ALPHA: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GdtError {
    #[error("column contains a non-finite value")]
    NonFinite,
    #[error("empty column")]
    Empty,
    #[error("feature {feature}: value {value} is not in the fitted support")]
    ValueOutsideSupport { feature: usize, value: f64 },
    #[error("data has {found} columns, model has {expected}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("group {0} has fewer than 2 members")]
    DegenerateGroup(usize),
    #[error("screening needs at least 2 groups and n - G >= 1")]
    TooFewGroups,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// ECDF of one feature, stored at its distinct observed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfTable {
    pub support: Vec<f64>,
    /// `F(y−)` at each support point.
    pub left_cdf: Vec<f64>,
    /// `F(y) − F(y−)` at each support point.
    pub jump: Vec<f64>,
}

impl EcdfTable {
    fn index_of(&self, y: f64) -> Option<usize> {
        self.support.binary_search_by(|s| s.total_cmp(&y)).ok()
    }

    /// `F(y)` at support index `k`.
    fn cdf_at(&self, k: usize) -> f64 {
        if k + 1 < self.left_cdf.len() {
            self.left_cdf[k + 1]
        } else {
            1.0
        }
    }

    /// Generalized CDF `F(y, λ) = F(y−) + λ (F(y) − F(y−))`, kept inside
    /// `(F(y−), F(y)]` despite rounding so that [`Self::quantile`] recovers `y`.
    pub fn generalized_cdf(&self, y: f64, lambda: f64) -> Option<f64> {
        self.index_of(y).map(|k| {
            let lo = self.left_cdf[k];
            let u = (lo + lambda * self.jump[k]).min(self.cdf_at(k));
            if u > lo {
                u
            } else {
                lo.next_up()
            }
        })
    }

    /// Generalized inverse `inf{y : F(y) ≥ u}`.
    pub fn quantile(&self, u: f64) -> f64 {
        // first k with F(y_k) >= u
        let m = self.support.len();
        let mut lo = 0;
        let mut hi = m - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cdf_at(mid) >= u {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.support[lo]
    }

    fn validate(&self) -> Result<(), String> {
        let m = self.support.len();
        if m == 0 || self.left_cdf.len() != m || self.jump.len() != m {
            return Err("support/left_cdf/jump lengths differ or are empty".into());
        }
        if !self.support.iter().chain(&self.left_cdf).chain(&self.jump).all(|x| x.is_finite()) {
            return Err("non-finite entry".into());
        }
        if self.support.windows(2).any(|w| w[0] >= w[1]) {
            return Err("support not strictly increasing".into());
        }
        if self.left_cdf[0] != 0.0 {
            return Err("left_cdf must start at 0".into());
        }
        const TOL: f64 = 1e-12;
        for k in 0..m {
            if self.jump[k] <= 0.0 {
                return Err(format!("jump {k} is not positive"));
            }
            let next = if k + 1 < m { self.left_cdf[k + 1] } else { 1.0 };
            if (self.left_cdf[k] + self.jump[k] - next).abs() > TOL {
                return Err(format!("left_cdf/jump inconsistent at {k}"));
            }
        }
        Ok(())
    }
}

/// Empirical CDF table of a column.
pub fn fit_ecdf(column: &[f64]) -> Result<EcdfTable, GdtError> {
    if column.is_empty() {
        return Err(GdtError::Empty);
    }
    if column.iter().any(|x| !x.is_finite()) {
        return Err(GdtError::NonFinite);
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;

    let mut support = Vec::new();
    let mut left_cdf = Vec::new();
    let mut jump = Vec::new();
    let mut below = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let y = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == y {
            j += 1;
        }
        support.push(y);
        left_cdf.push(below as f64 / n);
        jump.push((j - i) as f64 / n);
        below = j;
        i = j;
    }
    Ok(EcdfTable { support, left_cdf, jump })
}

const TAG_RANDOMIZER: u32 = 4;

fn randomizer_stream(feature: usize) -> u64 {
    rng::stream_id(TAG_RANDOMIZER, 0, feature as u32)
}

/// Fitted per-feature ECDFs plus the randomizer seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdtModel {
    pub names: Vec<String>,
    pub seed: u64,
    pub tables: Vec<EcdfTable>,
}

impl GdtModel {
    pub fn fit(data: &DMatrix<f64>, names: &[String], seed: u64) -> Result<Self, GdtError> {
        if names.len() != data.ncols() {
            return Err(GdtError::ColumnMismatch { expected: data.ncols(), found: names.len() });
        }
        let tables = data
            .column_iter()
            .map(|c| fit_ecdf(&c.iter().copied().collect::<Vec<_>>()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { names: names.to_vec(), seed, tables })
    }

    /// The uniform randomizer for cell `(record, feature)`.
    pub fn randomizer(&self, record: usize, feature: usize) -> f64 {
        let mut r = rng::stream_at(self.seed, randomizer_stream(feature), record as u64);
        Open01.sample(&mut r)
    }

    /// Generalized distributional transform `U = F(Y, V)` of every cell.
    pub fn uniformize(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>, GdtError> {
        let (n, p) = data.shape();
        if p != self.tables.len() {
            return Err(GdtError::ColumnMismatch { expected: self.tables.len(), found: p });
        }
        let mut out = DMatrix::zeros(n, p);
        for (i, table) in self.tables.iter().enumerate() {
            let mut r = rng::stream_at(self.seed, randomizer_stream(i), 0);
            for j in 0..n {
                let y = data[(j, i)];
                let v: f64 = Open01.sample(&mut r);
                out[(j, i)] = table
                    .generalized_cdf(y, v)
                    .ok_or(GdtError::ValueOutsideSupport { feature: i, value: y })?;
            }
        }
        Ok(out)
    }

    /// Gaussianized transform `Φ⁻¹(F(Y, V))` of every cell.
    pub fn transform(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>, GdtError> {
        let mut u = self.uniformize(data)?;
        for x in u.iter_mut() {
            // F(y−) + v·jump can round up to 1 on the top support point
            let u = x.min(1.0 - f64::EPSILON / 2.0);
            *x = norm_quantile(u).map_err(|_| GdtError::InvalidModel("uniform value outside (0, 1)".into()))?;
        }
        Ok(u)
    }

    /// Quantile transform of feature `feature` at probability `u`.
    pub fn inverse(&self, u: f64, feature: usize) -> f64 {
        self.tables[feature].quantile(u)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GdtError> {
        let model: Self = serde_json::from_str(text).map_err(|e| GdtError::InvalidModel(e.to_string()))?;
        if model.names.len() != model.tables.len() {
            return Err(GdtError::InvalidModel("names and tables differ in length".into()));
        }
        for (i, t) in model.tables.iter().enumerate() {
            t.validate().map_err(|e| GdtError::InvalidModel(format!("table {i}: {e}")))?;
        }
        Ok(model)
    }
}

/// Convenience wrapper: apply a fitted model to `data`.
pub fn gdt_transform(model: &GdtModel, data: &DMatrix<f64>) -> Result<DMatrix<f64>, GdtError> {
    model.transform(data)
}

/// `F⁻¹(u)` for feature `feature`; probabilities outside (0, 1) clamp to the
/// ends of the support.
pub fn inverse_check(model: &GdtModel, u: f64, feature: usize) -> f64 {
    model.inverse(u, feature)
}

/// Per-coordinate one-way ANOVA with Benjamini–Hochberg selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub f_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub keep_mask: Vec<bool>,
    pub alpha: f64,
}

impl ScreeningReport {
    pub fn kept(&self) -> usize {
        self.keep_mask.iter().filter(|k| **k).count()
    }
}

/// Benjamini–Hochberg step-up rejection set at level `alpha`.
pub fn benjamini_hochberg(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut k = 0;
    for (rank, &idx) in order.iter().enumerate() {
        if p_values[idx] <= (rank + 1) as f64 * alpha / m as f64 {
            k = rank + 1;
        }
    }
    let mut keep = vec![false; m];
    for &idx in &order[..k] {
        keep[idx] = true;
    }
    keep
}

/// One-way ANOVA F statistic and p-value for a single column.
fn anova_column(col: impl Iterator<Item = f64> + Clone, labels: &[usize], sizes: &[usize]) -> (f64, f64) {
    let g = sizes.len();
    let n = labels.len();
    let mut sums = vec![0.0; g];
    let mut total = 0.0;
    for (x, &l) in col.clone().zip(labels) {
        sums[l - 1] += x;
        total += x;
    }
    let grand = total / n as f64;
    let means: Vec<f64> = sums.iter().zip(sizes).map(|(s, &c)| s / c as f64).collect();
    let mut ss_within = 0.0;
    let mut ss_total = 0.0;
    for (x, &l) in col.zip(labels) {
        ss_within += (x - means[l - 1]).powi(2);
        ss_total += (x - grand).powi(2);
    }
    let ss_group: f64 = means.iter().zip(sizes).map(|(m, &c)| c as f64 * (m - grand).powi(2)).sum();

    // Relative thresholds absorb the rounding left by the mean computations.
    let scale = ss_group + ss_within;
    let tiny = 1e-12 * (scale + grand * grand * n as f64);
    if ss_total <= tiny || ss_group <= tiny {
        return (if ss_total <= tiny { f64::NAN } else { 0.0 }, 1.0);
    }
    if ss_within <= 1e-12 * ss_total {
        return (f64::INFINITY, 0.0);
    }
    let f = (ss_group / (g - 1) as f64) / (ss_within / (n - g) as f64);
    let p = f_tail(f, (g - 1) as u64, (n - g) as u64).unwrap_or(1.0);
    (f, p)
}

/// Screens each column by one-way ANOVA across groups and keeps the
/// Benjamini–Hochberg rejections at level `alpha`.
pub fn anova_screen(
    transformed: &DMatrix<f64>,
    labels: &[usize],
    alpha: f64,
) -> Result<ScreeningReport, GdtError> {
    let n = transformed.nrows();
    if labels.len() != n {
        return Err(GdtError::ColumnMismatch { expected: n, found: labels.len() });
    }
    let g = labels.iter().copied().max().unwrap_or(0);
    if g < 2 || n <= g || labels.contains(&0) {
        return Err(GdtError::TooFewGroups);
    }
    let mut sizes = vec![0usize; g];
    for &l in labels {
        sizes[l - 1] += 1;
    }
    if let Some(bad) = sizes.iter().position(|&c| c < 2) {
        return Err(GdtError::DegenerateGroup(bad + 1));
    }
    let (f_stats, p_values): (Vec<f64>, Vec<f64>) =
        transformed.column_iter().map(|c| anova_column(c.iter().copied(), labels, &sizes)).unzip();
    let keep_mask = benjamini_hochberg(&p_values, alpha);
    Ok(ScreeningReport { f_stats, p_values, keep_mask, alpha })
}

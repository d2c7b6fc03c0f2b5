//! Gaussian-mixture simulation, decile discretization, Monte Carlo overlap
//! maps and a silhouette score for scenes.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::distr::{Distribution, Open01};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Dataset, FeatureKind, IngestError};
use crate::numerics::sym_eig;
use crate::radviz::Scene;
use crate::rng::{stream_at, stream_id};

/// Smallest Monte Carlo sample count accepted by [`mc_overlap`].
pub const MIN_MC_SAMPLES: usize = 10_000;

const TAG_COMPONENT: u32 = 1;
const TAG_RECORD: u32 = 2;
const TAG_OVERLAP: u32 = 3;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("covariance of component {0} is not symmetric positive definite")]
    NotPositiveDefinite(usize),
    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),
    #[error("discretization needs at least 10 records, got {0}")]
    TooFewRecords(usize),
    #[error("column {0} does not exist")]
    NoSuchColumn(usize),
    #[error("group {0} has fewer than 2 points")]
    DegenerateGroup(usize),
    #[error("need at least 2 groups")]
    TooFewGroups,
    #[error("need at least {MIN_MC_SAMPLES} Monte Carlo samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Dataset(#[from] IngestError),
}

/// A G-component Gaussian mixture plus sample size and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub proportions: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

/// Validated component parameters ready for sampling and density work.
struct Component {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl MixtureSpec {
    pub fn groups(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Desk-scale protocol: G = 5 equally weighted components in p = 20 with
    /// identity covariances and means `spread · d_g` for fixed unit
    /// directions `d_g`.
    pub fn desk_scale(spread: f64, n: usize, seed: u64) -> Self {
        Self::spherical(5, 20, spread, n, seed)
    }

    /// `groups` equally weighted unit-covariance components whose means are
    /// `spread` times unit directions drawn from a fixed stream. The
    /// directions do not depend on `seed`, so specs differing only in
    /// `spread` are scaled copies of each other.
    pub fn spherical(groups: usize, dim: usize, spread: f64, n: usize, seed: u64) -> Self {
        const DIRECTION_SEED: u64 = 0x5eed_d1ec;
        let means = (0..groups)
            .map(|g| {
                let mut r = stream_at(DIRECTION_SEED, g as u64, 0);
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| spread * x / norm).collect()
            })
            .collect();
        let identity: Vec<Vec<f64>> =
            (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self {
            means,
            covariances: vec![identity; groups],
            proportions: vec![1.0 / groups as f64; groups],
            n,
            seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let spec: Self = serde_json::from_str(text).map_err(|e| EvalError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        self.components().map(|_| ())
    }

    fn components(&self) -> Result<Vec<Component>, EvalError> {
        let g = self.groups();
        let p = self.dim();
        if g == 0 || p == 0 {
            return Err(EvalError::InvalidSpec("no components or zero dimension".into()));
        }
        if self.covariances.len() != g || self.proportions.len() != g {
            return Err(EvalError::InvalidSpec("means, covariances and proportions differ in length".into()));
        }
        if self.proportions.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(EvalError::InvalidSpec("proportions must be finite and non-negative".into()));
        }
        let total: f64 = self.proportions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(EvalError::InvalidSpec(format!("proportions sum to {total}, not 1")));
        }
        let mut out = Vec::with_capacity(g);
        for c in 0..g {
            let mean = &self.means[c];
            let cov = &self.covariances[c];
            if mean.len() != p || cov.len() != p || cov.iter().any(|r| r.len() != p) {
                return Err(EvalError::InvalidSpec(format!("component {} has the wrong dimension", c + 1)));
            }
            if mean.iter().chain(cov.iter().flatten()).any(|x| !x.is_finite()) {
                return Err(EvalError::InvalidSpec(format!("component {} has non-finite entries", c + 1)));
            }
            let sigma = DMatrix::from_fn(p, p, |i, j| cov[i][j]);
            let eig = sym_eig(&sigma).map_err(|_| EvalError::NotPositiveDefinite(c + 1))?;
            if !(eig.eigenvalues[p - 1] > 0.0) {
                return Err(EvalError::NotPositiveDefinite(c + 1));
            }
            let sym = (&sigma + sigma.transpose()) * 0.5;
            let chol = Cholesky::new(sym).ok_or(EvalError::NotPositiveDefinite(c + 1))?;
            let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
            let log_norm = -0.5 * (p as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
            out.push(Component { mean: DVector::from_column_slice(mean), chol, log_norm });
        }
        Ok(out)
    }
}

fn draw(component: &Component, rng: &mut impl rand::Rng) -> DVector<f64> {
    let p = component.mean.len();
    let z = DVector::from_iterator(p, (0..p).map(|_| StandardNormal.sample(rng)));
    &component.mean + component.chol.l() * z
}

fn log_density(component: &Component, x: &DVector<f64>) -> f64 {
    let diff = x - &component.mean;
    let y = component
        .chol
        .l_dirty()
        .solve_lower_triangular(&diff)
        .expect("cholesky factor is non-singular");
    component.log_norm - 0.5 * y.norm_squared()
}

fn pick_component(cumulative: &[f64], u: f64) -> usize {
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

/// Draws `spec.n` labeled records. Labels are the drawn component indices,
/// re-encoded densely if some component was never drawn.
pub fn simulate_mixture(spec: &MixtureSpec) -> Result<Dataset, EvalError> {
    let comps = spec.components()?;
    let p = spec.dim();
    let n = spec.n;
    let mut cumulative = Vec::with_capacity(comps.len());
    let mut acc = 0.0;
    for w in &spec.proportions {
        acc += w;
        cumulative.push(acc);
    }
    // guard against zero-weight tails catching u close to 1
    let last_positive = spec.proportions.iter().rposition(|&w| w > 0.0).expect("weights sum to 1");
    for c in cumulative.iter_mut().skip(last_positive) {
        *c = f64::INFINITY;
    }

    let mut pick = stream_at(spec.seed, stream_id(TAG_COMPONENT, 0, 0), 0);
    let mut values = DMatrix::zeros(n, p);
    let mut raw = Vec::with_capacity(n);
    for r in 0..n {
        let u: f64 = Open01.sample(&mut pick);
        let c = pick_component(&cumulative, u);
        let mut rng = stream_at(spec.seed, stream_id(TAG_RECORD, c as u32, r as u32), 0);
        values.set_row(r, &draw(&comps[c], &mut rng).transpose());
        raw.push(c + 1);
    }
    let mut present: Vec<usize> = raw.clone();
    present.sort_unstable();
    present.dedup();
    let labels = raw.iter().map(|c| present.binary_search(c).expect("present") + 1).collect();
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    let group_names = present.iter().map(|c| c.to_string()).collect();
    Ok(Dataset::new(values, labels, vec![FeatureKind::Continuous; p], names, group_names)?)
}

/// Replaces each selected column by its decile bin `1..=10`, from the
/// column's own empirical deciles; the lowest bin is closed.
pub fn discretize_deciles(data: &Dataset, columns: &[usize]) -> Result<Dataset, EvalError> {
    let n = data.n();
    if n < 10 {
        return Err(EvalError::TooFewRecords(n));
    }
    let mut values = data.values().clone();
    let mut kinds = data.kinds().to_vec();
    for &j in columns {
        if j >= data.p() {
            return Err(EvalError::NoSuchColumn(j));
        }
        let mut sorted: Vec<f64> = data.values().column(j).iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        // inverse-ECDF deciles q_k = x_(ceil(n k / 10))
        let cuts: Vec<f64> = (1..10).map(|k| sorted[(n * k).div_ceil(10) - 1]).collect();
        for i in 0..n {
            let x = values[(i, j)];
            values[(i, j)] = (1 + cuts.iter().filter(|&&c| x > c).count()) as f64;
        }
        kinds[j] = FeatureKind::Discrete;
    }
    Ok(data.with_columns(values, kinds, data.names().to_vec())?)
}

/// Pairwise overlap matrix of a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMap {
    /// G×G, symmetric, zero diagonal; entry (i, j) estimates
    /// `ω_{j|i} + ω_{i|j}`.
    pub matrix: Vec<Vec<f64>>,
    pub mc_samples: usize,
    /// `(λ_max(Ω + I) − 1) / (G − 1)`.
    pub generalized_overlap: f64,
    pub max_overlap: f64,
    pub mean_overlap: f64,
}

impl OverlapMap {
    pub fn to_csv(&self) -> String {
        let g = self.matrix.len();
        let mut s = String::from("group");
        for j in 1..=g {
            s.push_str(&format!(",{j}"));
        }
        s.push('\n');
        for (i, row) in self.matrix.iter().enumerate() {
            s.push_str(&(i + 1).to_string());
            for x in row {
                s.push(',');
                s.push_str(&crate::radviz::fmt_f64(*x));
            }
            s.push('\n');
        }
        s
    }
}

/// Monte Carlo estimate of the pairwise misclassification overlaps.
///
/// `ω_{j|i} = P(π_j φ_j(X) > π_i φ_i(X) | X ~ component i)` with exact ties
/// counted as one half.
pub fn mc_overlap(spec: &MixtureSpec, mc_samples: usize) -> Result<OverlapMap, EvalError> {
    if mc_samples < MIN_MC_SAMPLES {
        return Err(EvalError::TooFewSamples(mc_samples));
    }
    let comps = spec.components()?;
    let g = comps.len();
    let log_w: Vec<f64> = spec.proportions.iter().map(|w| w.ln()).collect();

    // misclass[i][j] = ω_{j|i}
    let mut misclass = vec![vec![0.0; g]; g];
    for (i, comp) in comps.iter().enumerate() {
        let mut rng = stream_at(spec.seed, stream_id(TAG_OVERLAP, i as u32, 0), 0);
        let mut counts = vec![0.0; g];
        let mut scores = vec![0.0; g];
        for _ in 0..mc_samples {
            let x = draw(comp, &mut rng);
            for (k, c) in comps.iter().enumerate() {
                scores[k] = log_w[k] + log_density(c, &x);
            }
            for j in 0..g {
                if j == i {
                    continue;
                }
                if scores[j] > scores[i] {
                    counts[j] += 1.0;
                } else if scores[j] == scores[i] {
                    counts[j] += 0.5;
                }
            }
        }
        for j in 0..g {
            misclass[i][j] = counts[j] / mc_samples as f64;
        }
    }

    let mut matrix = vec![vec![0.0; g]; g];
    for i in 0..g {
        for j in 0..g {
            if i != j {
                matrix[i][j] = (misclass[i][j] + misclass[j][i]).min(1.0);
            }
        }
    }
    let generalized_overlap = if g < 2 {
        0.0
    } else {
        let with_diag = DMatrix::from_fn(g, g, |i, j| if i == j { 1.0 } else { matrix[i][j] });
        let top = sym_eig(&with_diag).expect("overlap matrix is symmetric").eigenvalues[0];
        ((top - 1.0) / (g - 1) as f64).clamp(0.0, 1.0)
    };
    let pairs: Vec<f64> = (0..g).flat_map(|i| (i + 1..g).map(move |j| (i, j))).map(|(i, j)| matrix[i][j]).collect();
    let max_overlap = pairs.iter().copied().fold(0.0, f64::max);
    let mean_overlap = if pairs.is_empty() { 0.0 } else { pairs.iter().sum::<f64>() / pairs.len() as f64 };
    Ok(OverlapMap { matrix, mc_samples, generalized_overlap, max_overlap, mean_overlap })
}

/// Mean silhouette of labeled points under Euclidean distance.
///
/// The within-group mean distance `a` averages over the whole own group,
/// the point itself included, which makes the score invariant to
/// duplicating every point.
pub fn silhouette(points: &DMatrix<f64>, labels: &[usize]) -> Result<f64, EvalError> {
    let n = points.nrows();
    let g = labels.iter().copied().max().unwrap_or(0);
    if g < 2 {
        return Err(EvalError::TooFewGroups);
    }
    let mut sizes = vec![0usize; g];
    for &l in labels {
        sizes[l - 1] += 1;
    }
    if let Some(bad) = sizes.iter().position(|&c| c < 2) {
        return Err(EvalError::DegenerateGroup(bad + 1));
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; g];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            sums[labels[j] - 1] += (points.row(i) - points.row(j)).norm();
        }
        let own = labels[i] - 1;
        let a = sums[own] / sizes[own] as f64;
        let b = (0..g).filter(|&h| h != own).map(|h| sums[h] / sizes[h] as f64).fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Silhouette separation score of a scene.
pub fn separation_metric(scene: &Scene) -> Result<f64, EvalError> {
    silhouette(&scene.points, &scene.labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_comp(delta: f64, dim: usize, w: f64) -> MixtureSpec {
        let mut m1 = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        m1[0] = -delta;
        m2[0] = delta;
        let eye: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        MixtureSpec { means: vec![m1, m2], covariances: vec![eye.clone(), eye], proportions: vec![w, 1.0 - w], n: 2000, seed: 11 }
    }

    #[test]
    fn all_weight_on_first() {
        let spec = two_comp(3.0, 2, 1.0);
        let d = simulate_mixture(&spec).unwrap();
        assert!(d.labels().iter().all(|&l| l == 1));
        assert_eq!(d.groups(), 1);
    }

    #[test]
    fn common_distribution_mean() {
        let spec = two_comp(0.0, 3, 0.5);
        let d = simulate_mixture(&spec).unwrap();
        let m = d.values().row_mean();
        let bound = 4.0 / (spec.n as f64).sqrt();
        assert!(m.iter().all(|x| x.abs() < bound), "{m}");
    }

    #[test]
    fn separated_means() {
        let delta = 4.0;
        let d = simulate_mixture(&two_comp(delta, 3, 0.5)).unwrap();
        let mut sums = [0.0, 0.0];
        let mut counts = [0.0, 0.0];
        for (i, &l) in d.labels().iter().enumerate() {
            sums[l - 1] += d.values()[(i, 0)];
            counts[l - 1] += 1.0;
        }
        let gap = sums[1] / counts[1] - sums[0] / counts[0];
        assert!((gap - 2.0 * delta).abs() < 0.05 * 2.0 * delta, "gap {gap}");
    }

    #[test]
    fn rejects_bad_spec() {
        let mut spec = two_comp(1.0, 2, 0.5);
        spec.covariances[1][0][0] = -1.0;
        assert!(matches!(simulate_mixture(&spec), Err(EvalError::NotPositiveDefinite(2))));
        let mut spec = two_comp(1.0, 2, 0.5);
        spec.proportions = vec![0.7, 0.7];
        assert!(matches!(spec.validate(), Err(EvalError::InvalidSpec(_))));
        assert!(MixtureSpec::from_json("{\"means\":[]}").is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = MixtureSpec::desk_scale(3.0, 500, 4);
        assert_eq!(MixtureSpec::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn deciles_of_one_to_hundred() {
        let values = DMatrix::from_fn(100, 2, |i, j| if j == 0 { (i + 1) as f64 } else { 7.0 });
        let labels = (0..100).map(|i| i % 2 + 1).collect();
        let d = Dataset::from_parts(values, labels).unwrap();
        let out = discretize_deciles(&d, &[0, 1]).unwrap();
        let mut counts = [0; 10];
        for i in 0..100 {
            counts[out.values()[(i, 0)] as usize - 1] += 1;
            assert_eq!(out.values()[(i, 1)], 1.0);
        }
        assert_eq!(counts, [10; 10]);
        assert_eq!(out.kinds()[0], FeatureKind::Discrete);
        assert!(matches!(discretize_deciles(&d, &[2]), Err(EvalError::NoSuchColumn(2))));
    }

    #[test]
    fn deciles_of_normal_sample() {
        let n = 10_000;
        let mut r = stream_at(3, 0, 0);
        let values = DMatrix::from_fn(n, 1, |_, _| StandardNormal.sample(&mut r));
        let labels = (0..n).map(|i| i % 2 + 1).collect();
        let d = Dataset::from_parts(values, labels).unwrap();
        let out = discretize_deciles(&d, &[0]).unwrap();
        let mut counts = [0usize; 10];
        for i in 0..n {
            counts[out.values()[(i, 0)] as usize - 1] += 1;
        }
        let bound = 3.0 * (n as f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 10.0).abs() <= bound, "{counts:?}");
        }
    }

    #[test]
    fn deciles_need_ten_records() {
        let d = Dataset::from_parts(DMatrix::from_fn(9, 1, |i, _| i as f64), (0..9).map(|i| i % 2 + 1).collect()).unwrap();
        assert!(matches!(discretize_deciles(&d, &[0]), Err(EvalError::TooFewRecords(9))));
    }

    #[test]
    fn overlap_shape() {
        let spec = MixtureSpec::spherical(3, 2, 2.0, 100, 1);
        let map = mc_overlap(&spec, 10_000).unwrap();
        for i in 0..3 {
            assert_eq!(map.matrix[i][i], 0.0);
            for j in 0..3 {
                assert_eq!(map.matrix[i][j], map.matrix[j][i]);
                assert!((0.0..=1.0).contains(&map.matrix[i][j]));
            }
        }
        assert!((0.0..=1.0).contains(&map.generalized_overlap));
        assert!(matches!(mc_overlap(&spec, 100), Err(EvalError::TooFewSamples(100))));
        assert!(map.to_csv().starts_with("group,1,2,3\n1,"));
    }

    #[test]
    fn silhouette_examples() {
        let pts = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.01, 0.0, 10.0, 0.0, 10.01, 0.0]);
        let s = silhouette(&pts, &[1, 1, 2, 2]).unwrap();
        assert!(s > 0.9);

        let doubled = DMatrix::from_fn(8, 2, |i, j| pts[(i % 4, j)]);
        let s2 = silhouette(&doubled, &[1, 1, 2, 2, 1, 1, 2, 2]).unwrap();
        assert!((s - s2).abs() < 1e-14);

        assert!(matches!(silhouette(&pts, &[1, 1, 1, 2]), Err(EvalError::DegenerateGroup(2))));
        assert!(matches!(silhouette(&pts, &[1, 1, 1, 1]), Err(EvalError::TooFewGroups)));
    }
}

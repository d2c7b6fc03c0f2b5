//! Independent oracles and random-input helpers shared by integration tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut impl Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn gaussian_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(r))
}

/// Random `p×q` matrix with orthonormal columns (Gram–Schmidt on Gaussian
/// columns).
pub fn random_orthonormal(r: &mut impl Rng, p: usize, q: usize) -> DMatrix<f64> {
    loop {
        let mut m = gaussian_matrix(r, p, q);
        let mut ok = true;
        for j in 0..q {
            for i in 0..j {
                let d = m.column(i).dot(&m.column(j));
                let ci = m.column(i).into_owned();
                m.column_mut(j).axpy(-d, &ci, 1.0);
            }
            let norm = m.column(j).norm();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            m.column_mut(j).scale_mut(1.0 / norm);
        }
        if ok {
            return m;
        }
    }
}

fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Upper tail `1 − Φ(t)` for `t > 2` by the Laplace continued fraction,
/// evaluated bottom-up.
fn upper_tail_cf(t: f64) -> f64 {
    let mut acc = t;
    for k in (1..=400).rev() {
        acc = t + k as f64 / acc;
    }
    density(t) / acc
}

/// `Φ(x) − 1/2` for `|x| ≤ 2` by the everywhere-convergent series
/// `φ(x) Σ x^{2n+1} / (1·3·5···(2n+1))`.
fn central_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0;
    while term.abs() > 1e-18 * sum.abs() {
        n += 1;
        term *= x2 / (2 * n + 1) as f64;
        sum += term;
    }
    density(x) * sum
}

/// Standard normal CDF computed without any library special function.
pub fn phi_oracle(x: f64) -> f64 {
    if x < -2.0 {
        upper_tail_cf(-x)
    } else if x > 2.0 {
        1.0 - upper_tail_cf(x)
    } else {
        0.5 + central_series(x)
    }
}

/// Inverse of [`phi_oracle`] by bisection, on the lower tail for accuracy.
pub fn quantile_oracle(u: f64) -> f64 {
    if u > 0.5 {
        return -quantile_oracle(1.0 - u);
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi_oracle(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Kolmogorov–Smirnov statistic of a sample against the standard normal.
pub fn ks_normal(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = phi_oracle(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Benjamini–Hochberg by exhaustive threshold search: the largest `k` with
/// at least `k` p-values ≤ `k α / m`, then every p-value at or below that
/// threshold.
pub fn bh_brute_force(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let mut best = None;
    for k in 1..=m {
        let t = k as f64 * alpha / m as f64;
        if p.iter().filter(|&&x| x <= t).count() >= k {
            best = Some(t);
        }
    }
    match best {
        Some(t) => p.iter().map(|&x| x <= t).collect(),
        None => vec![false; m],
    }
}

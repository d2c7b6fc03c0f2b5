//! Numerical kernels shared by every stage: symmetric eigendecomposition,
//! thin SVD, the standard-normal quantile and CDF, and the upper tail of
//! the F distribution.
//!
//! Eigen- and singular vectors are returned under a fixed sign convention:
//! the largest-magnitude entry of each vector is non-negative, ties going
//! to the lowest index. Everything downstream relies on this for
//! reproducible output.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("argument {0} is outside the valid range")]
    OutOfRange(f64),
    #[error("matrix shape {rows}x{cols} is not valid here")]
    BadShape { rows: usize, cols: usize },
}

/// Eigenvalues in descending order with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

/// Thin SVD `A = U diag(s) Vᵀ` with `U` p×q and `V` q×q.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn all_finite(a: &DMatrix<f64>) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Returns -1.0 when the column should be flipped to satisfy the sign
/// convention, 1.0 otherwise.
fn sign_flip(col: impl Iterator<Item = f64>) -> f64 {
    let mut best = 0.0_f64;
    let mut best_abs = -1.0_f64;
    for x in col {
        // strict comparison keeps the lowest index on ties
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Symmetric eigendecomposition.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<EigResult, NumericsError> {
    let m = a.nrows();
    if m == 0 || a.ncols() != m {
        return Err(NumericsError::BadShape { rows: a.nrows(), cols: a.ncols() });
    }
    if !all_finite(a) {
        return Err(NumericsError::NonFinite);
    }
    let scale = max_abs(a);
    let asym = max_abs(&(a - a.transpose()));
    if asym > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(NumericsError::NotSymmetric(asym));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));

    let eigenvalues = DVector::from_iterator(m, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let s = sign_flip(col.iter().copied());
        eigenvectors.set_column(dst, &(col * s));
    }
    Ok(EigResult { eigenvalues, eigenvectors })
}

/// Thin singular value decomposition for `p ≥ q`.
pub fn svd(a: &DMatrix<f64>) -> Result<SvdResult, NumericsError> {
    let (p, q) = a.shape();
    if q == 0 || p < q {
        return Err(NumericsError::BadShape { rows: p, cols: q });
    }
    if !all_finite(a) {
        return Err(NumericsError::NonFinite);
    }
    let dec = a.clone().svd(true, true);
    let u_raw = dec.u.expect("u requested");
    let vt_raw = dec.v_t.expect("v_t requested");

    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| {
        dec.singular_values[j].total_cmp(&dec.singular_values[i]).then(i.cmp(&j))
    });

    let mut u = DMatrix::zeros(p, q);
    let mut v = DMatrix::zeros(q, q);
    let mut s = DVector::zeros(q);
    for (dst, &src) in order.iter().enumerate() {
        let ucol = u_raw.column(src);
        let flip = sign_flip(ucol.iter().copied());
        u.set_column(dst, &(ucol * flip));
        v.set_column(dst, &(vt_raw.row(src).transpose() * flip));
        s[dst] = dec.singular_values[src].max(0.0);
    }
    Ok(SvdResult { u, singular_values: s, v })
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile (Wichura's AS 241, PPND16).
///
/// For `u > 0.5` the result is computed as `-norm_quantile(1 - u)`, so the
/// pair `u`, `1 - u` negates exactly whenever `1 - u` is representable.
pub fn norm_quantile(u: f64) -> Result<f64, NumericsError> {
    if !(u > 0.0 && u < 1.0) {
        return Err(NumericsError::OutOfRange(u));
    }
    if u > 0.5 {
        return Ok(-lower_quantile(1.0 - u));
    }
    Ok(lower_quantile(u))
}

#[allow(clippy::excessive_precision)] // coefficients kept as published
fn lower_quantile(u: f64) -> f64 {
    let q = u - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((r * 2509.0809287301226727 + 33430.575583588128105) * r
            + 67265.770927008700853)
            * r
            + 45921.953931549871457)
            * r
            + 13731.693765509461125)
            * r
            + 1971.5909503065514427)
            * r
            + 133.14166789178437745)
            * r
            + 3.387132872796366608;
        let den = ((((((r * 5226.495278852545925 + 28729.085735721942674) * r
            + 39307.89580009271061)
            * r
            + 21213.794301586595867)
            * r
            + 5394.1960214247511077)
            * r
            + 687.1870074920579083)
            * r
            + 42.313330701600911252)
            * r
            + 1.0;
        return q * num / den;
    }
    let mut r = (-u.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r
            + 0.24178072517745061177)
            * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734;
        let den = ((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r
            + 0.0151986665636164571966)
            * r
            + 0.14810397642748007459)
            * r
            + 0.68976733498510000455)
            * r
            + 1.6763848301838038494)
            * r
            + 2.05319162663775882187)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r
            + 0.0012426609473880784386)
            * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772;
        let den = ((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r
            + 1.8463183175100546818e-5)
            * r
            + 7.868691311456132591e-4)
            * r
            + 0.0148753612908506148525)
            * r
            + 0.13692988092273580531)
            * r
            + 0.59983220655588793769)
            * r
            + 1.0;
        num / den
    };
    // q < 0 here
    -val
}

/// `P(F > f_stat)` for `F ~ F(d1, d2)`, through the regularized incomplete
/// beta function.
pub fn f_tail(f_stat: f64, d1: u64, d2: u64) -> Result<f64, NumericsError> {
    if f_stat.is_nan() {
        return Err(NumericsError::NonFinite);
    }
    if f_stat < 0.0 {
        return Err(NumericsError::OutOfRange(f_stat));
    }
    if d1 == 0 || d2 == 0 {
        return Err(NumericsError::OutOfRange(0.0));
    }
    if f_stat == 0.0 {
        return Ok(1.0);
    }
    if f_stat.is_infinite() {
        return Ok(0.0);
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    let denom = d2 + d1 * f_stat;
    // I_x(d2/2, d1/2) with x = d2 / (d2 + d1 F); use the complementary form
    // when x is close to 1 so the small tail keeps its relative precision.
    let x = d2 / denom;
    let one_minus_x = d1 * f_stat / denom;
    let p = if x < 0.5 {
        statrs::function::beta::beta_reg(d2 / 2.0, d1 / 2.0, x)
    } else {
        1.0 - statrs::function::beta::beta_reg(d1 / 2.0, d2 / 2.0, one_minus_x)
    };
    Ok(p.clamp(0.0, 1.0))
}

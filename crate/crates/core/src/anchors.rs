//! Anchor points: exact Platonic vertex sets, the Fibonacci sphere grid and
//! equi-spaced circle anchors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnchorError {
    #[error("{scheme} anchors need at least {min} points, got {got}")]
    TooFewAnchors { scheme: &'static str, min: usize, got: usize },
    #[error("invalid permutation of {0} anchors")]
    BadPermutation(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorScheme {
    Platonic,
    Fibonacci,
    Circle,
}

/// `p` unit vectors, one per row, in dimension 2 or 3.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub points: DMatrix<f64>,
    pub scheme: AnchorScheme,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Reorders rows so that row `j` of the result is row `perm[j]` of self.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, AnchorError> {
        let p = self.len();
        let mut seen = vec![false; p];
        if perm.len() != p || perm.iter().any(|&i| i >= p || std::mem::replace(&mut seen[i], true)) {
            return Err(AnchorError::BadPermutation(p));
        }
        let points = DMatrix::from_fn(p, self.dim(), |r, c| self.points[(perm[r], c)]);
        Ok(Self { points, scheme: self.scheme })
    }
}

/// Golden ratio, computed rather than written as a decimal.
pub fn golden_ratio() -> f64 {
    (1.0 + 5.0_f64.sqrt()) / 2.0
}

fn normalized(rows: Vec<[f64; 3]>) -> DMatrix<f64> {
    let p = rows.len();
    DMatrix::from_fn(p, 3, |r, c| {
        let [x, y, z] = rows[r];
        let norm = (x * x + y * y + z * z).sqrt();
        rows[r][c] / norm
    })
}

const SIGNS: [f64; 2] = [1.0, -1.0];

fn platonic(p: usize) -> Option<Vec<[f64; 3]>> {
    let phi = golden_ratio();
    let inv = 1.0 / phi;
    let mut rows = Vec::with_capacity(p);
    match p {
        4 => {
            rows.extend([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]);
        }
        6 => {
            for axis in 0..3 {
                for s in SIGNS {
                    let mut v = [0.0; 3];
                    v[axis] = s;
                    rows.push(v);
                }
            }
        }
        8 => {
            for a in SIGNS {
                for b in SIGNS {
                    for c in SIGNS {
                        rows.push([a, b, c]);
                    }
                }
            }
        }
        12 => {
            // cyclic permutations of (0, ±1, ±φ)
            for a in SIGNS {
                for b in SIGNS {
                    rows.push([0.0, a, b * phi]);
                }
            }
            for a in SIGNS {
                for b in SIGNS {
                    rows.push([a, b * phi, 0.0]);
                }
            }
            for a in SIGNS {
                for b in SIGNS {
                    rows.push([a * phi, 0.0, b]);
                }
            }
        }
        20 => {
            for a in SIGNS {
                for b in SIGNS {
                    for c in SIGNS {
                        rows.push([a, b, c]);
                    }
                }
            }
            for a in SIGNS {
                for b in SIGNS {
                    rows.push([0.0, a * inv, b * phi]);
                }
            }
            for a in SIGNS {
                for b in SIGNS {
                    rows.push([a * inv, b * phi, 0.0]);
                }
            }
            for a in SIGNS {
                for b in SIGNS {
                    rows.push([a * phi, 0.0, b * inv]);
                }
            }
        }
        _ => return None,
    }
    Some(rows)
}

/// Fibonacci grid row `j` (1-based) of `p`.
fn fibonacci_row(j: usize, p: usize) -> [f64; 3] {
    let z = (2 * j - 1) as f64 / p as f64 - 1.0;
    let theta = 2.0 * std::f64::consts::PI * j as f64 / golden_ratio();
    let radial = (1.0 - z * z).sqrt();
    [theta.cos() * radial, theta.sin() * radial, z]
}

/// Anchors on the unit sphere: a Platonic vertex set for p in
/// {4, 6, 8, 12, 20}, the Fibonacci grid otherwise.
pub fn sphere_anchors(p: usize) -> Result<AnchorSet, AnchorError> {
    if p < 4 {
        return Err(AnchorError::TooFewAnchors { scheme: "sphere", min: 4, got: p });
    }
    if let Some(rows) = platonic(p) {
        return Ok(AnchorSet { points: normalized(rows), scheme: AnchorScheme::Platonic });
    }
    let rows = (1..=p).map(|j| fibonacci_row(j, p)).collect();
    Ok(AnchorSet { points: normalized(rows), scheme: AnchorScheme::Fibonacci })
}

/// Equi-spaced anchors on the unit circle, `u_j = (cos 2πj/p, sin 2πj/p)`.
pub fn circle_anchors(p: usize) -> Result<AnchorSet, AnchorError> {
    if p < 3 {
        return Err(AnchorError::TooFewAnchors { scheme: "circle", min: 3, got: p });
    }
    let points = DMatrix::from_fn(p, 2, |r, c| {
        let angle = 2.0 * std::f64::consts::PI * (r + 1) as f64 / p as f64;
        if c == 0 {
            angle.cos()
        } else {
            angle.sin()
        }
    });
    Ok(AnchorSet { points, scheme: AnchorScheme::Circle })
}

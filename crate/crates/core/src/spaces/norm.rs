use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vector norm family.
#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    /// ℓp with `p` in `[1, ∞]`.
    P(f64),
    /// Σ w_i |x_i| with positive weights.
    WeightedL1(Vec<f64>),
}

/// A vector norm with a positive scale multiplier.
///
/// Text form (used in config files and on the command line):
/// `l1`, `l2`, `linf`, `l3.5`, `wl1[1,2,2]`, optionally followed by
/// `*<scale>`, e.g. `l1*0.5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NormSpec {
    kind: NormKind,
    scale: f64,
}

impl NormSpec {
    pub fn new(kind: NormKind, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("norm scale must be positive, got {scale}")));
        }
        match &kind {
            NormKind::P(p) => {
                if !(*p >= 1.0) {
                    return Err(Error::invalid(format!("p must lie in [1, inf], got {p}")));
                }
            }
            NormKind::WeightedL1(w) => {
                if w.is_empty() || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(Error::invalid("weights must be positive and finite"));
                }
            }
        }
        Ok(Self { kind, scale })
    }

    pub fn lp(p: f64) -> Result<Self> {
        Self::new(NormKind::P(p), 1.0)
    }

    pub fn l1() -> Self {
        Self { kind: NormKind::P(1.0), scale: 1.0 }
    }

    pub fn l2() -> Self {
        Self { kind: NormKind::P(2.0), scale: 1.0 }
    }

    pub fn linf() -> Self {
        Self { kind: NormKind::P(f64::INFINITY), scale: 1.0 }
    }

    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        Self::new(NormKind::WeightedL1(weights), 1.0)
    }

    /// Same norm multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.kind.clone(), self.scale * factor)
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Plain Euclidean norm (scale 1).
    pub fn is_l2(&self) -> bool {
        matches!(self.kind, NormKind::P(p) if p == 2.0) && self.scale == 1.0
    }

    pub fn is_linf(&self) -> bool {
        matches!(self.kind, NormKind::P(p) if p.is_infinite())
    }

    /// Errors when the norm cannot be applied to vectors of length `n`.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        match &self.kind {
            NormKind::WeightedL1(w) if w.len() != n => Err(Error::invalid(format!(
                "weighted norm has {} weights, vector has dimension {n}",
                w.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Per-coordinate weights of a weighted ℓ1 norm including the scale.
    pub fn l1_weights(&self, n: usize) -> Option<Vec<f64>> {
        match &self.kind {
            NormKind::P(p) if *p == 1.0 => Some(vec![self.scale; n]),
            NormKind::WeightedL1(w) => Some(w.iter().map(|x| x * self.scale).collect()),
            _ => None,
        }
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.norm_slice(x.as_slice())
    }

    pub fn norm_slice(&self, x: &[f64]) -> f64 {
        let raw = match &self.kind {
            NormKind::P(p) => lp_norm(x, *p),
            NormKind::WeightedL1(w) => {
                debug_assert_eq!(w.len(), x.len());
                x.iter().zip(w).map(|(a, b)| a.abs() * b).sum()
            }
        };
        raw * self.scale
    }
}

fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        x.iter().map(|a| a.abs()).sum()
    } else if p == 2.0 {
        x.iter().map(|a| a * a).sum::<f64>().sqrt()
    } else if p.is_infinite() {
        x.iter().fold(0.0, |m, a| m.max(a.abs()))
    } else {
        let m = x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * x.iter().map(|a| (a.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NormKind::P(p) if p.is_infinite() => write!(f, "linf")?,
            NormKind::P(p) => write!(f, "l{p}")?,
            NormKind::WeightedL1(w) => {
                let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                write!(f, "wl1[{}]", parts.join(","))?
            }
        }
        if self.scale != 1.0 {
            write!(f, "*{}", self.scale)?;
        }
        Ok(())
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unrecognized norm '{s}'"));
        let (body, scale) = match s.rsplit_once('*') {
            Some((b, sc)) => (b, sc.trim().parse::<f64>().map_err(|_| bad())?),
            None => (s, 1.0),
        };
        let kind = if let Some(rest) = body.strip_prefix("wl1") {
            let inner = rest
                .trim()
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(bad)?;
            let w = inner
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            NormKind::WeightedL1(w)
        } else if let Some(rest) = body.strip_prefix('l') {
            match rest {
                "inf" => NormKind::P(f64::INFINITY),
                _ => NormKind::P(rest.parse::<f64>().map_err(|_| bad())?),
            }
        } else {
            return Err(bad());
        };
        Self::new(kind, scale)
    }
}

impl TryFrom<String> for NormSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NormSpec> for String {
    fn from(n: NormSpec) -> String {
        n.to_string()
    }
}

/// Matrix norms used for operator bounds and algebra norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixNorm {
    /// Largest singular value (ℓ2 operator norm).
    Spectral,
    /// Maximum absolute row sum (ℓ∞ operator norm).
    MaxRowSum,
    /// Maximum absolute column sum (ℓ1 operator norm).
    MaxColSum,
    Frobenius,
}

impl MatrixNorm {
    pub fn of(&self, m: &DMatrix<f64>) -> f64 {
        if m.is_empty() {
            return 0.0;
        }
        match self {
            MatrixNorm::Spectral => m
                .singular_values()
                .iter()
                .fold(0.0, |a: f64, b| a.max(*b)),
            MatrixNorm::MaxRowSum => (0..m.nrows())
                .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            MatrixNorm::MaxColSum => (0..m.ncols())
                .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            MatrixNorm::Frobenius => m.norm(),
        }
    }
}

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{NormKind, NormSpec, SubspaceUnion};

/// Serializable description of a triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TripleSpec {
    /// `s`-sparse vectors in ℝⁿ with the ℓ1 norm.
    Classical { n: usize, s: usize },
    /// `s`-sparse vectors with a weighted ℓ1 norm.
    WeightedL1 { s: usize, weights: Vec<f64> },
}

impl TripleSpec {
    pub fn build(&self) -> Result<SparseTriple> {
        match self {
            Self::Classical { n, s } => SparseTriple::classical(*n, *s),
            Self::WeightedL1 { s, weights } => SparseTriple::weighted_l1(weights.clone(), *s),
        }
    }
}

impl fmt::Display for TripleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Classical { n, s } => write!(f, "classical:n={n},s={s}"),
            Self::WeightedL1 { s, weights } => {
                let w: Vec<String> = weights.iter().map(|v| format!("{v:?}")).collect();
                write!(f, "weighted:s={s},w=[{}]", w.join(","))
            }
        }
    }
}

impl FromStr for TripleSpec {
    type Err = Error;

    /// `classical:n=12,s=2` or `weighted:s=2,w=[1,2,3]`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad triple spec `{text}`"));
        let (kind, rest) = text.trim().split_once(':').ok_or_else(bad)?;
        let mut n = None;
        let mut s = None;
        let mut w = None;
        let mut rest = rest.trim();
        while !rest.is_empty() {
            let (key, after) = rest.split_once('=').ok_or_else(bad)?;
            let (value, tail) = if after.starts_with('[') {
                let end = after.find(']').ok_or_else(bad)?;
                (&after[..=end], &after[end + 1..])
            } else {
                match after.find(',') {
                    Some(i) => (&after[..i], &after[i..]),
                    None => (after, ""),
                }
            };
            match key.trim() {
                "n" => n = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
                "s" => s = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
                "w" => {
                    let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
                    let ws = inner
                        .split(',')
                        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                        .collect::<Result<Vec<_>>>()?;
                    w = Some(ws);
                }
                other => return Err(Error::Parse(format!("unknown triple field `{other}` in `{text}`"))),
            }
            rest = tail.trim_start_matches(',').trim();
        }
        let s = s.ok_or_else(|| Error::Parse(format!("triple spec `{text}` needs s")))?;
        match kind.trim() {
            "classical" => Ok(Self::Classical { n: n.ok_or_else(|| Error::Parse(format!("triple spec `{text}` needs n")))?, s }),
            "weighted" => {
                let weights = w.ok_or_else(|| Error::Parse(format!("triple spec `{text}` needs w")))?;
                if n.is_some_and(|n| n != weights.len()) {
                    return Err(Error::Parse(format!("n disagrees with the weight count in `{text}`")));
                }
                Ok(Self::WeightedL1 { s, weights })
            }
            other => Err(Error::Parse(format!("unknown triple kind `{other}`"))),
        }
    }
}

impl TryFrom<String> for TripleSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TripleSpec> for String {
    fn from(t: TripleSpec) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleKind {
    Classical,
    WeightedL1,
    Custom,
}

/// A union of subspaces `A`, a norm `M` on ℝⁿ, and the Euclidean norm as `H`.
///
/// Constructors rescale `M` so that `‖x‖_H ≤ ‖x‖_M` is sharp.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTriple {
    union: SubspaceUnion,
    m_norm: NormSpec,
    kind: TripleKind,
}

impl SparseTriple {
    pub fn classical(n: usize, s: usize) -> Result<Self> {
        Ok(Self { union: SubspaceUnion::sparse(n, s)?, m_norm: NormSpec::l1(), kind: TripleKind::Classical })
    }

    /// Weighted ℓ1; weights are divided by their minimum.
    pub fn weighted_l1(weights: Vec<f64>, s: usize) -> Result<Self> {
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        let n = weights.len();
        let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
        let m_norm = NormSpec::weighted_l1(weights.iter().map(|w| w / min).collect())?;
        Ok(Self { union: SubspaceUnion::sparse(n, s)?, m_norm, kind: TripleKind::WeightedL1 })
    }

    /// Any union with any norm, rescaled by the exact imbedding constant.
    pub fn custom(union: SubspaceUnion, m_norm: NormSpec) -> Result<Self> {
        let n = union.ambient_dim();
        m_norm.check_dim(n)?;
        let factor = imbedding_constant(&m_norm, n);
        Ok(Self { m_norm: m_norm.scaled(factor)?, union, kind: TripleKind::Custom })
    }

    /// As [`custom`](Self::custom) without rescaling; meant for negative controls.
    pub fn custom_unscaled(union: SubspaceUnion, m_norm: NormSpec) -> Result<Self> {
        m_norm.check_dim(union.ambient_dim())?;
        Ok(Self { union, m_norm, kind: TripleKind::Custom })
    }

    pub fn from_spec(spec: &str) -> Result<Self> {
        spec.parse::<TripleSpec>()?.build()
    }

    pub fn union(&self) -> &SubspaceUnion {
        &self.union
    }

    pub fn m_norm(&self) -> &NormSpec {
        &self.m_norm
    }

    pub fn kind(&self) -> &TripleKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.union.ambient_dim()
    }

    pub fn m(&self, x: &DVector<f64>) -> f64 {
        self.m_norm.norm(x)
    }

    /// Weights of an ℓ1-type M norm, scale included.
    pub fn l1_weights(&self) -> Option<Vec<f64>> {
        self.m_norm.l1_weights(self.dim())
    }

    /// Whether a best approximator is available in closed form.
    pub fn has_minimizer(&self) -> bool {
        self.union.is_coordinate()
    }
}

/// `sup ‖x‖₂/‖x‖` for the given norm on ℝⁿ.
fn imbedding_constant(norm: &NormSpec, n: usize) -> f64 {
    let raw = match norm.kind() {
        NormKind::P(p) if *p <= 2.0 => 1.0,
        NormKind::P(p) if p.is_infinite() => (n as f64).sqrt(),
        NormKind::P(p) => (n as f64).powf(0.5 - 1.0 / p),
        NormKind::WeightedL1(w) => 1.0 / w.iter().copied().fold(f64::INFINITY, f64::min),
    };
    raw / norm.scale()
}

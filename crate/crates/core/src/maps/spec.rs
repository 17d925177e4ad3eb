use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{companding_map, e_map, perturbed_linear, EMap, LinearMap, ScalarFn, Smooth};
use super::DifferentiableMap;
use crate::error::{Error, Result};
use crate::rng::{gaussian_matrix, orthogonal_matrix, stream};
use crate::spaces::{read_matrix, DenseOperator};

/// Entry distribution of a seeded random operator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorDist {
    /// i.i.d. N(0, 1), default scale `1/√rows`.
    #[default]
    Gaussian,
    /// First `cols` columns of a Haar orthogonal `rows×rows` matrix.
    Orthogonal,
    /// i.i.d. U(−1, 1).
    Uniform,
}

/// Where a matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum OperatorSource {
    File {
        path: PathBuf,
    },
    Random {
        rows: usize,
        cols: usize,
        #[serde(default)]
        dist: OperatorDist,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Inline {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Identity {
        n: usize,
    },
}

impl OperatorSource {
    /// Gaussian matrix scaled by `1/√rows` with a fixed seed.
    pub fn random(rows: usize, cols: usize, seed: u64) -> Self {
        OperatorSource::Random {
            rows,
            cols,
            dist: OperatorDist::Gaussian,
            scale: None,
            seed: Some(seed),
        }
    }

    /// Materializes the matrix. `seed` is used when the source has none;
    /// relative paths resolve against `base_dir`.
    pub fn matrix(&self, seed: u64, base_dir: &Path) -> Result<DMatrix<f64>> {
        match self {
            OperatorSource::File { path } => {
                let p = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                if !p.exists() {
                    return Err(Error::invalid(format!("operator file {} does not exist", p.display())));
                }
                read_matrix(p)
            }
            OperatorSource::Random { rows, cols, dist, scale, seed: own } => {
                if *rows == 0 || *cols == 0 {
                    return Err(Error::invalid("random operator needs positive shape"));
                }
                let seed = own.unwrap_or(seed);
                let m = match dist {
                    OperatorDist::Gaussian => {
                        gaussian_matrix(seed, *rows, *cols) * scale.unwrap_or(1.0 / (*rows as f64).sqrt())
                    }
                    OperatorDist::Orthogonal => {
                        if cols > rows {
                            return Err(Error::invalid("orthogonal operator needs rows >= cols"));
                        }
                        orthogonal_matrix(seed, *rows).columns(0, *cols).into_owned() * scale.unwrap_or(1.0)
                    }
                    OperatorDist::Uniform => {
                        let mut rng = stream(seed, 0x756e);
                        DMatrix::from_fn(*rows, *cols, |_, _| rng.random_range(-1.0..1.0)) * scale.unwrap_or(1.0)
                    }
                };
                Ok(m)
            }
            OperatorSource::Inline { rows, cols, data } => {
                if data.len() != rows * cols {
                    return Err(Error::invalid(format!(
                        "inline operator declares {rows}x{cols} but has {} entries",
                        data.len()
                    )));
                }
                Ok(DMatrix::from_row_slice(*rows, *cols, data))
            }
            OperatorSource::Identity { n } => Ok(DMatrix::identity(*n, *n)),
        }
    }

    pub fn operator(&self, seed: u64, base_dir: &Path) -> Result<DenseOperator> {
        DenseOperator::new(self.matrix(seed, base_dir)?)
    }

    /// Files this source reads.
    pub fn files(&self) -> Vec<&Path> {
        match self {
            OperatorSource::File { path } => vec![path.as_path()],
            _ => Vec::new(),
        }
    }

    pub fn needs_seed(&self) -> bool {
        matches!(self, OperatorSource::Random { seed: None, .. })
    }
}

mod exponent {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(p),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(f64::INFINITY),
            Raw::Text(t) => t.parse().map_err(|_| serde::de::Error::custom(format!("bad exponent '{t}'"))),
        }
    }
}

/// Map family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapKind {
    EMap {
        #[serde(with = "exponent")]
        p: f64,
        #[serde(default)]
        eps: f64,
    },
    PerturbedLinear {
        operator: OperatorSource,
        eta: f64,
        #[serde(default)]
        g: Smooth,
    },
    Companding {
        phi: OperatorSource,
        psi: OperatorSource,
        f: ScalarFn,
    },
    Linear {
        operator: OperatorSource,
    },
}

/// Serializable description of a map, reconstructed deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(flatten)]
    pub kind: MapKind,
    /// Seed for random operators that do not carry their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Overrides the map's natural reference operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<OperatorSource>,
}

/// A constructed map with its reference operator.
#[derive(Clone)]
pub struct BuiltMap {
    pub map: Arc<dyn DifferentiableMap>,
    pub operator: Option<DenseOperator>,
}

impl MapSpec {
    pub fn new(kind: MapKind) -> Self {
        Self { kind, seed: None, reference: None }
    }

    /// Operator sources referenced by the spec.
    pub fn sources(&self) -> Vec<&OperatorSource> {
        let mut v = match &self.kind {
            MapKind::EMap { .. } => vec![],
            MapKind::PerturbedLinear { operator, .. } | MapKind::Linear { operator } => vec![operator],
            MapKind::Companding { phi, psi, .. } => vec![phi, psi],
        };
        v.extend(self.reference.iter());
        v
    }

    /// Builds the map. `seed` is the fallback for unseeded random sources
    /// (after the spec's own `seed`); each role gets its own stream.
    pub fn build(&self, seed: u64, base_dir: &Path) -> Result<BuiltMap> {
        let seed = self.seed.unwrap_or(seed);
        let role = |k: u64| seed.wrapping_mul(0x100).wrapping_add(k);
        let (map, natural): (Arc<dyn DifferentiableMap>, Option<DenseOperator>) = match &self.kind {
            MapKind::EMap { p, eps } => (Arc::new(e_map(*p, *eps)?), Some(EMap::t1())),
            MapKind::PerturbedLinear { operator, eta, g } => {
                let t = operator.operator(role(1), base_dir)?;
                (Arc::new(perturbed_linear(t.clone(), *eta, *g)?), Some(t))
            }
            MapKind::Linear { operator } => {
                let t = operator.operator(role(1), base_dir)?;
                (Arc::new(LinearMap::new(t.clone())), Some(t))
            }
            MapKind::Companding { phi, psi, f } => {
                let parts = companding_map(phi.matrix(role(2), base_dir)?, psi.matrix(role(3), base_dir)?, *f)?;
                (Arc::new(parts.map), Some(parts.surrogate))
            }
        };
        let operator = match &self.reference {
            Some(src) => Some(src.operator(role(4), base_dir)?),
            None => natural,
        };
        if let Some(t) = &operator {
            if t.cols() != map.in_dim() || t.rows() != map.out_dim() {
                return Err(Error::invalid(format!(
                    "reference operator is {}x{}, map is {} -> {}",
                    t.rows(),
                    t.cols(),
                    map.in_dim(),
                    map.out_dim()
                )));
            }
        }
        Ok(BuiltMap { map, operator })
    }
}

//! Small value types shared by every report the crate emits.

use serde::{Deserialize, Serialize};

/// Where a reported number came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Computed exactly (closed form or exhaustive enumeration).
    Exact,
    /// Maximum over finitely many samples of a supremum; a lower bound of the true value.
    SampledLowerBound,
    /// Minimum over finitely many samples of an infimum; an upper bound of the true value.
    SampledUpperBound,
    /// Finite-sample estimate without a one-sided guarantee.
    Sampled,
    /// Regression or empirical fit.
    Fitted,
    /// Evaluation of a closed-form expression from other quantities.
    Formula,
}

/// A number tagged with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub provenance: Provenance,
}

impl Quantity {
    pub fn new(value: f64, provenance: Provenance) -> Self {
        Self { value, provenance }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, Provenance::Exact)
    }

    pub fn formula(value: f64) -> Self {
        Self::new(value, Provenance::Formula)
    }
}

/// Outcome of checking one sufficient condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub condition: String,
    /// NaN (serialized as `null`) when the value could not be computed.
    #[serde(deserialize_with = "null_as_nan")]
    pub value: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

// JSON has no NaN; serde_json writes it as null
fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Verdict {
    /// `value < threshold`.
    pub fn below(condition: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            condition: condition.into(),
            value,
            threshold,
            pass: value < threshold,
            note: None,
        }
    }

    /// `value > threshold`.
    pub fn above(condition: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            condition: condition.into(),
            value,
            threshold,
            pass: value > threshold,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

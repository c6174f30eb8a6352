use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::power::PowerSeries;
use super::scalar::{Scalar, ScalarMode};
use crate::error::{Error, Result};

pub const SERIES_SCHEMA: &str = "scale-iter/series/v1";

/// Serialized form of a series: exact coefficients as `"p/q"` strings
/// (pairs of them for complex), float coefficients as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesDocument {
    pub schema: String,
    pub mode: ScalarMode,
    pub truncation: usize,
    pub coefficients: Vec<Value>,
}

impl<S: Scalar> PowerSeries<S> {
    pub fn to_document(&self) -> SeriesDocument {
        SeriesDocument {
            schema: SERIES_SCHEMA.to_string(),
            mode: S::MODE,
            truncation: self.truncation(),
            coefficients: self.coeffs().iter().map(Scalar::to_json).collect(),
        }
    }

    pub fn from_document(doc: &SeriesDocument) -> Result<Self> {
        if doc.schema != SERIES_SCHEMA {
            return Err(Error::Parse(format!("unknown series schema {:?}", doc.schema)));
        }
        if doc.mode != S::MODE {
            return Err(Error::Parse(format!(
                "series mode {:?} does not match the expected {:?}",
                doc.mode,
                S::MODE
            )));
        }
        if doc.coefficients.len() > doc.truncation + 1 {
            return Err(Error::Parse(format!(
                "{} coefficients exceed truncation {}",
                doc.coefficients.len(),
                doc.truncation
            )));
        }
        let coeffs = doc
            .coefficients
            .iter()
            .map(S::from_json)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(doc.truncation, coeffs))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("series document serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: SeriesDocument = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_document(&doc)
    }
}

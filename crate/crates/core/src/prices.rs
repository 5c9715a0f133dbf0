use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::industry::NUMERAIRE;

/// Raw netput prices plus the numeraire (materials and services) price.
///
/// The model only ever sees the normalised view `p_i = P_i / P_0`; the
/// numeraire's own normalised price is identically one and is not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceVector {
    raw: Vec<f64>,
    numeraire: f64,
}

impl PriceVector {
    pub fn new(raw: Vec<f64>, numeraire: f64) -> Result<Self> {
        for (i, &v) in raw.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositivePrice {
                    name: format!("netput {i}"),
                    value: v,
                });
            }
        }
        if !(numeraire > 0.0 && numeraire.is_finite()) {
            return Err(Error::NonPositivePrice {
                name: NUMERAIRE.to_string(),
                value: numeraire,
            });
        }
        Ok(PriceVector { raw, numeraire })
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn numeraire(&self) -> f64 {
        self.numeraire
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.raw.iter().map(|p| p / self.numeraire).collect()
    }

    /// Every raw price and the numeraire multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        PriceVector::new(self.raw.iter().map(|p| p * lambda).collect(), self.numeraire * lambda)
    }

    pub fn with_raw(&self, index: usize, value: f64) -> Result<Self> {
        let mut raw = self.raw.clone();
        raw[index] = value;
        PriceVector::new(raw, self.numeraire)
    }

    pub fn with_numeraire(&self, value: f64) -> Result<Self> {
        PriceVector::new(self.raw.clone(), value)
    }
}

use serde::{Deserialize, Serialize};

use crate::dist::norm_quantile;
use crate::error::{Error, Result};
use crate::family::{adjust_alpha, Multiplicity};

/// Operating point for every two-sided test and inversion in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Type-I level before any family adjustment.
    pub alpha: f64,
    /// Target power `1 - β`.
    pub power: f64,
    pub multiplicity: Multiplicity,
    /// Number of tests in the pre-declared family.
    pub family_size: usize,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            power: 0.8,
            multiplicity: Multiplicity::None,
            family_size: 1,
        }
    }
}

impl TestConfig {
    pub fn new(alpha: f64, power: f64) -> Result<Self> {
        let config = Self {
            alpha,
            power,
            ..Self::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_family(mut self, multiplicity: Multiplicity, family_size: usize) -> Result<Self> {
        self.multiplicity = multiplicity;
        self.family_size = family_size;
        self.validate()?;
        Ok(self)
    }

    /// The same operating point with multiplicity switched off.
    pub fn unadjusted(&self) -> Self {
        Self {
            multiplicity: Multiplicity::None,
            family_size: 1,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if !(self.power > 0.0 && self.power < 1.0) {
            return Err(Error::invalid("power", format!("{} not in (0, 1)", self.power)));
        }
        if self.family_size == 0 {
            return Err(Error::invalid("family_size", "must be at least 1"));
        }
        Ok(())
    }

    /// Per-test level `α'`. Fails for the stepwise procedures.
    pub fn level(&self) -> Result<f64> {
        match self.multiplicity {
            Multiplicity::None => Ok(self.alpha),
            m => adjust_alpha(self.alpha, self.family_size, m),
        }
    }

    /// `z_{1-α'/2}`.
    pub fn z_alpha(&self) -> Result<f64> {
        Ok(norm_quantile(1.0 - self.level()? / 2.0))
    }

    /// `z_{1-β}`.
    pub fn z_power(&self) -> f64 {
        norm_quantile(self.power)
    }

    /// `z_{1-α'/2} + z_{1-β}`.
    pub fn z_sum(&self) -> Result<f64> {
        Ok(self.z_alpha()? + self.z_power())
    }
}

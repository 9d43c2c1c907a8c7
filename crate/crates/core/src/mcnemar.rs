//! McNemar-family tests on the discordant counts of a binary pair, and the
//! discordance form of the required paired count.

use serde::{Deserialize, Serialize};

use crate::config::TestConfig;
use crate::dist::{binom_half_pmf, binom_half_sf, chi2_1_sf};
use crate::error::{Error, Result};
use crate::paired::RequiredN;

/// Discordant counts of a binary pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscordantCounts {
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B correct.
    pub c: u64,
    pub n: u64,
}

impl DiscordantCounts {
    pub fn new(b: u64, c: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if b + c > n {
            return Err(Error::invalid(
                "n",
                format!("b + c = {} exceeds n = {n}", b + c),
            ));
        }
        Ok(Self { b, c, n })
    }

    pub fn discordant(&self) -> u64 {
        self.b + self.c
    }
}

/// All four p-values for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarPValues {
    pub chi2: f64,
    pub exact: f64,
    pub midp: f64,
    pub cc: f64,
}

fn check(b: u64, c: u64) -> Result<()> {
    if b + c == 0 {
        Err(Error::DegenerateCounts)
    } else {
        Ok(())
    }
}

/// Asymptotic χ²₁ McNemar test.
pub fn mcnemar_chi2(b: u64, c: u64) -> Result<f64> {
    check(b, c)?;
    let diff = b.abs_diff(c) as f64;
    Ok(chi2_1_sf(diff * diff / (b + c) as f64))
}

/// Exact conditional test: twice the larger binomial tail, capped at one.
pub fn mcnemar_exact(b: u64, c: u64) -> Result<f64> {
    check(b, c)?;
    Ok((2.0 * binom_half_sf(b + c, b.max(c))).min(1.0))
}

/// Exact test with half weight on the observed cell: the capped exact
/// p-value less `P(X = max(b, c))`. Below the cap this is
/// `2·[P(X > max) + ½·P(X = max)]`; at `b = c` it stays strictly below one.
pub fn mcnemar_midp(b: u64, c: u64) -> Result<f64> {
    let exact = mcnemar_exact(b, c)?;
    Ok((exact - binom_half_pmf(b + c, b.max(c))).max(0.0))
}

/// χ²₁ test with Edwards' continuity correction.
pub fn mcnemar_cc(b: u64, c: u64) -> Result<f64> {
    check(b, c)?;
    let diff = b.abs_diff(c).saturating_sub(1) as f64;
    Ok(chi2_1_sf(diff * diff / (b + c) as f64))
}

pub fn mcnemar_all(b: u64, c: u64) -> Result<McNemarPValues> {
    Ok(McNemarPValues {
        chi2: mcnemar_chi2(b, c)?,
        exact: mcnemar_exact(b, c)?,
        midp: mcnemar_midp(b, c)?,
        cc: mcnemar_cc(b, c)?,
    })
}

/// Connor's discordance-form required count at the observed
/// `ψ = (b+c)/n` and `δ = (b-c)/n`.
pub fn required_n_mcnemar(b: u64, c: u64, n: u64, config: &TestConfig) -> Result<RequiredN> {
    check(b, c)?;
    DiscordantCounts::new(b, c, n)?;
    if b == c {
        return Ok(RequiredN::UNBOUNDED);
    }
    let nf = n as f64;
    let psi = (b + c) as f64 / nf;
    let delta = (b as f64 - c as f64) / nf;
    let za = config.z_alpha()?;
    let zb = config.z_power();
    let root = za * psi.sqrt() + zb * (psi - delta * delta).max(0.0).sqrt();
    Ok(RequiredN::from_exact(root * root / (delta * delta)))
}

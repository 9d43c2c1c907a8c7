//! Family-level multiplicity control. Bonferroni and Šidák adjust the level
//! of every test at once, which translates into a required-N inflation;
//! Holm and Benjamini-Hochberg only exist as stepwise verdicts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::norm_quantile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    #[default]
    None,
    Bonferroni,
    Sidak,
    Holm,
    Bh,
}

impl Multiplicity {
    pub const ALL: [Multiplicity; 5] = [
        Multiplicity::None,
        Multiplicity::Bonferroni,
        Multiplicity::Sidak,
        Multiplicity::Holm,
        Multiplicity::Bh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Multiplicity::None => "none",
            Multiplicity::Bonferroni => "bonferroni",
            Multiplicity::Sidak => "sidak",
            Multiplicity::Holm => "holm",
            Multiplicity::Bh => "bh",
        }
    }

    pub fn is_stepwise(self) -> bool {
        matches!(self, Multiplicity::Holm | Multiplicity::Bh)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Multiplicity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Multiplicity::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("multiplicity", format!("unknown method {s:?}")))
    }
}

/// Which model pairs make up the pre-declared family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyConvention {
    /// Neighbours in the ranking by mean score: `K - 1` pairs.
    #[default]
    Adjacent,
    /// Every unordered pair: `K(K-1)/2` pairs.
    AllPairs,
}

impl FamilyConvention {
    pub fn family_size(self, models: usize) -> usize {
        match self {
            FamilyConvention::Adjacent => models.saturating_sub(1),
            FamilyConvention::AllPairs => models * models.saturating_sub(1) / 2,
        }
    }
}

impl FromStr for FamilyConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent" => Ok(FamilyConvention::Adjacent),
            "all-pairs" => Ok(FamilyConvention::AllPairs),
            other => Err(Error::invalid("family", format!("unknown convention {other:?}"))),
        }
    }
}

/// Per-test level for the single-step methods.
pub fn adjust_alpha(alpha: f64, m: usize, method: Multiplicity) -> Result<f64> {
    if m == 0 {
        return Err(Error::EmptyFamily);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    let mf = m as f64;
    match method {
        Multiplicity::None => Ok(alpha),
        Multiplicity::Bonferroni => Ok(alpha / mf),
        // 1 - (1-α)^{1/m}, written to keep precision for small α.
        Multiplicity::Sidak => Ok(-((-alpha).ln_1p() / mf).exp_m1()),
        Multiplicity::Holm | Multiplicity::Bh => Err(Error::StepwiseMethod(method.name())),
    }
}

/// Factor by which a single-step adjustment multiplies every required count.
pub fn nstar_inflation(alpha: f64, beta: f64, m: usize, method: Multiplicity) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta", format!("{beta} not in (0, 1)")));
    }
    let adjusted = adjust_alpha(alpha, m, method)?;
    if adjusted == alpha {
        return Ok(1.0);
    }
    let zb = norm_quantile(1.0 - beta);
    let num = norm_quantile(1.0 - adjusted / 2.0) + zb;
    let den = norm_quantile(1.0 - alpha / 2.0) + zb;
    Ok((num / den).powi(2))
}

/// Indices of `p_values` sorted ascending; ties keep input order.
fn ascending_order(p_values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p_values.len()).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    order
}

fn check_p_values(p_values: &[f64]) -> Result<()> {
    if p_values.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if let Some(index) = p_values
        .iter()
        .position(|p| !(p.is_finite() && (0.0..=1.0).contains(p)))
    {
        return Err(Error::invalid(
            "p_values",
            format!("entry {index} = {} is not a probability", p_values[index]),
        ));
    }
    Ok(())
}

/// Reject flags, aligned with the input, for any of the methods.
pub fn family_rejections(p_values: &[f64], alpha: f64, method: Multiplicity) -> Result<Vec<bool>> {
    check_p_values(p_values)?;
    let m = p_values.len();
    match method {
        Multiplicity::Holm => {
            let mut flags = vec![false; m];
            for (rank, &i) in ascending_order(p_values).iter().enumerate() {
                if p_values[i] <= alpha / (m - rank) as f64 {
                    flags[i] = true;
                } else {
                    break;
                }
            }
            Ok(flags)
        }
        Multiplicity::Bh => {
            let order = ascending_order(p_values);
            let cutoff = order
                .iter()
                .enumerate()
                .rev()
                .find(|&(rank, &i)| p_values[i] <= alpha * (rank + 1) as f64 / m as f64)
                .map(|(rank, _)| rank + 1)
                .unwrap_or(0);
            let mut flags = vec![false; m];
            for &i in &order[..cutoff] {
                flags[i] = true;
            }
            Ok(flags)
        }
        single => {
            let level = adjust_alpha(alpha, m, single)?;
            Ok(p_values.iter().map(|&p| p <= level).collect())
        }
    }
}

/// Step-down Holm or step-up Benjamini–Hochberg reject flags.
pub fn stepwise_verdicts(p_values: &[f64], alpha: f64, method: Multiplicity) -> Result<Vec<bool>> {
    if !method.is_stepwise() {
        return Err(Error::invalid(
            "method",
            format!("{method} is single-step; use adjust_alpha"),
        ));
    }
    family_rejections(p_values, alpha, method)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyVerdict {
    pub method: Multiplicity,
    pub m: usize,
    /// Per-test level; `None` for the stepwise methods.
    pub adjusted_alpha: Option<f64>,
    pub reject_flags: Vec<bool>,
    /// Required-N multiplier; `None` for the stepwise methods.
    pub inflation: Option<f64>,
}

pub fn family_verdict(
    p_values: &[f64],
    alpha: f64,
    beta: f64,
    method: Multiplicity,
) -> Result<FamilyVerdict> {
    let reject_flags = family_rejections(p_values, alpha, method)?;
    let m = p_values.len();
    let (adjusted_alpha, inflation) = if method.is_stepwise() {
        (None, None)
    } else {
        (
            Some(adjust_alpha(alpha, m, method)?),
            Some(nstar_inflation(alpha, beta, m, method)?),
        )
    };
    Ok(FamilyVerdict {
        method,
        m,
        adjusted_alpha,
        reject_flags,
        inflation,
    })
}

/// Level at which a required count is evaluated under `method`.
///
/// Holm is bounded by Bonferroni at every position, so its worst-case level
/// `α/m` is used. Benjamini–Hochberg uses `α·R/m` for its realised number of
/// rejections `R`, falling back to `α/m` when nothing is rejected.
pub fn planning_alpha(p_values: &[f64], alpha: f64, method: Multiplicity) -> Result<f64> {
    let m = p_values.len();
    match method {
        Multiplicity::Holm => adjust_alpha(alpha, m, Multiplicity::Bonferroni),
        Multiplicity::Bh => {
            let r = family_rejections(p_values, alpha, method)?
                .iter()
                .filter(|&&f| f)
                .count()
                .max(1);
            Ok(alpha * r as f64 / m as f64)
        }
        single => adjust_alpha(alpha, m, single),
    }
}

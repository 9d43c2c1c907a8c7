//! The Cohen-h "shortcut" sample size, the constant governing how far it
//! drifts from half the correct paired count, and a grid audit of that drift.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TestConfig;
use crate::error::{Error, Result};
use crate::paired::{admissible_rho_bounds, bernoulli_diff_variance, required_n, RequiredN};

/// Arcsine effect size `2·asin√p1 − 2·asin√p2`.
pub fn cohens_h(p1: f64, p2: f64) -> f64 {
    2.0 * p1.clamp(0.0, 1.0).sqrt().asin() - 2.0 * p2.clamp(0.0, 1.0).sqrt().asin()
}

/// Unpaired per-arm count `K/h²` and its `(1-ρ)`-scaled paired readout.
/// Both are un-ceiled; equal marginals give the unbounded sentinel.
pub fn shortcut_n(p1: f64, p2: f64, rho: f64, config: &TestConfig) -> Result<(RequiredN, RequiredN)> {
    let (lo, hi) = admissible_rho_bounds(p1, p2)?;
    if !(rho >= lo - 1e-9 && rho <= hi + 1e-9) {
        return Err(Error::Inadmissible {
            name: "rho",
            value: rho,
            lo,
            hi,
        });
    }
    let h = cohens_h(p1, p2);
    if h == 0.0 {
        return Ok((RequiredN::UNBOUNDED, RequiredN::UNBOUNDED));
    }
    let per_arm = config.z_sum()?.powi(2) / (h * h);
    Ok((
        RequiredN::from_exact(per_arm),
        RequiredN::from_exact((1.0 - rho) * per_arm),
    ))
}

/// Leading coefficient of `|n_h/N* − ½|` in `δ²` at midpoint accuracy `p`.
pub fn lemma_constant(p: f64, rho: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("{p} must lie strictly inside (0, 1)")));
    }
    if !(rho < 1.0) {
        return Err(Error::invalid("rho", "the constant is unbounded as rho approaches 1"));
    }
    let (lo, _) = admissible_rho_bounds(p, p)?;
    if rho < lo - 1e-9 {
        return Err(Error::Inadmissible {
            name: "rho",
            value: rho,
            lo,
            hi: 1.0,
        });
    }
    let u = p * (1.0 - p);
    let skew = (1.0 + rho) * (1.0 - 2.0 * p).powi(2) / (16.0 * (1.0 - rho) * u * u);
    Ok(0.5 * (skew - 1.0 / (6.0 * u)).abs())
}

/// Largest gap at which the shortcut stays within `epsilon` of half the
/// correct count, to leading order.
pub fn admissible_delta_star(p: f64, rho: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid("epsilon", format!("{epsilon} not in (0, 1/2)")));
    }
    let c = lemma_constant(p, rho)?;
    if c == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((epsilon / c).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcutReport {
    pub h: f64,
    pub n_per_arm: RequiredN,
    pub n_h: RequiredN,
    pub n_star: RequiredN,
    /// `n_h / N*` on the un-ceiled values; zero when the marginals coincide.
    pub ratio: f64,
    pub c_constant: f64,
    pub delta_star: f64,
    pub epsilon: f64,
}

impl ShortcutReport {
    pub fn is_degenerate(&self) -> bool {
        self.h == 0.0
    }
}

pub fn shortcut_report(
    p1: f64,
    p2: f64,
    rho: f64,
    epsilon: f64,
    config: &TestConfig,
) -> Result<ShortcutReport> {
    let (n_per_arm, n_h) = shortcut_n(p1, p2, rho, config)?;
    let sigma = bernoulli_diff_variance(p1, p2, rho)?.sqrt();
    let n_star = if sigma > 0.0 {
        required_n(p1 - p2, sigma, config)?
    } else {
        RequiredN::UNBOUNDED
    };
    let ratio = if n_h.is_unbounded() || n_star.is_unbounded() {
        0.0
    } else {
        n_h.exact() / n_star.exact()
    };
    let mid = 0.5 * (p1 + p2);
    let c_constant = lemma_constant(mid, rho.min(1.0 - 1e-12))?;
    Ok(ShortcutReport {
        h: cohens_h(p1, p2),
        n_per_arm,
        n_h,
        n_star,
        ratio,
        c_constant,
        delta_star: if c_constant > 0.0 {
            (epsilon / c_constant).sqrt()
        } else {
            f64::INFINITY
        },
        epsilon,
    })
}

/// One `(p, ρ, δ)` cell of the audit grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCell {
    pub p: f64,
    pub rho: f64,
    pub delta: f64,
    /// `None` when `p ± δ/2` or `ρ` is not admissible.
    pub ratio: Option<f64>,
    pub deviation: Option<f64>,
    /// `deviation / δ²`, the empirical counterpart of `c_pred`.
    pub scaled_deviation: Option<f64>,
    pub c_pred: Option<f64>,
}

impl AuditCell {
    pub fn skipped(&self) -> bool {
        self.ratio.is_none()
    }

    /// `|scaled_deviation − c_pred| / c_pred`.
    pub fn relative_error(&self) -> Option<f64> {
        match (self.scaled_deviation, self.c_pred) {
            (Some(s), Some(c)) if c > 0.0 => Some((s - c).abs() / c),
            _ => None,
        }
    }
}

fn audit_cell(p: f64, rho: f64, delta: f64) -> AuditCell {
    let mut cell = AuditCell {
        p,
        rho,
        delta,
        ratio: None,
        deviation: None,
        scaled_deviation: None,
        c_pred: None,
    };
    let (pa, pb) = (p + delta / 2.0, p - delta / 2.0);
    let Ok(var) = bernoulli_diff_variance(pa, pb, rho) else {
        return cell;
    };
    let Ok(c) = lemma_constant(p, rho) else {
        return cell;
    };
    let h = cohens_h(pa, pb);
    if var <= 0.0 || h == 0.0 {
        return cell;
    }
    // The common factor K cancels from n_h / N*.
    let ratio = (1.0 - rho) * delta * delta / (h * h * var);
    let deviation = (ratio - 0.5).abs();
    cell.ratio = Some(ratio);
    cell.deviation = Some(deviation);
    cell.scaled_deviation = Some(deviation / (delta * delta));
    cell.c_pred = Some(c);
    cell
}

/// Evaluates the shortcut ratio on every cell of the product grid, in
/// `p`-major, then `ρ`, then `δ` order.
pub fn lemma_numeric_audit(p_grid: &[f64], rho_grid: &[f64], delta_grid: &[f64]) -> Vec<AuditCell> {
    let cells: Vec<(f64, f64, f64)> = p_grid
        .iter()
        .flat_map(|&p| {
            rho_grid
                .iter()
                .flat_map(move |&r| delta_grid.iter().map(move |&d| (p, r, d)))
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(p, r, d)| audit_cell(p, r, d))
        .collect()
}

pub fn write_audit_csv<W: Write>(cells: &[AuditCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "rho", "delta", "ratio", "deviation", "c_pred"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in cells {
        w.write_record([
            c.p.to_string(),
            c.rho.to_string(),
            c.delta.to_string(),
            opt(c.ratio),
            opt(c.deviation),
            opt(c.c_pred),
        ])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<audit csv>".into(),
        source: e,
    })?;
    Ok(())
}

//! Paired bootstrap: percentile test on the mean difference, percentile
//! intervals on the required count, and subsample power.
//!
//! Binary pairs never need the items themselves: resampling `n` items with
//! replacement from a 2×2 table is a multinomial draw on its cells, which is
//! what the fast paths use.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TestConfig;
use crate::dist::norm_quantile;
use crate::error::{Error, Result};
use crate::mcnemar::mcnemar_chi2;
use crate::paired::{required_n, summarize_pair, Contingency, PairedSummary, RequiredN};
use crate::rng::{task_rng, SimRng};
use crate::util::{quantile_sorted, sort_floats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapTest {
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub reject: bool,
    /// `2·min(P*(D̄* ≤ 0), P*(D̄* ≥ 0))`, capped at one.
    pub p_value: f64,
}

/// Resampled `(b, c)` from a table of `n` items.
fn resample_discordant(b: u64, c: u64, n: u64, m: u64, rng: &mut SimRng) -> (u64, u64) {
    let plus = Binomial::new(m, b as f64 / n as f64).map_or(0, |d| d.sample(rng));
    let rest = n - b;
    let minus = if rest == 0 {
        0
    } else {
        Binomial::new(m - plus, c as f64 / rest as f64).map_or(0, |d| d.sample(rng))
    };
    (plus, minus)
}

fn resample_table(t: &Contingency, m: u64, rng: &mut SimRng) -> Contingency {
    let n = t.total();
    let (n10, n01) = resample_discordant(t.n10, t.n01, n, m, rng);
    let concordant = t.n11 + t.n00;
    let left = m - n10 - n01;
    let n11 = if concordant == 0 {
        0
    } else {
        Binomial::new(left, t.n11 as f64 / concordant as f64).map_or(0, |d| d.sample(rng))
    };
    Contingency {
        n11,
        n10,
        n01,
        n00: left - n11,
    }
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<PairedSummary> {
    summarize_pair(a, b)
}

/// Bootstrap means of `D` for any pair; binary pairs go through the table.
fn bootstrap_means(a: &[f64], b: &[f64], summary: &PairedSummary, b_reps: usize, seed: u64) -> Vec<f64> {
    let n = summary.n;
    match summary.counts {
        Some(t) => (0..b_reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = task_rng(seed, r as u64);
                let (plus, minus) = resample_discordant(t.n10, t.n01, n as u64, n as u64, &mut rng);
                (plus as f64 - minus as f64) / n as f64
            })
            .collect(),
        None => {
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            (0..b_reps)
                .into_par_iter()
                .map(|r| {
                    let mut rng = task_rng(seed, r as u64);
                    let total: f64 = (0..n).map(|_| d[rng.random_range(0..n)]).sum();
                    total / n as f64
                })
                .collect()
        }
    }
}

fn percentile_test(mut means: Vec<f64>, alpha: f64) -> BootstrapTest {
    let reps = means.len() as f64;
    let below = means.iter().filter(|&&m| m <= 0.0).count() as f64 / reps;
    let above = means.iter().filter(|&&m| m >= 0.0).count() as f64 / reps;
    sort_floats(&mut means);
    let ci_lo = quantile_sorted(&means, alpha / 2.0);
    let ci_hi = quantile_sorted(&means, 1.0 - alpha / 2.0);
    BootstrapTest {
        ci_lo,
        ci_hi,
        reject: ci_lo > 0.0 || ci_hi < 0.0,
        p_value: (2.0 * below.min(above)).min(1.0),
    }
}

/// Two-sided percentile-bootstrap test of `E[D] = 0`.
pub fn paired_bootstrap_test(
    scores_a: &[f64],
    scores_b: &[f64],
    alpha: f64,
    b_reps: usize,
    seed: u64,
) -> Result<BootstrapTest> {
    if b_reps < 100 {
        return Err(Error::invalid("b_reps", format!("{b_reps} < 100")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    let summary = check_pair(scores_a, scores_b)?;
    if summary.sigma_d_hat == 0.0 && summary.delta_hat == 0.0 {
        return Ok(BootstrapTest {
            ci_lo: 0.0,
            ci_hi: 0.0,
            reject: false,
            p_value: 1.0,
        });
    }
    let means = bootstrap_means(scores_a, scores_b, &summary, b_reps, seed);
    Ok(percentile_test(means, alpha))
}

/// The same test on a binary pair given only its 2×2 table.
pub fn bootstrap_test_counts(
    table: &Contingency,
    alpha: f64,
    b_reps: usize,
    rng: &mut SimRng,
) -> BootstrapTest {
    let n = table.total();
    if table.n10 + table.n01 == 0 {
        return BootstrapTest {
            ci_lo: 0.0,
            ci_hi: 0.0,
            reject: false,
            p_value: 1.0,
        };
    }
    let means = (0..b_reps)
        .map(|_| {
            let (plus, minus) = resample_discordant(table.n10, table.n01, n, n, rng);
            (plus as f64 - minus as f64) / n as f64
        })
        .collect();
    percentile_test(means, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NStarInterval {
    pub point: RequiredN,
    pub pct5: RequiredN,
    pub pct95: RequiredN,
}

impl NStarInterval {
    /// Whole interval at or below `n`: robustly resolved.
    pub fn below(&self, n: usize) -> bool {
        self.pct95.exact() <= n as f64
    }

    /// Interval straddles `n`.
    pub fn spans(&self, n: usize) -> bool {
        self.pct5.exact() <= n as f64 && self.pct95.exact() > n as f64
    }
}

fn nstar_of(s: &PairedSummary, config: &TestConfig) -> Result<f64> {
    if s.delta_hat == 0.0 || s.sigma_d_hat == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(required_n(s.delta_hat, s.sigma_d_hat, config)?.exact())
}

/// 5th–95th percentile interval of the required count under item resampling.
/// Zero-gap resamples are the unbounded sentinel and sort above every finite
/// value.
pub fn bootstrap_nstar_ci(
    scores_a: &[f64],
    scores_b: &[f64],
    b_reps: usize,
    config: &TestConfig,
    seed: u64,
) -> Result<NStarInterval> {
    if b_reps < 100 {
        return Err(Error::invalid("b_reps", format!("{b_reps} < 100")));
    }
    let summary = check_pair(scores_a, scores_b)?;
    let point = RequiredN::from_exact(nstar_of(&summary, config)?);
    let n = summary.n;
    let mut values: Vec<f64> = (0..b_reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = task_rng(seed, r as u64);
            let s = match summary.counts {
                Some(t) => PairedSummary::from_contingency(resample_table(&t, n as u64, &mut rng))?,
                None => {
                    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    let a: Vec<f64> = idx.iter().map(|&i| scores_a[i]).collect();
                    let b: Vec<f64> = idx.iter().map(|&i| scores_b[i]).collect();
                    summarize_pair(&a, &b)?
                }
            };
            nstar_of(&s, config)
        })
        .collect::<Result<_>>()?;
    sort_floats(&mut values);
    Ok(NStarInterval {
        point,
        pct5: RequiredN::from_exact(quantile_sorted(&values, 0.05)),
        pct95: RequiredN::from_exact(quantile_sorted(&values, 0.95)),
    })
}

fn check_power_args(n_target: usize, alpha: f64, trials: usize) -> Result<()> {
    if n_target == 0 {
        return Err(Error::invalid("n_target", "must be at least 1"));
    }
    if trials < 100 {
        return Err(Error::invalid("trials", format!("{trials} < 100")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    Ok(())
}

/// Fraction of `n_target`-item resamples (with replacement) on which the χ²
/// McNemar test rejects at `alpha`. Binary pairs only.
pub fn bootstrap_power(
    scores_a: &[f64],
    scores_b: &[f64],
    n_target: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_power_args(n_target, alpha, trials)?;
    let summary = check_pair(scores_a, scores_b)?;
    let t = summary.counts.ok_or_else(|| {
        Error::invalid("scores", "McNemar subsample power needs binary scores")
    })?;
    let n = t.total();
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = task_rng(seed, r as u64);
            let (b, c) = resample_discordant(t.n10, t.n01, n, n_target as u64, &mut rng);
            b + c > 0 && mcnemar_chi2(b, c).is_ok_and(|p| p <= alpha)
        })
        .count();
    Ok(hits as f64 / trials as f64)
}

/// Subsample power of the paired Wald (large-sample paired-t) test; works
/// on graded scores.
pub fn bootstrap_wald_power(
    scores_a: &[f64],
    scores_b: &[f64],
    n_target: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_power_args(n_target, alpha, trials)?;
    if n_target < 2 {
        return Err(Error::invalid("n_target", "must be at least 2"));
    }
    let summary = check_pair(scores_a, scores_b)?;
    let n = summary.n;
    let d: Vec<f64> = scores_a.iter().zip(scores_b).map(|(x, y)| x - y).collect();
    let z = norm_quantile(1.0 - alpha / 2.0);
    let m = n_target as f64;
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = task_rng(seed, r as u64);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n_target {
                let x = d[rng.random_range(0..n)];
                s1 += x;
                s2 += x * x;
            }
            let mean = s1 / m;
            let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0);
            var > 0.0 && mean.abs() * m.sqrt() / var.sqrt() >= z
        })
        .count();
    Ok(hits as f64 / trials as f64)
}

/// Sample size at which a fitted probit-in-√n power curve reaches `target`.
pub fn power_crossing(ns: &[f64], powers: &[f64], target: f64) -> Result<f64> {
    if ns.len() != powers.len() {
        return Err(Error::LengthMismatch {
            left: ns.len(),
            right: powers.len(),
        });
    }
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(powers)
        .filter(|(_, &p)| p > 0.0 && p < 1.0)
        .map(|(&n, &p)| (n.sqrt(), norm_quantile(p)))
        .collect();
    if pts.len() < 2 {
        return Err(Error::NoSolution(
            "need two power estimates strictly inside (0, 1)".into(),
        ));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 || sxy <= 0.0 {
        return Err(Error::NoSolution("power does not increase with n".into()));
    }
    let slope = sxy / sxx;
    let root = mx + (norm_quantile(target) - my) / slope;
    if root <= 0.0 {
        return Err(Error::NoSolution("fitted curve crosses below n = 0".into()));
    }
    Ok(root * root)
}

//! Finite-sample calibration of the paired-binary tests: effect tuning to a
//! power target and the Type-I / power grid.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TestConfig;
use crate::error::{Error, Result};
use crate::mcnemar::mcnemar_all;
use crate::paired::power_at;
use crate::rng::{derive_seed, task_rng};
use crate::sim::bootstrap::bootstrap_test_counts;
use crate::sim::generate::{bernoulli_sigma_d, latent_sigma_d, GeneratorSpec};
use crate::util::{proportion_se, quantile_sorted, sort_floats};

/// Solves `power_at(δ, σ_D(δ), n, α') = target` for `δ > 0`, where `σ_D`
/// moves with `δ` through the marginals `p ± δ/2`.
pub fn tune_delta_for_power<F>(p: f64, sigma_d: F, n: f64, target: f64, config: &TestConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let alpha = config.level()?;
    if !(target >= alpha && target < 1.0) {
        return Err(Error::invalid("target", format!("{target} not in [alpha, 1)")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("{p} must lie strictly inside (0, 1)")));
    }
    if target == alpha {
        return Ok(0.0);
    }
    let power = |d: f64| -> Result<f64> { power_at(d, sigma_d(d)?, n, alpha) };
    // Grow the bracket geometrically; the marginals stay interior and the
    // variance model stays admissible for as long as it is evaluated.
    let cap = 2.0 * p.min(1.0 - p);
    let (mut lo, mut hi) = (0.0, 1e-4_f64.min(cap / 2.0));
    loop {
        let reachable = matches!(power(hi), Ok(pw) if pw >= target);
        if reachable {
            break;
        }
        let next = (hi * 1.5).min(cap * (1.0 - 1e-9));
        if next <= hi || sigma_d(next).is_err() {
            return Err(Error::NoSolution(format!(
                "power {target} is out of reach at n = {n} and p = {p}"
            )));
        }
        lo = hi;
        hi = next;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tuning with a fixed Bernoulli correlation.
pub fn tune_delta_bernoulli(p: f64, rho: f64, n: f64, target: f64, config: &TestConfig) -> Result<f64> {
    tune_delta_for_power(p, |d| bernoulli_sigma_d(p, d, rho), n, target, config)
}

/// Tuning for the latent-copula generator at correlation `rho_z`.
pub fn tune_delta_latent(p: f64, rho_z: f64, n: f64, target: f64, config: &TestConfig) -> Result<f64> {
    tune_delta_for_power(p, |d| latent_sigma_d(p, d, rho_z), n, target, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    McnemarChi2,
    Exact,
    MidP,
    ContinuityCorrected,
    Bootstrap,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::McnemarChi2,
        Variant::Exact,
        Variant::MidP,
        Variant::ContinuityCorrected,
        Variant::Bootstrap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::McnemarChi2 => "mcnemar_chi2",
            Variant::Exact => "exact",
            Variant::MidP => "midp",
            Variant::ContinuityCorrected => "cc",
            Variant::Bootstrap => "bootstrap",
        }
    }

    /// The three variants whose size is asymptotically exact.
    pub fn is_asymptotic(self) -> bool {
        matches!(self, Variant::McnemarChi2 | Variant::MidP | Variant::Bootstrap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub variant: Variant,
    pub p: f64,
    pub rho_z: f64,
    pub n: usize,
    /// Effect used under the alternative.
    pub delta: f64,
    pub type1: f64,
    pub type1_mcse: f64,
    pub power: f64,
    pub power_mcse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub n: usize,
    pub trials: usize,
    /// Bootstrap replicates per trial for the bootstrap variant.
    pub b_reps: usize,
    pub seed: u64,
    pub target_power: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            n: 500,
            trials: 1500,
            b_reps: 1000,
            seed: crate::rng::DEFAULT_SEED,
            target_power: 0.8,
        }
    }
}

/// Rejection counts of the five variants over `trials` simulated tables.
fn rejection_rates(spec: &GeneratorSpec, trials: usize, b_reps: usize, alpha: f64) -> Result<[f64; 5]> {
    let cells = spec.cells()?;
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[usize; 5]> {
            let mut rng = task_rng(spec.seed, t as u64);
            let table = cells.sample_table(spec.n as u64, &mut rng);
            let mut hits = [0usize; 5];
            if table.n10 + table.n01 > 0 {
                let p = mcnemar_all(table.n10, table.n01)?;
                for (slot, pv) in [p.chi2, p.exact, p.midp, p.cc].into_iter().enumerate() {
                    hits[slot] = usize::from(pv <= alpha);
                }
            }
            hits[4] = usize::from(bootstrap_test_counts(&table, alpha, b_reps, &mut rng).reject);
            Ok(hits)
        })
        .try_reduce(
            || [0usize; 5],
            |mut acc, h| {
                for (a, x) in acc.iter_mut().zip(h) {
                    *a += x;
                }
                Ok(acc)
            },
        )?;
    Ok(counts.map(|c| c as f64 / trials as f64))
}

/// Empirical Type-I (`δ = 0`) and power (δ tuned to the target) of every
/// variant on each `(p, ρ_z)` cell.
pub fn calibration_grid(
    p_set: &[f64],
    rho_z_set: &[f64],
    options: &GridOptions,
    config: &TestConfig,
) -> Result<Vec<CalibrationCell>> {
    let alpha = config.level()?;
    let mut out = Vec::new();
    for (pi, &p) in p_set.iter().enumerate() {
        for (ri, &rho_z) in rho_z_set.iter().enumerate() {
            let cell_index = (pi * rho_z_set.len() + ri) as u64;
            let delta = tune_delta_latent(p, rho_z, options.n as f64, options.target_power, config)?;
            let null = GeneratorSpec {
                p,
                delta: 0.0,
                rho_z,
                n: options.n,
                seed: derive_seed(options.seed, 2 * cell_index),
            };
            let alt = GeneratorSpec {
                delta,
                seed: derive_seed(options.seed, 2 * cell_index + 1),
                ..null
            };
            let size = rejection_rates(&null, options.trials, options.b_reps, alpha)?;
            let power = rejection_rates(&alt, options.trials, options.b_reps, alpha)?;
            for (v, variant) in Variant::ALL.into_iter().enumerate() {
                out.push(CalibrationCell {
                    variant,
                    p,
                    rho_z,
                    n: options.n,
                    delta,
                    type1: size[v],
                    type1_mcse: proportion_se(size[v], options.trials),
                    power: power[v],
                    power_mcse: proportion_se(power[v], options.trials),
                });
            }
        }
    }
    Ok(out)
}

/// Per-variant summary across the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub max_size_dev: f64,
    pub median_power: f64,
    pub max_power_dev: f64,
}

pub fn summarize_grid(cells: &[CalibrationCell], alpha: f64, target: f64) -> Vec<VariantSummary> {
    Variant::ALL
        .into_iter()
        .map(|variant| {
            let rows: Vec<&CalibrationCell> = cells.iter().filter(|c| c.variant == variant).collect();
            let mut powers: Vec<f64> = rows.iter().map(|c| c.power).collect();
            sort_floats(&mut powers);
            VariantSummary {
                variant,
                max_size_dev: rows.iter().map(|c| (c.type1 - alpha).abs()).fold(0.0, f64::max),
                median_power: if powers.is_empty() { f64::NAN } else { quantile_sorted(&powers, 0.5) },
                max_power_dev: rows.iter().map(|c| (c.power - target).abs()).fold(0.0, f64::max),
            }
        })
        .collect()
}

/// Writes `variant,p,rho_z,n,type1,power,mcse`; `mcse` is the larger of the
/// two rates' Monte Carlo standard errors.
pub fn write_calibration_csv<W: Write>(cells: &[CalibrationCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variant", "p", "rho_z", "n", "type1", "power", "mcse"])?;
    for c in cells {
        w.write_record([
            c.variant.name().to_string(),
            c.p.to_string(),
            c.rho_z.to_string(),
            c.n.to_string(),
            c.type1.to_string(),
            c.power.to_string(),
            c.type1_mcse.max(c.power_mcse).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<calibration csv>".into(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paired::{bernoulli_diff_variance, required_n};

    #[test]
    fn tuned_delta_hits_target_power() {
        let cfg = TestConfig::default();
        let rho = crate::sim::generate::bernoulli_rho(0.5, 0.5, 0.4);
        let d = tune_delta_bernoulli(0.5, rho, 500.0, 0.8, &cfg).unwrap();
        let sd = bernoulli_diff_variance(0.5 + d / 2.0, 0.5 - d / 2.0, rho).unwrap().sqrt();
        assert!((power_at(d, sd, 500.0, 0.05).unwrap() - 0.8).abs() < 1e-3);
        let n = required_n(d, sd, &cfg).unwrap().exact();
        assert!((n - 500.0).abs() <= 1.0, "{n}");
    }

    #[test]
    fn target_alpha_gives_zero() {
        let cfg = TestConfig::default();
        assert_eq!(tune_delta_bernoulli(0.5, 0.3, 500.0, 0.05, &cfg).unwrap(), 0.0);
        let small = tune_delta_bernoulli(0.5, 0.3, 500.0, 0.0501, &cfg).unwrap();
        assert!(small < 0.002);
    }

    #[test]
    fn small_grid_runs_and_writes() {
        let opts = GridOptions {
            n: 200,
            trials: 100,
            b_reps: 200,
            seed: 1,
            target_power: 0.8,
        };
        let cells = calibration_grid(&[0.6], &[0.4], &opts, &TestConfig::default()).unwrap();
        assert_eq!(cells.len(), 5);
        let mut buf = Vec::new();
        write_calibration_csv(&cells, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("variant,p,rho_z,n,type1,power,mcse\n"));
        let again = calibration_grid(&[0.6], &[0.4], &opts, &TestConfig::default()).unwrap();
        assert_eq!(cells, again);
    }
}

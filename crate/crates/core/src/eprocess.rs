//! Mixture e-process on discordant-pair signs. Under the null every
//! discordant item is a fair coin; mixing the likelihood ratio over a grid
//! of alternatives gives a nonnegative supermartingale, so stopping the
//! first time it reaches `1/α` is valid at any data-dependent time.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TestConfig;
use crate::dist::norm_quantile;
use crate::error::{Error, Result};
use crate::paired::{required_n, RequiredN};
use crate::rng::{derive_seed, task_rng};
use crate::sim::generate::{bernoulli_sigma_d, GeneratorSpec};
use crate::util::proportion_se;

/// Mixture prior over the alternative probability that a discordant item
/// favours model A.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridSpec {
    /// `{0.01, …, 0.49, 0.51, …, 0.99}` with equal weights.
    #[default]
    Uniform,
    /// `{0.4, 0.6}` with equal weights.
    TwoPoint,
    /// Beta(2, 2) split into `points` equal-mass cells, each represented by
    /// its mid-mass quantile.
    Beta22 { points: usize },
    Custom { theta: Vec<f64>, weights: Vec<f64> },
}

impl GridSpec {
    pub fn beta22() -> Self {
        GridSpec::Beta22 { points: 200 }
    }

    fn support(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let uniform = |theta: Vec<f64>| {
            let w = vec![1.0 / theta.len() as f64; theta.len()];
            (theta, w)
        };
        match self {
            GridSpec::Uniform => Ok(uniform(
                (1..100).filter(|&i| i != 50).map(|i| i as f64 / 100.0).collect(),
            )),
            GridSpec::TwoPoint => Ok(uniform(vec![0.4, 0.6])),
            GridSpec::Beta22 { points } => {
                if *points == 0 {
                    return Err(Error::invalid("grid", "Beta(2,2) grid needs at least one point"));
                }
                Ok(uniform(
                    (0..*points)
                        .map(|i| beta22_quantile((i as f64 + 0.5) / *points as f64))
                        .collect(),
                ))
            }
            GridSpec::Custom { theta, weights } => {
                if theta.len() != weights.len() {
                    return Err(Error::LengthMismatch {
                        left: theta.len(),
                        right: weights.len(),
                    });
                }
                let total: f64 = weights.iter().sum();
                if weights.iter().any(|&w| !(w >= 0.0)) || !(total > 0.0) {
                    return Err(Error::invalid("weights", "must be nonnegative with a positive sum"));
                }
                Ok((theta.clone(), weights.iter().map(|w| w / total).collect()))
            }
        }
    }
}

/// Inverse of the Beta(2, 2) CDF `3x² − 2x³`.
fn beta22_quantile(u: f64) -> f64 {
    0.5 - ((1.0 - 2.0 * u).asin() / 3.0).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    /// Discordant item won by model A.
    AWins,
    /// Discordant item won by model B.
    BWins,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EProcessState {
    pub theta_grid: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub b_n: u64,
    pub c_n: u64,
    pub log_e: f64,
    #[serde(skip)]
    ln_up: Vec<f64>,
    #[serde(skip)]
    ln_down: Vec<f64>,
}

impl EProcessState {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        let (theta, weights) = grid.support()?;
        if theta.is_empty() {
            return Err(Error::invalid("grid", "mixture support is empty"));
        }
        if let Some(&t) = theta.iter().find(|&&t| !(t > 0.0 && t < 1.0) || t == 0.5) {
            return Err(Error::invalid(
                "grid",
                format!("support point {t} must lie in (0, 1) and differ from 1/2"),
            ));
        }
        Ok(Self {
            ln_up: theta.iter().map(|t| (2.0 * t).ln()).collect(),
            ln_down: theta.iter().map(|t| (2.0 * (1.0 - t)).ln()).collect(),
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            theta_grid: theta,
            b_n: 0,
            c_n: 0,
            log_e: 0.0,
        })
    }

    /// `log e` at arbitrary (possibly fractional) counts.
    pub fn log_e_at(&self, b: f64, c: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        let terms: Vec<f64> = self
            .log_weights
            .iter()
            .zip(self.ln_up.iter().zip(&self.ln_down))
            .map(|(&lw, (&up, &down))| {
                let t = lw + b * up + c * down;
                max = max.max(t);
                t
            })
            .collect();
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    pub fn push(&mut self, sign: Sign) {
        match sign {
            Sign::AWins => self.b_n += 1,
            Sign::BWins => self.c_n += 1,
        }
        self.log_e = self.log_e_at(self.b_n as f64, self.c_n as f64);
    }

    pub fn e_value(&self) -> f64 {
        self.log_e.exp()
    }
}

pub fn eprocess_new(grid: &GridSpec) -> Result<EProcessState> {
    EProcessState::new(grid)
}

pub fn eprocess_update(mut state: EProcessState, sign: Sign) -> EProcessState {
    state.push(sign);
    state
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EProcessOutcome {
    pub rejected: bool,
    /// 1-based index of the sign at which `e ≥ 1/α` first held.
    pub stopping_index: Option<usize>,
    /// `log e_n` after each processed sign, up to and including the stop.
    pub trajectory: Vec<f64>,
}

pub fn eprocess_test(signs: &[Sign], alpha: f64, grid: &GridSpec) -> Result<EProcessOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    let threshold = (1.0 / alpha).ln();
    let mut state = EProcessState::new(grid)?;
    let mut trajectory = Vec::new();
    for (i, &s) in signs.iter().enumerate() {
        state.push(s);
        trajectory.push(state.log_e);
        if state.log_e >= threshold {
            return Ok(EProcessOutcome {
                rejected: true,
                stopping_index: Some(i + 1),
                trajectory,
            });
        }
    }
    Ok(EProcessOutcome {
        rejected: false,
        stopping_index: None,
        trajectory,
    })
}

/// Signs of the discordant items of a binary pair, in item order.
pub fn discordant_signs(scores_a: &[f64], scores_b: &[f64]) -> Vec<Sign> {
    scores_a
        .iter()
        .zip(scores_b)
        .filter_map(|(&a, &b)| match (a == 1.0, b == 1.0) {
            (true, false) => Some(Sign::AWins),
            (false, true) => Some(Sign::BWins),
            _ => None,
        })
        .collect()
}

pub fn write_trajectory_csv<W: Write>(trajectory: &[f64], alpha: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "log_e", "threshold"])?;
    let threshold = (1.0 / alpha).ln().to_string();
    for (i, v) in trajectory.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string(), threshold.clone()])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<trajectory csv>".into(),
        source: e,
    })
}

/// The fixed-horizon z-threshold equivalent to the e-process boundary at `n`
/// items with discordance rate `psi`: the smallest imbalance `d = b − c`
/// among `D = ψn` discordant items with `e ≥ 1/α`, expressed as `d/√D`.
/// `None` when no imbalance crosses.
pub fn equivalent_z(n: usize, psi: f64, alpha: f64, grid: &GridSpec) -> Result<Option<f64>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(psi > 0.0 && psi <= 1.0) {
        return Err(Error::invalid("psi", format!("{psi} not in (0, 1]")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    let state = EProcessState::new(grid)?;
    let total = psi * n as f64;
    let threshold = (1.0 / alpha).ln();
    let crosses = |d: f64| state.log_e_at((total + d) / 2.0, (total - d) / 2.0) >= threshold;
    if !crosses(total) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, total);
    if crosses(0.0) {
        hi = 0.0;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * total.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if crosses(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi / total.sqrt()))
}

/// Required-count inflation of the anytime-valid boundary over the fixed-n
/// threshold at horizon `n` and discordance rate `psi`:
/// `((z_eq + z_{1−β}) / (z_{1−α/2} + z_{1−β}))²`, or `+∞` when the boundary
/// cannot be crossed.
pub fn threshold_inflation_at(n: usize, psi: f64, grid: &GridSpec, config: &TestConfig) -> Result<f64> {
    config.validate()?;
    let alpha = config.alpha;
    let Some(z_eq) = equivalent_z(n, psi, alpha, grid)? else {
        return Ok(f64::INFINITY);
    };
    let zb = config.z_power();
    let za = norm_quantile(1.0 - alpha / 2.0);
    Ok(((z_eq + zb) / (za + zb)).powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EProcessCalibration {
    pub trials: usize,
    pub n_max: usize,
    pub type1: f64,
    pub type1_mcse: f64,
    pub reject_rate: f64,
    pub reject_mcse: f64,
    /// Mean stopping item index over rejecting alternative trials.
    pub mean_stop: f64,
    /// Fixed-n required count with `rho_z` read as the Bernoulli correlation.
    pub n_star: RequiredN,
    pub mean_stop_ratio: f64,
    /// Required count of the simulated population itself.
    pub n_star_population: RequiredN,
    pub mean_stop_ratio_population: f64,
}

/// Item index at which the e-process first crosses, for a stream of `n_max`
/// items with discordance `psi` and A-share `share` among discordant items.
fn first_crossing(
    psi: f64,
    share: f64,
    n_max: usize,
    threshold: f64,
    base: &EProcessState,
    rng: &mut crate::rng::SimRng,
) -> Option<usize> {
    let gap = Geometric::new(psi).ok()?;
    let (mut b, mut c) = (0.0, 0.0);
    let mut item = 0u64;
    loop {
        // Concordant items before the next discordant one.
        item += gap.sample(rng) + 1;
        if item > n_max as u64 {
            return None;
        }
        if rng.random::<f64>() < share {
            b += 1.0;
        } else {
            c += 1.0;
        }
        if base.log_e_at(b, c) >= threshold {
            return Some(item as usize);
        }
    }
}

/// Type-I rate at `δ = 0`, rejection rate and mean stopping time at `δ`,
/// on item streams from the latent-copula generator.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_eprocess(
    p: f64,
    rho_z: f64,
    delta: f64,
    n_max: usize,
    trials: usize,
    seed: u64,
    grid: &GridSpec,
    config: &TestConfig,
) -> Result<EProcessCalibration> {
    if trials == 0 || n_max == 0 {
        return Err(Error::invalid("trials", "trials and n_max must be positive"));
    }
    let alt = GeneratorSpec {
        p,
        delta,
        rho_z,
        n: n_max,
        seed,
    };
    let alt_cells = alt.cells()?;
    let null_cells = GeneratorSpec { delta: 0.0, ..alt }.cells()?;
    let base = EProcessState::new(grid)?;
    let threshold = (1.0 / config.alpha).ln();

    let run = |psi: f64, share: f64, salt: u64| -> Vec<Option<usize>> {
        let stream_seed = derive_seed(seed, salt);
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = task_rng(stream_seed, t as u64);
                first_crossing(psi, share, n_max, threshold, &base, &mut rng)
            })
            .collect()
    };
    let null = run(null_cells.discordance(), 0.5, 0);
    let alt_runs = run(alt_cells.discordance(), alt_cells.p10 / alt_cells.discordance(), 1);

    let type1 = null.iter().filter(|s| s.is_some()).count() as f64 / trials as f64;
    let stops: Vec<usize> = alt_runs.iter().flatten().copied().collect();
    let reject_rate = stops.len() as f64 / trials as f64;
    let mean_stop = if stops.is_empty() {
        f64::NAN
    } else {
        stops.iter().sum::<usize>() as f64 / stops.len() as f64
    };
    let fixed = config.unadjusted();
    let n_star = required_n(delta, bernoulli_sigma_d(p, delta, rho_z)?, &fixed)?;
    let n_star_population = required_n(delta, alt_cells.diff_variance().sqrt(), &fixed)?;
    Ok(EProcessCalibration {
        trials,
        n_max,
        type1,
        type1_mcse: proportion_se(type1, trials),
        reject_rate,
        reject_mcse: proportion_se(reject_rate, trials),
        mean_stop,
        mean_stop_ratio: mean_stop / n_star.exact(),
        n_star,
        mean_stop_ratio_population: mean_stop / n_star_population.exact(),
        n_star_population,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let s = eprocess_new(&GridSpec::Uniform).unwrap();
        assert_eq!(s.theta_grid.len(), 98);
        assert!(s.log_weights.iter().all(|&w| (w + (98f64).ln()).abs() < 1e-15));
        assert_eq!(s.e_value(), 1.0);
        assert!(eprocess_new(&GridSpec::TwoPoint).is_ok());
        let bad = GridSpec::Custom {
            theta: vec![0.5],
            weights: vec![1.0],
        };
        assert!(eprocess_new(&bad).is_err());
    }

    #[test]
    fn one_each_shrinks() {
        let s = eprocess_update(eprocess_update(eprocess_new(&GridSpec::Uniform).unwrap(), Sign::AWins), Sign::BWins);
        let want: f64 = s.theta_grid.iter().map(|t| 4.0 * t * (1.0 - t)).sum::<f64>() / 98.0;
        assert!((s.e_value() - want).abs() < 1e-14);
        assert!(s.e_value() < 1.0);
    }

    #[test]
    fn ten_wins_matches_direct_sum() {
        let mut s = eprocess_new(&GridSpec::Uniform).unwrap();
        for _ in 0..10 {
            s.push(Sign::AWins);
        }
        let direct: f64 = (1..100)
            .filter(|&i| i != 50)
            .map(|i| (2.0 * i as f64 / 100.0).powi(10))
            .sum::<f64>()
            / 98.0;
        assert!((s.e_value() / direct - 1.0).abs() < 1e-13);
    }

    #[test]
    fn balanced_counts_never_exceed_one() {
        for grid in [GridSpec::Uniform, GridSpec::TwoPoint, GridSpec::beta22()] {
            let s = eprocess_new(&grid).unwrap();
            for k in 0..=100 {
                assert!(s.log_e_at(k as f64, k as f64) <= 1e-15);
            }
        }
    }

    #[test]
    fn alternating_stream_never_rejects() {
        let signs: Vec<Sign> = (0..10_000)
            .map(|i| if i % 2 == 0 { Sign::AWins } else { Sign::BWins })
            .collect();
        let out = eprocess_test(&signs, 0.05, &GridSpec::Uniform).unwrap();
        assert!(!out.rejected);
        assert_eq!(out.trajectory.len(), 10_000);
        assert!(!eprocess_test(&[], 0.05, &GridSpec::Uniform).unwrap().rejected);
    }

    #[test]
    fn beta_grid_is_symmetric_equal_mass() {
        let s = eprocess_new(&GridSpec::beta22()).unwrap();
        assert_eq!(s.theta_grid.len(), 200);
        for i in 0..100 {
            assert!((s.theta_grid[i] + s.theta_grid[199 - i] - 1.0).abs() < 1e-12);
        }
        let u = 0.3;
        let x = beta22_quantile(u);
        assert!((3.0 * x * x - 2.0 * x.powi(3) - u).abs() < 1e-14);
    }

    #[test]
    fn boundary_loosens_as_alpha_grows() {
        let cfg = TestConfig::default();
        let f = threshold_inflation_at(12_032, 0.26, &GridSpec::Uniform, &cfg).unwrap();
        assert!(f > 1.0);
        let mut last = f64::INFINITY;
        for alpha in [0.01, 0.05, 0.2, 0.5, 0.9] {
            let z = equivalent_z(12_032, 0.26, alpha, &GridSpec::Uniform).unwrap().unwrap();
            assert!(z < last);
            last = z;
        }
        assert!(threshold_inflation_at(10, 0.01, &GridSpec::Uniform, &cfg).unwrap().is_infinite());
    }
}

//! Paired sufficient statistics, the Bernoulli-difference variance, and the
//! level-α / power-(1−β) inversion behind the minimum detectable effect,
//! the required paired count and the resolution ratio.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::TestConfig;
use crate::dist::{norm_cdf, norm_quantile};
use crate::error::{Error, Result};

const RHO_SLACK: f64 = 1e-9;

/// 2×2 table of a binary pair. `n10` is `b` (A right, B wrong), `n01` is `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl Contingency {
    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    pub fn b(&self) -> u64 {
        self.n10
    }

    pub fn c(&self) -> u64 {
        self.n01
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSummary {
    pub n: usize,
    pub p_a: f64,
    pub p_b: f64,
    /// Present only when both score sequences are binary.
    pub counts: Option<Contingency>,
    pub delta_hat: f64,
    /// Pearson correlation of the two score sequences (the phi coefficient for
    /// binary data). Zero when either sequence is constant.
    pub rho_hat: f64,
    /// Plug-in standard deviation of `D_i = X_i^A - X_i^B` (divisor `n`).
    pub sigma_d_hat: f64,
}

impl PairedSummary {
    /// Builds the summary of a binary pair straight from its 2×2 table.
    pub fn from_contingency(t: Contingency) -> Result<Self> {
        let n = t.total();
        if n < 1 {
            return Err(Error::TooFewItems { need: 1, got: 0 });
        }
        let nf = n as f64;
        let p_a = (t.n11 + t.n10) as f64 / nf;
        let p_b = (t.n11 + t.n01) as f64 / nf;
        let delta_hat = (t.n10 as f64 - t.n01 as f64) / nf;
        let psi = (t.n10 + t.n01) as f64 / nf;
        let var_d = (psi - delta_hat * delta_hat).max(0.0);
        let denom = p_a * (1.0 - p_a) * p_b * (1.0 - p_b);
        let rho_hat = if denom > 0.0 {
            ((t.n11 as f64 / nf - p_a * p_b) / denom.sqrt()).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        Ok(Self {
            n: n as usize,
            p_a,
            p_b,
            counts: Some(t),
            delta_hat,
            rho_hat,
            sigma_d_hat: var_d.sqrt(),
        })
    }

    /// Reconstructs the 2×2 table from a published row `(N, p̂_A, b, c)`.
    pub fn from_published(n: u64, p_a: f64, b: u64, c: u64) -> Result<Self> {
        let a_correct = (p_a * n as f64).round() as i64;
        let n11 = a_correct - b as i64;
        let n00 = n as i64 - n11 - b as i64 - c as i64;
        if n11 < 0 || n00 < 0 {
            return Err(Error::invalid(
                "counts",
                format!("N={n}, p_a={p_a}, b={b}, c={c} do not form a 2x2 table"),
            ));
        }
        Self::from_contingency(Contingency {
            n11: n11 as u64,
            n10: b,
            n01: c,
            n00: n00 as u64,
        })
    }

    pub fn is_binary(&self) -> bool {
        self.counts.is_some()
    }

    /// Discordance rate `ψ = (b + c)/n`; `None` for graded pairs.
    pub fn discordance(&self) -> Option<f64> {
        self.counts
            .map(|t| (t.n10 + t.n01) as f64 / self.n as f64)
    }
}

fn is_binary(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == 0.0 || x == 1.0)
}

/// Sufficient statistics of one model pair scored on the same items.
pub fn summarize_pair(scores_a: &[f64], scores_b: &[f64]) -> Result<PairedSummary> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::LengthMismatch {
            left: scores_a.len(),
            right: scores_b.len(),
        });
    }
    let n = scores_a.len();
    if n < 2 {
        return Err(Error::TooFewItems { need: 2, got: n });
    }
    if let Some(index) = scores_a
        .iter()
        .chain(scores_b.iter())
        .position(|x| !x.is_finite())
    {
        return Err(Error::NonFinite { index: index % n });
    }

    if is_binary(scores_a) && is_binary(scores_b) {
        let mut t = Contingency {
            n11: 0,
            n10: 0,
            n01: 0,
            n00: 0,
        };
        for (&a, &b) in scores_a.iter().zip(scores_b) {
            match (a == 1.0, b == 1.0) {
                (true, true) => t.n11 += 1,
                (true, false) => t.n10 += 1,
                (false, true) => t.n01 += 1,
                (false, false) => t.n00 += 1,
            }
        }
        return PairedSummary::from_contingency(t);
    }

    let nf = n as f64;
    let p_a = scores_a.iter().sum::<f64>() / nf;
    let p_b = scores_b.iter().sum::<f64>() / nf;
    let (mut saa, mut sbb, mut sab, mut sdd) = (0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in scores_a.iter().zip(scores_b) {
        let (da, db) = (a - p_a, b - p_b);
        saa += da * da;
        sbb += db * db;
        sab += da * db;
        let dd = da - db;
        sdd += dd * dd;
    }
    let rho_hat = if saa > 0.0 && sbb > 0.0 {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Ok(PairedSummary {
        n,
        p_a,
        p_b,
        counts: None,
        delta_hat: p_a - p_b,
        rho_hat,
        sigma_d_hat: (sdd / nf).sqrt(),
    })
}

fn check_interior(name: &'static str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{p} must lie strictly inside (0, 1)")))
    }
}

/// Hoeffding–Fréchet interval of attainable correlations for two Bernoulli
/// variables with the given marginals.
pub fn admissible_rho_bounds(p_a: f64, p_b: f64) -> Result<(f64, f64)> {
    check_interior("p_a", p_a)?;
    check_interior("p_b", p_b)?;
    let (q_a, q_b) = (1.0 - p_a, 1.0 - p_b);
    let (u, v) = (p_a * q_b, q_a * p_b);
    let rho_max = (u.min(v) / u.max(v)).sqrt();
    let (s, t) = (p_a * p_b, q_a * q_b);
    let rho_min = -(s.min(t) / s.max(t)).sqrt();
    Ok((rho_min, rho_max))
}

/// `Var(X^A - X^B)` for Bernoulli marginals with correlation `rho`.
pub fn bernoulli_diff_variance(p_a: f64, p_b: f64, rho: f64) -> Result<f64> {
    let (lo, hi) = admissible_rho_bounds(p_a, p_b)?;
    if !(rho >= lo - RHO_SLACK && rho <= hi + RHO_SLACK) {
        return Err(Error::Inadmissible {
            name: "rho",
            value: rho,
            lo,
            hi,
        });
    }
    let (va, vb) = (p_a * (1.0 - p_a), p_b * (1.0 - p_b));
    Ok((va + vb - 2.0 * rho * (va * vb).sqrt()).max(0.0))
}

/// Wald statistic `T_N = δ̂ √N / σ̂_D`.
pub fn wald_statistic(summary: &PairedSummary) -> Result<f64> {
    if summary.sigma_d_hat <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(summary.delta_hat * (summary.n as f64).sqrt() / summary.sigma_d_hat)
}

/// Exact two-sided power of the level-`alpha` Wald test.
pub fn power_at(delta: f64, sigma_d: f64, n: f64, alpha: f64) -> Result<f64> {
    if !(sigma_d > 0.0) {
        return Err(Error::invalid("sigma_d", format!("{sigma_d} must be positive")));
    }
    if !(n >= 1.0) {
        return Err(Error::invalid("n", format!("{n} must be at least 1")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    let z = norm_quantile(1.0 - alpha / 2.0);
    let mu = delta.abs() * n.sqrt() / sigma_d;
    Ok(norm_cdf(-z - mu) + 1.0 - norm_cdf(z - mu))
}

/// Required paired count. Holds the un-ceiled real value; an infinite value
/// is the sentinel for a zero gap.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RequiredN(f64);

impl RequiredN {
    pub const UNBOUNDED: RequiredN = RequiredN(f64::INFINITY);

    pub fn from_exact(value: f64) -> Self {
        RequiredN(value)
    }

    pub fn exact(&self) -> f64 {
        self.0
    }

    pub fn is_unbounded(&self) -> bool {
        self.0.is_infinite()
    }

    /// Reported integer value, `None` for the sentinel.
    pub fn ceiled(&self) -> Option<u64> {
        if self.0.is_finite() {
            Some(self.0.ceil() as u64)
        } else {
            None
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RequiredN(self.0 * factor)
    }

    /// `N ≥ N*`, using the reported integer.
    pub fn is_met_by(&self, n: usize) -> bool {
        match self.ceiled() {
            Some(req) => n as u64 >= req,
            None => false,
        }
    }
}

impl fmt::Display for RequiredN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ceiled() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "inf"),
        }
    }
}

impl Serialize for RequiredN {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for RequiredN {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(RequiredN(v)),
            Repr::Text(t) if t == "inf" => Ok(RequiredN::UNBOUNDED),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// Paired count needed to detect `delta` at the configured operating point.
/// Serves graded data unchanged: plug in the sample SD of the differences.
pub fn required_n(delta: f64, sigma_d: f64, config: &TestConfig) -> Result<RequiredN> {
    if !(sigma_d > 0.0) || !sigma_d.is_finite() {
        return Err(Error::DegenerateVariance);
    }
    if !delta.is_finite() {
        return Err(Error::invalid("delta", "must be finite"));
    }
    if delta == 0.0 {
        return Ok(RequiredN::UNBOUNDED);
    }
    let k = config.z_sum()?;
    Ok(RequiredN((k * sigma_d / delta.abs()).powi(2)))
}

/// Minimum detectable effect at `n` paired items.
pub fn mde(n: f64, sigma_d: f64, config: &TestConfig) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::invalid("n", format!("{n} must be at least 1")));
    }
    if !(sigma_d > 0.0) {
        return Err(Error::invalid("sigma_d", format!("{sigma_d} must be positive")));
    }
    Ok(config.z_sum()? * sigma_d / n.sqrt())
}

/// `q = N / N*`, computed from the un-ceiled `N*`. Zero for the sentinel.
pub fn resolution_ratio(n: usize, n_star: RequiredN) -> f64 {
    if n_star.is_unbounded() {
        0.0
    } else {
        n as f64 / n_star.exact()
    }
}

/// The same ratio from the Wald statistic: `q = T² / (z_{1-α/2} + z_{1-β})²`.
pub fn resolution_ratio_from_t(t_stat: f64, config: &TestConfig) -> Result<f64> {
    Ok((t_stat / config.z_sum()?).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionResult {
    pub n_star: RequiredN,
    pub mde: f64,
    pub q: f64,
    pub t_stat: f64,
    pub resolved: bool,
}

/// Runs the inversion at the observed gap of a pair.
pub fn resolve(summary: &PairedSummary, config: &TestConfig) -> Result<ResolutionResult> {
    if summary.delta_hat == 0.0 {
        let mde = if summary.sigma_d_hat > 0.0 {
            mde(summary.n as f64, summary.sigma_d_hat, config)?
        } else {
            0.0
        };
        return Ok(ResolutionResult {
            n_star: RequiredN::UNBOUNDED,
            mde,
            q: 0.0,
            t_stat: 0.0,
            resolved: false,
        });
    }
    let t_stat = wald_statistic(summary)?;
    let n_star = required_n(summary.delta_hat, summary.sigma_d_hat, config)?;
    let q = resolution_ratio(summary.n, n_star);
    Ok(ResolutionResult {
        n_star,
        mde: mde(summary.n as f64, summary.sigma_d_hat, config)?,
        q,
        t_stat,
        resolved: q >= 1.0,
    })
}

/// Unpaired (independent-samples) Gaussian required count per arm for the
/// same marginals.
pub fn unpaired_required_n(p_a: f64, p_b: f64, config: &TestConfig) -> Result<RequiredN> {
    check_interior("p_a", p_a)?;
    check_interior("p_b", p_b)?;
    let var = p_a * (1.0 - p_a) + p_b * (1.0 - p_b);
    required_n(p_a - p_b, var.sqrt(), config)
}

/// Unpaired over paired required count; `1/(1-ρ)` at equal marginals.
pub fn efficiency_ratio(p_a: f64, p_b: f64, rho: f64, config: &TestConfig) -> Result<f64> {
    if p_a == p_b {
        // Both counts diverge; the ratio is the variance quotient.
        let v = p_a * (1.0 - p_a);
        let paired = bernoulli_diff_variance(p_a, p_b, rho)?;
        if paired <= 0.0 {
            return Err(Error::DegenerateVariance);
        }
        return Ok(2.0 * v / paired);
    }
    let unpaired = unpaired_required_n(p_a, p_b, config)?;
    let var = bernoulli_diff_variance(p_a, p_b, rho)?;
    let paired = required_n(p_a - p_b, var.sqrt(), config)?;
    Ok(unpaired.exact() / paired.exact())
}

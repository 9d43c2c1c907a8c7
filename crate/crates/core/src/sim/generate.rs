//! Synthetic paired data from a latent Gaussian copula.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use crate::dist::{bvn_cdf, norm_cdf, norm_quantile};
use crate::error::{Error, Result};
use crate::paired::{bernoulli_diff_variance, Contingency};
use crate::rng::{task_rng, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// Midpoint accuracy; the arms sit at `p ± delta/2`.
    pub p: f64,
    pub delta: f64,
    pub rho_z: f64,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn marginals(&self) -> (f64, f64) {
        (self.p + self.delta / 2.0, self.p - self.delta / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let (pa, pb) = self.marginals();
        for (name, v) in [("p_a", pa), ("p_b", pb)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(name, format!("{v} must lie strictly inside (0, 1)")));
            }
        }
        if !(-1.0..=1.0).contains(&self.rho_z) {
            return Err(Error::invalid("rho_z", format!("{} not in [-1, 1]", self.rho_z)));
        }
        Ok(())
    }

    pub fn cells(&self) -> Result<CellProbs> {
        self.validate()?;
        let (pa, pb) = self.marginals();
        Ok(copula_cells(pa, pb, self.rho_z))
    }
}

/// Cell probabilities of the 2×2 table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProbs {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl CellProbs {
    pub fn discordance(&self) -> f64 {
        self.p10 + self.p01
    }

    pub fn gap(&self) -> f64 {
        self.p10 - self.p01
    }

    /// `Var(X^A − X^B) = ψ − δ²`.
    pub fn diff_variance(&self) -> f64 {
        (self.discordance() - self.gap().powi(2)).max(0.0)
    }

    /// Draws a multinomial table of `n` items.
    pub fn sample_table(&self, n: u64, rng: &mut SimRng) -> Contingency {
        let mut left = n;
        let mut mass = 1.0;
        let mut draw = |p: f64, left: &mut u64, mass: &mut f64| -> u64 {
            if *left == 0 || *mass <= 0.0 {
                return 0;
            }
            let q = (p / *mass).clamp(0.0, 1.0);
            let k = Binomial::new(*left, q).map(|b| b.sample(rng)).unwrap_or(0);
            *left -= k;
            *mass -= p;
            k
        };
        let n10 = draw(self.p10, &mut left, &mut mass);
        let n01 = draw(self.p01, &mut left, &mut mass);
        let n11 = draw(self.p11, &mut left, &mut mass);
        Contingency {
            n11,
            n10,
            n01,
            n00: left,
        }
    }
}

/// Cell probabilities when `A = 1{Z₁ ≤ Φ⁻¹(p_a)}`, `B = 1{Z₂ ≤ Φ⁻¹(p_b)}`
/// and `corr(Z₁, Z₂) = rho_z`.
pub fn copula_cells(p_a: f64, p_b: f64, rho_z: f64) -> CellProbs {
    let p11 = bvn_cdf(norm_quantile(p_a), norm_quantile(p_b), rho_z)
        .clamp((p_a + p_b - 1.0).max(0.0), p_a.min(p_b));
    CellProbs {
        p11,
        p10: p_a - p11,
        p01: p_b - p11,
        p00: 1.0 - p_a - p_b + p11,
    }
}

/// Bernoulli (phi) correlation implied by a latent correlation.
pub fn bernoulli_rho(p_a: f64, p_b: f64, rho_z: f64) -> f64 {
    let c = copula_cells(p_a, p_b, rho_z);
    (c.p11 - p_a * p_b) / (p_a * (1.0 - p_a) * p_b * (1.0 - p_b)).sqrt()
}

/// Latent correlation whose thresholded pair has Bernoulli correlation `rho`.
pub fn latent_rho_for(p_a: f64, p_b: f64, rho: f64) -> Result<f64> {
    let (lo, hi) = (bernoulli_rho(p_a, p_b, -1.0), bernoulli_rho(p_a, p_b, 1.0));
    if !(rho >= lo - 1e-12 && rho <= hi + 1e-12) {
        return Err(Error::Inadmissible {
            name: "rho",
            value: rho,
            lo,
            hi,
        });
    }
    let (mut a, mut b) = (-1.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if bernoulli_rho(p_a, p_b, mid) < rho {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// `σ_D` of the copula pair at marginals `p ± delta/2`.
pub fn latent_sigma_d(p: f64, delta: f64, rho_z: f64) -> Result<f64> {
    let spec = GeneratorSpec {
        p,
        delta,
        rho_z,
        n: 1,
        seed: 0,
    };
    Ok(spec.cells()?.diff_variance().sqrt())
}

/// `σ_D` at marginals `p ± delta/2` and a fixed Bernoulli correlation.
pub fn bernoulli_sigma_d(p: f64, delta: f64, rho: f64) -> Result<f64> {
    Ok(bernoulli_diff_variance(p + delta / 2.0, p - delta / 2.0, rho)?.sqrt())
}

fn correlated_normals(rng: &mut SimRng, rho: f64) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let e: f64 = rng.sample(StandardNormal);
    (z1, rho * z1 + (1.0 - rho * rho).max(0.0).sqrt() * e)
}

/// Binary score pair thresholded from latent bivariate normals.
pub fn gen_paired_bernoulli(spec: &GeneratorSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let (pa, pb) = spec.marginals();
    let (ta, tb) = (norm_quantile(pa), norm_quantile(pb));
    let mut rng = task_rng(spec.seed, 0);
    let mut a = Vec::with_capacity(spec.n);
    let mut b = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let (z1, z2) = correlated_normals(&mut rng, spec.rho_z);
        a.push(if z1 <= ta { 1.0 } else { 0.0 });
        b.push(if z2 <= tb { 1.0 } else { 0.0 });
    }
    Ok((a, b))
}

/// Graded score pair with Beta marginals joined by a Gaussian copula. The
/// first margin is shifted by `delta_shift` and clamped to `[0, 1]`.
pub fn gen_paired_graded(
    alpha_shape: f64,
    beta_shape: f64,
    rho_z: f64,
    delta_shift: f64,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(alpha_shape > 0.0 && beta_shape > 0.0) {
        return Err(Error::invalid(
            "shape",
            format!("Beta({alpha_shape}, {beta_shape}) needs positive shapes"),
        ));
    }
    if !(-1.0..=1.0).contains(&rho_z) {
        return Err(Error::invalid("rho_z", format!("{rho_z} not in [-1, 1]")));
    }
    let mut rng = task_rng(seed, 0);
    let to_beta = |z: f64| inv_beta_reg(alpha_shape, beta_shape, norm_cdf(z).clamp(1e-300, 1.0 - 1e-16));
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let (z1, z2) = correlated_normals(&mut rng, rho_z);
        a.push((to_beta(z1) + delta_shift).clamp(0.0, 1.0));
        b.push(to_beta(z2));
    }
    Ok((a, b))
}

/// Items grouped into `k` clusters of size `m` whose values share a
/// normal cluster effect: the within-cluster correlation is exactly `tau`.
pub fn gen_clustered_series(k: usize, m: usize, tau: f64, rng: &mut SimRng) -> (Vec<f64>, Vec<usize>) {
    let (sb, sw) = (tau.sqrt(), (1.0 - tau).sqrt());
    let mut values = Vec::with_capacity(k * m);
    let mut labels = Vec::with_capacity(k * m);
    for j in 0..k {
        let u: f64 = rng.sample(StandardNormal);
        for _ in 0..m {
            let e: f64 = rng.sample(StandardNormal);
            values.push(sb * u + sw * e);
            labels.push(j);
        }
    }
    (values, labels)
}

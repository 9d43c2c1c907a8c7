//! Intra-cluster correlation of paired differences and what it does to the
//! required count: design effect, cluster bootstrap of the verdict,
//! leave-one-cluster-out stability, and alternative cluster definitions.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TestConfig;
use crate::error::{Error, Result};
use crate::matrix::{ModelPair, ScoreMatrix};
use crate::paired::{required_n, PairedSummary, RequiredN};
use crate::rng::task_rng;
use crate::util::{quantile_sorted, sort_floats};

/// Per-cluster sufficient statistics of a series: size, mean and the sum of
/// squared deviations from that mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterAgg {
    pub m: usize,
    pub mean: f64,
    pub m2: f64,
}

/// Maps labels to dense ids in order of first appearance.
pub fn cluster_ids<S: AsRef<str>>(labels: &[S]) -> (Vec<usize>, Vec<String>) {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let ids = labels
        .iter()
        .map(|l| {
            let l = l.as_ref();
            *index.entry(l).or_insert_with(|| {
                names.push(l.to_string());
                names.len() - 1
            })
        })
        .collect();
    (ids, names)
}

pub fn aggregate(values: &[f64], ids: &[usize], k: usize) -> Vec<ClusterAgg> {
    let mut aggs = vec![
        ClusterAgg {
            m: 0,
            mean: 0.0,
            m2: 0.0
        };
        k
    ];
    for (&x, &id) in values.iter().zip(ids) {
        let a = &mut aggs[id];
        a.m += 1;
        let d = x - a.mean;
        a.mean += d / a.m as f64;
        a.m2 += d * (x - a.mean);
    }
    aggs
}

/// One-way ANOVA ICC and whether both variance components vanished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccEstimate {
    pub icc: f64,
    pub degenerate: bool,
}

/// ANOVA ICC over the given clusters; repeated entries count as distinct
/// clusters, which is what a with-replacement cluster resample needs.
pub fn icc_from_aggregates<'a, I>(aggs: I) -> Result<IccEstimate>
where
    I: IntoIterator<Item = &'a ClusterAgg> + Clone,
{
    let (mut k, mut n, mut sum, mut sum_m2) = (0usize, 0usize, 0.0, 0.0);
    for a in aggs.clone() {
        if a.m == 0 {
            return Err(Error::invalid("clusters", "every cluster must be nonempty"));
        }
        k += 1;
        n += a.m;
        sum += a.m as f64 * a.mean;
        sum_m2 += (a.m * a.m) as f64;
    }
    if k < 2 {
        return Err(Error::TooFewClusters { need: 2, got: k });
    }
    let nf = n as f64;
    let grand = sum / nf;
    let (mut ssb, mut ssw) = (0.0, 0.0);
    for a in aggs {
        ssb += a.m as f64 * (a.mean - grand).powi(2);
        ssw += a.m2;
    }
    let msb = ssb / (k - 1) as f64;
    let msw = if n > k { ssw / (n - k) as f64 } else { 0.0 };
    let n0 = (nf - sum_m2 / nf) / (k - 1) as f64;
    let denom = msb + (n0 - 1.0) * msw;
    if denom <= 0.0 || (msb == 0.0 && msw == 0.0) {
        return Ok(IccEstimate {
            icc: 0.0,
            degenerate: true,
        });
    }
    Ok(IccEstimate {
        icc: (msb - msw) / denom,
        degenerate: false,
    })
}

/// One-way ANOVA intra-cluster correlation of `d`. May be negative.
pub fn icc_anova<S: AsRef<str>>(d: &[f64], labels: &[S]) -> Result<IccEstimate> {
    if d.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: d.len(),
            right: labels.len(),
        });
    }
    let (ids, names) = cluster_ids(labels);
    icc_from_aggregates(&aggregate(d, &ids, names.len()))
}

/// `1 + (m̄ − 1)·max(icc, 0)`.
pub fn design_effect(icc: f64, m_bar: f64) -> Result<f64> {
    if !(m_bar >= 1.0) {
        return Err(Error::invalid("m_bar", format!("{m_bar} must be at least 1")));
    }
    Ok(1.0 + (m_bar - 1.0) * icc.max(0.0))
}

pub fn cluster_required_n(n_star_iid: RequiredN, de: f64) -> RequiredN {
    n_star_iid.scaled(de)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub k: usize,
    pub sizes: Vec<usize>,
    /// Arithmetic mean cluster size `N / k`.
    pub m_bar: f64,
    pub icc: f64,
    pub icc_plus: f64,
    pub de: f64,
    pub degenerate: bool,
}

pub fn cluster_stats<S: AsRef<str>>(d: &[f64], labels: &[S]) -> Result<ClusterStats> {
    if d.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: d.len(),
            right: labels.len(),
        });
    }
    let (ids, names) = cluster_ids(labels);
    let aggs = aggregate(d, &ids, names.len());
    stats_from_aggregates(&aggs)
}

fn stats_from_aggregates(aggs: &[ClusterAgg]) -> Result<ClusterStats> {
    let est = icc_from_aggregates(aggs)?;
    let sizes: Vec<usize> = aggs.iter().map(|a| a.m).collect();
    let m_bar = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
    Ok(ClusterStats {
        k: sizes.len(),
        sizes,
        m_bar,
        icc: est.icc,
        icc_plus: est.icc.max(0.0),
        de: design_effect(est.icc, m_bar)?,
        degenerate: est.degenerate,
    })
}

/// IID required count at the observed gap, with the zero-gap sentinel.
pub fn iid_required_n(summary: &PairedSummary, config: &TestConfig) -> Result<RequiredN> {
    if summary.delta_hat == 0.0 {
        return Ok(RequiredN::UNBOUNDED);
    }
    required_n(summary.delta_hat, summary.sigma_d_hat, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairClusterVerdict {
    pub pair: ModelPair,
    pub stats: ClusterStats,
    pub n_star_iid: RequiredN,
    pub n_star_cluster: RequiredN,
    pub resolved: bool,
}

fn labels_of(matrix: &ScoreMatrix) -> Result<&[String]> {
    matrix.clusters().ok_or(Error::MissingClusters)
}

pub fn cluster_verdict(
    matrix: &ScoreMatrix,
    pair: ModelPair,
    config: &TestConfig,
) -> Result<PairClusterVerdict> {
    let labels = labels_of(matrix)?;
    let summary = matrix.summarize(pair)?;
    let stats = cluster_stats(&matrix.differences(pair), labels)?;
    let n_star_iid = iid_required_n(&summary, config)?;
    let n_star_cluster = cluster_required_n(n_star_iid, stats.de);
    Ok(PairClusterVerdict {
        pair,
        resolved: n_star_cluster.is_met_by(matrix.n_items()),
        stats,
        n_star_iid,
        n_star_cluster,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterCiRow {
    pub pair: ModelPair,
    pub icc_pt: f64,
    pub icc_lo: f64,
    pub icc_hi: f64,
    pub de_pt: f64,
    pub de_lo: f64,
    pub de_hi: f64,
    pub nstar_pt: RequiredN,
    pub nstar_lo: RequiredN,
    pub nstar_hi: RequiredN,
    pub pr_unresolved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBootstrap {
    pub b_reps: usize,
    pub seed: u64,
    pub rows: Vec<ClusterCiRow>,
    /// `histogram[j]` is the number of replicates with `j` unresolved pairs.
    pub unresolved_histogram: Vec<usize>,
}

impl ClusterBootstrap {
    /// Fraction of replicates with at least `count` unresolved pairs.
    pub fn pr_unresolved_at_least(&self, count: usize) -> f64 {
        let hits: usize = self.unresolved_histogram.iter().skip(count).sum();
        hits as f64 / self.b_reps as f64
    }
}

/// One replicate's statistics for a single pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateStat {
    pub icc: f64,
    pub de: f64,
    pub n_star: RequiredN,
    pub resolved: bool,
}

/// Cluster-level resampling plan for a fixed set of pairs. The IID inputs
/// (marginals, correlation, IID required count) stay at their full-data
/// values; only the cluster structure is resampled.
#[derive(Debug, Clone)]
pub struct ClusterResampler {
    pairs: Vec<ModelPair>,
    aggs: Vec<Vec<ClusterAgg>>,
    n_star_iid: Vec<RequiredN>,
    n_items: usize,
    k: usize,
}

impl ClusterResampler {
    pub fn new(matrix: &ScoreMatrix, pairs: &[ModelPair], config: &TestConfig) -> Result<Self> {
        let labels = labels_of(matrix)?;
        let (ids, names) = cluster_ids(labels);
        if names.len() < 2 {
            return Err(Error::TooFewClusters {
                need: 2,
                got: names.len(),
            });
        }
        let mut aggs = Vec::with_capacity(pairs.len());
        let mut n_star_iid = Vec::with_capacity(pairs.len());
        for &pair in pairs {
            aggs.push(aggregate(&matrix.differences(pair), &ids, names.len()));
            n_star_iid.push(iid_required_n(&matrix.summarize(pair)?, config)?);
        }
        Ok(Self {
            pairs: pairs.to_vec(),
            aggs,
            n_star_iid,
            n_items: matrix.n_items(),
            k: names.len(),
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.k
    }

    /// Statistics of every pair on the clusters listed in `draw`.
    pub fn replicate(&self, draw: &[usize]) -> Result<Vec<ReplicateStat>> {
        let n_drawn: usize = draw.iter().map(|&j| self.aggs[0][j].m).sum();
        let m_bar = n_drawn as f64 / draw.len() as f64;
        self.aggs
            .iter()
            .zip(&self.n_star_iid)
            .map(|(aggs, &n_iid)| {
                let est = icc_from_aggregates(draw.iter().map(|&j| &aggs[j]))?;
                let de = design_effect(est.icc, m_bar)?;
                let n_star = cluster_required_n(n_iid, de);
                Ok(ReplicateStat {
                    icc: est.icc,
                    de,
                    n_star,
                    resolved: n_star.is_met_by(self.n_items),
                })
            })
            .collect()
    }

    pub fn identity(&self) -> Result<Vec<ReplicateStat>> {
        self.replicate(&(0..self.k).collect::<Vec<_>>())
    }

    pub fn run(&self, b_reps: usize, seed: u64) -> Result<ClusterBootstrap> {
        if b_reps == 0 {
            return Err(Error::invalid("b_reps", "must be at least 1"));
        }
        let point = self.identity()?;
        let reps: Vec<Vec<ReplicateStat>> = (0..b_reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = task_rng(seed, r as u64);
                let draw: Vec<usize> = (0..self.k).map(|_| rng.random_range(0..self.k)).collect();
                self.replicate(&draw)
            })
            .collect::<Result<_>>()?;

        let mut histogram = vec![0usize; self.pairs.len() + 1];
        for rep in &reps {
            histogram[rep.iter().filter(|s| !s.resolved).count()] += 1;
        }
        let rows = self
            .pairs
            .iter()
            .enumerate()
            .map(|(i, &pair)| {
                let mut icc: Vec<f64> = reps.iter().map(|r| r[i].icc).collect();
                let mut de: Vec<f64> = reps.iter().map(|r| r[i].de).collect();
                let mut ns: Vec<f64> = reps.iter().map(|r| r[i].n_star.exact()).collect();
                sort_floats(&mut icc);
                sort_floats(&mut de);
                sort_floats(&mut ns);
                let unresolved = reps.iter().filter(|r| !r[i].resolved).count();
                ClusterCiRow {
                    pair,
                    icc_pt: point[i].icc,
                    icc_lo: quantile_sorted(&icc, 0.05),
                    icc_hi: quantile_sorted(&icc, 0.95),
                    de_pt: point[i].de,
                    de_lo: quantile_sorted(&de, 0.05),
                    de_hi: quantile_sorted(&de, 0.95),
                    nstar_pt: point[i].n_star,
                    nstar_lo: RequiredN::from_exact(quantile_sorted(&ns, 0.05)),
                    nstar_hi: RequiredN::from_exact(quantile_sorted(&ns, 0.95)),
                    pr_unresolved: unresolved as f64 / b_reps as f64,
                }
            })
            .collect();
        Ok(ClusterBootstrap {
            b_reps,
            seed,
            rows,
            unresolved_histogram: histogram,
        })
    }
}

/// Cluster bootstrap of the per-pair verdicts: resample clusters with
/// replacement, recompute ICC → design effect → cluster required count.
pub fn cluster_bootstrap_verdicts(
    matrix: &ScoreMatrix,
    pairs: &[ModelPair],
    b_reps: usize,
    seed: u64,
    config: &TestConfig,
) -> Result<ClusterBootstrap> {
    ClusterResampler::new(matrix, pairs, config)?.run(b_reps, seed)
}

pub fn write_cluster_ci_csv<W: Write>(
    boot: &ClusterBootstrap,
    model_names: &[String],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "pair",
        "icc_pt",
        "icc_lo",
        "icc_hi",
        "de_pt",
        "de_lo",
        "de_hi",
        "nstar_pt",
        "nstar_lo",
        "nstar_hi",
        "pr_unresolved",
    ])?;
    for r in &boot.rows {
        w.write_record([
            format!("{} vs {}", model_names[r.pair.a], model_names[r.pair.b]),
            r.icc_pt.to_string(),
            r.icc_lo.to_string(),
            r.icc_hi.to_string(),
            r.de_pt.to_string(),
            r.de_lo.to_string(),
            r.de_hi.to_string(),
            r.nstar_pt.to_string(),
            r.nstar_lo.to_string(),
            r.nstar_hi.to_string(),
            r.pr_unresolved.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<cluster csv>".into(),
        source: e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoRow {
    pub dropped: String,
    pub n_items: usize,
    pub unresolved: usize,
}

/// Drops each cluster in turn and recounts cluster-unresolved pairs with
/// every statistic recomputed on the remaining items.
pub fn loso(matrix: &ScoreMatrix, pairs: &[ModelPair], config: &TestConfig) -> Result<Vec<LosoRow>> {
    let labels = labels_of(matrix)?;
    let (ids, names) = cluster_ids(labels);
    if names.len() < 3 {
        return Err(Error::TooFewClusters {
            need: 3,
            got: names.len(),
        });
    }
    (0..names.len())
        .into_par_iter()
        .map(|drop| {
            let keep: Vec<usize> = (0..ids.len()).filter(|&i| ids[i] != drop).collect();
            let sub = matrix.select_items(&keep)?;
            let mut unresolved = 0;
            for &pair in pairs {
                if !cluster_verdict(&sub, pair, config)?.resolved {
                    unresolved += 1;
                }
            }
            Ok(LosoRow {
                dropped: names[drop].clone(),
                n_items: sub.n_items(),
                unresolved,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum ClusterScheme {
    /// Independent uniform labels over `k` groups; empty groups vanish.
    Random { k: usize, seed: u64 },
    /// Quartiles of each item's mean score across models.
    DifficultyQuartiles,
    /// Every existing cluster split by the parity of the item's position in it.
    SplitHalf,
}

pub fn relabel_clusters(matrix: &ScoreMatrix, scheme: ClusterScheme) -> Result<ScoreMatrix> {
    let n = matrix.n_items();
    let labels: Vec<String> = match scheme {
        ClusterScheme::Random { k, seed } => {
            if k == 0 {
                return Err(Error::invalid("k", "must be at least 1"));
            }
            let mut rng = task_rng(seed, 0);
            (0..n).map(|_| format!("r{}", rng.random_range(0..k))).collect()
        }
        ClusterScheme::DifficultyQuartiles => {
            let models = matrix.n_models();
            if models < 2 {
                return Err(Error::invalid(
                    "scheme",
                    "difficulty quartiles need at least two models",
                ));
            }
            let difficulty: Vec<f64> = (0..n)
                .map(|i| (0..models).map(|m| matrix.column(m)[i]).sum::<f64>() / models as f64)
                .collect();
            let mut sorted = difficulty.clone();
            sort_floats(&mut sorted);
            let cuts = [0.25, 0.5, 0.75].map(|q| quantile_sorted(&sorted, q));
            difficulty
                .iter()
                .map(|&x| format!("q{}", 1 + cuts.iter().filter(|&&c| x > c).count()))
                .collect()
        }
        ClusterScheme::SplitHalf => {
            let existing = labels_of(matrix)?;
            let mut seen: HashMap<&str, usize> = HashMap::new();
            existing
                .iter()
                .map(|l| {
                    let pos = seen.entry(l.as_str()).or_insert(0);
                    let label = format!("{l}/{}", *pos % 2);
                    *pos += 1;
                    label
                })
                .collect()
        }
    };
    matrix.with_clusters(Some(labels))
}

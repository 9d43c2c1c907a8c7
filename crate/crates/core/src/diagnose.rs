//! The end-to-end pipeline: every pair in the family gets its tests, its
//! required counts and a verdict under each stress the data supports.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_required_n, cluster_stats, iid_required_n, ClusterStats};
use crate::config::TestConfig;
use crate::dist::norm_sf;
use crate::eprocess::{threshold_inflation_at, GridSpec};
use crate::error::{Error, Result};
use crate::family::{planning_alpha, FamilyConvention, Multiplicity};
use crate::io::CountsRow;
use crate::matrix::ScoreMatrix;
use crate::mcnemar::{mcnemar_all, required_n_mcnemar};
use crate::paired::{required_n, resolve, summarize_pair, PairedSummary, RequiredN};
use crate::report::{DataSource, DiagnoseReport};
use crate::rng::derive_seed;
use crate::sim::bootstrap::{bootstrap_nstar_ci, paired_bootstrap_test, NStarInterval};
use crate::util::nonfinite;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOptions {
    pub convention: FamilyConvention,
    /// Resamples for the bootstrap test and the required-count interval.
    pub b_reps: usize,
    pub seed: u64,
    pub grid: GridSpec,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            convention: FamilyConvention::Adjacent,
            b_reps: 500,
            seed: crate::rng::DEFAULT_SEED,
            grid: GridSpec::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedFlags {
    pub fixed_n: bool,
    pub family: bool,
    /// `None` for graded pairs, which have no discordant-sign stream.
    pub anytime: Option<bool>,
    /// `None` when the input carries no cluster labels.
    pub cluster: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub model_a: String,
    pub model_b: String,
    pub summary: PairedSummary,
    /// McNemar variants; `None` for graded pairs. With no discordant items
    /// every variant reports 1.
    pub p_chi2: Option<f64>,
    pub p_exact: Option<f64>,
    pub p_midp: Option<f64>,
    pub p_cc: Option<f64>,
    pub p_bootstrap: f64,
    /// Two-sided normal p-value of the Wald statistic; drives the
    /// step-up family level.
    pub p_wald: f64,
    pub t_stat: f64,
    pub q: f64,
    pub mde: f64,
    pub n_star_iid: RequiredN,
    pub n_star_ci: NStarInterval,
    pub n_star_discordance: Option<RequiredN>,
    pub n_star_family: RequiredN,
    #[serde(with = "nonfinite::option")]
    pub anytime_inflation: Option<f64>,
    pub n_star_anytime: Option<RequiredN>,
    pub cluster: Option<ClusterStats>,
    pub n_star_cluster: Option<RequiredN>,
    pub resolved: ResolvedFlags,
}

impl PairVerdict {
    /// `N*/N`, the factor by which the benchmark falls short (inverse of q).
    pub fn shortfall(&self) -> f64 {
        self.n_star_iid.exact() / self.summary.n as f64
    }
}

struct PairInput<'a> {
    model_a: String,
    model_b: String,
    a: Cow<'a, [f64]>,
    b: Cow<'a, [f64]>,
    labels: Option<&'a [String]>,
}

/// Everything except the family column, which needs the whole family.
fn assess(
    input: &PairInput<'_>,
    index: usize,
    config: &TestConfig,
    options: &DiagnoseOptions,
) -> Result<PairVerdict> {
    let summary = summarize_pair(&input.a, &input.b)?;
    let n = summary.n;
    let res = resolve(&summary, config)?;
    let fixed_n = res.resolved;

    let (p_chi2, p_exact, p_midp, p_cc, n_star_discordance) = match summary.counts {
        Some(t) if t.n10 + t.n01 == 0 => (
            Some(1.0),
            Some(1.0),
            Some(1.0),
            Some(1.0),
            Some(RequiredN::UNBOUNDED),
        ),
        Some(t) => {
            let p = mcnemar_all(t.n10, t.n01)?;
            let nd = required_n_mcnemar(t.n10, t.n01, t.total(), config)?;
            (Some(p.chi2), Some(p.exact), Some(p.midp), Some(p.cc), Some(nd))
        }
        None => (None, None, None, None, None),
    };

    let boot = paired_bootstrap_test(
        &input.a,
        &input.b,
        config.alpha,
        options.b_reps,
        derive_seed(options.seed, 2 * index as u64),
    )?;
    let n_star_ci = bootstrap_nstar_ci(
        &input.a,
        &input.b,
        options.b_reps,
        config,
        derive_seed(options.seed, 2 * index as u64 + 1),
    )?;

    let (anytime_inflation, n_star_anytime, anytime) = match summary.discordance() {
        Some(psi) if psi > 0.0 => {
            let factor = threshold_inflation_at(n, psi, &options.grid, config)?;
            let scaled = res.n_star.scaled(factor);
            (Some(factor), Some(scaled), Some(fixed_n && scaled.is_met_by(n)))
        }
        Some(_) => (None, Some(RequiredN::UNBOUNDED), Some(false)),
        None => (None, None, None),
    };

    let (cluster, n_star_cluster, cluster_flag) = match input.labels {
        Some(labels) => {
            let d: Vec<f64> = input.a.iter().zip(input.b.iter()).map(|(x, y)| x - y).collect();
            let stats = cluster_stats(&d, labels)?;
            let nc = cluster_required_n(iid_required_n(&summary, config)?, stats.de);
            let flag = fixed_n && nc.is_met_by(n);
            (Some(stats), Some(nc), Some(flag))
        }
        None => (None, None, None),
    };

    Ok(PairVerdict {
        model_a: input.model_a.clone(),
        model_b: input.model_b.clone(),
        p_chi2,
        p_exact,
        p_midp,
        p_cc,
        p_bootstrap: boot.p_value,
        p_wald: (2.0 * norm_sf(res.t_stat.abs())).min(1.0),
        t_stat: res.t_stat,
        q: res.q,
        mde: res.mde,
        n_star_iid: res.n_star,
        n_star_ci,
        n_star_discordance,
        n_star_family: res.n_star,
        anytime_inflation,
        n_star_anytime,
        cluster,
        n_star_cluster,
        resolved: ResolvedFlags {
            fixed_n,
            family: fixed_n,
            anytime,
            cluster: cluster_flag,
        },
        summary,
    })
}

/// Method used for the family stress: the configured one, or Bonferroni
/// when the configuration asks for no adjustment.
pub fn stress_method(config: &TestConfig) -> Multiplicity {
    match config.multiplicity {
        Multiplicity::None => Multiplicity::Bonferroni,
        m => m,
    }
}

fn run(
    inputs: Vec<PairInput<'_>>,
    source: DataSource,
    config: &TestConfig,
    options: &DiagnoseOptions,
) -> Result<DiagnoseReport> {
    config.validate()?;
    if options.b_reps < 100 {
        return Err(Error::invalid("b_reps", format!("{} < 100", options.b_reps)));
    }
    let fixed = config.unadjusted();
    let mut pairs: Vec<PairVerdict> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, input)| assess(input, i, &fixed, options))
        .collect::<Result<_>>()?;

    let method = stress_method(config);
    let level = if pairs.is_empty() {
        None
    } else {
        let p: Vec<f64> = pairs.iter().map(|v| v.p_wald).collect();
        Some(planning_alpha(&p, fixed.alpha, method)?)
    };
    if let Some(level) = level {
        let family_config = TestConfig {
            alpha: level,
            ..fixed
        };
        for v in &mut pairs {
            let s = &v.summary;
            v.n_star_family = if s.delta_hat == 0.0 {
                RequiredN::UNBOUNDED
            } else {
                required_n(s.delta_hat, s.sigma_d_hat, &family_config)?
            };
            v.resolved.family = v.resolved.fixed_n && v.n_star_family.is_met_by(s.n);
        }
    }
    Ok(DiagnoseReport::assemble(fixed, options, source, method, level, pairs))
}

/// Runs the pipeline over the configured pair family of a score matrix.
pub fn diagnose(
    matrix: &ScoreMatrix,
    config: &TestConfig,
    options: &DiagnoseOptions,
) -> Result<DiagnoseReport> {
    if matrix.n_models() < 2 {
        return Err(Error::invalid("matrix", "at least two models are required"));
    }
    let names = matrix.model_names();
    let inputs = matrix
        .pairs(options.convention)
        .into_iter()
        .map(|p| PairInput {
            model_a: names[p.a].clone(),
            model_b: names[p.b].clone(),
            a: Cow::Borrowed(matrix.column(p.a)),
            b: Cow::Borrowed(matrix.column(p.b)),
            labels: matrix.clusters(),
        })
        .collect();
    let source = DataSource::Matrix {
        items: matrix.n_items(),
        models: matrix.n_models(),
        binary: matrix.is_binary(),
        clustered: matrix.clusters().is_some(),
        convention: options.convention,
    };
    run(inputs, source, config, options)
}

/// `"A vs B"` or a rank label such as `"5v6"`; anything else names the
/// pair as a whole.
fn split_pair_label(label: &str) -> (String, String) {
    let numeric = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if let Some((a, b)) = label.split_once(" vs ") {
        return (a.trim().to_string(), b.trim().to_string());
    }
    match label.split_once('v') {
        Some((a, b)) if numeric(a) && numeric(b) => (a.to_string(), b.to_string()),
        _ => (label.to_string(), String::new()),
    }
}

/// Runs the pipeline on published 2×2 summaries; the rows form the family.
pub fn diagnose_counts(
    rows: &[CountsRow],
    config: &TestConfig,
    options: &DiagnoseOptions,
) -> Result<DiagnoseReport> {
    let inputs = rows
        .iter()
        .map(|row| {
            let (a, b) = row.expand();
            let (model_a, model_b) = split_pair_label(&row.pair);
            PairInput {
                model_a,
                model_b,
                a: Cow::Owned(a),
                b: Cow::Owned(b),
                labels: None,
            }
        })
        .collect();
    run(inputs, DataSource::Counts { rows: rows.len() }, config, options)
}

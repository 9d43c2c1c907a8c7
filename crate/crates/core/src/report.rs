//! Diagnose report: the per-pair verdicts plus family totals, the |δ̂|
//! bucket table and the reporting checklist, rendered as JSON or as a
//! plain-text table.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::TestConfig;
use crate::diagnose::{DiagnoseOptions, PairVerdict};
use crate::eprocess::GridSpec;
use crate::error::Result;
use crate::family::{FamilyConvention, Multiplicity};
use crate::util::{nonfinite, quantile_sorted, sort_floats};

/// Bumped whenever a JSON field is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Upper edges of the |δ̂| buckets in percentage points; the last bucket is
/// open-ended.
pub const BUCKET_EDGES_PCT: [f64; 4] = [1.0, 2.0, 5.0, 15.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Matrix {
        items: usize,
        models: usize,
        binary: bool,
        clustered: bool,
        convention: FamilyConvention,
    },
    Counts {
        rows: usize,
    },
}

/// Unresolved-pair counts per procedure; each stress can only add to the
/// fixed-n count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub pairs: usize,
    pub unresolved_fixed_n: usize,
    pub unresolved_family: usize,
    /// `None` when any pair is graded.
    pub unresolved_anytime: Option<usize>,
    /// `None` without cluster labels.
    pub unresolved_cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaBucket {
    pub label: String,
    pub lo_pct: f64,
    #[serde(with = "nonfinite")]
    pub hi_pct: f64,
    pub pairs: usize,
    pub unresolved: usize,
    /// Median and worst `N*/N` in the bucket; `None` when it is empty.
    #[serde(with = "nonfinite::option")]
    pub shortfall_median: Option<f64>,
    #[serde(with = "nonfinite::option")]
    pub shortfall_worst: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistRow {
    pub item: String,
    pub definition: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub schema_version: u32,
    pub config: TestConfig,
    pub seed: u64,
    pub b_reps: usize,
    pub grid: GridSpec,
    pub source: DataSource,
    pub family_method: Multiplicity,
    pub family_size: usize,
    /// Per-test level used for the family column; `None` for an empty family.
    pub family_alpha: Option<f64>,
    pub pairs: Vec<PairVerdict>,
    pub family_summary: FamilySummary,
    pub buckets: Vec<DeltaBucket>,
    pub checklist: Vec<ChecklistRow>,
}

impl DiagnoseReport {
    pub(crate) fn assemble(
        config: TestConfig,
        options: &DiagnoseOptions,
        source: DataSource,
        family_method: Multiplicity,
        family_alpha: Option<f64>,
        pairs: Vec<PairVerdict>,
    ) -> Self {
        let family_summary = family_summary(&pairs);
        let buckets = delta_buckets(&pairs);
        let mut report = Self {
            schema_version: SCHEMA_VERSION,
            config,
            seed: options.seed,
            b_reps: options.b_reps,
            grid: options.grid.clone(),
            source,
            family_method,
            family_size: pairs.len(),
            family_alpha,
            pairs,
            family_summary,
            buckets,
            checklist: Vec::new(),
        };
        report.checklist = checklist(&report);
        report
    }
}

pub fn family_summary(pairs: &[PairVerdict]) -> FamilySummary {
    let unresolved = |f: &dyn Fn(&PairVerdict) -> bool| pairs.iter().filter(|v| !f(v)).count();
    let optional = |f: &dyn Fn(&PairVerdict) -> Option<bool>| -> Option<usize> {
        pairs
            .iter()
            .map(f)
            .try_fold(0, |acc, flag| flag.map(|ok| acc + usize::from(!ok)))
    };
    FamilySummary {
        pairs: pairs.len(),
        unresolved_fixed_n: unresolved(&|v| v.resolved.fixed_n),
        unresolved_family: unresolved(&|v| v.resolved.family),
        unresolved_anytime: optional(&|v| v.resolved.anytime),
        unresolved_cluster: optional(&|v| v.resolved.cluster),
    }
}

/// Bucket index of a gap given in percentage points: `(lo, hi]`, with the
/// first bucket closed at zero.
pub fn bucket_of(delta_pct: f64) -> usize {
    BUCKET_EDGES_PCT
        .iter()
        .position(|&edge| delta_pct <= edge)
        .unwrap_or(BUCKET_EDGES_PCT.len())
}

pub fn delta_buckets(pairs: &[PairVerdict]) -> Vec<DeltaBucket> {
    let mut members: Vec<Vec<&PairVerdict>> = vec![Vec::new(); BUCKET_EDGES_PCT.len() + 1];
    for v in pairs {
        members[bucket_of(100.0 * v.summary.delta_hat.abs())].push(v);
    }
    members
        .into_iter()
        .enumerate()
        .map(|(i, group)| {
            let lo = if i == 0 { 0.0 } else { BUCKET_EDGES_PCT[i - 1] };
            let hi = BUCKET_EDGES_PCT.get(i).copied().unwrap_or(f64::INFINITY);
            let label = match i {
                0 => format!("<= {hi}%"),
                _ if hi.is_infinite() => format!("> {lo}%"),
                _ => format!("{lo}-{hi}%"),
            };
            let mut r: Vec<f64> = group.iter().map(|v| v.shortfall()).collect();
            sort_floats(&mut r);
            DeltaBucket {
                label,
                lo_pct: lo,
                hi_pct: hi,
                pairs: group.len(),
                unresolved: group.iter().filter(|v| !v.resolved.fixed_n).count(),
                shortfall_median: (!r.is_empty()).then(|| quantile_sorted(&r, 0.5)),
                shortfall_worst: r.last().copied(),
            }
        })
        .collect()
}

/// Formats at four significant figures; non-finite values as `inf`/`nan`.
pub fn sig4(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (3 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.3e}")
    }
}

/// p-values the way they are usually printed: three decimals, two
/// significant figures in scientific notation below 0.001.
pub fn format_p(p: f64) -> String {
    if p >= 1e-3 {
        format!("{p:.3}")
    } else if p >= 1e-15 {
        format!("{p:.1e}")
    } else {
        "<1e-15".into()
    }
}

fn pp(delta: f64) -> String {
    format!("{} pp", sig4(100.0 * delta))
}

fn range<T: PartialOrd + Copy>(values: impl Iterator<Item = T>) -> Option<(T, T)> {
    values.fold(None, |acc, x| match acc {
        None => Some((x, x)),
        Some((lo, hi)) => Some((
            if x < lo { x } else { lo },
            if x > hi { x } else { hi },
        )),
    })
}

fn describe_range(values: impl Iterator<Item = f64>, fmt: impl Fn(f64) -> String) -> String {
    match range(values) {
        None => "no pairs".into(),
        Some((lo, hi)) if lo == hi => fmt(lo),
        Some((lo, hi)) => format!("{} to {}", fmt(lo), fmt(hi)),
    }
}

fn checklist(report: &DiagnoseReport) -> Vec<ChecklistRow> {
    let pairs = &report.pairs;
    let p = pairs.len();
    let fs = &report.family_summary;
    let row = |item: &str, definition: &str, value: String| ChecklistRow {
        item: item.into(),
        definition: definition.into(),
        value,
    };
    let gap = if p == 1 {
        pp(pairs[0].summary.delta_hat)
    } else {
        format!(
            "|δ̂| {} over {p} pairs",
            describe_range(pairs.iter().map(|v| v.summary.delta_hat.abs()), pp)
        )
    };
    let binary = pairs.iter().all(|v| v.summary.is_binary());
    let test = if p == 0 {
        "none (empty family)".to_string()
    } else if binary {
        format!("McNemar (exact, χ², mid-p, corrected) and percentile bootstrap, B={}", report.b_reps)
    } else {
        format!("paired Wald z and percentile bootstrap, B={}", report.b_reps)
    };
    let n = describe_range(pairs.iter().map(|v| v.summary.n as f64), |x| format!("{x}"));
    let mde = describe_range(pairs.iter().map(|v| v.mde), pp);
    let q = if p == 1 {
        format!("q = {}", sig4(pairs[0].q))
    } else {
        format!("{} of {p} pairs reach q >= 1", p - fs.unresolved_fixed_n)
    };
    let straddle = pairs.iter().filter(|v| v.n_star_ci.spans(v.summary.n)).count();
    let ci = if p == 1 {
        let c = &pairs[0].n_star_ci;
        format!("[{}, {}] against N = {}", c.pct5, c.pct95, pairs[0].summary.n)
    } else {
        format!("{straddle} of {p} intervals contain N")
    };
    let family = match report.family_alpha {
        Some(level) => format!(
            "{} over m = {}, per-test level {}: {} unresolved",
            report.family_method,
            report.family_size,
            sig4(level),
            fs.unresolved_family
        ),
        None => "no family".into(),
    };
    let raw = match report.source {
        DataSource::Matrix { items, models, binary, .. } => format!(
            "{items} items x {models} models, {}",
            if binary { "0/1 scores" } else { "graded scores" }
        ),
        DataSource::Counts { rows } => format!("2x2 counts only ({rows} rows); item-level scores absent"),
    };
    vec![
        row("δ̂", "difference in mean score between the two models", gap),
        row("Paired test", "test that uses the per-item pairing", test),
        row("N", "number of items both models answered", n),
        row("δ_MDE", "smallest gap detectable at the operating point with this N", mde),
        row("q = N/N*", "resolution ratio; the gap is supported when q >= 1", q),
        row("N* CI", "5-95% bootstrap interval of the required count", ci),
        row("Multiplicity", "family-level adjustment behind any family-wide claim", family),
        row("Per-item raw", "item-level score matrix for independent re-analysis", raw),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn emit_report(report: &DiagnoseReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Text => Ok(render_text(report).into_bytes()),
    }
}

pub fn parse_report(json: &[u8]) -> Result<DiagnoseReport> {
    Ok(serde_json::from_slice(json)?)
}

fn flag(x: Option<bool>) -> &'static str {
    match x {
        Some(true) => "yes",
        Some(false) => "no",
        None => "-",
    }
}

fn opt_p(p: Option<f64>) -> String {
    p.map(format_p).unwrap_or_else(|| "-".into())
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn render_text(report: &DiagnoseReport) -> String {
    let cfg = &report.config;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "alpha={} power={} seed={} B={} family={} (m={})",
        cfg.alpha, cfg.power, report.seed, report.b_reps, report.family_method, report.family_size
    );
    out.push('\n');

    let mut rows = vec![[
        "pair", "N", "delta", "rho", "p_chi2", "p_exact", "p_boot", "N*", "q", "MDE", "fixed", "family",
        "anytime", "cluster",
    ]
    .map(String::from)
    .to_vec()];
    for v in &report.pairs {
        let s = &v.summary;
        rows.push(vec![
            format!("{} vs {}", v.model_a, v.model_b),
            s.n.to_string(),
            sig4(s.delta_hat),
            sig4(s.rho_hat),
            opt_p(v.p_chi2),
            opt_p(v.p_exact),
            if v.p_bootstrap > 0.0 {
                format_p(v.p_bootstrap)
            } else {
                format!("<{}", sig4(1.0 / report.b_reps as f64))
            },
            v.n_star_iid.to_string(),
            sig4(v.q),
            sig4(v.mde),
            flag(Some(v.resolved.fixed_n)).into(),
            flag(Some(v.resolved.family)).into(),
            flag(v.resolved.anytime).into(),
            flag(v.resolved.cluster).into(),
        ]);
    }
    out.push_str(&table(&rows));

    let fs = &report.family_summary;
    let count = |c: Option<usize>| c.map_or("-".to_string(), |c| format!("{c}/{}", fs.pairs));
    let _ = writeln!(
        out,
        "\nunresolved: fixed-n {}/{p}  family {}/{p}  anytime {}  cluster {}",
        fs.unresolved_fixed_n,
        fs.unresolved_family,
        count(fs.unresolved_anytime),
        count(fs.unresolved_cluster),
        p = fs.pairs
    );

    out.push('\n');
    let mut rows = vec![["|delta|", "pairs", "unresolved", "r med", "r worst"].map(String::from).to_vec()];
    for b in &report.buckets {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), sig4);
        rows.push(vec![
            b.label.clone(),
            b.pairs.to_string(),
            b.unresolved.to_string(),
            opt(b.shortfall_median),
            opt(b.shortfall_worst),
        ]);
    }
    out.push_str(&table(&rows));

    out.push('\n');
    let mut rows = vec![["item", "meaning", "value"].map(String::from).to_vec()];
    for c in &report.checklist {
        rows.push(vec![c.item.clone(), c.definition.clone(), c.value.clone()]);
    }
    out.push_str(&table(&rows));
    out
}

fn cell_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per pair at full precision, for plotting.
pub fn write_verdicts_csv<W: Write>(report: &DiagnoseReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "model_a",
        "model_b",
        "n",
        "delta_hat",
        "rho_hat",
        "sigma_d_hat",
        "p_chi2",
        "p_exact",
        "p_midp",
        "p_cc",
        "p_bootstrap",
        "t_stat",
        "q",
        "mde",
        "n_star_iid",
        "n_star_lo",
        "n_star_hi",
        "n_star_discordance",
        "n_star_family",
        "n_star_anytime",
        "n_star_cluster",
        "resolved_fixed_n",
        "resolved_family",
        "resolved_anytime",
        "resolved_cluster",
    ])?;
    let rn = |x: Option<crate::paired::RequiredN>| x.map(|v| v.exact().to_string()).unwrap_or_default();
    let fl = |x: Option<bool>| x.map(|v| v.to_string()).unwrap_or_default();
    for v in &report.pairs {
        let s = &v.summary;
        w.write_record([
            v.model_a.clone(),
            v.model_b.clone(),
            s.n.to_string(),
            s.delta_hat.to_string(),
            s.rho_hat.to_string(),
            s.sigma_d_hat.to_string(),
            cell_opt(v.p_chi2),
            cell_opt(v.p_exact),
            cell_opt(v.p_midp),
            cell_opt(v.p_cc),
            v.p_bootstrap.to_string(),
            v.t_stat.to_string(),
            v.q.to_string(),
            v.mde.to_string(),
            v.n_star_iid.exact().to_string(),
            v.n_star_ci.pct5.exact().to_string(),
            v.n_star_ci.pct95.exact().to_string(),
            rn(v.n_star_discordance),
            v.n_star_family.exact().to_string(),
            rn(v.n_star_anytime),
            rn(v.n_star_cluster),
            v.resolved.fixed_n.to_string(),
            v.resolved.family.to_string(),
            fl(v.resolved.anytime),
            fl(v.resolved.cluster),
        ])?;
    }
    w.flush().map_err(|source| crate::Error::Io {
        path: "<csv output>".into(),
        source,
    })?;
    Ok(())
}

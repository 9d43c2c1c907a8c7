//! The `pairdiag` command line. Every subcommand is a thin layer over
//! `pairdiag-core`; this crate owns argument parsing and the mapping from
//! failures to exit codes.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pairdiag_core::cluster::{
    cluster_bootstrap_verdicts, cluster_verdict, loso, relabel_clusters, write_cluster_ci_csv, ClusterScheme,
};
use pairdiag_core::eprocess::{discordant_signs, eprocess_new, eprocess_test, threshold_inflation_at, write_trajectory_csv};
use pairdiag_core::mcnemar::{mcnemar_all, required_n_mcnemar, DiscordantCounts};
use pairdiag_core::paired::{bernoulli_diff_variance, mde, required_n};
use pairdiag_core::report::{format_p, sig4, write_verdicts_csv};
use pairdiag_core::rng::DEFAULT_SEED;
use pairdiag_core::shortcut::{lemma_numeric_audit, write_audit_csv};
use pairdiag_core::sim::calibration::{summarize_grid, write_calibration_csv};
use pairdiag_core::sim::{calibration_grid, gen_paired_bernoulli, gen_paired_graded, GeneratorSpec, GridOptions};
use pairdiag_core::{
    diagnose, diagnose_counts, emit_report, load_counts, load_score_matrix, DiagnoseOptions, Error, ErrorKind,
    FamilyConvention, GridSpec, ModelPair, Multiplicity, ReportFormat, ScoreMatrix, TestConfig,
};
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pairdiag", version, about = "How many items does a paired model comparison need?")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Two-sided significance level.
    #[arg(long, global = true, default_value_t = 0.05)]
    alpha: f64,
    /// Target power.
    #[arg(long, global = true, default_value_t = 0.8)]
    power: f64,
    /// Which model pairs form the family.
    #[arg(long, global = true, value_enum, default_value_t = Family::Adjacent)]
    family: Family,
    /// Family-level adjustment.
    #[arg(long, global = true, value_enum, default_value_t = Method::None)]
    multiplicity: Method,
    /// Master seed for every randomized step.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Machine-readable output at full precision.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Adjacent,
    AllPairs,
}

impl From<Family> for FamilyConvention {
    fn from(f: Family) -> Self {
        match f {
            Family::Adjacent => FamilyConvention::Adjacent,
            Family::AllPairs => FamilyConvention::AllPairs,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    None,
    Bonferroni,
    Sidak,
    Holm,
    Bh,
}

impl From<Method> for Multiplicity {
    fn from(m: Method) -> Self {
        match m {
            Method::None => Multiplicity::None,
            Method::Bonferroni => Multiplicity::Bonferroni,
            Method::Sidak => Multiplicity::Sidak,
            Method::Holm => Multiplicity::Holm,
            Method::Bh => Multiplicity::Bh,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Grid {
    Uniform,
    TwoPoint,
    Beta22,
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        match g {
            Grid::Uniform => GridSpec::Uniform,
            Grid::TwoPoint => GridSpec::TwoPoint,
            Grid::Beta22 => GridSpec::beta22(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full resolution report for a score matrix or a counts table.
    Diagnose {
        /// `item_id[,cluster],<model>...` matrix, or counts with `--counts`.
        path: PathBuf,
        /// Read `pair,N,p_a,p_b,b,c[,rho]` rows instead of a matrix.
        #[arg(long)]
        counts: bool,
        /// Bootstrap resamples per pair.
        #[arg(long, default_value_t = 500)]
        b_reps: usize,
        #[arg(long, value_enum, default_value_t = Grid::Uniform)]
        grid: Grid,
        /// Also write one CSV row per pair here.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Paired items needed to resolve a gap.
    RequiredN {
        p_a: Option<f64>,
        p_b: Option<f64>,
        /// Item-level correlation between the two models.
        #[arg(long)]
        rho: Option<f64>,
        /// Mean paired difference, for graded scores.
        #[arg(long, requires = "sd", conflicts_with_all = ["p_a", "rho"])]
        mean: Option<f64>,
        /// Standard deviation of the paired difference.
        #[arg(long)]
        sd: Option<f64>,
        /// Family size for the `--multiplicity` adjustment.
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
    /// Smallest gap detectable with `n` paired items.
    Mde {
        n: f64,
        #[arg(long)]
        sd: Option<f64>,
        #[arg(long, requires_all = ["p_b", "rho"], conflicts_with = "sd")]
        p_a: Option<f64>,
        #[arg(long)]
        p_b: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
    /// McNemar p-values from discordant counts.
    Mcnemar {
        /// Items only model A got right.
        b: u64,
        /// Items only model B got right.
        c: u64,
        /// Total paired items; adds the discordance-form required count.
        n: Option<u64>,
    },
    /// How far the Cohen's h shortcut drifts from the paired count.
    ShortcutAudit {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.65, 0.8])]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.3, 0.5])]
        rho: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2])]
        delta: Vec<f64>,
        /// Write every grid cell as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster-adjusted verdicts for a labelled matrix.
    Cluster {
        path: PathBuf,
        /// Cluster-bootstrap resamples; 0 skips the bootstrap.
        #[arg(long, default_value_t = 0)]
        bootstrap: usize,
        /// Leave-one-cluster-out stability of the unresolved count.
        #[arg(long)]
        loso: bool,
        /// Replace the labels with `k` uniformly random groups.
        #[arg(long)]
        random_labels: Option<usize>,
        /// Write the bootstrap interval table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Anytime-valid test on discordant signs.
    Eprocess {
        #[command(subcommand)]
        mode: EprocessMode,
    },
    /// Type-I and power of the McNemar variants over a simulation grid.
    Calibrate {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.7, 0.9])]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.4, 0.8])]
        rho_z: Vec<f64>,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 1500)]
        trials: usize,
        #[arg(long, default_value_t = 1000)]
        b_reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic two-model score matrix.
    Gen {
        /// Midpoint accuracy; ignored with `--beta`.
        #[arg(long, default_value_t = 0.65)]
        p: f64,
        /// Gap between the two models.
        #[arg(long, default_value_t = 0.02)]
        delta: f64,
        /// Latent Gaussian correlation.
        #[arg(long, default_value_t = 0.5)]
        rho_z: f64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Graded scores with Beta(a, b) marginals instead of binary ones.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        beta: Option<Vec<f64>>,
        /// Attach uniformly random labels over this many clusters.
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum EprocessMode {
    /// Replay the discordant signs of a score matrix in item order.
    Stream {
        path: PathBuf,
        /// First model; with `--b` restricts the run to one pair.
        #[arg(long, requires = "b")]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long, value_enum, default_value_t = Grid::Uniform)]
        grid: Grid,
        /// Write the log-e trajectory of the single selected pair.
        #[arg(long, requires = "a")]
        trajectory: Option<PathBuf>,
    },
    /// E-value and threshold inflation from counts alone.
    Counts {
        b: u64,
        c: u64,
        n: u64,
        #[arg(long, value_enum, default_value_t = Grid::Uniform)]
        grid: Grid,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Io(PathBuf, io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(..) => EXIT_DATA,
            Failure::Core(e) => match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numeric => EXIT_NUMERIC,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
            Failure::Io(path, e) => format!("{}: {e}", path.display()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `argv` (program name first), runs the subcommand against stdout
/// and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match dispatch(&cli, &mut out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = out.flush();
            eprintln!("pairdiag: {}", f.message());
            f.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Outcome {
    let g = &cli.global;
    let base = TestConfig::new(g.alpha, g.power)?;
    let emit = |out: &mut dyn Write, text: String| {
        out.write_all(text.as_bytes()).map_err(|e| Failure::Io("<stdout>".into(), e))
    };
    match &cli.command {
        Command::Diagnose {
            path,
            counts,
            b_reps,
            grid,
            verdicts,
        } => {
            let options = DiagnoseOptions {
                convention: g.family.into(),
                b_reps: *b_reps,
                seed: g.seed,
                grid: (*grid).into(),
            };
            let config = base.with_family(g.multiplicity.into(), 1)?;
            let report = if *counts {
                diagnose_counts(&load_counts(path)?, &config, &options)?
            } else {
                diagnose(&load_score_matrix(path)?, &config, &options)?
            };
            if let Some(dest) = verdicts {
                write_verdicts_csv(&report, create(dest)?)?;
            }
            let format = if g.json { ReportFormat::Json } else { ReportFormat::Text };
            let bytes = emit_report(&report, format)?;
            out.write_all(&bytes).map_err(|e| Failure::Io("<stdout>".into(), e))
        }
        Command::RequiredN {
            p_a,
            p_b,
            rho,
            mean,
            sd,
            m,
        } => {
            let config = base.with_family(g.multiplicity.into(), *m)?;
            let (delta, sigma) = match (p_a, p_b, rho, mean, sd) {
                (_, _, _, Some(mean), Some(sd)) => (*mean, *sd),
                (Some(pa), Some(pb), Some(rho), None, _) => (pa - pb, bernoulli_diff_variance(*pa, *pb, *rho)?.sqrt()),
                _ => {
                    return Err(Failure::Usage(
                        "required-n needs `P_A P_B --rho R` or `--mean M --sd S`".into(),
                    ))
                }
            };
            let n_star = required_n(delta, sigma, &config)?;
            if g.json {
                emit(
                    out,
                    json_line(json!({
                        "delta": delta, "sigma_d": sigma, "n_star": n_star,
                        "n_star_ceiled": n_star.ceiled(), "config": config, "seed": g.seed,
                    })),
                )
            } else {
                emit(out, format!("{n_star}\ndelta={} sigma_d={}\n", sig4(delta), sig4(sigma)))
            }
        }
        Command::Mde {
            n,
            sd,
            p_a,
            p_b,
            rho,
            m,
        } => {
            let config = base.with_family(g.multiplicity.into(), *m)?;
            let sigma = match (sd, p_a, p_b, rho) {
                (Some(sd), ..) => *sd,
                (None, Some(pa), Some(pb), Some(rho)) => bernoulli_diff_variance(*pa, *pb, *rho)?.sqrt(),
                _ => return Err(Failure::Usage("mde needs `--sd S` or `--p-a --p-b --rho`".into())),
            };
            let gap = mde(*n, sigma, &config)?;
            if g.json {
                emit(out, json_line(json!({ "n": n, "sigma_d": sigma, "mde": gap, "config": config })))
            } else {
                emit(out, format!("{}\n", sig4(gap)))
            }
        }
        Command::Mcnemar { b, c, n } => {
            let p = mcnemar_all(*b, *c)?;
            let n_star = match n {
                Some(n) => {
                    let counts = DiscordantCounts::new(*b, *c, *n)?;
                    Some(required_n_mcnemar(counts.b, counts.c, counts.n, &base)?)
                }
                None => None,
            };
            if g.json {
                emit(out, json_line(json!({ "b": b, "c": c, "p": p, "n_star_discordance": n_star })))
            } else {
                let mut line = format!(
                    "p_chi2={} p_exact={} p_midp={} p_cc={}",
                    format_p(p.chi2),
                    format_p(p.exact),
                    format_p(p.midp),
                    format_p(p.cc)
                );
                if let Some(n_star) = n_star {
                    line.push_str(&format!(" n_star={n_star}"));
                }
                emit(out, line + "\n")
            }
        }
        Command::ShortcutAudit { p, rho, delta, out: dest } => {
            let cells = lemma_numeric_audit(p, rho, delta);
            if let Some(dest) = dest {
                write_audit_csv(&cells, create(dest)?)?;
            }
            if g.json {
                return emit(out, json_line(json!({ "cells": cells })));
            }
            let mut text = String::from("delta     max|ratio-1/2|  median rel.err  skipped\n");
            for &d in delta {
                let here: Vec<_> = cells.iter().filter(|c| c.delta == d).collect();
                let dev = here.iter().filter_map(|c| c.deviation).map(f64::abs).fold(0.0, f64::max);
                let mut rel: Vec<f64> = here.iter().filter_map(|c| c.relative_error()).collect();
                rel.sort_by(f64::total_cmp);
                let med = rel.get(rel.len() / 2).copied().unwrap_or(f64::NAN);
                let skipped = here.iter().filter(|c| c.skipped()).count();
                text.push_str(&format!("{:<9} {:<15} {:<15} {skipped}\n", sig4(d), sig4(dev), sig4(med)));
            }
            emit(out, text)
        }
        Command::Cluster {
            path,
            bootstrap,
            loso: run_loso,
            random_labels,
            out: dest,
        } => {
            let mut matrix = load_score_matrix(path)?;
            if let Some(k) = random_labels {
                matrix = relabel_clusters(&matrix, ClusterScheme::Random { k: *k, seed: g.seed })?;
            }
            let config = base.with_family(g.multiplicity.into(), 1)?;
            let pairs = matrix.pairs(g.family.into());
            cluster_command(&matrix, &pairs, &config, *bootstrap, *run_loso, dest.as_deref(), g, out)
        }
        Command::Eprocess { mode } => match mode {
            EprocessMode::Stream {
                path,
                a,
                b,
                grid,
                trajectory,
            } => {
                let matrix = load_score_matrix(path)?;
                if !matrix.is_binary() {
                    return Err(Failure::Usage("eprocess needs binary scores".into()));
                }
                let pairs = match (a, b) {
                    (Some(a), Some(b)) => vec![ModelPair {
                        a: model(&matrix, a)?,
                        b: model(&matrix, b)?,
                    }],
                    _ => matrix.pairs(g.family.into()),
                };
                let grid: GridSpec = (*grid).into();
                let mut rows = Vec::new();
                for pair in pairs {
                    let signs = discordant_signs(matrix.column(pair.a), matrix.column(pair.b));
                    let outcome = eprocess_test(&signs, base.alpha, &grid)?;
                    if let Some(dest) = trajectory {
                        write_trajectory_csv(&outcome.trajectory, base.alpha, create(dest)?)?;
                    }
                    rows.push((pair, signs.len(), outcome));
                }
                let names = matrix.model_names();
                if g.json {
                    let rows: Vec<_> = rows
                        .iter()
                        .map(|(p, d, o)| {
                            json!({
                                "model_a": names[p.a], "model_b": names[p.b], "discordant": d,
                                "rejected": o.rejected, "stopping_index": o.stopping_index,
                                "log_e": o.trajectory.last().copied().unwrap_or(0.0),
                            })
                        })
                        .collect();
                    return emit(out, json_line(json!({ "alpha": base.alpha, "grid": grid, "pairs": rows })));
                }
                let mut text = String::from("pair                      discordant  rejected  stop  log_e\n");
                for (p, d, o) in &rows {
                    let stop = o.stopping_index.map_or("-".to_string(), |s| s.to_string());
                    let log_e = o.trajectory.last().copied().unwrap_or(0.0);
                    let label = format!("{} vs {}", names[p.a], names[p.b]);
                    text.push_str(&format!("{label:<25} {d:<11} {:<9} {stop:<5} {}\n", o.rejected, sig4(log_e)));
                }
                emit(out, text)
            }
            EprocessMode::Counts { b, c, n, grid } => {
                let counts = DiscordantCounts::new(*b, *c, *n)?;
                let grid: GridSpec = (*grid).into();
                let state = eprocess_new(&grid)?;
                let log_e = state.log_e_at(counts.b as f64, counts.c as f64);
                let psi = counts.discordant() as f64 / counts.n as f64;
                if psi == 0.0 {
                    return Err(Error::DegenerateCounts.into());
                }
                let inflation = threshold_inflation_at(counts.n as usize, psi, &grid, &base)?;
                let rejected = log_e >= (1.0 / base.alpha).ln();
                if g.json {
                    emit(
                        out,
                        json_line(json!({
                            "b": b, "c": c, "n": n, "log_e": log_e, "rejected": rejected,
                            "threshold_inflation": json_f64(inflation),
                        })),
                    )
                } else {
                    emit(
                        out,
                        format!(
                            "e={} rejected={rejected} threshold_inflation={}\n",
                            sig4(log_e.exp()),
                            sig4(inflation)
                        ),
                    )
                }
            }
        },
        Command::Calibrate {
            p,
            rho_z,
            n,
            trials,
            b_reps,
            out: dest,
        } => {
            let options = GridOptions {
                n: *n,
                trials: *trials,
                b_reps: *b_reps,
                seed: g.seed,
                target_power: g.power,
            };
            let cells = calibration_grid(p, rho_z, &options, &base)?;
            if let Some(dest) = dest {
                write_calibration_csv(&cells, create(dest)?)?;
            }
            let summary = summarize_grid(&cells, base.alpha, g.power);
            if g.json {
                return emit(out, json_line(json!({ "seed": g.seed, "cells": cells, "summary": summary })));
            }
            let mut text = format!("seed={} trials={trials} n={n}\n", g.seed);
            text.push_str("variant       max size dev  median power  max power dev\n");
            for s in &summary {
                text.push_str(&format!(
                    "{:<13} {:<13} {:<13} {}\n",
                    s.variant.name(),
                    sig4(s.max_size_dev),
                    sig4(s.median_power),
                    sig4(s.max_power_dev)
                ));
            }
            emit(out, text)
        }
        Command::Gen {
            p,
            delta,
            rho_z,
            n,
            beta,
            clusters,
            out: dest,
        } => {
            let (a, b) = match beta.as_deref() {
                Some([shape_a, shape_b]) => gen_paired_graded(*shape_a, *shape_b, *rho_z, *delta, *n, g.seed)?,
                Some(_) => return Err(Failure::Usage("--beta takes two shapes".into())),
                None => gen_paired_bernoulli(&GeneratorSpec {
                    p: *p,
                    delta: *delta,
                    rho_z: *rho_z,
                    n: *n,
                    seed: g.seed,
                })?,
            };
            let mut matrix = ScoreMatrix::from_columns(vec!["a".into(), "b".into()], vec![a, b])?;
            if let Some(k) = clusters {
                matrix = relabel_clusters(&matrix, ClusterScheme::Random { k: *k, seed: g.seed })?;
            }
            match dest {
                Some(dest) => write_matrix(&matrix, create(dest)?),
                None => write_matrix(&matrix, &mut *out),
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cluster_command(
    matrix: &ScoreMatrix,
    pairs: &[ModelPair],
    config: &TestConfig,
    b_reps: usize,
    run_loso: bool,
    dest: Option<&Path>,
    g: &Global,
    out: &mut dyn Write,
) -> Outcome {
    let names = matrix.model_names();
    let verdicts = pairs
        .iter()
        .map(|&p| cluster_verdict(matrix, p, config))
        .collect::<pairdiag_core::Result<Vec<_>>>()?;
    let boot = if b_reps > 0 {
        let boot = cluster_bootstrap_verdicts(matrix, pairs, b_reps, g.seed, config)?;
        if let Some(dest) = dest {
            write_cluster_ci_csv(&boot, names, create(dest)?)?;
        }
        Some(boot)
    } else {
        None
    };
    let loso_rows = if run_loso { Some(loso(matrix, pairs, config)?) } else { None };
    let unresolved = verdicts.iter().filter(|v| !v.resolved).count();

    let text = if g.json {
        json_line(json!({
            "seed": g.seed, "pairs": verdicts, "unresolved": unresolved,
            "bootstrap": boot, "loso": loso_rows,
        }))
    } else {
        let mut text = format!("seed={} items={} pairs={}\n", g.seed, matrix.n_items(), pairs.len());
        text.push_str("pair                      k    icc       de        N* iid    N* cluster  resolved\n");
        for v in &verdicts {
            let label = format!("{} vs {}", names[v.pair.a], names[v.pair.b]);
            text.push_str(&format!(
                "{label:<25} {:<4} {:<9} {:<9} {:<9} {:<11} {}\n",
                v.stats.k,
                sig4(v.stats.icc),
                sig4(v.stats.de),
                v.n_star_iid.to_string(),
                v.n_star_cluster.to_string(),
                v.resolved
            ));
        }
        text.push_str(&format!("unresolved under clustering: {unresolved}/{}\n", verdicts.len()));
        if let Some(boot) = &boot {
            text.push_str(&format!("\ncluster bootstrap, B={}\n", boot.b_reps));
            text.push_str("pair                      icc 95% CI               N* 95% CI            P(unresolved)\n");
            for r in &boot.rows {
                let label = format!("{} vs {}", names[r.pair.a], names[r.pair.b]);
                let icc = format!("[{}, {}]", sig4(r.icc_lo), sig4(r.icc_hi));
                let n_star = format!("[{}, {}]", r.nstar_lo, r.nstar_hi);
                text.push_str(&format!("{label:<25} {icc:<24} {n_star:<20} {}\n", sig4(r.pr_unresolved)));
            }
            text.push_str(&format!(
                "P(at least {unresolved} unresolved) = {}\n",
                sig4(boot.pr_unresolved_at_least(unresolved))
            ));
        }
        if let Some(rows) = &loso_rows {
            text.push_str("\nleave one cluster out\ndropped              items   unresolved\n");
            for r in rows {
                text.push_str(&format!("{:<20} {:<7} {}\n", r.dropped, r.n_items, r.unresolved));
            }
        }
        text
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure::Io("<stdout>".into(), e))
}

fn model(matrix: &ScoreMatrix, name: &str) -> std::result::Result<usize, Failure> {
    matrix
        .model_index(name)
        .ok_or_else(|| Failure::Usage(format!("no model named `{name}`")))
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write_matrix<W: Write>(matrix: &ScoreMatrix, out: W) -> Outcome {
    let mut w = csv::Writer::from_writer(out);
    let clusters = matrix.clusters();
    let mut header = vec!["item_id".to_string()];
    if clusters.is_some() {
        header.push("cluster".into());
    }
    header.extend(matrix.model_names().iter().cloned());
    w.write_record(&header).map_err(|e| Failure::Core(e.into()))?;
    for (i, item) in matrix.items().iter().enumerate() {
        let mut row = vec![item.clone()];
        if let Some(labels) = clusters {
            row.push(labels[i].clone());
        }
        row.extend((0..matrix.n_models()).map(|m| matrix.column(m)[i].to_string()));
        w.write_record(&row).map_err(|e| Failure::Core(e.into()))?;
    }
    w.flush().map_err(|e| Failure::Io("<matrix>".into(), e))
}

fn json_line(value: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("json values always serialize");
    s.push('\n');
    s
}

fn json_f64(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

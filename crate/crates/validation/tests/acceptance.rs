//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use pairdiag_core::cluster::{cluster_required_n, cluster_stats, design_effect, icc_anova, relabel_clusters, ClusterScheme};
use pairdiag_core::eprocess::{calibrate_eprocess, threshold_inflation_at};
use pairdiag_core::family::{family_rejections, nstar_inflation, planning_alpha};
use pairdiag_core::mcnemar::{mcnemar_all, mcnemar_exact, required_n_mcnemar};
use pairdiag_core::paired::{bernoulli_diff_variance, mde, power_at, required_n, resolve, summarize_pair};
use pairdiag_core::rng::task_rng;
use pairdiag_core::shortcut::{admissible_delta_star, lemma_constant, lemma_numeric_audit, shortcut_n};
use pairdiag_core::sim::calibration::{summarize_grid, Variant};
use pairdiag_core::sim::generate::{bernoulli_sigma_d, gen_clustered_series, latent_rho_for};
use pairdiag_core::sim::*;
use pairdiag_core::util::{mean, quantile_sorted, sort_floats};
use pairdiag_core::*;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(checks: &[(bool, String)]) -> Self {
        let pass = checks.iter().all(|(ok, _)| *ok);
        let detail = checks
            .iter()
            .map(|(ok, msg)| if *ok { msg.clone() } else { format!("[x] {msg}") })
            .collect::<Vec<_>>()
            .join("; ");
        Self { pass, detail }
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn median(mut xs: Vec<f64>) -> f64 {
    sort_floats(&mut xs);
    quantile_sorted(&xs, 0.5)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = TestConfig::default();
    let sigma = bernoulli_diff_variance(0.65, 0.60, 0.30).unwrap().sqrt();
    let n_star = required_n(0.05, sigma, &cfg).unwrap().ceiled();
    let (per_arm, n_h) = shortcut_n(0.65, 0.60, 0.30, &cfg).unwrap();
    let (per_arm, n_h) = (per_arm.ceiled(), n_h.ceiled());
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(&[
        (n_star == Some(1028), format!("N* = {n_star:?} (want 1028)")),
        (per_arm == Some(736), format!("per-arm = {per_arm:?} (want 736)")),
        (n_h == Some(515), format!("n_h = {n_h:?} (want 515)")),
        (secs < 1.0, format!("{secs:.3}s < 1s")),
    ])
}

fn criterion_2() -> Outcome {
    let mut checks = Vec::new();
    for rho in [0.0, 0.3, 0.6, 0.9] {
        let c = lemma_constant(0.5, rho).unwrap();
        checks.push((within(c, 1.0 / 3.0, 1e-12), format!("C(0.5,{rho}) = {c:.15}")));
    }
    let c1 = lemma_constant(0.65, 0.0).unwrap();
    let c2 = lemma_constant(0.8, 0.5).unwrap();
    let ds = admissible_delta_star(0.65, 0.3, 0.05).unwrap();
    checks.push((within(c1, 0.31, 0.01), format!("C(0.65,0) = {c1:.4} (0.31 ± 0.01)")));
    checks.push((within(c2, 0.80, 0.01), format!("C(0.8,0.5) = {c2:.4} (0.80 ± 0.01)")));
    checks.push((within(ds, 0.43, 0.01), format!("δ*(0.65,0.3,0.05) = {ds:.4} (0.43 ± 0.01)")));
    Outcome::new(&checks)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let deltas = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2];
    let cells = lemma_numeric_audit(&[0.5, 0.65, 0.8], &[0.0, 0.3, 0.5], &deltas);
    let secs = start.elapsed().as_secs_f64();
    let max_dev = |delta: f64| {
        cells
            .iter()
            .filter(|c| c.delta == delta)
            .filter_map(|c| c.deviation)
            .map(f64::abs)
            .fold(0.0, f64::max)
    };
    let rel: Vec<f64> = cells
        .iter()
        .filter(|c| c.delta <= 0.05)
        .filter_map(|c| c.relative_error())
        .collect();
    let skipped = cells.iter().filter(|c| c.skipped()).count();
    let (d05, d20, med) = (max_dev(0.05), max_dev(0.2), median(rel));
    Outcome::new(&[
        (d05 <= 0.0008, format!("max |ratio − ½| at δ=0.05 = {d05:.5} (≤ 0.0008)")),
        (d20 <= 0.014, format!("at δ=0.20 = {d20:.5} (≤ 0.014)")),
        (med <= 0.005, format!("median rel. error δ≤0.05 = {:.4}% (≤ 0.5%)", 100.0 * med)),
        (skipped == 0, format!("{skipped} inadmissible cells")),
        (secs < 5.0, format!("{secs:.3}s < 5s")),
    ])
}

struct Printed {
    pair: String,
    p_chi2: String,
    p_exact: String,
    n_star: f64,
}

fn printed(name: &str) -> Vec<Printed> {
    let mut rdr = csv::Reader::from_path(fixture(name)).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            Printed {
                pair: r[0].to_string(),
                p_chi2: r[1].to_string(),
                p_exact: r[2].to_string(),
                n_star: r[3].parse().unwrap(),
            }
        })
        .collect()
}

/// Three decimals, a two-digit mantissa, or a `<` bound.
fn p_matches(printed: &str, value: f64) -> bool {
    if let Some(bound) = printed.strip_prefix('<') {
        return value < bound.parse::<f64>().unwrap();
    }
    let target: f64 = printed.parse().unwrap();
    if printed.contains('e') {
        let scale = 10f64.powf(target.log10().floor());
        ((value - target) / scale).abs() <= 0.05 + 1e-9
    } else {
        (value - target).abs() <= 5e-4 + 1e-12
    }
}

fn criterion_4() -> Outcome {
    let cfg = TestConfig::default();
    let mut checks = Vec::new();
    for (counts, table) in [
        ("oll_close_pairs.csv", "oll_close_pairs_expected.csv"),
        ("mmlupro_adjacent.csv", "mmlupro_adjacent_expected.csv"),
    ] {
        let rows = load_counts(fixture(counts)).unwrap();
        let (mut p_ok, mut n_ok, mut worst) = (0, 0, 0.0f64);
        for (row, e) in rows.iter().zip(printed(table)) {
            assert_eq!(row.pair, e.pair);
            let t = row.summary.counts.unwrap();
            let p = mcnemar_all(t.n10, t.n01).unwrap();
            p_ok += usize::from(p_matches(&e.p_chi2, p.chi2) && p_matches(&e.p_exact, p.exact));
            let r = resolve(&row.summary, &cfg).unwrap();
            let rel = (r.n_star.exact() - e.n_star).abs() / e.n_star;
            worst = worst.max(rel);
            n_ok += usize::from(rel < 0.01);
        }
        let k = rows.len();
        checks.push((p_ok == k, format!("{counts}: p-values {p_ok}/{k}")));
        checks.push((n_ok == k, format!("N* within 1% {n_ok}/{k} (worst {:.3}%)", 100.0 * worst)));
    }
    let rows = load_counts(fixture("mmlupro_adjacent.csv")).unwrap();
    let mut agree = 0;
    let mut worst = (0.0f64, String::new());
    for row in &rows {
        let t = row.summary.counts.unwrap();
        let connor = required_n_mcnemar(t.n10, t.n01, t.total(), &cfg).unwrap().exact();
        let paired = resolve(&row.summary, &cfg).unwrap().n_star.exact();
        let rel = (connor - paired).abs() / paired;
        agree += usize::from(rel <= 0.01);
        if rel > worst.0 {
            worst = (rel, format!("{} {connor:.1} vs {paired:.1}", row.pair));
        }
    }
    checks.push((
        agree == rows.len(),
        format!(
            "discordance vs paired within 1% {agree}/{} (worst {:.2}% at {})",
            rows.len(),
            100.0 * worst.0,
            worst.1
        ),
    ));
    Outcome::new(&checks)
}

fn criterion_5() -> Outcome {
    let f = |m, method| nstar_inflation(0.05, 0.2, m, method).unwrap();
    let b40 = f(40, Multiplicity::Bonferroni);
    let s40 = f(40, Multiplicity::Sidak);
    let b45 = f(45, Multiplicity::Bonferroni);
    let ones = [f(1, Multiplicity::Bonferroni), f(1, Multiplicity::Sidak)];
    Outcome::new(&[
        (within(b40, 2.11, 0.005), format!("Bonferroni m=40 {b40:.4}")),
        (within(s40, 2.10, 0.005), format!("Šidák m=40 {s40:.4}")),
        (within(b45, 2.14, 0.005), format!("Bonferroni m=45 {b45:.4}")),
        (ones == [1.0, 1.0], format!("m=1 → {ones:?}")),
    ])
}

fn criterion_6() -> Outcome {
    let rows = load_counts(fixture("mmlupro_adjacent.csv")).unwrap();
    let cfg = TestConfig::default();
    let options = DiagnoseOptions {
        b_reps: 200,
        ..Default::default()
    };
    let report = diagnose_counts(&rows, &cfg, &options).unwrap();
    let fs = report.family_summary;
    let mut checks = vec![
        (fs.unresolved_fixed_n == 4, format!("fixed-n {}/9", fs.unresolved_fixed_n)),
        (fs.unresolved_family == 4, format!("Bonferroni-9 {}/9", fs.unresolved_family)),
        (fs.unresolved_anytime == Some(5), format!("anytime {:?}/9", fs.unresolved_anytime)),
    ];
    // Cluster column from the printed (ICC, m̄) through the design-effect
    // identity, against the printed cluster N*.
    let m_bar = 12_032.0 / 14.0;
    let mut rdr = csv::Reader::from_path(fixture("mmlupro_cluster.csv")).unwrap();
    let (mut ok, mut unresolved, mut worst) = (0, 0, (0.0f64, String::new()));
    for (r, v) in rdr.records().zip(&report.pairs) {
        let r = r.unwrap();
        let icc: f64 = r[1].parse().unwrap();
        let de = design_effect(icc, m_bar).unwrap();
        let n_cluster = cluster_required_n(v.n_star_iid, de);
        unresolved += usize::from(!n_cluster.is_met_by(12_032));
        match r[3].strip_prefix(">=") {
            Some(bound) => ok += usize::from(n_cluster.exact() >= bound.parse::<f64>().unwrap()),
            None => {
                let want: f64 = r[3].parse().unwrap();
                let rel = (n_cluster.exact() - want).abs() / want;
                ok += usize::from(rel <= 0.02);
                if rel > worst.0 {
                    worst = (rel, format!("{} {:.0} vs {want}", &r[0], n_cluster.exact()));
                }
            }
        }
    }
    checks.push((
        ok == 9,
        format!("cluster N* within 2% {ok}/9 (worst {:.2}% at {})", 100.0 * worst.0, worst.1),
    ));
    // Reported only: the cluster verdict count needs item-level data.
    checks.push((true, format!("cluster column from printed ICC {unresolved}/9")));
    Outcome::new(&checks)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let cfg = TestConfig::default();
    let options = GridOptions {
        trials: 1500,
        ..Default::default()
    };
    let cells = calibration_grid(&[0.5, 0.7, 0.9], &[0.0, 0.4, 0.8], &options, &cfg).unwrap();
    let summary = summarize_grid(&cells, cfg.alpha, options.target_power);
    let mut checks = Vec::new();
    for s in &summary {
        checks.push((
            s.max_size_dev <= 0.015,
            format!("{} size dev {:.2}pp", s.variant.name(), 100.0 * s.max_size_dev),
        ));
    }
    let med = |v: Variant| summary.iter().find(|s| s.variant == v).unwrap().median_power;
    for v in [Variant::McnemarChi2, Variant::MidP, Variant::Bootstrap] {
        let p = med(v);
        checks.push(((0.74..=0.84).contains(&p), format!("{} median power {p:.3}", v.name())));
    }
    for v in [Variant::Exact, Variant::ContinuityCorrected] {
        let gap = options.target_power - med(v);
        checks.push((
            (0.02..=0.05).contains(&gap),
            format!("{} conservative by {:.1}pp", v.name(), 100.0 * gap),
        ));
    }
    checks.push((true, format!("{:.0}s", start.elapsed().as_secs_f64())));
    Outcome::new(&checks)
}

fn criterion_8() -> Outcome {
    let mut checks = Vec::new();
    let (k, m, reps) = (50, 20, 200);
    for (i, tau) in [0.0, 0.01, 0.05].into_iter().enumerate() {
        let est: Vec<f64> = (0..reps)
            .map(|r| {
                let mut rng = task_rng(100 + i as u64, r);
                let (d, labels) = gen_clustered_series(k, m, tau, &mut rng);
                let labels: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
                icc_anova(&d, &labels).unwrap().icc
            })
            .collect();
        let mu = mean(&est);
        let sd = (est.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (reps as f64 - 1.0)).sqrt();
        let se = sd / (reps as f64).sqrt();
        checks.push(((mu - tau).abs() <= 3.0 * se, format!("τ={tau}: mean {mu:.4} ± {se:.4}")));
    }

    let mut rng = task_rng(8, 0);
    let (d, labels) = gen_clustered_series(14, 30, 0.02, &mut rng);
    let labels: Vec<String> = labels.iter().map(|l| format!("c{l}")).collect();
    let stats = cluster_stats(&d, &labels).unwrap();
    let identity = stats.de == 1.0 + (stats.m_bar - 1.0) * stats.icc.max(0.0);
    checks.push((identity, format!("de identity exact (de = {:.4})", stats.de)));

    // Random subject labels carry no structure: cluster verdicts must match
    // the IID ones on every published pair.
    let rows = load_counts(fixture("mmlupro_adjacent.csv")).unwrap();
    let cfg = TestConfig::default();
    let mut same = 0;
    for row in &rows {
        let (a, b) = row.expand();
        let m = ScoreMatrix::from_columns(vec!["a".into(), "b".into()], vec![a, b]).unwrap();
        let m = relabel_clusters(&m, ClusterScheme::Random { k: 14, seed: 42 }).unwrap();
        let pair = ModelPair { a: 0, b: 1 };
        let v = pairdiag_core::cluster::cluster_verdict(&m, pair, &cfg).unwrap();
        let iid = resolve(&row.summary, &cfg).unwrap();
        same += usize::from(v.resolved == iid.resolved);
    }
    checks.push((same == rows.len(), format!("random relabel matches IID {same}/{}", rows.len())));
    Outcome::new(&checks)
}

fn criterion_9() -> Outcome {
    let cfg = TestConfig::default();
    let mut checks = Vec::new();
    let configs = [("ARC δ=2.4pp", 0.595, 0.024, 0.64), ("ARC δ=7.8pp", 0.55, 0.078, 0.54)];
    for (i, (name, p, delta, rho)) in configs.into_iter().enumerate() {
        let n_star = required_n(delta, bernoulli_sigma_d(p, delta, rho).unwrap(), &cfg).unwrap();
        let n_max = (10.0 * n_star.exact()).ceil() as usize;
        let run = |grid: &GridSpec| {
            calibrate_eprocess(p, rho, delta, n_max, 600, 42 + i as u64, grid, &cfg).unwrap()
        };
        let uni = run(&GridSpec::Uniform);
        let two = run(&GridSpec::TwoPoint);
        checks.push((
            uni.type1 <= 0.05 + 2.0 * uni.type1_mcse,
            format!("{name}: type-I {:.3} (mcse {:.3})", uni.type1, uni.type1_mcse),
        ));
        checks.push((uni.reject_rate >= 0.95, format!("H1 reject {:.3}", uni.reject_rate)));
        checks.push((
            (1.7..=2.5).contains(&uni.mean_stop_ratio),
            format!(
                "stop/N* {:.2} (N* {}; population N* ratio {:.2})",
                uni.mean_stop_ratio, uni.n_star, uni.mean_stop_ratio_population
            ),
        ));
        let rel = (two.mean_stop - uni.mean_stop).abs() / uni.mean_stop;
        checks.push((rel <= 0.10, format!("two-point vs uniform stop {:.1}%", 100.0 * rel)));
    }
    let factor = threshold_inflation_at(12_032, 0.05, &GridSpec::Uniform, &cfg).unwrap();
    let rows = load_counts(fixture("mmlupro_adjacent.csv")).unwrap();
    let factors: Vec<f64> = rows
        .iter()
        .map(|r| threshold_inflation_at(12_032, r.summary.discordance().unwrap(), &GridSpec::Uniform, &cfg).unwrap())
        .collect();
    let (lo, hi) = factors.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    checks.push((
        within(factor, 2.15, 0.15),
        format!("inflation at N=12032, ψ=0.05: {factor:.3} (2.15 ± 0.15; at observed ψ {lo:.2} to {hi:.2})"),
    ));
    Outcome::new(&checks)
}

/// Midpoint accuracy at which the paired count for `(delta, rho)` equals
/// `target`; bisection over the admissible range.
fn base_for_nstar(delta: f64, rho: f64, target: f64, cfg: &TestConfig) -> f64 {
    let n_at = |p: f64| required_n(delta, bernoulli_sigma_d(p, delta, rho).unwrap(), cfg).unwrap().exact();
    // N* peaks at p = 1/2 and falls towards the edges; search the upper half.
    let (mut lo, mut hi) = (0.5, 1.0 - delta / 2.0 - 1e-3);
    while bernoulli_sigma_d(hi, delta, rho).is_err() {
        hi -= 1e-3;
    }
    if n_at(lo) < target {
        return lo;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if n_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_10() -> Outcome {
    let cfg = TestConfig::default();
    let mut checks = Vec::new();
    for (i, (delta, rho, n_printed)) in [(0.063, 0.68, 193.0), (0.078, 0.54, 294.0), (0.101, 0.57, 120.0)]
        .into_iter()
        .enumerate()
    {
        let p = base_for_nstar(delta, rho, n_printed, &cfg);
        let (pa, pb) = (p + delta / 2.0, p - delta / 2.0);
        let rho_z = latent_rho_for(pa, pb, rho).unwrap();
        let spec = GeneratorSpec {
            p,
            delta,
            rho_z,
            n: 200_000,
            seed: 42 + i as u64,
        };
        let (a, b) = gen_paired_bernoulli(&spec).unwrap();
        let n_star = required_n(delta, bernoulli_sigma_d(p, delta, rho).unwrap(), &cfg).unwrap();
        let at = |scale: f64| {
            let n = (scale * n_star.exact()).ceil() as usize;
            bootstrap_power(&a, &b, n, cfg.alpha, 1000, 42).unwrap()
        };
        let (lo, mid, hi) = (at(0.8), at(1.0), at(1.2));
        checks.push((
            within(mid, 0.80, 0.04) && lo < mid && mid < hi,
            format!("δ={delta}, ρ={rho}, p={p:.3}, N*={n_star}: {lo:.3} / {mid:.3} / {hi:.3}"),
        ));
    }
    Outcome::new(&checks)
}

fn curve_crossing(power_at_n: impl Fn(usize) -> f64, n_star: f64) -> f64 {
    let ns: Vec<f64> = [0.6, 0.75, 0.9, 1.0, 1.1, 1.25, 1.4].iter().map(|s| (s * n_star).round()).collect();
    let powers: Vec<f64> = ns.iter().map(|&n| power_at_n(n as usize)).collect();
    power_crossing(&ns, &powers, 0.8).unwrap()
}

fn criterion_11() -> Outcome {
    let cfg = TestConfig::default();
    let mut checks = Vec::new();
    for (i, delta) in [0.02, 0.04, 0.08].into_iter().enumerate() {
        let (pa, pb) = (0.65, 0.65 - delta);
        let rho_z = latent_rho_for(pa, pb, 0.3).unwrap();
        let spec = GeneratorSpec {
            p: 0.65 - delta / 2.0,
            delta,
            rho_z,
            n: 30_000,
            seed: 500 + i as u64,
        };
        let (a, b) = gen_paired_bernoulli(&spec).unwrap();
        let s = summarize_pair(&a, &b).unwrap();
        let n_star = required_n(s.delta_hat, s.sigma_d_hat, &cfg).unwrap().exact();
        let cross = curve_crossing(|n| bootstrap_power(&a, &b, n, cfg.alpha, 2000, 9 + i as u64).unwrap(), n_star);
        let rel = (cross - n_star) / n_star;
        checks.push((rel.abs() <= 0.05, format!("δ={delta}: crossing {cross:.0} vs N* {n_star:.0} ({:+.1}%)", 100.0 * rel)));
    }
    let (a, b) = gen_paired_graded(4.0, 2.0, 0.3, 0.02, 30_000, 600).unwrap();
    let s = summarize_pair(&a, &b).unwrap();
    let n_star = required_n(s.delta_hat, s.sigma_d_hat, &cfg).unwrap().exact();
    let cross = curve_crossing(|n| bootstrap_wald_power(&a, &b, n, cfg.alpha, 2000, 19).unwrap(), n_star);
    let rel = (cross - n_star) / n_star;
    checks.push((
        rel.abs() <= 0.06,
        format!("Beta(4,2): crossing {cross:.0} vs paired-t {n_star:.0} ({:+.1}%)", 100.0 * rel),
    ));
    Outcome::new(&checks)
}

fn criterion_12() -> Outcome {
    let cfg = TestConfig::default();
    let alpha = cfg.level().unwrap();
    let zsum = cfg.z_sum().unwrap();
    let mut rng = task_rng(12, 0);
    let mut round_trip = true;
    let mut q_equiv = true;
    for _ in 0..2000 {
        let delta = rng.random_range(0.002..0.3);
        let sigma = rng.random_range(0.05..1.0);
        let n = required_n(delta, sigma, &cfg).unwrap().exact();
        if n >= 1.0 {
            round_trip &= (mde(n, sigma, &cfg).unwrap() - delta).abs() <= 1e-9 * delta;
            round_trip &= power_at(delta, sigma, n, alpha).unwrap() >= cfg.power - 1e-12;
        }
        let t = Contingency {
            n11: rng.random_range(0..500),
            n10: rng.random_range(1..300),
            n01: rng.random_range(0..300),
            n00: rng.random_range(1..500),
        };
        if t.n10 != t.n01 {
            let r = resolve(&PairedSummary::from_contingency(t).unwrap(), &cfg).unwrap();
            q_equiv &= (r.q >= 1.0) == (r.t_stat.abs() >= zsum);
        }
    }
    let mut mcnemar_ok = true;
    for b in 0..200u64 {
        for c in 0..200u64 {
            if b + c == 0 {
                continue;
            }
            let p = mcnemar_all(b, c).unwrap();
            mcnemar_ok &= p == mcnemar_all(c, b).unwrap() && p.cc >= p.chi2 && p.midp <= p.exact;
        }
    }
    let mut brute_ok = true;
    for n in 1..=30u64 {
        let row: Vec<f64> = (0..=n).map(|k| binom(n, k)).collect();
        let total: f64 = row.iter().sum();
        for b in 0..=n {
            let hi = b.max(n - b);
            let tail: f64 = row[hi as usize..].iter().sum();
            let want = (2.0 * tail / total).min(1.0);
            brute_ok &= (mcnemar_exact(b, n - b).unwrap() - want).abs() <= 1e-12;
        }
    }
    let mut inclusion = true;
    for _ in 0..1000 {
        let m = rng.random_range(1..40);
        let ps: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
        let bonf = family_rejections(&ps, 0.05, Multiplicity::Bonferroni).unwrap();
        for method in [Multiplicity::Holm, Multiplicity::Bh] {
            let other = family_rejections(&ps, 0.05, method).unwrap();
            inclusion &= bonf.iter().zip(&other).all(|(b, o)| !b || *o);
        }
        inclusion &= planning_alpha(&ps, 0.05, Multiplicity::Holm).unwrap() == 0.05 / m as f64;
    }
    let spec = GeneratorSpec {
        p: 0.7,
        delta: 0.02,
        rho_z: 0.5,
        n: 5000,
        seed: 3,
    };
    let (a, b) = gen_paired_bernoulli(&spec).unwrap();
    let deterministic = gen_paired_bernoulli(&spec).unwrap() == (a.clone(), b.clone())
        && paired_bootstrap_test(&a, &b, 0.05, 500, 1).unwrap() == paired_bootstrap_test(&a, &b, 0.05, 500, 1).unwrap()
        && bootstrap_power(&a, &b, 1000, 0.05, 500, 2).unwrap() == bootstrap_power(&a, &b, 1000, 0.05, 500, 2).unwrap();
    Outcome::new(&[
        (round_trip, "inversion round-trips".into()),
        (q_equiv, "q ⇔ Wald threshold".into()),
        (mcnemar_ok, "McNemar symmetry and ordering".into()),
        (brute_ok, "exact = enumeration for b+c ≤ 30".into()),
        (inclusion, "Holm, BH ⊇ Bonferroni".into()),
        (deterministic, "fixed-seed determinism".into()),
    ])
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128) as f64
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (id, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let out = run();
        failed += usize::from(!out.pass);
        println!("criterion {id}: {} | {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

use std::path::PathBuf;

use pairdiag_core::cluster::{cluster_required_n, design_effect};
use pairdiag_core::io::read_score_matrix;
use pairdiag_core::report::{emit_report, parse_report, render_text, ReportFormat};
use pairdiag_core::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

struct Expected {
    pair: String,
    p_chi2: String,
    p_exact: String,
    n_star: f64,
}

fn expected(name: &str) -> Vec<Expected> {
    let mut rdr = csv::Reader::from_path(fixture(name)).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            Expected {
                pair: r[0].to_string(),
                p_chi2: r[1].to_string(),
                p_exact: r[2].to_string(),
                n_star: r[3].parse().unwrap(),
            }
        })
        .collect()
}

/// A printed p-value either has three decimals, a two-digit mantissa, or is
/// a `<1e-15` bound.
fn matches_printed(printed: &str, value: f64) -> bool {
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

fn quick() -> DiagnoseOptions {
    DiagnoseOptions {
        b_reps: 200,
        ..Default::default()
    }
}

fn reconcile(counts: &str, printed: &str) {
    let rows = load_counts(fixture(counts)).unwrap();
    let exp = expected(printed);
    assert_eq!(rows.len(), exp.len());
    let report = diagnose_counts(&rows, &TestConfig::default(), &quick()).unwrap();
    for (v, e) in report.pairs.iter().zip(&exp) {
        let row = rows.iter().find(|r| r.pair == e.pair).unwrap();
        assert_eq!(v.summary, row.summary);
        assert!(matches_printed(&e.p_chi2, v.p_chi2.unwrap()), "{} chi2 {:?}", e.pair, v.p_chi2);
        assert!(matches_printed(&e.p_exact, v.p_exact.unwrap()), "{} exact {:?}", e.pair, v.p_exact);
        let rel = (v.n_star_iid.exact() - e.n_star).abs() / e.n_star;
        assert!(rel < 0.01, "{}: N* {} vs {}", e.pair, v.n_star_iid, e.n_star);
        if let Some(rho) = row.rho_printed {
            assert!((v.summary.rho_hat - rho).abs() < 0.006, "{} rho {}", e.pair, v.summary.rho_hat);
        }
    }
}

#[test]
fn oll_close_pairs_reconcile() {
    reconcile("oll_close_pairs.csv", "oll_close_pairs_expected.csv");
}

#[test]
fn mmlupro_pairs_reconcile() {
    reconcile("mmlupro_adjacent.csv", "mmlupro_adjacent_expected.csv");
}

#[test]
fn mmlupro_verdict_counts() {
    let rows = load_counts(fixture("mmlupro_adjacent.csv")).unwrap();
    let report = diagnose_counts(&rows, &TestConfig::default(), &quick()).unwrap();
    let fs = report.family_summary;
    assert_eq!(fs.pairs, 9);
    assert_eq!(fs.unresolved_fixed_n, 4);
    assert_eq!(fs.unresolved_family, 4);
    assert_eq!(fs.unresolved_anytime, Some(5));
    let flipped: Vec<&str> = report
        .pairs
        .iter()
        .filter(|v| v.resolved.fixed_n && v.resolved.anytime == Some(false))
        .map(|v| v.model_a.as_str())
        .collect();
    assert_eq!(flipped, ["5"]);
}

#[test]
fn all_pairs_family_does_not_change_unresolved_set() {
    // m = 45 pushes every resolved MMLU-Pro pair's N* up by about 2.14, yet
    // all of them still clear N.
    let rows = load_counts(fixture("mmlupro_adjacent.csv")).unwrap();
    let config = TestConfig::default().with_family(Multiplicity::Bonferroni, 45).unwrap();
    let report = diagnose_counts(&rows, &config, &quick()).unwrap();
    assert_eq!(report.family_summary.unresolved_family, 4);
}

#[test]
fn cluster_table_design_effect_identity() {
    let mut rdr = csv::Reader::from_path(fixture("mmlupro_cluster.csv")).unwrap();
    let iid = expected("mmlupro_adjacent_expected.csv");
    let m_bar = 12_032.0 / 14.0;
    for (r, e) in rdr.records().zip(&iid) {
        let r = r.unwrap();
        let icc: f64 = r[1].parse().unwrap();
        let de_printed: f64 = r[2].parse().unwrap();
        let de = design_effect(icc, m_bar).unwrap();
        // The printed ICC carries one or two significant figures, so the
        // recomputed DE inherits that rounding.
        let icc_step = if icc.abs() >= 0.01 { 5e-4 } else { 5e-5 };
        assert!((de - de_printed).abs() <= icc_step * (m_bar - 1.0) + 0.01, "{}: {de}", &r[0]);
        let n_cluster = cluster_required_n(RequiredN::from_exact(e.n_star), de_printed);
        match r[3].strip_prefix(">=") {
            Some(bound) => assert!(n_cluster.exact() >= bound.parse::<f64>().unwrap()),
            None => {
                let printed: f64 = r[3].parse().unwrap();
                let rel = (n_cluster.exact() - printed).abs() / printed;
                assert!(rel < 0.02, "{}: {} vs {printed}", &r[0], n_cluster);
            }
        }
    }
}

#[test]
fn handwritten_matrix_loads() {
    let m = load_score_matrix(fixture("handwritten_4x2.csv")).unwrap();
    assert_eq!(m.n_items(), 4);
    assert!(m.is_binary());
    let report = diagnose(&m, &TestConfig::default(), &quick()).unwrap();
    assert_eq!(report.pairs.len(), 1);
    assert_eq!(report.pairs[0].model_a, "model_a");
}

#[test]
fn report_round_trips_and_is_deterministic() {
    let rows = load_counts(fixture("oll_close_pairs.csv")).unwrap();
    let a = diagnose_counts(&rows, &TestConfig::default(), &quick()).unwrap();
    let b = diagnose_counts(&rows, &TestConfig::default(), &quick()).unwrap();
    let json = emit_report(&a, ReportFormat::Json).unwrap();
    assert_eq!(json, emit_report(&b, ReportFormat::Json).unwrap());
    assert_eq!(parse_report(&json).unwrap(), a);
    let total: usize = a.buckets.iter().map(|b| b.pairs).sum();
    assert_eq!(total, a.pairs.len());
    assert_eq!(a.checklist.len(), 8);
    assert!(render_text(&a).contains("HS: gemma-7b vs Llama-3-8B"));
}

#[test]
fn clustered_matrix_fills_cluster_column() {
    let mut csv = String::from("item_id,cluster,m1,m2,m3\n");
    for i in 0..120 {
        let group = i % 4;
        let a = u8::from(i % 3 != 0);
        let b = u8::from(i % 5 != 0 && group != 0);
        let c = u8::from(i % 7 == 0);
        csv.push_str(&format!("i{i},g{group},{a},{b},{c}\n"));
    }
    let m = read_score_matrix(csv.as_bytes()).unwrap();
    let report = diagnose(&m, &TestConfig::default(), &quick()).unwrap();
    let fs = report.family_summary;
    assert!(fs.unresolved_cluster.is_some());
    assert!(fs.unresolved_cluster.unwrap() >= fs.unresolved_fixed_n);
    for v in &report.pairs {
        let stats = v.cluster.as_ref().unwrap();
        assert_eq!(stats.k, 4);
        assert!(v.n_star_cluster.unwrap() >= v.n_star_iid);
    }
}

#[test]
fn graded_matrix_has_no_mcnemar_or_anytime() {
    let csv = "item_id,x,y\na,0.9,0.5\nb,0.2,0.1\nc,0.75,0.7\nd,0.4,0.45\ne,1,0.6\n";
    let m = read_score_matrix(csv.as_bytes()).unwrap();
    let report = diagnose(&m, &TestConfig::default(), &quick()).unwrap();
    let v = &report.pairs[0];
    assert!(v.p_chi2.is_none() && v.n_star_discordance.is_none());
    assert_eq!(v.resolved.anytime, None);
    assert_eq!(report.family_summary.unresolved_anytime, None);
}

#[test]
fn shortcut_halves_mmlupro_requirements() {
    use pairdiag_core::paired::required_n;
    use pairdiag_core::shortcut::shortcut_n;
    let rows = load_counts(fixture("mmlupro_adjacent.csv")).unwrap();
    let cfg = TestConfig::default();
    let mut ratios: Vec<f64> = rows
        .iter()
        .map(|r| {
            let s = &r.summary;
            let (_, n_h) = shortcut_n(s.p_a, s.p_b, s.rho_hat, &cfg).unwrap();
            n_h.exact() / required_n(s.delta_hat, s.sigma_d_hat, &cfg).unwrap().exact()
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    assert!((ratios[4] - 0.5).abs() < 5e-4, "median {}", ratios[4]);
    assert!(ratios[0] >= 0.49 && ratios[8] <= 0.51, "{ratios:?}");
}

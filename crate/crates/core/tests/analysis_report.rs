mod common;

use common::*;
use posterior_bench::analysis::{mean, quantile_sorted};
use posterior_bench::pipeline::compare_summaries;
use posterior_bench::report::*;
use posterior_bench::*;
use proptest::prelude::*;

#[test]
fn quantile_type7_small_cases() {
    let xs = [3.0, 1.0, 2.0, 4.0];
    assert_eq!(quantile(&xs, 0.0).unwrap(), 1.0);
    assert_eq!(quantile(&xs, 1.0).unwrap(), 4.0);
    assert_eq!(quantile(&xs, 0.5).unwrap(), 2.5);
    // h = 0.025 * 3 = 0.075
    assert!((quantile(&xs, 0.025).unwrap() - 1.075).abs() < 1e-15);
    assert_eq!(quantile(&[7.0], 0.3).unwrap(), 7.0);
    assert!(quantile(&[], 0.5).is_err());
    assert!(quantile(&xs, 1.5).is_err());
    assert!(posterior_bound(&xs, 1.0).is_err());
}

#[test]
fn published_overlap_and_containment() {
    let t = published_summaries();
    let report = compare_summaries(&t, "ERAi").unwrap();
    let by = |l: &str| report.results.iter().find(|r| r.pair.1 == l).unwrap();
    assert_eq!(round_half_even(by("d01").theta_overlap_len, 2), "0.09");
    assert_eq!(round_half_even(by("d02").theta_overlap_len, 2), "0.51");
    assert_eq!(round_half_even(by("d03").theta_overlap_len, 2), "0.37");
    assert_eq!(report.theta_ranking, ["d02", "d03", "d01"]);
    assert!(!by("d01").theta_contains_ref_mean);
    assert!(by("d02").theta_contains_ref_mean);
    assert!(by("d03").sigma_contains_ref_mean);
    assert!(!by("d02").sigma_contains_ref_mean);
    assert!(!by("d01").sigma_contains_ref_mean);
    assert!(matches!(
        compare_summaries(&t, "d09"),
        Err(Error::UnknownReference { .. })
    ));
}

#[test]
fn level_mismatch_is_rejected() {
    let mut t = published_summaries();
    t[1].theta_bound.level = 0.9;
    assert!(compare(&t[0], &t[1..]).is_err());
}

#[test]
fn published_text_rendering() {
    let text = render_summary_table(&published_summaries(), TableFormat::Text, None).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(&lines[1..5], &PUBLISHED_TEXT);
    for h in ["θ", "θ PB", "σ²", "σ² PB"] {
        assert!(lines[0].contains(h));
    }
    let json = render_summary_table(&published_summaries(), TableFormat::Json, None).unwrap();
    let doc: SummaryDocument = serde_json::from_str(&json).unwrap();
    assert_eq!(doc.rows[0].display.sigma_sq_pb, "(8.30, 11.93)");
    assert_eq!(doc.rows[0].summary.sigma_sq_mean, 9.90);
}

#[test]
fn provenance_lines_precede_table() {
    let prov = Provenance::new(42, Prior::from_climatology(7.48, 1.27).unwrap(), 0.95);
    let text =
        render_summary_table(&published_summaries(), TableFormat::Text, Some(&prov)).unwrap();
    assert!(text.starts_with("# tool_version="));
    assert!(text.contains("# master_seed=42"));
    assert!(text.contains("type-7"));
}

#[test]
fn half_even_rounding() {
    assert_eq!(round_half_even(0.125, 2), "0.12");
    assert_eq!(round_half_even(0.135, 2), "0.14");
    assert_eq!(round_half_even(2.675, 2), "2.68");
    assert_eq!(round_half_even(-0.005, 2), "0.00");
    assert_eq!(round_half_even(9.9, 2), "9.90");
    assert_eq!(round_half_even(11.925, 2), "11.92");
}

fn d01_draws(s: usize) -> JointSamples {
    let prior = Prior::new(7.48, 1.0, 1.0, 1.6129).unwrap();
    let post = posterior_update(
        &prior,
        &SampleStats::new(200, Some(4.80), Some(7.08)).unwrap(),
    )
    .unwrap();
    sample_joint(&post, &SamplerConfig::new(42, s).with_chunk_size(1000)).unwrap()
}

#[test]
fn sigma_bound_equals_reciprocal_precision_bound() {
    // odd S - 1 divisible by 40 puts both quantiles on order statistics, so the
    // reciprocal map swaps endpoints exactly
    let draws = d01_draws(40_001);
    let s = posterior_bound(&draws.sigma_sq, 0.95).unwrap();
    let p = posterior_bound(&draws.precision(), 0.95).unwrap();
    assert_eq!(s.lo, 1.0 / p.hi);
    assert_eq!(s.hi, 1.0 / p.lo);
}

#[test]
fn mc_means_close_to_analytic() {
    let draws = d01_draws(200_000);
    assert!((mean(&draws.theta) - 4.813333333333333).abs() < 0.01);
    assert!((mean(&draws.sigma_sq) - 7.124017922948074).abs() < 0.05);
}

#[test]
fn density_of_normal_draws_matches_pdf() {
    let mut rng = posterior_bench::rng::stream_rng(3, 0);
    let xs: Vec<f64> = (0..200_000)
        .map(|_| sample_normal(0.0, 1.0, &mut rng).unwrap())
        .collect();
    let d = density_summary(&xs, 60).unwrap();
    assert!((d.integral() - 1.0).abs() < 1e-12);
    for b in d.bins.iter().filter(|b| b.center.abs() < 3.0) {
        assert!((b.density - normal_pdf(b.center)).abs() < 0.02, "{b:?}");
    }
    let flat = density_summary(&[2.0; 10], 50).unwrap();
    assert_eq!(flat.bins.len(), 1);
    assert_eq!(flat.integral(), 1.0);
}

#[test]
fn marginal_documents_carry_bounds_and_peak_near_mode() {
    let draws = d01_draws(100_000);
    let doc = render_marginal("d01", &draws, Marginal::Theta, 50, 0.95, Some(4.26)).unwrap();
    let b = posterior_bound(&draws.theta, 0.95).unwrap();
    assert_eq!(
        header_value(&doc, "bound_lo")
            .unwrap()
            .parse::<f64>()
            .unwrap(),
        b.lo
    );
    assert_eq!(
        header_value(&doc, "bound_hi")
            .unwrap()
            .parse::<f64>()
            .unwrap(),
        b.hi
    );
    assert_eq!(header_value(&doc, "reference_mean"), Some("4.26"));
    let width: f64 = header_value(&doc, "bin_width").unwrap().parse().unwrap();
    let rows: Vec<(f64, f64)> = doc
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("center"))
        .map(|l| {
            let (c, d) = l.split_once(',').unwrap();
            (c.parse().unwrap(), d.parse().unwrap())
        })
        .collect();
    let peak = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    assert!(
        (peak - 4.813333333333333).abs() <= 1.5 * width,
        "peak {peak}"
    );
    let prec = render_marginal("d01", &draws, Marginal::Precision, 50, 0.95, None).unwrap();
    assert_eq!(header_value(&prec, "which"), Some("precision"));
}

#[test]
fn joint_scatter_thinning() {
    let draws = d01_draws(1000);
    let full = render_joint_scatter("d01", &draws, None).unwrap();
    let thin = render_joint_scatter("d01", &draws, Some(10)).unwrap();
    let rows = |d: &str| d.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows(&full), 1000);
    assert_eq!(rows(&thin), 100);
    assert_eq!(
        header_value(&thin, "mc_mean_theta"),
        header_value(&full, "mc_mean_theta")
    );
    assert!(render_joint_scatter("d01", &draws, Some(0)).is_err());
    assert!(render_joint_scatter("d01", &draws, Some(1000)).is_err());
}

proptest! {
    #[test]
    fn quantile_affine_equivariant(
        xs in prop::collection::vec(-100.0..100.0f64, 1..300),
        p in 0.0..=1.0f64, a in 0.1..10.0f64, c in -50.0..50.0f64,
    ) {
        let q = quantile(&xs, p).unwrap();
        let ys: Vec<f64> = xs.iter().map(|x| a * x + c).collect();
        let qy = quantile(&ys, p).unwrap();
        prop_assert!((qy - (a * q + c)).abs() < 1e-9 * (1.0 + qy.abs()));
    }

    #[test]
    fn quantile_monotone_in_p(mut xs in prop::collection::vec(-100.0..100.0f64, 1..300), p in 0.0..1.0f64, dp in 0.0..1.0f64) {
        xs.sort_by(f64::total_cmp);
        let p2 = (p + dp).min(1.0);
        prop_assert!(quantile_sorted(&xs, p) <= quantile_sorted(&xs, p2));
    }

    #[test]
    fn overlap_symmetric_and_bounded(a in -10.0..10.0f64, la in 0.0..5.0f64, b in -10.0..10.0f64, lb in 0.0..5.0f64) {
        let x = Interval::new(a, a + la, 0.95).unwrap();
        let y = Interval::new(b, b + lb, 0.95).unwrap();
        let o = interval_overlap(&x, &y);
        prop_assert_eq!(o, interval_overlap(&y, &x));
        prop_assert!(o >= 0.0 && o <= la.min(lb) + 1e-12);
        prop_assert_eq!(interval_overlap(&x, &x), x.len());
    }

    #[test]
    fn density_integrates_to_one(xs in prop::collection::vec(-1e3..1e3f64, 1..500), bins in 1usize..100) {
        let d = density_summary(&xs, bins).unwrap();
        prop_assert!((d.integral() - 1.0).abs() < 1e-9);
    }
}

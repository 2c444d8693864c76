use covert_route::harness::{
    run_sweep, summarize, write_raw_csv, write_summary_csv, BaseParams, DrawMode, SweepAxis, SweepSpec, RAW_HEADER,
    SUMMARY_HEADER,
};
use covert_route_core::Regime;

fn spec(axis: SweepAxis, values: Vec<f64>, draw_mode: DrawMode) -> SweepSpec {
    SweepSpec {
        axis,
        values,
        base: BaseParams { n_relays: 15, n_wardens: 10, ..BaseParams::default() },
        trials: 24,
        base_seed: 1000,
        regimes: Regime::ALL.to_vec(),
        draw_mode,
    }
}

fn csv(spec: &SweepSpec, jobs: usize) -> (Vec<u8>, Vec<u8>) {
    let r = run_sweep(spec, jobs).unwrap();
    let (mut raw, mut summary) = (Vec::new(), Vec::new());
    write_raw_csv(&r, &mut raw).unwrap();
    write_summary_csv(&r, &mut summary).unwrap();
    (raw, summary)
}

#[test]
fn csv_is_identical_for_any_worker_count() {
    for s in [
        spec(SweepAxis::Delta, vec![0.01, 0.05, 0.1], DrawMode::Nested),
        spec(SweepAxis::NWardens, vec![2.0, 6.0, 12.0], DrawMode::Independent),
        spec(SweepAxis::Alpha, vec![2.0, 3.0, 4.5], DrawMode::Nested),
    ] {
        let one = csv(&s, 1);
        assert_eq!(one, csv(&s, 8));
        assert_eq!(one, csv(&s, 3));
    }
}

#[test]
fn row_counts_and_headers() {
    let s = spec(SweepAxis::NNodes, vec![0.0, 5.0, 10.0], DrawMode::Nested);
    let (raw, summary) = csv(&s, 0);
    let raw = String::from_utf8(raw).unwrap();
    let summary = String::from_utf8(summary).unwrap();
    assert_eq!(raw.lines().next(), Some(RAW_HEADER));
    assert_eq!(summary.lines().next(), Some(SUMMARY_HEADER));
    assert_eq!(raw.lines().count(), 1 + 3 * 4 * 24);
    assert_eq!(summary.lines().count(), 1 + 3 * 4);
}

#[test]
fn means_average_the_raws_and_ik_dominates() {
    let r = run_sweep(&spec(SweepAxis::Delta, vec![0.02, 0.08], DrawMode::Nested), 0).unwrap();
    for c in &r.cells {
        assert_eq!(c.rate_raw.len() + c.failures, 24);
        let m = c.rate_raw.iter().sum::<f64>() / c.rate_raw.len() as f64;
        assert_eq!(m, c.mean_rate);
    }
    let rows = summarize(&r);
    for v in [0.02, 0.08] {
        let get = |g: Regime| rows.iter().find(|row| row.axis_value == v && row.regime == g).unwrap();
        assert!(get(Regime::MtIk).mean_rate >= get(Regime::MtSk).mean_rate);
        assert!(get(Regime::MdIk).mean_delay <= get(Regime::MdSk).mean_delay);
    }
}

use radpair::montecarlo::sample_yield_from_record;
use radpair::precision::heading_grid;
use radpair::*;

fn record(p: &SystemParams) -> TrajectoryRecord {
    propagate(p, FieldMode::Magnetic, &PropagationConfig::default().undecimated()).unwrap()
}

fn zeno_j10() -> SystemParams {
    SystemParams::default().with_regime(Regime::Zeno).with_j(10.0).with_b(0.5)
}

#[test]
fn agrees_with_quadrature_at_large_n() {
    let rec = record(&zeno_j10());
    let det = triplet_yield(&rec);
    let mc = sample_yield_from_record(&rec, 100_000, 42).unwrap();
    assert!((mc.y_t_hat - det.y_t).abs() < 3.0 * mc.stderr);
    let p = mc.y_t_hat / 100.0;
    assert_eq!(mc.stderr, (p * (1.0 - p) / 100_000.0).sqrt() * 100.0);
}

#[test]
fn unreacted_fraction_matches() {
    let rec = record(&zeno_j10());
    let det = triplet_yield(&rec).unreacted / 100.0;
    let mc = sample_yield_from_record(&rec, 100_000, 5).unwrap();
    let stderr = (det * (1.0 - det) / 100_000.0).sqrt();
    assert!((mc.unreacted / 100.0 - det).abs() < 3.0 * stderr, "{} vs {det}", mc.unreacted);
}

#[test]
fn hard_cap_survivors_are_unreacted() {
    let p = zeno_j10();
    let cfg = PropagationConfig { hard_cap: Some(1.0), ..Default::default() }.undecimated();
    let rec = propagate(&p, FieldMode::Magnetic, &cfg).unwrap();
    assert!(rec.hard_cap_hit);
    let det = triplet_yield(&rec);
    let mc = sample_yield_from_record(&rec, 20_000, 9).unwrap();
    assert!(mc.unreacted > 10.0);
    assert!((mc.unreacted - det.unreacted).abs() < 4.0 * (det.unreacted * (100.0 - det.unreacted) / 20_000.0).sqrt());
}

#[test]
fn pure_triplet_channel() {
    let p = SystemParams::new(0.5, 5.0, 3.0, 0.0, 1.4);
    let mc = sample_yield(&p, FieldMode::Magnetic, 10_000, 3, &PropagationConfig::default()).unwrap();
    assert_eq!(mc.n_singlet, 0);
    assert_eq!(mc.y_t_hat + mc.unreacted, 100.0);
}

#[test]
fn error_shrinks_like_inverse_root_n() {
    let rec = record(&SystemParams::default().with_regime(Regime::Traditional).with_j(2.0));
    let det = triplet_yield(&rec).y_t;
    let ns = [1_000usize, 10_000, 100_000];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            (0..20u64)
                .map(|seed| (sample_yield_from_record(&rec, n, 100 + seed).unwrap().y_t_hat - det).abs())
                .sum::<f64>()
                / 20.0
        })
        .collect();
    let slope = (errs[2].ln() - errs[0].ln()) / ((ns[2] as f64).ln() - (ns[0] as f64).ln());
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}, errors {errs:?}");
}

#[test]
fn angular_mode_agrees_too() {
    let p = SystemParams::default().with_regime(Regime::Zeno).with_j(5.0).with_phi(heading_grid(2.0)[20]);
    let rec = propagate(&p, FieldMode::Angular, &PropagationConfig::default().undecimated()).unwrap();
    let det = triplet_yield(&rec).y_t;
    let mc = sample_yield_from_record(&rec, 50_000, 77).unwrap();
    assert!((mc.y_t_hat - det).abs() < 3.5 * mc.stderr);
}

use radpair::yields::trapezoid_triplet_yield;
use radpair::*;

fn record(p: &SystemParams, dt: f64) -> TrajectoryRecord {
    propagate(p, FieldMode::Magnetic, &PropagationConfig::default().undecimated().with_dt(dt)).unwrap()
}

#[test]
fn halving_the_step_changes_yield_by_less_than_a_hundredth() {
    for b in [0.0, 0.5, 1.0, 2.0] {
        let p = SystemParams::default().with_regime(Regime::Zeno).with_j(10.0).with_b(b);
        let dt = PropagationConfig::default().resolved_dt(&p);
        let coarse = triplet_yield(&record(&p, dt)).y_t;
        let fine = triplet_yield(&record(&p, dt / 2.0)).y_t;
        assert!((coarse - fine).abs() < 0.01, "B = {b}: {coarse} vs {fine}");
    }
}

#[test]
fn trapezoid_quadrature_converges_at_second_order() {
    // Richardson: the gap between the sample-grid trapezoid and the
    // step-level bookkeeping shrinks fourfold per halving of dt
    let p = SystemParams::default().with_regime(Regime::Traditional).with_j(3.0);
    let gaps: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let rec = record(&p, dt);
            (trapezoid_triplet_yield(&rec) - triplet_yield(&rec).y_t).abs()
        })
        .collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.5).contains(&ratio), "{gaps:?}");
    }
}

#[test]
fn yields_stay_in_range_and_partition() {
    for regime in [Regime::Traditional, Regime::Zeno] {
        for j in [0.0, 5.0, 15.0] {
            let y = triplet_yield(&record(&SystemParams::default().with_regime(regime).with_j(j), 0.01));
            assert!((0.0..=100.0).contains(&y.y_t) && (0.0..=100.0).contains(&y.y_s));
            assert!((y.total() - 100.0).abs() < 0.01);
        }
    }
}

#[test]
fn non_terminated_runs_keep_their_remainder() {
    let p = SystemParams::default().with_regime(Regime::Zeno).with_j(10.0);
    let cfg = PropagationConfig { hard_cap: Some(2.0), ..Default::default() };
    let y = triplet_yield(&propagate(&p, FieldMode::Magnetic, &cfg).unwrap());
    assert!(!y.terminated && y.hard_cap_hit);
    assert!(y.unreacted > 1.0);
    assert!((y.total() - 100.0).abs() < 1e-9);
}

use radpair::precision::{field_grid, heading_grid};
use radpair::*;

fn base(regime: Regime) -> SystemParams {
    SystemParams::default().with_regime(regime).with_b(0.5).with_a(5.0)
}

fn cfg() -> PropagationConfig {
    PropagationConfig::default()
}

fn magnetic(regime: Regime, j: f64) -> MagneticPrecision {
    let s = yield_sweep(&base(regime).with_j(j), SweptParam::B, &field_grid(), regime.tag(), &cfg(), 0).unwrap();
    magnetic_precision(&s, 0.05).unwrap()
}

#[test]
fn receptor_formula_examples() {
    assert_eq!(delta_yield_from_receptors(4.0).unwrap(), 100.0);
    assert_eq!(delta_yield_from_receptors(6.4e7).unwrap(), 0.025);
    assert_eq!(delta_yield_from_receptors(1.6e7).unwrap(), 0.05);
}

#[test]
fn precision_is_linear_in_yield_resolution() {
    let s = yield_sweep(&base(Regime::Traditional), SweptParam::B, &field_grid(), "traditional", &cfg(), 0).unwrap();
    let one = magnetic_precision(&s, 0.05).unwrap().delta_b.value().unwrap();
    let two = magnetic_precision(&s, 0.10).unwrap().delta_b.value().unwrap();
    assert_eq!(two, 2.0 * one);

    let phi = yield_sweep(&base(Regime::Zeno), SweptParam::Phi, &heading_grid(4.0), "zeno", &cfg(), 0).unwrap();
    let one = angular_precision(&phi, 0.05).unwrap().delta_phi.value().unwrap();
    let two = angular_precision(&phi, 0.10).unwrap().delta_phi.value().unwrap();
    assert!((two / one - 2.0).abs() < 1e-14);
}

#[test]
fn precision_ignores_constant_offsets() {
    let s = yield_sweep(&base(Regime::Zeno).with_j(4.0), SweptParam::B, &field_grid(), "zeno", &cfg(), 0).unwrap();
    let mut shifted = s.clone();
    shifted.yields.iter_mut().for_each(|y| *y += 7.5);
    let a = magnetic_precision(&s, 0.05).unwrap().delta_b.value().unwrap();
    let b = magnetic_precision(&shifted, 0.05).unwrap().delta_b.value().unwrap();
    assert!((a - b).abs() / a < 1e-9);

    let phi = yield_sweep(&base(Regime::Zeno), SweptParam::Phi, &heading_grid(5.0), "zeno", &cfg(), 0).unwrap();
    let mut shifted = phi.clone();
    shifted.yields.iter_mut().for_each(|y| *y -= 3.0);
    let a = angular_precision(&phi, 0.05).unwrap().delta_phi.value().unwrap();
    let b = angular_precision(&shifted, 0.05).unwrap().delta_phi.value().unwrap();
    assert!((a - b).abs() / a < 1e-9);
}

#[test]
fn finite_difference_is_converged() {
    for regime in [Regime::Traditional, Regime::Zeno] {
        let m = magnetic(regime, 6.0);
        let half = m.slope_half_step.unwrap();
        assert!((m.slope - half).abs() < 0.01 * m.slope.abs(), "{} vs {half}", m.slope);
    }
}

#[test]
fn magnetic_precision_endpoints() {
    // δB ≈ 0.01 G at J = 0 in the traditional regime
    let trad0 = magnetic(Regime::Traditional, 0.0).delta_b.value().unwrap();
    assert!((0.003..=0.03).contains(&trad0), "{trad0}");
    // above 1 G at J = 15 G in the traditional regime
    let trad15 = magnetic(Regime::Traditional, 15.0).delta_b.value().unwrap();
    assert!(trad15 > 1.0, "{trad15}");
    // about 0.07 G at J = 15 G in the Zeno regime
    let zeno15 = magnetic(Regime::Zeno, 15.0).delta_b.value().unwrap();
    assert!((0.035..=0.14).contains(&zeno15), "{zeno15}");
}

#[test]
fn zeno_precision_varies_by_less_than_a_decade() {
    let js: Vec<f64> = (0..=15).step_by(3).map(f64::from).collect();
    let opts = PrecisionOptions { kind: PrecisionKind::Magnetic, ..Default::default() };
    let res = precision_vs_exchange(&base(Regime::Zeno), Regime::Zeno, &js, &opts).unwrap();
    let db: Vec<f64> = res.iter().map(|r| r.delta_b().value().unwrap()).collect();
    let max = db.iter().copied().fold(0.0, f64::max);
    let min = db.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(max / min < 10.0, "{db:?}");
}

#[test]
fn zeno_yield_curves_share_their_shape() {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
    let curve = |j: f64| {
        let s = yield_sweep(&base(Regime::Zeno).with_j(j), SweptParam::B, &grid, "zeno", &cfg(), 0).unwrap();
        let mean = s.yields.iter().sum::<f64>() / s.yields.len() as f64;
        s.yields.iter().map(|y| y - mean).collect::<Vec<_>>()
    };
    let (a, b) = (curve(5.0), curve(10.0));
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let r = dot(&a, &b) / (dot(&a, &a) * dot(&b, &b)).sqrt();
    assert!(r > 0.9, "correlation {r}");
}

#[test]
fn no_hyperfine_means_heading_lost() {
    let p = base(Regime::Zeno).with_a(0.0);
    let s = yield_sweep(&p, SweptParam::Phi, &heading_grid(5.0), "zeno", &cfg(), 0).unwrap();
    let a = angular_precision(&s, 0.05).unwrap();
    assert!(a.swing < 1e-9);
    assert_eq!(a.delta_phi, Resolution::Lost);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let js = [0.0, 7.0, 14.0];
    let mk = |jobs| PrecisionOptions { jobs, angle_step_deg: 5.0, ..Default::default() };
    let a = precision_vs_exchange(&base(Regime::Traditional), Regime::Traditional, &js, &mk(1)).unwrap();
    let b = precision_vs_exchange(&base(Regime::Traditional), Regime::Traditional, &js, &mk(3)).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.j, y.j);
        assert_eq!(x.magnetic, y.magnetic);
        assert_eq!(x.angular, y.angular);
    }
}

#[test]
fn point_failures_do_not_abort_the_sweep() {
    let opts = PrecisionOptions {
        kind: PrecisionKind::Magnetic,
        propagation: PropagationConfig::default().with_dt(50.0),
        ..Default::default()
    };
    let res = precision_vs_exchange(&base(Regime::Zeno), Regime::Zeno, &[0.0, 5.0], &opts).unwrap();
    assert_eq!(res.len(), 2);
    for r in &res {
        assert!(r.error.is_some());
        assert_eq!(r.delta_b().status(), "failed");
    }
}

#[test]
fn invalid_exchange_lists_are_rejected() {
    let opts = PrecisionOptions::default();
    let p = base(Regime::Zeno);
    assert!(precision_vs_exchange(&p, Regime::Zeno, &[], &opts).is_err());
    assert!(precision_vs_exchange(&p, Regime::Zeno, &[1.0, -2.0], &opts).is_err());
}

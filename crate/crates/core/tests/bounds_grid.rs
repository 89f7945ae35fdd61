use pursuitlab::bounds::cauchy_combination;
use pursuitlab::*;

fn grid(step: f64, upper: f64) -> impl Iterator<Item = f64> {
    (0..)
        .map(move |k| k as f64 * step)
        .take_while(move |d| *d < upper)
}

#[test]
fn rho_is_strictly_increasing_below_threshold() {
    for family in Family::ALL {
        let upper = bounds(family, 0.0).unwrap().threshold_rho1;
        let mut last = -1.0;
        for d in grid(1e-3, upper) {
            let r = family.rho(d);
            assert!(r > last, "{family:?} at {d}");
            last = r;
        }
    }
}

#[test]
fn tail_metric_shares_rate() {
    for d in grid(1e-3, 0.99) {
        assert_eq!(Family::Sp.rho(d), Family::SpTailMetric.rho(d));
    }
}

#[test]
fn validity_matches_polynomial_conditions() {
    for k in 0..100 {
        let d = k as f64 / 100.0;
        let d2 = d * d;
        let sp = sp_bounds(d).unwrap();
        assert_eq!(sp.valid, d2 * d2 + 4.0 * d2 - 1.0 < 0.0, "sp at {d}");
        let co = cosamp_bounds(d).unwrap();
        assert_eq!(
            co.valid,
            4.0 * d2 * d2 + 3.0 * d2 - 1.0 < 0.0,
            "cosamp at {d}"
        );
        assert_eq!(sp.valid, sp.rho < 1.0);
        assert_eq!(sp.tau.is_some(), sp.valid);
    }
}

#[test]
fn new_sp_rate_improves_on_prior_rate() {
    for d in grid(1e-3, 0.32) {
        assert!(Family::SpLbj.rho(d) >= Family::Sp.rho(d), "at {d}");
    }
}

#[test]
fn half_rate_root_solves_quadratic_in_delta_squared() {
    // rho = 1/2 for SP reduces to 7u² + 10u − 1 = 0 with u = δ²
    let u = (-10.0 + (100.0f64 + 28.0).sqrt()) / 14.0;
    let d = delta_for_rho(Family::Sp, 0.5).unwrap();
    assert!((d - u.sqrt()).abs() < 1e-12);
    let closed = (5.0f64.sqrt() - 2.0).sqrt();
    assert!((delta_for_rho(Family::Sp, 1.0).unwrap() - closed).abs() < 1e-12);
}

#[test]
fn envelope_unrolls_the_recursion() {
    for family in Family::ALL {
        let r = bounds(family, 0.1).unwrap();
        let (x0, e) = (1.7, 0.03);
        let mut v = x0;
        for n in 1..=25u32 {
            v = r.one_step(v, e);
            let env = error_envelope(&r, n, x0, e).unwrap();
            assert!(v <= env + 1e-12, "{family:?} n={n}");
        }
    }
}

#[test]
fn envelope_at_half_rate() {
    let r = sp_bounds(0.3063).unwrap();
    let env = error_envelope(&r, 10, 1.0, 0.01).unwrap();
    assert!((env - 0.1323).abs() < 1e-3, "{env}");
}

#[test]
fn envelope_rejects_invalid_report() {
    let r = sp_bounds(0.6).unwrap();
    assert!(!r.valid);
    assert!(matches!(
        error_envelope(&r, 1, 1.0, 0.0),
        Err(Error::Domain(_))
    ));
}

#[test]
fn cauchy_combination_zero_and_equality() {
    let (l, r) = cauchy_combination(0.0, 0.0, 0.0, 0.0, 1.0, 1.0);
    assert_eq!((l, r), (0.0, 0.0));
    // equality when y = 0
    let (l, r) = cauchy_combination(3.0, 1.0, 4.0, 2.0, 2.0, 0.0);
    assert!((l - r).abs() < 1e-12);
}

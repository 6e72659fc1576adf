use bhwave_core::geometry::*;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use proptest::prelude::*;

type Q128 = Ratio<i128>;

fn params(mass: f64, dim: u32) -> GeometryParams {
    GeometryParams::new(mass, dim).unwrap()
}

/// Reduced potential evaluated in exact rational arithmetic at rational `r`,
/// with `V = mu2 r^-gamma` for integer `gamma`.
fn potential_exact(dim: i128, mass: Q128, r: Q128, mu2: Q128, gamma: i32) -> Q128 {
    let n = Q128::from_integer(dim);
    let f = Q128::from_integer(1) - Q128::from_integer(2) * mass / r;
    let v = mu2 / r.pow(gamma);
    f * v + (n * n - Q128::from_integer(4) * n + Q128::from_integer(3)) * f * f / (Q128::from_integer(4) * r * r)
        + (n - Q128::from_integer(1)) * mass * f / (r * r * r)
}

#[test]
fn potential_matches_rational_evaluation() {
    for dim in [3u32, 4, 5, 7] {
        for (num, den) in [(5i128, 2i128), (3, 1), (7, 2), (10, 1), (101, 4), (1000, 3)] {
            let r = Q128::new(num, den);
            let mass = Q128::new(1, 1);
            for (mu2, gamma) in [(Q128::from_integer(0), 3), (Q128::new(3, 2), 3), (Q128::new(1, 4), 4)] {
                let g = params(1.0, dim).with_potential(mu2.to_f64().unwrap(), gamma as f64).unwrap();
                let pt = RadialPoint::from_r(&g, r.to_f64().unwrap()).unwrap();
                let got = rw_potential_at(&g, &pt);
                let want = potential_exact(dim as i128, mass, r, mu2, gamma).to_f64().unwrap();
                assert!((got - want).abs() <= 4.0 * f64::EPSILON * want.abs(), "n={dim} r={r} got {got} want {want}");
            }
        }
    }
}

#[test]
fn lapse_matches_rational_evaluation() {
    let g = params(1.5, 3);
    for (num, den) in [(31i128, 10i128), (4, 1), (17, 3), (250, 1)] {
        let r = Q128::new(num, den);
        let want = (Q128::from_integer(1) - Q128::from_integer(3) / r).to_f64().unwrap();
        let (f, df) = lapse(&g, r.to_f64().unwrap()).unwrap();
        assert!((f - want).abs() <= 2.0 * f64::EPSILON);
        let want_df = (Q128::from_integer(3) / (r * r)).to_f64().unwrap();
        assert!((df - want_df).abs() <= 2.0 * f64::EPSILON * want_df);
    }
}

#[test]
fn glassey_exponent_is_rational() {
    for dim in 3..=10u32 {
        let c = critical_exponents(dim).unwrap();
        let want = Q128::new(dim as i128 + 1, dim as i128 - 1).to_f64().unwrap();
        assert_eq!(c.glassey, want);
    }
    assert_eq!(critical_exponents(3).unwrap().glassey, 2.0);
}

#[test]
fn strauss_exponent_is_a_root() {
    for dim in 3..=10u32 {
        let c = critical_exponents(dim).unwrap();
        assert!(c.gamma_of(c.strauss).abs() < 1e-12, "n = {dim}");
        assert!(c.strauss > 1.0);
    }
    assert!((critical_exponents(3).unwrap().strauss - (1.0 + 2f64.sqrt())).abs() < 1e-15);
}

#[test]
fn subcritical_law_exponents_are_rational() {
    let u = Nonlinearity::Power;
    let ut = Nonlinearity::DerivativePower;
    // 2(p-1)/(n+1-(n-1)p) at n = 3, p = 7/5 is exactly 2/3.
    let p = Q128::new(7, 5);
    let want = (Q128::from_integer(2) * (p - 1) / (Q128::from_integer(4) - Q128::from_integer(2) * p)).to_f64().unwrap();
    let k = theorem_exponent(3, 1.4, u, true).unwrap().exponent();
    assert!((k - want).abs() < 1e-15 && (want - 2.0 / 3.0).abs() < 1e-15);
    // 1/(1/(p-1) - (n-1)/2) at n = 3, p = 3/2 is exactly 1.
    assert!((theorem_exponent(3, 1.5, ut, true).unwrap().exponent() - 1.0).abs() < 1e-15);
    // Critical cases switch to the exponential law.
    let ps = critical_exponents(3).unwrap().strauss;
    assert!(matches!(theorem_exponent(3, ps, u, true).unwrap(), LifespanLaw::Exponential { .. }));
    assert!(theorem_exponent(3, ps, u, false).is_err());
    assert_eq!(theorem_exponent(3, 2.0, ut, true).unwrap(), LifespanLaw::Exponential { exponent: 1.0 });
    assert!(theorem_exponent(3, 2.5, u, true).is_err());
}

#[test]
fn tortoise_round_trip_dense() {
    for (mass, dim) in [(1.0, 3u32), (0.5, 5), (3.0, 4)] {
        let g = params(mass, dim);
        for i in 0..10_000 {
            let gap = 2.0 * mass * 10f64.powf(-8.0 + 14.0 * i as f64 / 9_999.0);
            let r = g.horizon() + gap;
            let s = tortoise_forward(&g, r).unwrap();
            let back = tortoise_inverse(&g, s).unwrap();
            assert!((back - r).abs() <= 1e-10 * r, "M={mass} r={r} back={back}");
        }
    }
}

#[test]
fn potential_at_n3_without_v_is_closed_form() {
    let g = params(1.0, 3);
    for i in 0..2000 {
        let s = -40.0 + 0.1 * i as f64;
        let pt = RadialPoint::from_s(&g, s).unwrap();
        let direct = 2.0 * g.mass * pt.lapse / pt.r.powi(3);
        let q = rw_potential(&g, s).unwrap();
        assert!((q - direct).abs() <= 1e-14 * direct.max(f64::MIN_POSITIVE), "s = {s}");
    }
}

#[test]
fn horizon_is_rejected() {
    let g = params(1.0, 3);
    assert!(lapse(&g, 2.0).is_err());
    assert!(tortoise_forward(&g, 1.0).is_err());
    assert!(tortoise_inverse(&g, f64::NAN).is_err());
    assert!(GeometryParams::new(1.0, 3).unwrap().with_damping(1.0, 0.5).is_err());
    assert!(GeometryParams::new(1.0, 3).unwrap().with_potential(1.0, 2.0).is_err());
}

proptest! {
    #[test]
    fn tortoise_inverse_round_trips(mass in 0.1f64..10.0, x in -30.0f64..1e5) {
        // Negative s is scaled by 2M: below s ~ -35 (2M) the gap r - 2M ~ e^{s/2M}
        // drops under the spacing of doubles at 2M and r rounds to the horizon.
        let g = params(mass, 3);
        let s = if x < 0.0 { 2.0 * mass * x } else { x };
        let r = tortoise_inverse(&g, s).unwrap();
        prop_assert!(r > g.horizon());
        let back = tortoise_forward(&g, r).unwrap();
        // ds = 2M dr / (r - 2M): rounding r costs 2M ulp(r) / (r - 2M) in s.
        let conditioning = g.horizon() * 4.0 * f64::EPSILON * r / (r - g.horizon());
        prop_assert!((back - s).abs() <= 1e-10 * s.abs().max(1.0) + conditioning);
    }

    #[test]
    fn tortoise_is_increasing(mass in 0.1f64..10.0, s in -500.0f64..1e4, ds in 1e-6f64..10.0) {
        let g = params(mass, 3);
        prop_assert!(tortoise_log_gap(&g, s + ds).unwrap() > tortoise_log_gap(&g, s).unwrap());
        prop_assert!(tortoise_inverse(&g, s + ds).unwrap() >= tortoise_inverse(&g, s).unwrap());
    }

    #[test]
    fn lapse_in_unit_interval(mass in 0.1f64..10.0, gap in 1e-10f64..1e6) {
        let g = params(mass, 3);
        let (f, _) = lapse(&g, g.horizon() + gap).unwrap();
        prop_assert!(f > 0.0 && f < 1.0);
    }

    #[test]
    fn potential_nonnegative(dim in 3u32..10, mu2 in 0.0f64..5.0, gamma in 2.1f64..6.0, s in -100.0f64..500.0) {
        let g = params(1.0, dim).with_potential(mu2, gamma).unwrap();
        prop_assert!(rw_potential(&g, s).unwrap() >= 0.0);
    }

    #[test]
    fn amplitude_weight_matches_radius(dim in 3u32..10, s in -50.0f64..500.0) {
        let g = params(1.0, dim);
        let r = tortoise_inverse(&g, s).unwrap();
        let j = amplitude_weight(&g, s).unwrap();
        prop_assert!((j - r.powf(-g.half_dim())).abs() <= 1e-15 * j);
    }
}

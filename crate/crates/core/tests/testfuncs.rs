use bhwave_core::background::{FlatStub, Schwarzschild};
use bhwave_core::geometry::{critical_exponents, GeometryParams};
use bhwave_core::testfuncs::*;
use bhwave_core::Error;

fn unit() -> GeometryParams {
    GeometryParams::new(1.0, 3).unwrap()
}

fn phi_on(params: GeometryParams, lambda: f64, s_max: f64) -> bhwave_core::TestFunction {
    let bg = Schwarzschild::new(params);
    let start = phi_start_point(&bg, lambda, 1e-12).min(-60.0);
    solve_phi_lambda(&bg, lambda, start, s_max, &PhiOptions::default()).unwrap()
}

#[test]
fn flat_stub_reproduces_exponential() {
    let bg = FlatStub { dim: 3 };
    for lambda in [0.3, 1.0, 4.0] {
        let phi = solve_phi_lambda(&bg, lambda, -20.0, 40.0, &PhiOptions::default()).unwrap();
        for (w, dw) in phi.values.iter().zip(&phi.dvalues) {
            assert!((w - 1.0).abs() < 1e-10 && dw.abs() < 1e-10);
        }
        // psi = s^-1 e^{lambda s} with r = s: normalized value 1/s, increasing
        // once s >= 1/lambda.
        let phi = solve_phi_lambda(&bg, lambda, 1.0 / lambda, 40.0, &PhiOptions::default()).unwrap();
        let (psi, _) = psi_lambda(&bg, lambda, &phi).unwrap();
        for (s, v) in psi.grid.iter().zip(&psi.values) {
            assert!((v - 1.0 / s).abs() < 1e-10 / s);
        }
    }
}

#[test]
fn phi_normalized_tends_to_one_at_horizon() {
    let phi = phi_on(unit(), 1.0, 50.0);
    assert!((phi.values[0] - 1.0).abs() < 1e-12);
    assert!(phi.values.iter().all(|w| *w > 0.0));
}

fn plateau(phi: &bhwave_core::TestFunction) -> (f64, f64) {
    let s_max = *phi.grid.last().unwrap();
    let end = phi.interpolate(s_max).unwrap().0;
    let half = phi.interpolate(0.5 * s_max).unwrap().0;
    (end, half)
}

#[test]
fn phi_has_finite_plateau() {
    for params in [unit(), unit().with_damping(1.0, 2.0).unwrap()] {
        for lambda in [0.5, 1.0] {
            let phi = phi_on(params, lambda, 400.0);
            let (end, half) = plateau(&phi);
            assert!(end > 0.0 && end.is_finite());
            assert!(((end - half) / end).abs() < 1e-2, "lambda {lambda}: {end} vs {half}");
        }
    }
}

#[test]
fn band_and_sign_certificates_over_parameter_grid() {
    for dim in [3u32, 5] {
        for mu1 in [0.0, 1.0] {
            let params = GeometryParams::new(1.0, dim).unwrap().with_damping(mu1, 2.0).unwrap();
            let bg = Schwarzschild::new(params);
            for lambda in [0.5, 1.0, 2.0] {
                let start = phi_start_point(&bg, lambda, 1e-12).min(-60.0);
                let opts = PhiOptions {
                    band_window: Some((-60.0, 200.0)),
                    ..PhiOptions::default()
                };
                let phi = solve_phi_lambda(&bg, lambda, start, 200.0, &opts).unwrap();
                assert!(phi.band.unwrap().ratio() <= 100.0);
                let (psi, _) = psi_lambda(&bg, lambda, &phi).unwrap();
                assert!(psi.dvalues.iter().all(|d| *d >= -1e-12), "n={dim} mu1={mu1} lambda={lambda}");
                assert!(psi.values.iter().all(|v| *v > 0.0));
                assert!(psi.derivative_constant.unwrap().is_finite());
            }
        }
    }
}

#[test]
fn zero_potential_derivative_constant_recorded() {
    let bg = Schwarzschild::new(unit());
    let phi = phi_on(unit(), 1.0, 200.0);
    let (psi, c) = psi_lambda(&bg, 1.0, &phi).unwrap();
    let c = c.unwrap();
    assert!(c.is_finite() && c > 0.0);
    // Recompute |d_r psi| F / (lambda psi) at every node.
    for ((&s, v), d) in psi.grid.iter().zip(&psi.values).zip(&psi.dvalues) {
        let f = bhwave_core::geometry::RadialPoint::from_s(&unit(), s).unwrap().lapse;
        assert!(d.abs() * f / v <= c * (1.0 + 1e-12));
    }
}

#[test]
fn band_ceiling_is_enforced() {
    let bg = Schwarzschild::new(unit());
    let opts = PhiOptions {
        band_ceiling: Some(1.0 + 1e-6),
        ..PhiOptions::default()
    };
    let start = phi_start_point(&bg, 0.5, 1e-12);
    let err = solve_phi_lambda(&bg, 0.5, start, 100.0, &opts).unwrap_err();
    assert!(matches!(err, Error::Certificate(_)));
}

#[test]
fn psi0_trivial_without_potential() {
    let psi0 = solve_psi0(&unit(), 100.0, &Psi0Options::default()).unwrap();
    assert!(psi0.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    assert!(psi0.dvalues.iter().all(|d| d.abs() < 1e-14));
}

#[test]
fn psi0_bounded_with_decaying_derivative() {
    let params = unit().with_potential(1.0, 2.5).unwrap();
    let psi0 = solve_psi0(&params, 1e6, &Psi0Options::default()).unwrap();
    assert!(psi0.values.windows(2).all(|w| w[1] >= w[0]));
    let band = psi0.band.unwrap();
    assert!(band.ratio().is_finite() && band.lower >= 1.0);
    // r^{1.2} d_r psi_0 stays bounded: its value on the outer decade is no
    // larger than on the decade before.
    let weighted: Vec<(f64, f64)> = psi0.grid.iter().zip(&psi0.dvalues).map(|(r, d)| (*r, d * r.powf(1.2))).collect();
    let sup = |lo: f64, hi: f64| {
        weighted
            .iter()
            .filter(|(r, _)| *r >= lo && *r <= hi)
            .map(|x| x.1)
            .fold(0.0f64, f64::max)
    };
    let outer = sup(1e5, 1e6);
    let inner = sup(1e4, 1e5);
    assert!(outer.is_finite() && outer <= inner, "{outer} vs {inner}");
}

#[test]
fn unit_family_closed_forms() {
    let t: Vec<f64> = vec![0.1, 1.0, 5.0, 30.0, 200.0];
    let b1 = build_ba(&UnitPsi, 1.0, 0.0, &t, &[0.0], &BaOptions::default()).unwrap();
    let b2 = build_ba(&UnitPsi, 2.0, 0.0, &t, &[0.0], &BaOptions::default()).unwrap();
    for (i, &ti) in t.iter().enumerate() {
        let want1 = (1.0 - (-ti).exp()) / ti;
        let want2 = (1.0 - (-ti).exp() * (1.0 + ti)) / (ti * ti);
        assert!(((b1.values[i][0] - want1) / want1).abs() < 1e-10);
        assert!(((b2.values[i][0] - want2) / want2).abs() < 1e-8);
        assert!(((b1.dt_values[i][0] + want2) / want2).abs() < 1e-10);
    }
    let half = build_ba(&UnitPsi, 0.5, 0.0, &[0.0], &[0.0], &BaOptions::default()).unwrap();
    assert!((half.values[0][0] - 2.0).abs() < 1e-10);
}

/// `b_a(t, s)` by trapezoid in `u` with `lambda = u^{2/a}`, which turns the
/// weight `lambda^{a-1} d lambda` into `(2/a) u du`; two resolutions plus one
/// Richardson step.
fn brute_force_ba(family: &impl PsiFamily, a: f64, t: f64, s: f64, n: usize) -> f64 {
    let trap = |n: usize| {
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 1..=n {
            let u = i as f64 * h;
            let lambda = u.powf(2.0 / a);
            let (psi, _) = family.sample(lambda, &[s]).unwrap();
            let f = (2.0 / a) * u * (-lambda * (t - s)).exp() * psi[0];
            acc += if i == n { 0.5 * f } else { f };
        }
        acc * h
    };
    let fine = trap(n);
    let coarse = trap(n / 2);
    fine + (fine - coarse) / 3.0
}

#[test]
fn ba_matches_brute_force_oracle() {
    let params = unit();
    let a = params.half_dim() - 1.0 / critical_exponents(3).unwrap().strauss;
    let family = SchwarzschildPsi::new(Schwarzschild::new(params));
    let table = build_ba(&family, a, 2.0, &[100.0], &[50.0], &BaOptions::default()).unwrap();
    let oracle = brute_force_ba(&family, a, 100.0, 50.0, 1 << 13);
    let got = table.values[0][0];
    assert!(((got - oracle) / oracle).abs() < 1e-6, "{got} vs {oracle}");
}

#[test]
fn ba_cone_and_bounds() {
    let params = unit();
    let family = SchwarzschildPsi::new(Schwarzschild::new(params));
    let split = params.regime_split();
    let s: Vec<f64> = (0..10).map(|i| split + 5.0 * i as f64).collect();
    let t = [10.0, 30.0];
    let table = build_ba(&family, 0.5, 2.0, &t, &s, &BaOptions::default()).unwrap();
    for (i, ti) in t.iter().enumerate() {
        for (j, sj) in s.iter().enumerate() {
            assert_eq!(table.values[i][j].is_nan(), *sj > ti + 2.0);
        }
    }
    let cert = verify_ba_bounds(&table, &params).unwrap();
    assert!(cert.band.0 > 0.0 && cert.band_ratio < 50.0);
    let next = build_ba(&family, 1.5, 2.0, &t, &s, &BaOptions::default()).unwrap();
    assert!(check_time_derivative(&table, &next).unwrap() < 1e-7);
    let too_big = build_ba(&family, 1.0, 2.0, &t, &s, &BaOptions::default()).unwrap();
    assert!(verify_ba_bounds(&too_big, &params).is_err());
}

#[test]
fn ba_band_finite_in_five_dimensions() {
    let params = GeometryParams::new(1.0, 5).unwrap();
    let family = SchwarzschildPsi::new(Schwarzschild::new(params));
    let split = params.regime_split();
    let t = [10.0, 100.0, 1000.0];
    let s: Vec<f64> = (0..12).map(|i| split + (1002.0 - split) * i as f64 / 11.0).collect();
    let table = build_ba(&family, 1.5, 2.0, &t, &s, &BaOptions::default()).unwrap();
    let cert = verify_ba_bounds(&table, &params).unwrap();
    assert!(cert.band.0 > 0.0 && cert.band.1.is_finite());
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

    #[test]
    fn phi_and_psi_stay_positive(lambda in 0.2f64..3.0, mu1 in 0.0f64..2.0, dim in 3u32..6) {
        let params = GeometryParams::new(1.0, dim).unwrap().with_damping(mu1, 2.0).unwrap();
        let bg = Schwarzschild::new(params);
        let start = phi_start_point(&bg, lambda, 1e-12);
        let phi = solve_phi_lambda(&bg, lambda, start, 60.0, &PhiOptions::default()).unwrap();
        proptest::prop_assert!(phi.values.iter().all(|w| *w > 0.0));
        let (psi, _) = psi_lambda(&bg, lambda, &phi).unwrap();
        proptest::prop_assert!(psi.dvalues.iter().all(|d| *d >= -1e-12));
    }
}

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;
use tdm::cft_analytics::{self as cft, CftKinematics, Geodesic, TorusModulus};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `K(m) = int_0^{pi/2} (1 - m sin^2)^{-1/2}` by composite Simpson.
fn k_quadrature(m: C64) -> C64 {
    let n = 4000;
    let h = 0.5 * PI / n as f64;
    let f = |th: f64| 1.0 / (1.0 - m * th.sin().powi(2)).sqrt();
    let mut acc = f(0.0) + f(0.5 * PI);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn kin(a: (f64, f64), b: (f64, f64), dt: f64, eps_uv: f64) -> CftKinematics {
    CftKinematics::two_intervals(a, b, dt, CftKinematics::default_eps(a, b, dt), 1.0, eps_uv).unwrap()
}

#[test]
fn elliptic_k_against_quadrature() {
    for m in [c(0.1), c(0.5), c(0.9), C64::new(0.3, 0.4), C64::new(-2.0, 0.5), C64::new(0.7, -0.2)] {
        let k = cft::elliptic_k(m).unwrap();
        assert!((k - k_quadrature(m)).norm() < 1e-11, "m={m}");
    }
    assert!(cft::elliptic_k(c(1.0)).is_err());
}

#[test]
fn theta_identities() {
    for tau in [C64::new(0.0, 0.6), C64::new(0.2, 1.1), C64::new(-0.4, 0.9), C64::new(0.5, 2.5)] {
        let q = cft::nome(0.5 * tau);
        let (t2, t3, t4) = (cft::theta2(q).unwrap(), cft::theta3(q).unwrap(), cft::theta4(q).unwrap());
        assert!((t3.powu(4) - t2.powu(4) - t4.powu(4)).norm() < 1e-12 * t3.powu(4).norm());
        let eta = cft::dedekind_eta(tau).unwrap();
        assert!((t2 * t3 * t4 - 2.0 * eta.powu(3)).norm() < 1e-12 * eta.powu(3).norm());
    }
    assert!(cft::theta3(c(1.0)).is_err());
    assert!(tdm::cli::theta_identity_residual().unwrap() < 1e-12);
}

#[test]
fn eta_modular_s() {
    // eta(-1/tau) = sqrt(-i tau) eta(tau)
    for tau in [C64::new(0.0, 1.3), C64::new(0.25, 0.8), C64::new(-0.3, 1.7)] {
        let lhs = cft::dedekind_eta(-1.0 / tau).unwrap();
        let rhs = (-I * tau).sqrt() * cft::dedekind_eta(tau).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

#[test]
fn modulus_at_symmetric_point() {
    let t = cft::tau_from_x(c(0.5)).unwrap();
    assert!((t - 0.5 * I).norm() < 1e-14);
    let tb = cft::tau_bar_from_x_bar(c(0.5)).unwrap();
    assert!((tb + 0.5 * I).norm() < 1e-14);
    assert!(cft::tau_from_x(c(0.0)).is_err());
}

#[test]
fn cross_ratio_round_trip() {
    for x in [c(0.01), c(0.3), c(0.5), c(0.97), C64::new(0.4, 0.3), C64::new(0.6, -0.2)] {
        let tau = cft::tau_from_x(x).unwrap();
        assert!((cft::x_from_tau(tau).unwrap() - x).norm() < 1e-12);
        let tb = cft::tau_bar_from_x_bar(x).unwrap();
        assert!((cft::x_bar_from_tau_bar(tb).unwrap() - x).norm() < 1e-12);
    }
}

#[test]
fn s_transform_is_complement() {
    for x in [c(0.2), c(0.45), C64::new(0.3, 0.1)] {
        let m = TorusModulus::principal(x, x.conj()).unwrap();
        let s = cft::s_transform(m);
        let m1 = TorusModulus::principal(1.0 - x, 1.0 - x.conj()).unwrap();
        assert!((s.tau - m1.tau).norm() < 1e-12);
        assert!((s.tau_bar - m1.tau_bar).norm() < 1e-12);
        let z = cft::free_fermion_z2(m).unwrap();
        assert!((cft::free_fermion_z2(s).unwrap() - z).norm() < 1e-12 * z.norm());
    }
}

#[test]
fn torus_matches_two_interval_formula() {
    let (a, b) = ((0.0, 50.0), (70.0, 120.0));
    for t in [0.0, 5.0, 12.5, 19.0, 21.0, 35.0, 60.0, 69.0, 71.0, 95.0, 118.0, 123.0, 150.0, 199.0] {
        let k = kin(a, b, t, 0.5);
        let torus = cft::tr_T2_torus_ff(&k).unwrap();
        let direct = cft::ff_tsallis_two_intervals(&k, 2).unwrap();
        assert!((torus - direct).norm() < 1e-9 * direct.norm(), "t={t}: {torus} vs {direct}");
    }
}

#[test]
fn equal_time_purity_ratio() {
    let k = kin((0.0, 3.0), (5.0, 9.0), 0.0, 0.2);
    let (x, xb) = cft::cross_ratio(&k).unwrap();
    // the ordering epsilon leaves an O(eps) imaginary part
    assert!(x.im.abs() < 1e-5 && (x - xb).norm() < 1e-5);
    let expect = (x.re * x.re).powf(-0.125);
    assert!((cft::ff_purity_ratio(&k).unwrap() - c(expect)).norm() < 1e-5);
    let l = cft::continued_logs(&k).unwrap();
    assert!((l.log_x.exp() - x).norm() < 1e-9);
    assert!((l.log_1mx.exp() - (1.0 - x)).norm() < 1e-9);
}

#[test]
fn factorizes_at_large_separation() {
    let k = kin((0.0, 1.0), (1.0e4, 1.0e4 + 1.0), 0.0, 0.01);
    let r = cft::factorization_ratio(&k).unwrap();
    assert!((r - c(1.0)).norm() < 1e-6);
    let k = kin((0.0, 1.0), (1.0e4, 1.0e4 + 1.0), 30.0, 0.01);
    assert!((cft::factorization_ratio(&k).unwrap() - c(1.0)).norm() < 1e-5);
}

#[test]
fn single_interval_law() {
    let p = cft::single_interval_tsallis(10.0, 2, 0.1);
    assert!((p - (0.01f64).powf(0.25)).abs() < 1e-15);
    let eps = cft::calibrate_eps(10.0, p);
    assert!((eps - 0.1).abs() < 1e-14);
}

#[test]
fn tracked_logs_agree_with_endpoint_sums() {
    let (a, b) = ((0.0, 50.0), (70.0, 120.0));
    for t in [10.0, 30.0, 80.0, 140.0] {
        let k = kin(a, b, t, 1.0);
        let l = cft::continued_logs(&k).unwrap();
        let (lx, lxb) = cft::tracked_log_cross(&k).unwrap();
        assert!((lx - l.log_x).norm() < 1e-12, "t={t}");
        assert!((lxb - l.log_xb).norm() < 1e-12, "t={t}");
    }
}

#[test]
fn ordering_eps_limit_is_stable() {
    let k = kin((0.0, 50.0), (70.0, 120.0), 40.0, 0.5);
    let r = cft::richardson(&k, &|k| cft::tr_T2_torus_ff(k)).unwrap();
    assert!(r.residual < 1e-8);
    assert!((r.extrapolated - r.at_eps).norm() < 1e-4 * r.at_eps.norm());
}

#[test]
fn mutual_information_closed_form() {
    let l = 40.0;
    for t in [5.0, 20.0, 35.0, 41.0, 60.0, 200.0] {
        let got = tdm::cli::cft_mutual_info(l, t).unwrap();
        let closed = (1.0 - l * l / (t * t)).abs().ln() / 3.0;
        assert!((got.re - closed).abs() < 1e-6, "t={t}");
        // inside the cone the continuation picks up -i pi/3; the residue is O(ordering eps)
        let im = if t > l { 0.0 } else { -PI / 3.0 };
        assert!((got.im - im).abs() < 1e-4, "t={t}");
    }
    let at20 = tdm::cli::cft_mutual_info(l, 20.0).unwrap().re;
    assert!((at20 - 3f64.ln() / 3.0).abs() < 1e-6);
}

#[test]
fn holographic_switch_point() {
    for l in [1.0, 2.5, 10.0] {
        let s = cft::holographic_switch(l, 1.0, 1e-3, 1e-10).unwrap();
        assert!((s - 2f64.sqrt() * l).abs() < 1e-9);
    }
    let early = cft::holographic_two_interval(1.0, 1.0, 1.0, 1e-3).unwrap();
    assert_eq!(early.selected, Geodesic::GammaPrime);
    let late = cft::holographic_two_interval(1.0, 1.6, 1.0, 1e-3).unwrap();
    assert_eq!(late.selected, Geodesic::Gamma);
}

#[test]
fn rejects_bad_kinematics() {
    assert!(CftKinematics::two_intervals((0.0, 1.0), (2.0, 3.0), 0.0, 0.0, 1.0, 1.0).is_err());
    assert!(CftKinematics::two_intervals((1.0, 0.0), (2.0, 3.0), 0.0, 1e-6, 1.0, 1.0).is_err());
    assert!(CftKinematics::from_points([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 2.0], 1e-6, 1.0, 1.0).is_err());
    assert!(cft::ff_tsallis_two_intervals(&kin((0.0, 1.0), (2.0, 3.0), 0.0, 1.0), 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prop_round_trip_real_cross_ratio(x in 0.02f64..0.98) {
        let tau = cft::tau_from_x(c(x)).unwrap();
        prop_assert!(tau.re.abs() < 1e-12 && tau.im > 0.0);
        prop_assert!((cft::x_from_tau(tau).unwrap() - c(x)).norm() < 1e-11);
    }

    #[test]
    fn prop_torus_equals_direct(la in 1.0f64..20.0, gap in 1.0f64..20.0, lb in 1.0f64..20.0, frac in 0.0f64..3.0) {
        let a = (0.0, la);
        let b = (la + gap, la + gap + lb);
        let t = frac * (la + gap + lb);
        let k = kin(a, b, t, 0.3);
        // skip configurations sitting on a light cone
        let cones = [b.0 - a.1, b.0 - a.0, b.1 - a.1, b.1 - a.0];
        prop_assume!(cones.iter().all(|x| (x.abs() - t).abs() > 0.05));
        let torus = cft::tr_T2_torus_ff(&k).unwrap();
        let direct = cft::ff_tsallis_two_intervals(&k, 2).unwrap();
        prop_assert!((torus - direct).norm() < 1e-8 * direct.norm());
    }
}

mod common;

use common::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use tdm::ising_harness::{self as ih, IsingParams, Pauli, ThermalSpec};
use tdm::spacetime_density::{self as sd, ChannelSpec, RegionSpec};
use tdm::tensor_core::{self as tc, CMat};

fn unitary(ch: &ChannelSpec) -> CMat {
    match ch {
        ChannelSpec::Unitary(u) => u.clone(),
        ChannelSpec::Kraus(_) => panic!("expected a unitary"),
    }
}

#[test]
fn hamiltonian_matches_pauli_sum() {
    for (n, j, h, bz) in [(2, 1.0, 0.0, 0.0), (3, 1.0, -1.05, 0.5), (4, 0.7, 0.3, -0.2), (5, 1.0, -1.05, 0.5)] {
        let got = ih::build_hamiltonian(&IsingParams::new(n, j, h, bz)).unwrap();
        assert!(tc::max_abs_diff(&got, &ising_oracle(n, j, h, bz)) < 1e-14);
        assert!(tc::is_hermitian(&got, 1e-15));
    }
}

#[test]
fn two_site_ring_has_double_bond() {
    let h = ih::build_hamiltonian(&IsingParams::new(2, 1.0, 0.0, 0.0)).unwrap();
    let diag: Vec<f64> = (0..4).map(|i| h[[i, i]].re).collect();
    assert_eq!(diag, vec![2.0, -2.0, -2.0, 2.0]);
}

#[test]
fn free_spin_spectrum() {
    let h = ih::build_hamiltonian(&IsingParams::new(3, 1.0, 0.4, 0.0)).unwrap();
    // subtract the bond term to isolate the transverse field
    let x_only = &h - &ising_oracle(3, 1.0, 0.0, 0.0);
    let (w, _) = tc::eigh(&x_only).unwrap();
    let mut expect: Vec<f64> = (0..8).map(|s: usize| 0.4 * (3.0 - 2.0 * s.count_ones() as f64)).collect();
    expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in w.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn size_limits() {
    assert!(matches!(ih::build_hamiltonian(&IsingParams::chaotic(ih::MAX_SITES + 1)), Err(ih::IsingError::Cap(..))));
    assert!(ih::build_hamiltonian(&IsingParams::chaotic(1)).is_err());
}

#[test]
fn thermal_state_against_series() {
    let h = ih::build_hamiltonian(&IsingParams::chaotic(3)).unwrap();
    for temp in [5.0, 20.0, 100.0] {
        let rho = ih::thermal_state(&h, &ThermalSpec { temperature: temp }).unwrap();
        let e = expm_taylor(&(&h * C64::new(-1.0 / temp, 0.0)));
        let oracle = &e / tc::trace(&e);
        assert!(tc::max_abs_diff(&rho, &oracle) < 1e-12);
        assert!((tc::trace(&rho) - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(tc::eigh(&rho).unwrap().0.iter().all(|x| *x > -1e-14));
    }
    let rho = ih::thermal_state(&h, &ThermalSpec { temperature: f64::INFINITY }).unwrap();
    assert!(tc::max_abs_diff(&rho, &(tc::identity(8) * C64::new(0.125, 0.0))) < 1e-14);
    // low temperature: ground state dominates
    let rho = ih::thermal_state(&h, &ThermalSpec { temperature: 0.01 }).unwrap();
    let (w, v) = tc::eigh(&h).unwrap();
    assert!(w[1] - w[0] > 0.1);
    let g = v.column(0).to_owned();
    assert!((tc::trace(&rho.dot(&tc::projector(&g))).re - 1.0).abs() < 1e-10);
}

#[test]
fn evolution_properties() {
    let h = ih::build_hamiltonian(&IsingParams::chaotic(4)).unwrap();
    let u0 = unitary(&ih::evolution(&h, 0.0).unwrap());
    assert!(tc::max_abs_diff(&u0, &tc::identity(16)) < 1e-12);
    let u1 = unitary(&ih::evolution(&h, 0.7).unwrap());
    let u2 = unitary(&ih::evolution(&h, 1.9).unwrap());
    let u12 = unitary(&ih::evolution(&h, 2.6).unwrap());
    assert!(tc::max_abs_diff(&u1.dot(&u2), &u12) < 1e-10);
    assert!(tc::max_abs_diff(&u1.dot(&tc::dagger(&u1)), &tc::identity(16)) < 1e-10);
    let oracle = expm_taylor(&(&h * C64::new(0.0, -0.7)));
    assert!(tc::max_abs_diff(&u1, &oracle) < 1e-10);
}

#[test]
fn transverse_field_rabi() {
    // h-only two-site chain: each spin precesses as exp(-i h t X)
    let (hx, t) = (0.8, 1.3);
    let h = &ih::build_hamiltonian(&IsingParams::new(2, 1.0, hx, 0.0)).unwrap() - &ising_oracle(2, 1.0, 0.0, 0.0);
    let u = unitary(&ih::evolution(&h, t).unwrap());
    let p = paulis();
    let one = &p[0] * C64::new((hx * t).cos(), 0.0) - &p[1] * C64::new(0.0, (hx * t).sin());
    let expect = tc::kron(&one, &one).unwrap();
    assert!(tc::max_abs_diff(&u, &expect) < 1e-12);
}

#[test]
fn energy_is_conserved() {
    let h = ih::build_hamiltonian(&IsingParams::chaotic(5)).unwrap();
    let mut r = rng(30);
    let rho = tc::random_density(32, 3, &mut r);
    let e0 = ih::energy_after(&h, &rho, 0.0).unwrap();
    for t in [0.5, 3.0, 17.0] {
        assert!((ih::energy_after(&h, &rho, t).unwrap() - e0).abs() < 1e-10);
    }
}

#[test]
fn sweep_matches_dense_construction() {
    let p = IsingParams::chaotic(4);
    let spec = ThermalSpec { temperature: 2.0 };
    let h = ih::build_hamiltonian(&p).unwrap();
    let rho = ih::thermal_state(&h, &spec).unwrap();
    let sweep = ih::TwoSiteSweep::new(&p, &spec, 0, 2).unwrap();
    for t in [0.0, 0.4, 2.5] {
        let u = unitary(&ih::evolution(&h, t).unwrap());
        let oracle = dense_t(&rho, &u, &[0], &[2], 4);
        assert!(tc::max_abs_diff(&sweep.spacetime_matrix(t).matrix, &oracle) < 1e-12);
        let viasd = sd::build_T(&rho, &ChannelSpec::Unitary(u), &RegionSpec::qubits(vec![0], vec![2], 4).unwrap()).unwrap();
        assert!(tc::max_abs_diff(&viasd.matrix, &oracle) < 1e-12);
    }
}

#[test]
fn infinite_temperature_is_silent() {
    let p = IsingParams::chaotic(5);
    let times: Vec<f64> = (0..8).map(|i| i as f64 * 0.6).collect();
    let reps = ih::commutator_sweep(&p, &ThermalSpec { temperature: f64::INFINITY }, 0, 2, Pauli::Y, &times).unwrap();
    for r in reps {
        assert!(r.commutator_abs < 1e-12);
    }
}

#[test]
fn equal_time_values_vanish() {
    let reps = ih::commutator_sweep(&IsingParams::chaotic(6), &ThermalSpec { temperature: 100.0 }, 0, 3, Pauli::Y, &[0.0]).unwrap();
    let r = &reps[0];
    for v in [r.commutator_abs, r.th3_upper, r.th1_upper, r.th2_lower] {
        assert!(v < 1e-14);
    }
}

#[test]
fn six_spin_chain_and_saturation() {
    let p = IsingParams::chaotic(6);
    let spec = ThermalSpec { temperature: 100.0 };
    let sweep = ih::TwoSiteSweep::new(&p, &spec, 0, 3).unwrap();
    let t = sweep.spacetime_matrix(2.0);
    let y = Pauli::Y.matrix();
    let rep = sd::commutator_bounds(&t, &y, &y).unwrap();
    assert!(rep.chain_slack() >= -1e-9);
    assert!(rep.th3_upper > 0.0);
    let (oa, ob) = sd::extract_saturating_operators(&t).unwrap();
    assert!((sd::commutator_ratio(&t, &oa, &ob) - rep.th3_upper).abs() < 1e-8);
    let mut r = rng(31);
    for _ in 0..100 {
        let xa = tc::random_matrix(2, 2, &mut r);
        let xb = tc::random_matrix(2, 2, &mut r);
        assert!(sd::commutator_ratio(&t, &xa, &xb) <= rep.th3_upper + 1e-12);
    }
}

#[test]
fn translation_covariance() {
    let p = IsingParams::chaotic(6);
    let spec = ThermalSpec { temperature: 3.0 };
    let times = [0.5, 1.5, 4.0];
    let r1 = ih::commutator_sweep(&p, &spec, 0, 2, Pauli::Y, &times).unwrap();
    let r2 = ih::commutator_sweep(&p, &spec, 1, 3, Pauli::Y, &times).unwrap();
    let r3 = ih::commutator_sweep(&p, &spec, 5, 1, Pauli::Y, &times).unwrap();
    for ((a, b), c) in r1.iter().zip(&r2).zip(&r3) {
        for (x, y) in [(a.commutator_abs, b.commutator_abs), (a.th1_upper, b.th1_upper), (a.th3_upper, b.th3_upper), (a.th2_lower, b.th2_lower), (a.im_bound_lower, b.im_bound_lower)] {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((a.th1_upper - c.th1_upper).abs() < 1e-10);
    }
}

#[test]
fn lieb_robinson_envelope() {
    let p = IsingParams::chaotic(8);
    let spec = ThermalSpec { temperature: 1.0 };
    let times: Vec<f64> = (0..=24).map(|i| i as f64 * 0.125).collect();
    let series: Vec<ih::LrSeries> = [1usize, 2, 4]
        .iter()
        .map(|&d| {
            let reps = ih::commutator_sweep(&p, &spec, 0, d, Pauli::Z, &times).unwrap();
            ih::LrSeries { distance: d as f64, times: times.clone(), imagitivity: reps.iter().map(|r| r.th1_upper).collect() }
        })
        .collect();
    let fit = ih::lr_fit(&series, 0.5).unwrap();
    assert!(fit.v > 0.0 && fit.v.is_finite());
    assert!(ih::lr_envelope_check(&series, &fit, 0.5, 2.0).unwrap());
    assert_eq!(fit.envelope(2.0, 1.0, 1.0, 3.0, 0.0), 0.0);
    // signal onset is later at larger distance
    let onset = |s: &ih::LrSeries| s.times.iter().zip(&s.imagitivity).find(|(_, y)| **y > 1e-3).map(|(t, _)| *t).unwrap_or(f64::INFINITY);
    assert!(onset(&series[0]) < onset(&series[1]));
    assert!(onset(&series[1]) < onset(&series[2]));
    assert!(ih::lr_fit(&series[..1], 0.5).is_err());
}

#[test]
fn multi_time_matches_generic_construction() {
    let p = IsingParams::chaotic(4);
    let spec = ThermalSpec { temperature: 2.0 };
    let h = ih::build_hamiltonian(&p).unwrap();
    let rho = ih::thermal_state(&h, &spec).unwrap();
    for k in [2, 3, 4] {
        let dt = 0.8;
        let fast = ih::multi_time_T(&p, &spec, 1, dt, k).unwrap();
        let chans: Vec<ChannelSpec> = (1..k).map(|_| ih::evolution(&h, dt).unwrap()).collect();
        let slots: Vec<Vec<usize>> = (0..k).map(|_| vec![1]).collect();
        let generic = sd::multi_interval_T(&rho, &chans, &slots, 4, 2).unwrap();
        assert!(tc::max_abs_diff(&fast.matrix, &generic.matrix) < 1e-12, "k = {k}");
    }
}

#[test]
fn multi_time_correlator_contraction() {
    // four slots contract to the ordered product of Heisenberg operators
    let p = IsingParams::chaotic(3);
    let spec = ThermalSpec { temperature: 1.5 };
    let h = ih::build_hamiltonian(&p).unwrap();
    let rho = ih::thermal_state(&h, &spec).unwrap();
    let dt = 0.6;
    let t = ih::multi_time_T(&p, &spec, 0, dt, 4).unwrap();
    let mut r = rng(32);
    for _ in 0..5 {
        let o: Vec<CMat> = (0..4).map(|_| tc::random_hermitian(2, &mut r)).collect();
        let x = o.iter().skip(1).fold(o[0].clone(), |acc, m| tc::kron(&acc, m).unwrap());
        let lhs = tc::trace(&t.matrix.dot(&x));
        let mut prod = tc::identity(8);
        for (j, oj) in o.iter().enumerate() {
            let u = unitary(&ih::evolution(&h, j as f64 * dt).unwrap());
            prod = prod.dot(&tc::dagger(&u).dot(&embed(oj, &[0], 3)).dot(&u));
        }
        let rhs = tc::trace(&rho.dot(&prod));
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

#[test]
fn zero_interval_two_slots() {
    // dt = 0, k = 2: T = SWAP (rho_site x 1)
    let p = IsingParams::chaotic(4);
    let spec = ThermalSpec { temperature: 2.0 };
    let rho = ih::thermal_state(&ih::build_hamiltonian(&p).unwrap(), &spec).unwrap();
    let t = ih::multi_time_T(&p, &spec, 2, 0.0, 2).unwrap();
    let expect = tc::swap_operator(2).dot(&tc::kron(&reduced(&rho, &[2], 4), &tc::identity(2)).unwrap());
    assert!(tc::max_abs_diff(&t.matrix, &expect) < 1e-12);
}

#[test]
fn fits_on_exact_data() {
    let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
    let (s, i, r2) = ih::linear_fit(&x, &y);
    assert!((s + 0.5).abs() < 1e-14 && (i - 3.0).abs() < 1e-13 && (r2 - 1.0).abs() < 1e-14);
    let sv: Vec<f64> = (0..12).map(|i| (-0.7 * i as f64).exp()).collect();
    let (slope, r2, used) = ih::decay_fit(&sv, 1e-14);
    assert!((slope + 0.7).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12 && used == 12);
    let (_, _, used) = ih::decay_fit(&[1.0, 1e-20], 1e-14);
    assert_eq!(used, 1);
}

#[test]
fn small_chain_singular_values_decay() {
    let sv = ih::multi_time_singular_values(&IsingParams::chaotic(4), &ThermalSpec { temperature: 10.0 }, 0, 1.0, 4).unwrap();
    assert_eq!(sv.len(), 16);
    assert!(sv.windows(2).all(|w| w[0] >= w[1]));
    let (slope, _, _) = ih::decay_fit(&sv, 1e-14);
    assert!(slope < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn prop_chain_holds_on_random_couplings(
        h in -1.5f64..1.5, bz in -1.0f64..1.0, temp in 0.5f64..50.0, t in 0.0f64..6.0, site_b in 1usize..5,
    ) {
        let p = IsingParams::new(5, 1.0, h, bz);
        let reps = ih::commutator_sweep(&p, &ThermalSpec { temperature: temp }, 0, site_b, Pauli::Y, &[t]).unwrap();
        prop_assert!(reps[0].chain_slack() >= -1e-9);
    }

    #[test]
    fn prop_thermal_state_is_a_state(h in -1.5f64..1.5, temp in 0.1f64..100.0) {
        let ham = ih::build_hamiltonian(&IsingParams::new(4, 1.0, h, 0.5)).unwrap();
        let rho = ih::thermal_state(&ham, &ThermalSpec { temperature: temp }).unwrap();
        prop_assert!((tc::trace(&rho).re - 1.0).abs() < 1e-12);
        prop_assert!(tc::is_hermitian(&rho, 1e-14));
        prop_assert!(tc::eigh(&rho).unwrap().0.iter().all(|x| *x > -1e-13));
    }
}

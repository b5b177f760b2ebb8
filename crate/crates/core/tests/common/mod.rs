//! Dense reference computations shared by the integration tests. They work
//! on explicit basis states and avoid the library's index bookkeeping.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tdm::tensor_core::{self as tc, CMat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Qubit digits of `idx`, site 0 first.
pub fn digits(idx: usize, n: usize) -> Vec<usize> {
    (0..n).map(|s| (idx >> (n - 1 - s)) & 1).collect()
}

/// `op` (indexed by the digits of `sites`, first listed most significant)
/// acting on an `n`-qubit register.
pub fn embed(op: &CMat, sites: &[usize], n: usize) -> CMat {
    let dim = 1 << n;
    let mut out = Array2::zeros((dim, dim));
    for i in 0..dim {
        let di = digits(i, n);
        for j in 0..dim {
            let dj = digits(j, n);
            if (0..n).any(|s| !sites.contains(&s) && di[s] != dj[s]) {
                continue;
            }
            let ri = sites.iter().fold(0, |acc, &s| acc * 2 + di[s]);
            let rj = sites.iter().fold(0, |acc, &s| acc * 2 + dj[s]);
            out[[i, j]] = op[[ri, rj]];
        }
    }
    out
}

/// Reduced state on `keep` (first listed most significant) by explicit summation.
pub fn reduced(rho: &CMat, keep: &[usize], n: usize) -> CMat {
    let dk = 1 << keep.len();
    let mut out = Array2::zeros((dk, dk));
    let dim = 1 << n;
    for i in 0..dim {
        let di = digits(i, n);
        for j in 0..dim {
            let dj = digits(j, n);
            if (0..n).any(|s| !keep.contains(&s) && di[s] != dj[s]) {
                continue;
            }
            let ri = keep.iter().fold(0, |acc, &s| acc * 2 + di[s]);
            let rj = keep.iter().fold(0, |acc, &s| acc * 2 + dj[s]);
            out[[ri, rj]] += rho[[i, j]];
        }
    }
    out
}

pub fn unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = Array2::zeros((d, d));
    m[[i, j]] = C64::new(1.0, 0.0);
    m
}

/// `Tr(rho O_A U^dag O_B U)` with the operators embedded on their sites.
pub fn heisenberg(rho: &CMat, u: &CMat, oa: &CMat, a: &[usize], ob: &CMat, b: &[usize], n: usize) -> C64 {
    let ea = embed(oa, a, n);
    let eb = embed(ob, b, n);
    tc::trace(&rho.dot(&ea).dot(&tc::dagger(u)).dot(&eb).dot(u))
}

/// Spacetime matrix entry by entry from its defining trace.
pub fn dense_t(rho: &CMat, u: &CMat, a: &[usize], b: &[usize], n: usize) -> CMat {
    let (da, db) = (1 << a.len(), 1 << b.len());
    let mut t = Array2::zeros((da * db, da * db));
    for x in 0..da {
        for xp in 0..da {
            for y in 0..db {
                for yp in 0..db {
                    t[[x * db + y, xp * db + yp]] = heisenberg(rho, u, &unit(da, xp, x), a, &unit(db, yp, y), b, n);
                }
            }
        }
    }
    t
}

pub fn paulis() -> [CMat; 4] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        ndarray::arr2(&[[o, z], [z, o]]),
        ndarray::arr2(&[[z, o], [o, z]]),
        ndarray::arr2(&[[z, -i], [i, z]]),
        ndarray::arr2(&[[o, z], [z, -o]]),
    ]
}

/// Pauli string labelled by base-4 digits of `code` on `len` sites.
pub fn pauli_string(code: usize, len: usize) -> CMat {
    let p = paulis();
    let mut m = tc::identity(1);
    for k in (0..len).rev() {
        let digit = (code / 4usize.pow(k as u32)) % 4;
        m = tc::kron(&m, &p[digit]).unwrap();
    }
    m
}

/// One random instance of the shared ensemble: state, unitary, sorted regions.
pub struct Instance {
    pub n: usize,
    pub rho: CMat,
    pub u: CMat,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

pub fn random_sites<R: Rng>(n: usize, max: usize, rng: &mut R) -> Vec<usize> {
    let k = rng.random_range(1..=max.min(n));
    let mut s: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let j = rng.random_range(i..n);
        s.swap(i, j);
    }
    let mut out = s[..k].to_vec();
    out.sort();
    out
}

pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let n = rng.random_range(1..=5);
    let dim = 1 << n;
    let rank = rng.random_range(1..=dim);
    let rho = tc::random_density(dim, rank, rng);
    let u = tc::random_unitary(dim, rng);
    let a = random_sites(n, 2, rng);
    let b = random_sites(n, 2, rng);
    Instance { n, rho, u, a, b }
}

pub fn random_vector<R: Rng>(d: usize, rng: &mut R) -> Array1<C64> {
    tc::random_pure_state(d, rng)
}

/// `exp(a)` by scaling and squaring of a truncated Taylor series.
pub fn expm_taylor(a: &CMat) -> CMat {
    let norm = tc::frobenius(a);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * C64::new(0.5f64.powi(s), 0.0);
    let n = a.nrows();
    let mut term = tc::identity(n);
    let mut sum = tc::identity(n);
    for k in 1..30 {
        term = term.dot(&scaled) * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = sum.dot(&sum);
    }
    sum
}

/// Periodic Ising Hamiltonian summed from embedded Pauli operators.
pub fn ising_oracle(n: usize, j: f64, h: f64, bz: f64) -> CMat {
    let p = paulis();
    let d = 1 << n;
    let mut out: CMat = Array2::zeros((d, d));
    for i in 0..n {
        let zz = tc::kron(&p[3], &p[3]).unwrap();
        out = out + embed(&zz, &[i, (i + 1) % n], n) * C64::new(j, 0.0);
        out = out + embed(&p[1], &[i], n) * C64::new(j * h, 0.0);
        out = out + embed(&p[3], &[i], n) * C64::new(j * bz, 0.0);
    }
    out
}

/// Jordan-Wigner annihilators on `n` qubits, occupied = digit 1.
pub fn jw_annihilators(n: usize) -> Vec<CMat> {
    let p = paulis();
    let lower = ndarray::arr2(&[[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]]);
    (0..n)
        .map(|i| {
            let mut m = tc::identity(1);
            for k in 0..n {
                let f = if k < i {
                    &p[3]
                } else if k == i {
                    &lower
                } else {
                    &p[0]
                };
                m = tc::kron(&m, f).unwrap();
            }
            m
        })
        .collect()
}

/// `int_{-pi/2}^{pi/2} dk/2pi e^{-iks - it cos k}` by composite Simpson.
pub fn band_quadrature(t: f64, s: i64) -> C64 {
    let n = 20000;
    let (a, b) = (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let h = (b - a) / n as f64;
    let f = |k: f64| C64::from_polar(1.0, -k * s as f64 - t * k.cos());
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + i as f64 * h) * w;
    }
    acc * (h / 3.0) / (2.0 * std::f64::consts::PI)
}

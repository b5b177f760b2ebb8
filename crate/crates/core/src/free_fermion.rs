//! Gaussian spacetime matrices of the half-filled hopping chain.

#![allow(non_snake_case)]

use crate::tensor_core::{self as tc, CMat, LinalgError};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FermionError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("series did not converge within {0} terms")]
    NonConvergence(usize),
    #[error("invalid geometry: {0}")]
    Geometry(String),
}

pub type Result<T> = std::result::Result<T, FermionError>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub const SERIES_TOL: f64 = 1e-13;
pub const SERIES_MAX_TERMS: usize = 500;
pub const EIGEN_CLAMP: f64 = 1e-12;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn gamma_pos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `1/Gamma(x)` as an entire function; exactly zero at 0, -1, -2, ...
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x < 0.5 {
        // reflection: 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi
        return gamma_pos(1.0 - x) * (PI * x).sin() / PI;
    }
    if x > 171.0 {
        return 0.0;
    }
    1.0 / gamma_pos(x)
}

/// Regularized `1F2(a; b1, b2; y) / (Gamma(b1) Gamma(b2))` by its power series.
pub fn hyp1f2_regularized(a: f64, b1: f64, b2: f64, y: f64) -> Result<f64> {
    hyp1f2_regularized_tol(a, b1, b2, y, SERIES_TOL)
}

pub fn hyp1f2_regularized_tol(a: f64, b1: f64, b2: f64, y: f64, tol: f64) -> Result<f64> {
    // c_k = (a)_k y^k / k!
    let mut c = 1.0;
    let mut sum = 0.0;
    let mut quiet = 0;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        let term = c * rgamma(b1 + kf) * rgamma(b2 + kf);
        sum += term;
        if term.abs() <= tol * sum.abs().max(1.0) && kf > y.abs().sqrt() {
            quiet += 1;
            if quiet >= 3 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
        c *= (a + kf) * y / (kf + 1.0);
    }
    Err(FermionError::NonConvergence(SERIES_MAX_TERMS))
}

/// Above this |t| the power series loses digits to cancellation and the
/// Bessel expansion is used instead.
pub const SERIES_T_MAX: f64 = 6.0;

/// `<psibar(t, s) psi(0, 0)>` in the half-filled vacuum.
pub fn vacuum_correlator(t: f64, s: i64) -> Result<C64> {
    if t.abs() <= SERIES_T_MAX {
        vacuum_correlator_series(t, s)
    } else {
        Ok(vacuum_correlator_bessel(t, s))
    }
}

pub fn vacuum_correlator_series(t: f64, s: i64) -> Result<C64> {
    let sf = s as f64;
    let y = -t * t / 4.0;
    let f1 = hyp1f2_regularized(1.0, (3.0 - sf) / 2.0, (3.0 + sf) / 2.0, y)?;
    let f2 = hyp1f2_regularized(1.0, (2.0 - sf) / 2.0, (2.0 + sf) / 2.0, y)?;
    Ok(C64::new(2.0 * f2, -t * f1) * 0.25)
}

/// Band-integral weight `int_{-pi/2}^{pi/2} dk/2pi e^{ikn}`.
fn band_weight(n: i64) -> f64 {
    if n == 0 {
        0.5
    } else {
        (n as f64 * PI / 2.0).sin() / (PI * n as f64)
    }
}

/// `J_0..J_m_max` at `x >= 0` by Miller's backward recurrence.
pub fn bessel_j_sequence(x: f64, m_max: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; m_max + 1];
        v[0] = 1.0;
        return v;
    }
    let start = (m_max.max(x as usize) + 40 + (x.sqrt() * 10.0) as usize) | 1;
    let mut j = vec![0.0; start + 2];
    j[start + 1] = 0.0;
    j[start] = 1e-300;
    for m in (1..=start).rev() {
        j[m - 1] = 2.0 * m as f64 / x * j[m] - j[m + 1];
        if j[m - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(m - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.truncate(m_max + 1);
    j.iter().map(|v| v / norm).collect()
}

/// Jacobi-Anger expansion `sum_m (-i)^m J_m(t) w(m - s)`.
pub fn vacuum_correlator_bessel(t: f64, s: i64) -> C64 {
    let m_max = (t.abs() as usize) + 60 + (s.unsigned_abs() as usize);
    let j = bessel_j_sequence(t.abs(), m_max);
    let sign: f64 = if t < 0.0 { -1.0 } else { 1.0 };
    let mut acc = C64::new(j[0] * band_weight(-s), 0.0);
    let mut phase = ONE;
    for m in 1..=m_max {
        phase *= C64::new(0.0, -1.0);
        let jm = j[m] * sign.powi(m as i32);
        // J_{-m} = (-1)^m J_m and (-i)^{-m} = (-1)^m (-i)^m
        let w = band_weight(m as i64 - s) + band_weight(-(m as i64) - s);
        acc += phase * jm * w;
    }
    acc
}

/// Half-open site ranges on two time slices separated by `dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalPair {
    pub a: (i64, i64),
    pub b: (i64, i64),
    pub dt: f64,
}

impl IntervalPair {
    pub fn new(a: (i64, i64), b: (i64, i64), dt: f64) -> Result<Self> {
        if a.1 <= a.0 || b.1 <= b.0 {
            return Err(FermionError::Geometry(format!("empty interval in {a:?}, {b:?}")));
        }
        Ok(IntervalPair { a, b, dt })
    }

    pub fn len_a(&self) -> usize {
        (self.a.1 - self.a.0) as usize
    }

    pub fn len_b(&self) -> usize {
        (self.b.1 - self.b.0) as usize
    }
}

/// Table of `G(t, n)` for every separation the geometry needs.
struct PropagatorTable {
    offset: i64,
    equal_time: Vec<C64>,
    timed: Vec<C64>,
}

impl PropagatorTable {
    fn new(pair: &IntervalPair) -> Result<Self> {
        let lo = (pair.a.0 - pair.a.1).min(pair.b.0 - pair.b.1).min(pair.b.0 - pair.a.1).min(pair.a.0 - pair.b.1) - 1;
        let hi = -lo + 1;
        let mut equal_time = Vec::new();
        let mut timed = Vec::new();
        for n in lo..=hi {
            equal_time.push(vacuum_correlator(0.0, n)?);
            timed.push(vacuum_correlator(pair.dt, n)?);
        }
        Ok(PropagatorTable { offset: -lo, equal_time, timed })
    }

    fn g0(&self, n: i64) -> C64 {
        self.equal_time[(n + self.offset) as usize]
    }

    fn gt(&self, n: i64) -> C64 {
        self.timed[(n + self.offset) as usize]
    }
}

/// Two-slice propagator matrix: equal-time blocks on the diagonal, the
/// later slice's operator to the left in both off-diagonal blocks, with
/// the ordering sign in the upper-right block.
pub fn build_correlation_matrix(pair: &IntervalPair) -> Result<CMat> {
    let table = PropagatorTable::new(pair)?;
    let (na, nb) = (pair.len_a(), pair.len_b());
    let site = |k: usize| -> i64 {
        if k < na {
            pair.a.0 + k as i64
        } else {
            pair.b.0 + (k - na) as i64
        }
    };
    let n = na + nb;
    let mut c: CMat = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let (s, y) = (site(i), site(j));
            c[[i, j]] = match (i < na, j < na) {
                (true, true) | (false, false) => table.g0(s - y),
                (false, true) => table.gt(s - y),
                (true, false) => {
                    let sign = if (y - s).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    -table.gt(y - s) * sign
                }
            };
        }
    }
    Ok(c)
}

/// Equal-time correlation matrix of one interval.
pub fn interval_correlation(len: usize) -> Result<CMat> {
    let mut c: CMat = Array2::zeros((len, len));
    for i in 0..len {
        for j in 0..len {
            c[[i, j]] = vacuum_correlator(0.0, i as i64 - j as i64)?;
        }
    }
    Ok(c)
}

/// Single-particle kernel `t` of `T ~ exp(-psibar t psi)`.
#[derive(Clone, Debug)]
pub struct GaussianT {
    pub t_single: CMat,
}

impl GaussianT {
    /// Kernel of `T^dag`.
    pub fn adjoint(&self) -> GaussianT {
        GaussianT { t_single: tc::dagger(&self.t_single) }
    }

    /// `e^{-t}`.
    pub fn weight(&self) -> Result<CMat> {
        Ok(tc::matrix_function(&self.t_single, |z| (-z).exp())?)
    }
}

fn clamp_mode(z: C64, eps: f64) -> C64 {
    let mut z = z;
    if z.norm() < eps {
        z = C64::new(eps, 0.0);
    }
    if (ONE - z).norm() < eps {
        z = C64::new(1.0 - eps, 0.0);
    }
    z
}

/// `t^T = log((1 - C)/C)` on the principal branch.
pub fn gaussian_T_from_C(c: &CMat) -> Result<GaussianT> {
    let (w, _) = tc::eig(c)?;
    if w.iter().any(|z| z.norm() < EIGEN_CLAMP || (ONE - z).norm() < EIGEN_CLAMP) {
        log::warn!("correlation matrix has modes within {EIGEN_CLAMP:e} of 0 or 1, clamping");
    }
    let k = tc::matrix_function(c, |z| {
        let z = clamp_mode(z, EIGEN_CLAMP);
        ((ONE - z) / z).ln()
    })?;
    Ok(GaussianT { t_single: k.t().to_owned() })
}

/// Inverse of [`gaussian_T_from_C`]: `C = (1 + e^{t^T})^{-1}`.
pub fn correlation_from_kernel(g: &GaussianT) -> Result<CMat> {
    Ok(tc::matrix_function(&g.t_single.t().to_owned(), |z| ONE / (ONE + z.exp()))?)
}

fn log_det(m: &CMat) -> Result<C64> {
    Ok(tc::eigvals(m)?.iter().map(|z| z.ln()).sum())
}

/// `Tr(T_1 ... T_k) = det(1 + prod e^{-t_i}) / prod det(1 + e^{-t_i})`.
pub fn gaussian_trace_product(kernels: &[GaussianT]) -> Result<C64> {
    if kernels.is_empty() {
        return Err(FermionError::Geometry("empty kernel list".into()));
    }
    let n = kernels[0].t_single.nrows();
    let mut prod = tc::identity(n);
    let mut log_norm = ZERO;
    for k in kernels {
        if k.t_single.nrows() != n {
            return Err(FermionError::Geometry("kernel sizes differ".into()));
        }
        let g = k.weight()?;
        log_norm += log_det(&(&tc::identity(n) + &g))?;
        prod = prod.dot(&g);
    }
    Ok((log_det(&(&tc::identity(n) + &prod))? - log_norm).exp())
}

/// `Tr T^2 = det((1 - C)^2 + C^2)`.
pub fn tr_t2_from_c(c: &CMat) -> Result<C64> {
    let one_minus = &tc::identity(c.nrows()) - c;
    let m = one_minus.dot(&one_minus) + c.dot(c);
    Ok(log_det(&m)?.exp())
}

/// `Tr T T^dag = det((1 - C)(1 - C)^dag + C C^dag)`.
pub fn tr_ttd_from_c(c: &CMat) -> Result<f64> {
    let one_minus = &tc::identity(c.nrows()) - c;
    let m = one_minus.dot(&tc::dagger(&one_minus)) + c.dot(&tc::dagger(c));
    let m = (&m + &tc::dagger(&m)) * C64::new(0.5, 0.0);
    let (w, _) = tc::eigh(&m)?;
    Ok(w.iter().map(|x| x.ln()).sum::<f64>().exp())
}

/// `Tr T^n = prod_i (nu_i^n + (1 - nu_i)^n)`.
pub fn tr_tn_from_c(c: &CMat, n: i32) -> Result<C64> {
    let w = tc::eigvals(c)?;
    Ok(w.iter().map(|z| (z.powi(n) + (ONE - z).powi(n)).ln()).sum::<C64>().exp())
}

/// `-sum [nu Log nu + (1 - nu) Log(1 - nu)]` over the spectrum of `C`.
pub fn entropy_from_c(c: &CMat) -> Result<C64> {
    let w = tc::eigvals(c)?;
    Ok(w.iter()
        .map(|&z| {
            let z = clamp_mode(z, EIGEN_CLAMP);
            -(z * z.ln() + (ONE - z) * (ONE - z).ln())
        })
        .sum())
}

pub fn renyi2_from_c(c: &CMat) -> Result<C64> {
    Ok(-tr_t2_from_c(c)?.ln())
}

/// `I = S(AB) - S(A) - S(B)` for two copies of `[0, L)` separated by each time.
pub fn mutual_info_scan(l: usize, times: &[f64]) -> Result<Vec<(f64, C64)>> {
    if l < 8 {
        return Err(FermionError::Geometry(format!("interval length {l} below 8")));
    }
    let single = entropy_from_c(&interval_correlation(l)?)?;
    times
        .iter()
        .map(|&t| {
            let pair = IntervalPair::new((0, l as i64), (0, l as i64), t)?;
            let s_ab = entropy_from_c(&build_correlation_matrix(&pair)?)?;
            Ok((t, s_ab - single * 2.0))
        })
        .collect()
}

/// Lattice `Tr T^2` for the geometry at each time.
pub fn tr_t2_scan(a: (i64, i64), b: (i64, i64), times: &[f64]) -> Result<Vec<(f64, C64)>> {
    times
        .iter()
        .map(|&t| {
            let pair = IntervalPair::new(a, b, t)?;
            Ok((t, tr_t2_from_c(&build_correlation_matrix(&pair)?)?))
        })
        .collect()
}

/// One point of the refinement sweep.
#[derive(Clone, Copy, Debug)]
pub struct DivergencePoint {
    pub scale: usize,
    pub spacing: f64,
    pub tr_t2: C64,
    pub tr_ttd: f64,
    pub ratio: f64,
}

/// Pure-timelike geometry at scale `s`: A = [0, 4s), B = [s, 3s) at
/// time 4s, so B lies inside the causal development of A.
pub fn divergence_geometry(s: usize) -> IntervalPair {
    let s = s as i64;
    IntervalPair { a: (0, 4 * s), b: (s, 3 * s), dt: 4.0 * s as f64 }
}

pub fn lattice_divergence_demo(scales: &[usize]) -> Result<Vec<DivergencePoint>> {
    scales
        .iter()
        .map(|&s| {
            let c = build_correlation_matrix(&divergence_geometry(s))?;
            let tr_t2 = tr_t2_from_c(&c)?;
            let tr_ttd = tr_ttd_from_c(&c)?;
            Ok(DivergencePoint { scale: s, spacing: 1.0 / s as f64, tr_t2, tr_ttd, ratio: tr_ttd / tr_t2.norm() })
        })
        .collect()
}

/// Light-cone crossing times of two intervals: where an endpoint of B
/// becomes null separated from an endpoint of A.
pub fn light_cone_times(a: (i64, i64), b: (i64, i64)) -> Vec<f64> {
    let mut ts: Vec<f64> = Vec::new();
    for x in [a.0, a.1] {
        for y in [b.0, b.1] {
            let d = (y - x).abs() as f64;
            if !ts.iter().any(|t| (*t - d).abs() < 1e-12) {
                ts.push(d);
            }
        }
    }
    ts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ts
}

/// True when `t` is at least `window` away from every crossing.
pub fn away_from_light_cone(t: f64, crossings: &[f64], window: f64) -> bool {
    crossings.iter().all(|c| (t - c).abs() >= window)
}

/// Number operator occupation check for equal-time blocks.
pub fn block_spectrum_in_unit_interval(c: &CMat, tol: f64) -> Result<bool> {
    let h = (c + &tc::dagger(c)) * C64::new(0.5, 0.0);
    if tc::max_abs_diff(c, &h) > tol {
        return Ok(false);
    }
    let (w, _) = tc::eigh(&h)?;
    Ok(w.iter().all(|x| *x >= -tol && *x <= 1.0 + tol))
}

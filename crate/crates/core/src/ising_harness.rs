//! Exact diagonalization of the periodic mixed-field Ising chain
//! `H = J (sum Z_i Z_{i+1} + h sum X_i + B_z sum Z_i)`.
//!
//! Sweeps run in the energy eigenbasis: a thermal state is diagonal there and
//! `U(t)` is a phase, so each time point costs O(D^2) once the local
//! operators have been rotated.

#![allow(non_snake_case)]

use crate::spacetime_density::{
    self as sd, BoundReport, ChannelSpec, MultiT, SpacetimeDensityMatrix,
};
use crate::tensor_core::{self as tc, dagger, CMat, LinalgError, SpaceShape};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IsingError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sdm(#[from] sd::SdmError),
    #[error("{0} sites exceed the cap of {1}")]
    Cap(usize, usize),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("not enough data: {0}")]
    Insufficient(String),
}

pub type Result<T> = std::result::Result<T, IsingError>;

pub const MAX_SITES: usize = 13;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub n_sites: usize,
    pub j: f64,
    pub h: f64,
    pub b_z: f64,
}

impl IsingParams {
    pub fn new(n_sites: usize, j: f64, h: f64, b_z: f64) -> Self {
        IsingParams { n_sites, j, h, b_z }
    }

    /// Couplings used for the commutator figure.
    pub fn chaotic(n_sites: usize) -> Self {
        IsingParams::new(n_sites, 1.0, -1.05, 0.5)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    /// In units of J; `f64::INFINITY` gives the maximally mixed state.
    pub temperature: f64,
}

impl ThermalSpec {
    pub fn beta(&self) -> f64 {
        if self.temperature.is_infinite() {
            0.0
        } else {
            1.0 / self.temperature
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMat {
        let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
        let v = match self {
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        };
        Array2::from_shape_vec((2, 2), v.to_vec()).unwrap()
    }

    pub fn parse(s: &str) -> Option<Pauli> {
        match s.trim().to_ascii_uppercase().as_str() {
            "X" => Some(Pauli::X),
            "Y" => Some(Pauli::Y),
            "Z" => Some(Pauli::Z),
            _ => None,
        }
    }
}

fn bit(state: usize, site: usize, n: usize) -> usize {
    (state >> (n - 1 - site)) & 1
}

pub fn build_hamiltonian(p: &IsingParams) -> Result<CMat> {
    let n = p.n_sites;
    if n < 2 {
        return Err(IsingError::Param("need at least two sites".into()));
    }
    if n > MAX_SITES {
        return Err(IsingError::Cap(n, MAX_SITES));
    }
    let d = 1usize << n;
    let mut h: CMat = Array2::zeros((d, d));
    for s in 0..d {
        let z = |i: usize| 1.0 - 2.0 * bit(s, i, n) as f64;
        let mut diag = 0.0;
        for i in 0..n {
            diag += z(i) * z((i + 1) % n) + p.b_z * z(i);
        }
        h[[s, s]] = C64::new(p.j * diag, 0.0);
        for i in 0..n {
            let flipped = s ^ (1 << (n - 1 - i));
            h[[flipped, s]] += C64::new(p.j * p.h, 0.0);
        }
    }
    Ok(h)
}

/// Dense eigendecomposition computed once per Hamiltonian.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub vectors: CMat,
}

impl EigenSystem {
    pub fn new(h: &CMat) -> Result<Self> {
        let (energies, vectors) = tc::eigh(h)?;
        Ok(EigenSystem { energies, vectors })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn thermal_weights(&self, spec: &ThermalSpec) -> Vec<f64> {
        let beta = spec.beta();
        let e0 = self.energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self.energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    /// `V diag(f(E)) V^dag`.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> CMat {
        let fw = Array1::from_iter(self.energies.iter().map(|&e| f(e)));
        let scaled = &self.vectors * &fw.view().insert_axis(ndarray::Axis(0));
        scaled.dot(&dagger(&self.vectors))
    }

    /// `V^dag X V`.
    pub fn to_eigenbasis(&self, x: &CMat) -> CMat {
        dagger(&self.vectors).dot(&x.dot(&self.vectors))
    }
}

pub fn thermal_state(h: &CMat, spec: &ThermalSpec) -> Result<CMat> {
    let es = EigenSystem::new(h)?;
    Ok(thermal_state_from(&es, spec))
}

pub fn thermal_state_from(es: &EigenSystem, spec: &ThermalSpec) -> CMat {
    let p = Array1::from_iter(es.thermal_weights(spec).into_iter().map(|x| C64::new(x, 0.0)));
    let scaled = &es.vectors * &p.view().insert_axis(ndarray::Axis(0));
    let rho = scaled.dot(&dagger(&es.vectors));
    (&rho + &dagger(&rho)) * C64::new(0.5, 0.0)
}

pub fn evolution(h: &CMat, t: f64) -> Result<ChannelSpec> {
    let es = EigenSystem::new(h)?;
    Ok(evolution_from(&es, t))
}

pub fn evolution_from(es: &EigenSystem, t: f64) -> ChannelSpec {
    ChannelSpec::Unitary(es.function(|e| C64::from_polar(1.0, -e * t)))
}

/// `|r'><r|` placed on one site of an n-qubit chain.
pub fn site_transition(n: usize, site: usize, r: usize, rp: usize) -> CMat {
    let d = 1usize << n;
    let mut m: CMat = Array2::zeros((d, d));
    for s in 0..d {
        if bit(s, site, n) == r {
            let target = (s & !(1 << (n - 1 - site))) | (rp << (n - 1 - site));
            m[[target, s]] = C64::new(1.0, 0.0);
        }
    }
    m
}

/// `V^dag (|r'><r| on site) V`, indexed `[r * 2 + r']`.
fn rotated_transitions(es: &EigenSystem, n: usize, site: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(4);
    for r in 0..2 {
        for rp in 0..2 {
            out.push(es.to_eigenbasis(&site_transition(n, site, r, rp)));
        }
    }
    out
}

/// Single-site-pair spacetime matrices at many times from one
/// diagonalization.
pub struct TwoSiteSweep {
    es: EigenSystem,
    weights: Vec<f64>,
    pa: Vec<CMat>,
    // transposed so the inner sum runs along rows
    qbt: Vec<CMat>,
}

impl TwoSiteSweep {
    pub fn new(p: &IsingParams, spec: &ThermalSpec, site_a: usize, site_b: usize) -> Result<Self> {
        if site_a >= p.n_sites || site_b >= p.n_sites {
            return Err(IsingError::Param(format!("sites {site_a},{site_b} outside chain of {}", p.n_sites)));
        }
        let h = build_hamiltonian(p)?;
        let es = EigenSystem::new(&h)?;
        let weights = es.thermal_weights(spec);
        let pa = rotated_transitions(&es, p.n_sites, site_a);
        let qb = if site_b == site_a { pa.clone() } else { rotated_transitions(&es, p.n_sites, site_b) };
        let qbt = qb.iter().map(|q| q.t().as_standard_layout().into_owned()).collect();
        Ok(TwoSiteSweep { es, weights, pa, qbt })
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.es
    }

    /// `T[(a b),(a' b')] = sum_mn p_m P[a a']_mn e^{i E_n t} Q[b b']_nm e^{-i E_m t}`.
    pub fn spacetime_matrix(&self, t: f64) -> SpacetimeDensityMatrix {
        let d = self.es.dim();
        let ph: Vec<C64> = self.es.energies.iter().map(|&e| C64::from_polar(1.0, e * t)).collect();
        let mut m: CMat = Array2::zeros((4, 4));
        for a in 0..2 {
            for ap in 0..2 {
                let p = &self.pa[a * 2 + ap];
                for b in 0..2 {
                    for bp in 0..2 {
                        let q = &self.qbt[b * 2 + bp];
                        let mut s = ZERO;
                        for mi in 0..d {
                            let mut inner = ZERO;
                            for ni in 0..d {
                                inner += p[[mi, ni]] * ph[ni] * q[[mi, ni]];
                            }
                            s += inner * ph[mi].conj() * self.weights[mi];
                        }
                        m[[a * 2 + b, ap * 2 + bp]] = s;
                    }
                }
            }
        }
        SpacetimeDensityMatrix { matrix: m, shape: SpaceShape::bipartite(2, 2), regions: None }
    }
}

pub fn commutator_sweep(
    p: &IsingParams,
    spec: &ThermalSpec,
    site_a: usize,
    site_b: usize,
    obs: Pauli,
    times: &[f64],
) -> Result<Vec<BoundReport>> {
    let sweep = TwoSiteSweep::new(p, spec, site_a, site_b)?;
    let o = obs.matrix();
    times
        .iter()
        .map(|&t| Ok(sd::commutator_bounds(&sweep.spacetime_matrix(t), &o, &o)?))
        .collect()
}

/// Lieb-Robinson envelope `C dimA |A||B| e^{-mu d} (e^{v t} - 1)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LrFitParams {
    pub c: f64,
    pub v: f64,
    pub mu: f64,
}

impl LrFitParams {
    pub fn envelope(&self, dim_a: f64, size_a: f64, size_b: f64, dist: f64, t: f64) -> f64 {
        self.c * dim_a * size_a * size_b * (-self.mu * dist).exp() * (self.v * t.abs()).exp_m1()
    }
}

/// Imagitivity curve at one separation.
#[derive(Clone, Debug)]
pub struct LrSeries {
    pub distance: f64,
    pub times: Vec<f64>,
    pub imagitivity: Vec<f64>,
}

pub const LR_NOISE_FLOOR: f64 = 1e-12;

/// Fits `(C, v, mu)` on early-time log data and takes the smallest `C` that
/// makes the envelope dominate every early point.
pub fn lr_fit(series: &[LrSeries], early_fraction: f64) -> Result<LrFitParams> {
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    for s in series {
        let n = ((s.times.len() as f64) * early_fraction).ceil() as usize;
        for (t, y) in s.times.iter().zip(&s.imagitivity).take(n.max(2)) {
            if *y > LR_NOISE_FLOOR && *t > 0.0 {
                pts.push((s.distance, *t, y.ln()));
            }
        }
    }
    let dists: Vec<f64> = pts.iter().map(|p| p.0).collect();
    if pts.len() < 3 || dists.iter().all(|d| *d == dists[0]) {
        return Err(IsingError::Insufficient("need early data at two or more separations".into()));
    }
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for k in 0..400 {
        let v = 10f64.powf(-2.0 + 3.5 * k as f64 / 399.0);
        // log y - log(e^{vt} - 1) = c0 - mu d
        let rows: Vec<(f64, f64)> = pts.iter().map(|(d, t, ly)| (*d, ly - (v * t).exp_m1().ln())).collect();
        let (slope, icpt, _) = linear_fit(&rows.iter().map(|r| r.0).collect::<Vec<_>>(), &rows.iter().map(|r| r.1).collect::<Vec<_>>());
        let resid: f64 = rows.iter().map(|(d, y)| (y - icpt - slope * d).powi(2)).sum();
        if best.is_none_or(|b| resid < b.0) {
            best = Some((resid, v, -slope, icpt));
        }
    }
    let (_, v, mu, _) = best.unwrap();
    let mu = mu.max(0.0);
    let c = pts
        .iter()
        .map(|(d, t, ly)| ly.exp() / ((-mu * d).exp() * (v * t).exp_m1()))
        .fold(0.0, f64::max);
    Ok(LrFitParams { c, v, mu })
}

/// True when every early-time point lies below the envelope.
pub fn lr_envelope_check(series: &[LrSeries], fit: &LrFitParams, early_fraction: f64, dim_a: f64) -> Result<bool> {
    if series.len() < 2 {
        return Err(IsingError::Insufficient("need two or more separations".into()));
    }
    for s in series {
        let n = ((s.times.len() as f64) * early_fraction).ceil() as usize;
        for (t, y) in s.times.iter().zip(&s.imagitivity).take(n.max(2)) {
            let env = fit.envelope(dim_a, 1.0, 1.0, s.distance, *t) * (1.0 + 1e-9);
            if *y > env + LR_NOISE_FLOOR {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Ordinary least squares `y = slope x + intercept`; returns
/// `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Multi-time spacetime matrix with `k` single-spin slots on one site,
/// separated by `dt`, built in the energy eigenbasis by meeting forward
/// and backward halves in the middle.
pub fn multi_time_T(p: &IsingParams, spec: &ThermalSpec, slot_site: usize, dt: f64, k: usize) -> Result<MultiT> {
    if k < 2 {
        return Err(IsingError::Param("need at least two slots".into()));
    }
    if slot_site >= p.n_sites {
        return Err(IsingError::Param(format!("site {slot_site} outside chain")));
    }
    if 4usize.pow(k as u32) > sd::MULTI_T_CAP * sd::MULTI_T_CAP {
        return Err(IsingError::Cap(k, 6));
    }
    let h = build_hamiltonian(p)?;
    let es = EigenSystem::new(&h)?;
    let w = es.thermal_weights(spec);
    let pr = rotated_transitions(&es, p.n_sites, slot_site);
    let d = es.dim();
    let e = &es.energies;
    // U X U^dag in the eigenbasis
    let fwd = |x: &CMat| -> CMat {
        Array2::from_shape_fn((d, d), |(m, n)| x[[m, n]] * C64::from_polar(1.0, -(e[m] - e[n]) * dt))
    };
    let bwd = |x: &CMat| -> CMat {
        Array2::from_shape_fn((d, d), |(m, n)| x[[m, n]] * C64::from_polar(1.0, (e[m] - e[n]) * dt))
    };
    let half = k / 2;
    // forward: S_1 = rho P_1, S_j = (U S_{j-1} U^dag) P_j
    let mut fwd_ops: Vec<CMat> = (0..4)
        .map(|i| Array2::from_shape_fn((d, d), |(m, n)| w[m] * pr[i][[m, n]]))
        .collect();
    for _ in 1..half {
        let mut next = Vec::with_capacity(fwd_ops.len() * 4);
        for s in &fwd_ops {
            let us = fwd(s);
            for pj in &pr {
                next.push(us.dot(pj));
            }
        }
        fwd_ops = next;
    }
    // backward: B_k = P_k, B_j = P_j (U^dag B_{j+1} U)
    let mut bwd_ops: Vec<CMat> = pr.clone();
    for _ in (half + 1)..k {
        let mut next = Vec::with_capacity(bwd_ops.len() * 4);
        for pj in &pr {
            for b in &bwd_ops {
                next.push(pj.dot(&bwd(b)));
            }
        }
        bwd_ops = next;
    }
    let fwd_ops: Vec<CMat> = fwd_ops.iter().map(fwd).collect();
    let total = 1usize << k;
    let mut out: CMat = Array2::zeros((total, total));
    for (fi, s) in fwd_ops.iter().enumerate() {
        for (bi, b) in bwd_ops.iter().enumerate() {
            let val = tc::trace_product(s, b);
            // fi encodes (r1 r1' ... r_half r_half'), bi the rest
            let flat = (fi << (2 * (k - half))) | bi;
            let (mut row, mut col) = (0, 0);
            for j in 0..k {
                let sh = 2 * (k - 1 - j);
                row = (row << 1) | ((flat >> (sh + 1)) & 1);
                col = (col << 1) | ((flat >> sh) & 1);
            }
            out[[row, col]] = val;
        }
    }
    let labels: Vec<(String, usize)> = (0..k).map(|i| (format!("R{i}"), 2)).collect();
    Ok(MultiT { matrix: out, shape: SpaceShape::new(labels)? })
}

pub fn multi_time_singular_values(
    p: &IsingParams,
    spec: &ThermalSpec,
    slot_site: usize,
    dt: f64,
    k: usize,
) -> Result<Vec<f64>> {
    let multi = multi_time_T(p, spec, slot_site, dt, k)?;
    Ok(sd::past_future_singular_values(&multi, k / 2)?)
}

/// Log-linear fit of singular values above `floor * s_max` against their
/// index; returns `(slope, r_squared, points_used)`.
pub fn decay_fit(sv: &[f64], floor: f64) -> (f64, f64, usize) {
    let smax = sv.first().cloned().unwrap_or(0.0);
    let pts: Vec<(f64, f64)> = sv
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > floor * smax && **s > 0.0)
        .map(|(i, s)| (i as f64, s.ln()))
        .collect();
    if pts.len() < 2 {
        return (0.0, 0.0, pts.len());
    }
    let (slope, _, r2) = linear_fit(&pts.iter().map(|p| p.0).collect::<Vec<_>>(), &pts.iter().map(|p| p.1).collect::<Vec<_>>());
    (slope, r2, pts.len())
}

/// Thermal expectation of `H` after evolving by `t`.
pub fn energy_after(h: &CMat, rho: &CMat, t: f64) -> Result<f64> {
    let u = match evolution(h, t)? {
        ChannelSpec::Unitary(u) => u,
        ChannelSpec::Kraus(_) => unreachable!(),
    };
    let rt = u.dot(&rho.dot(&dagger(&u)));
    Ok(tc::trace_product(&rt, h).re)
}

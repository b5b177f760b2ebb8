#![allow(non_snake_case)]
//! Statevector simulation of the ancilla-controlled SWAP protocols for `Tr T^2` and `Tr TT^dag`.

use crate::spacetime_density::RegionSpec;
use crate::tensor_core::{self as tc, CMat, LinalgError};
use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("statevector of {0} amplitudes exceeds cap {MAX_AMPLITUDES}")]
    Cap(usize),
    #[error("invalid protocol: {0}")]
    Spec(String),
    #[error("inconsistent estimates: 2 Tr TT^dag - 2 Re Tr T^2 = {0}")]
    Inconsistent(f64),
}

pub type Result<T> = std::result::Result<T, CircuitError>;

pub const MAX_AMPLITUDES: usize = 1 << 24;

/// Pure state over a list of registers; register 0 is the most significant digit.
#[derive(Debug, Clone)]
pub struct Statevector {
    dims: Vec<usize>,
    strides: Vec<usize>,
    pub amp: Vec<C64>,
}

impl Statevector {
    pub fn product(factors: &[(usize, Vec<C64>)]) -> Result<Self> {
        let total: usize = factors.iter().map(|f| f.0).product();
        if total > MAX_AMPLITUDES {
            return Err(CircuitError::Cap(total));
        }
        let mut amp = vec![C64::new(1.0, 0.0)];
        let mut dims = Vec::new();
        for (d, v) in factors {
            if v.len() != *d {
                return Err(CircuitError::Spec("factor length mismatch".into()));
            }
            let mut next = Vec::with_capacity(amp.len() * d);
            for a in &amp {
                for x in v {
                    next.push(a * x);
                }
            }
            amp = next;
            dims.push(*d);
        }
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Ok(Self { dims, strides, amp })
    }

    pub fn len(&self) -> usize {
        self.amp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amp.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn digit(&self, idx: usize, reg: usize) -> usize {
        (idx / self.strides[reg]) % self.dims[reg]
    }

    /// Offsets of all digit combinations of `regs`, first register most significant.
    fn offsets(&self, regs: &[usize]) -> Vec<usize> {
        let mut out = vec![0];
        for &r in regs {
            let mut next = Vec::with_capacity(out.len() * self.dims[r]);
            for o in &out {
                for k in 0..self.dims[r] {
                    next.push(o + k * self.strides[r]);
                }
            }
            out = next;
        }
        out
    }

    /// Applies `m` to the registers `regs` in place.
    pub fn apply(&mut self, regs: &[usize], m: &CMat) -> Result<()> {
        let offs = self.offsets(regs);
        if m.dim() != (offs.len(), offs.len()) {
            return Err(CircuitError::Spec("gate dimension mismatch".into()));
        }
        let mut buf = vec![C64::new(0.0, 0.0); offs.len()];
        for base in 0..self.amp.len() {
            if regs.iter().any(|&r| self.digit(base, r) != 0) {
                continue;
            }
            for (k, o) in offs.iter().enumerate() {
                buf[k] = self.amp[base + o];
            }
            for (i, o) in offs.iter().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for (j, b) in buf.iter().enumerate() {
                    s += m[[i, j]] * b;
                }
                self.amp[base + o] = s;
            }
        }
        Ok(())
    }

    /// Swaps register groups `g1` and `g2` (equal dims), only where `control` reads 1 if given.
    pub fn swap_groups(&mut self, g1: &[usize], g2: &[usize], control: Option<usize>) -> Result<()> {
        if g1.len() != g2.len() || g1.iter().zip(g2).any(|(a, b)| self.dims[*a] != self.dims[*b]) {
            return Err(CircuitError::Spec("swap groups differ in shape".into()));
        }
        for idx in 0..self.amp.len() {
            if let Some(c) = control {
                if self.digit(idx, c) != 1 {
                    continue;
                }
            }
            let mut other = idx;
            for (&a, &b) in g1.iter().zip(g2) {
                let (da, db) = (self.digit(idx, a), self.digit(idx, b));
                other = other - da * self.strides[a] - db * self.strides[b] + db * self.strides[a] + da * self.strides[b];
            }
            if other > idx {
                self.amp.swap(idx, other);
            }
        }
        Ok(())
    }

    /// Probability that register `reg` (a qubit) is found in `|+>`.
    pub fn prob_plus(&self, reg: usize) -> f64 {
        let s = self.strides[reg];
        let mut p = 0.0;
        for idx in 0..self.amp.len() {
            if self.digit(idx, reg) == 0 {
                p += 0.5 * (self.amp[idx] + self.amp[idx + s]).norm_sqr();
            }
        }
        p
    }
}

fn plus_state() -> Vec<C64> {
    vec![C64::new(FRAC_1_SQRT_2, 0.0); 2]
}

/// `R(theta) = exp(i theta Z / 2)`.
pub fn rotation(theta: f64) -> CMat {
    let mut r = CMat::zeros((2, 2));
    r[[0, 0]] = C64::from_polar(1.0, 0.5 * theta);
    r[[1, 1]] = C64::from_polar(1.0, -0.5 * theta);
    r
}

/// `sum_i sqrt(l_i) |i>_S |i>_R` in the eigenbasis of `rho`; reference dimension equals the system's.
pub fn purify(rho: &CMat) -> Result<Array1<C64>> {
    let (w, v) = tc::eigh(rho)?;
    let d = rho.nrows();
    let mut psi = Array1::zeros(d * d);
    for (i, &l) in w.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        for r in 0..d {
            psi[r * d + i] += v[[r, i]] * s;
        }
    }
    Ok(psi)
}

#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    /// Pure state on system (sites of `regions`) followed by a reference register.
    pub state: Array1<C64>,
    pub ref_dim: usize,
    pub u: CMat,
    pub regions: RegionSpec,
    pub theta: f64,
    /// `None` means exact probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
}

impl ProtocolSpec {
    pub fn from_density(rho: &CMat, u: &CMat, regions: RegionSpec) -> Result<Self> {
        let state = purify(rho)?;
        Self::new(state, rho.nrows(), u.clone(), regions)
    }

    pub fn from_pure(psi: &Array1<C64>, u: &CMat, regions: RegionSpec) -> Result<Self> {
        Self::new(psi.clone(), 1, u.clone(), regions)
    }

    pub fn new(state: Array1<C64>, ref_dim: usize, u: CMat, regions: RegionSpec) -> Result<Self> {
        regions.validate().map_err(|e| CircuitError::Spec(e.to_string()))?;
        let d = regions.full_dim();
        if state.len() != d * ref_dim {
            return Err(CircuitError::Spec("state dimension does not match regions".into()));
        }
        if u.dim() != (d, d) {
            return Err(CircuitError::Spec("unitary dimension does not match regions".into()));
        }
        let spec = Self { state, ref_dim, u, regions, theta: 0.0, shots: None, seed: 0 };
        Ok(spec)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(theta > -PI && theta <= PI) {
            return Err(CircuitError::Spec("theta must lie in (-pi, pi]".into()));
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn with_shots(mut self, shots: Option<u64>, seed: u64) -> Self {
        self.shots = shots;
        self.seed = seed;
        self
    }

    /// Reduced state of the system, for checking the purification.
    pub fn reduced_state(&self) -> CMat {
        let d = self.regions.full_dim();
        let r = self.ref_dim;
        CMat::from_shape_fn((d, d), |(i, j)| (0..r).map(|k| self.state[i * r + k] * self.state[j * r + k].conj()).sum())
    }

    fn copy_factors(&self) -> Vec<(usize, Vec<C64>)> {
        vec![(self.regions.full_dim() * self.ref_dim, self.state.to_vec())]
    }
}

/// Register indices of one copy: system sites, then the reference.
struct CopyLayout {
    sites: Vec<usize>,
}

impl CopyLayout {
    fn system(&self) -> &[usize] {
        &self.sites[..self.sites.len() - 1]
    }
    fn group(&self, local: &[usize]) -> Vec<usize> {
        local.iter().map(|&s| self.sites[s]).collect()
    }
}

fn site_dims(spec: &ProtocolSpec) -> Vec<usize> {
    let mut dims = vec![spec.regions.local_dim; spec.regions.total_sites];
    dims.push(spec.ref_dim);
    dims
}

/// Pieces of a protocol register: ancilla qubit, copy of system+reference, maximally entangled pair over `k` sites.
enum Block {
    Qubit(Vec<C64>),
    Copy,
    Epr(usize),
}

fn assemble(spec: &ProtocolSpec, blocks: &[Block]) -> Result<(Statevector, Vec<CopyLayout>, Vec<Vec<usize>>)> {
    let sd = site_dims(spec);
    let mut dims = Vec::new();
    let mut copies = Vec::new();
    let mut eprs = Vec::new();
    let mut total = 1usize;
    for b in blocks {
        match b {
            Block::Qubit(_) => {
                dims.push(2);
                total *= 2;
            }
            Block::Copy => {
                let start = dims.len();
                dims.extend_from_slice(&sd);
                copies.push(CopyLayout { sites: (start..start + sd.len()).collect() });
                total *= spec.regions.full_dim() * spec.ref_dim;
            }
            Block::Epr(k) => {
                let start = dims.len();
                let d = spec.regions.local_dim;
                dims.extend(std::iter::repeat_n(d, 2 * k));
                eprs.push((start..start + 2 * k).collect());
                total *= d.pow(2 * *k as u32);
            }
        }
        if total > MAX_AMPLITUDES {
            return Err(CircuitError::Cap(total));
        }
    }
    let mut factors = Vec::new();
    for b in blocks {
        match b {
            Block::Qubit(v) => factors.push((2, v.clone())),
            Block::Copy => factors.extend(spec.copy_factors()),
            Block::Epr(k) => {
                let da = spec.regions.local_dim.pow(*k as u32);
                let mut v = vec![C64::new(0.0, 0.0); da * da];
                for i in 0..da {
                    v[i * da + i] = C64::new(1.0 / (da as f64).sqrt(), 0.0);
                }
                factors.push((da * da, v));
            }
        }
    }
    let packed = Statevector::product(&factors)?;
    let mut strides = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let sv = Statevector { dims, strides, amp: packed.amp };
    Ok((sv, copies, eprs))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShotEstimate {
    pub p_plus: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub shots: Option<u64>,
    pub seed: u64,
}

fn sample(p_exact: f64, scale: f64, shots: Option<u64>, seed: u64) -> Result<ShotEstimate> {
    let p_exact = p_exact.clamp(0.0, 1.0);
    let (p, stderr) = match shots {
        None => (p_exact, 0.0),
        Some(0) => return Err(CircuitError::Spec("shots must be positive".into())),
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = Binomial::new(n, p_exact).map_err(|e| CircuitError::Spec(e.to_string()))?.sample(&mut rng);
            let p = k as f64 / n as f64;
            (p, (p * (1.0 - p) / n as f64).sqrt())
        }
    };
    Ok(ShotEstimate { p_plus: p, estimate: scale * (2.0 * p - 1.0), stderr: 2.0 * scale * stderr, shots, seed })
}

/// Exact `P(+)` of the `Tr T^2` circuit at angle `theta`.
pub fn trT2_probability(spec: &ProtocolSpec, theta: f64) -> Result<f64> {
    let (mut sv, copies, _) = assemble(spec, &[Block::Qubit(plus_state()), Block::Copy, Block::Copy])?;
    let a = &spec.regions.region_a_sites;
    let b = &spec.regions.region_b_sites;
    sv.swap_groups(&copies[0].group(a), &copies[1].group(a), Some(0))?;
    sv.apply(&[0], &rotation(theta))?;
    for c in &copies {
        sv.apply(c.system(), &spec.u)?;
    }
    sv.swap_groups(&copies[0].group(b), &copies[1].group(b), Some(0))?;
    Ok(sv.prob_plus(0))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub re: ShotEstimate,
    pub im: ShotEstimate,
}

impl ComplexEstimate {
    pub fn value(&self) -> C64 {
        C64::new(self.re.estimate, self.im.estimate)
    }
}

/// Real part from `theta = 0`, imaginary part from `theta = -pi/2`; the second run uses `seed + 1`.
pub fn run_trT2(spec: &ProtocolSpec) -> Result<ComplexEstimate> {
    let re = sample(trT2_probability(spec, 0.0)?, 1.0, spec.shots, spec.seed)?;
    let im = sample(trT2_probability(spec, -0.5 * PI)?, 1.0, spec.shots, spec.seed.wrapping_add(1))?;
    Ok(ComplexEstimate { re, im })
}

/// Single run at `spec.theta`, estimating `Re(e^{i theta} Tr T^2)`.
pub fn run_trT2_at_theta(spec: &ProtocolSpec) -> Result<ShotEstimate> {
    sample(trT2_probability(spec, spec.theta)?, 1.0, spec.shots, spec.seed)
}

/// Exact `P(+)` of the `Tr TT^dag` circuit.
/// Copy 2 has its A part exchanged with one half of a maximally entangled pair before evolution.
/// The controlled swap then acts on the complement of B together with the reference, which makes
/// the overlap `Tr TT^dag / dim A`; swapping B alone gives the overlap of the B marginals instead.
pub fn trTTd_probability(spec: &ProtocolSpec) -> Result<f64> {
    let na = spec.regions.region_a_sites.len();
    let (mut sv, copies, eprs) =
        assemble(spec, &[Block::Qubit(plus_state()), Block::Copy, Block::Epr(na), Block::Copy])?;
    let a = &spec.regions.region_a_sites;
    let b = &spec.regions.region_b_sites;
    let a_plus: Vec<usize> = eprs[0][..na].to_vec();
    sv.swap_groups(&a_plus, &copies[1].group(a), None)?;
    for c in &copies {
        sv.apply(c.system(), &spec.u)?;
    }
    // controlled swap of everything outside B, reference included
    let n = spec.regions.total_sites;
    let mut rest = crate::spacetime_density::complement_sites(b, n);
    rest.push(n);
    sv.swap_groups(&copies[0].group(&rest), &copies[1].group(&rest), Some(0))?;
    Ok(sv.prob_plus(0))
}

pub fn run_trTTd(spec: &ProtocolSpec) -> Result<ShotEstimate> {
    let da = spec.regions.dim_a() as f64;
    sample(trTTd_probability(spec)?, da, spec.shots, spec.seed)
}

/// `sqrt(2 Tr TT^dag - 2 Re Tr T^2)`, clamped at zero for small negative fluctuations.
pub fn imagitivity_from_protocols(est_t2: C64, est_ttd: f64) -> Result<f64> {
    let v = 2.0 * est_ttd - 2.0 * est_t2.re;
    if v < -1e-2 * est_ttd.abs().max(1.0) {
        return Err(CircuitError::Inconsistent(v));
    }
    Ok(v.max(0.0).sqrt())
}

/// One row of the protocol table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub quantity: String,
    pub theory: f64,
    pub simulated: f64,
    pub stderr: f64,
}

/// Single qubit in `|+>`, trivial evolution, A = B = the qubit.
pub fn protocol_table(shots: Option<u64>, seed: u64) -> Result<Vec<TableRow>> {
    let regions = RegionSpec::qubits(vec![0], vec![0], 1).map_err(|e| CircuitError::Spec(e.to_string()))?;
    let psi = Array1::from(plus_state());
    let spec = ProtocolSpec::from_pure(&psi, &tc::identity(2), regions)?.with_shots(shots, seed);
    let t2 = run_trT2(&spec)?;
    let ttd = run_trTTd(&spec.clone().with_shots(shots, seed.wrapping_add(2)))?;
    let imag = imagitivity_from_protocols(t2.value(), ttd.estimate)?;
    let imag_err = if imag > 0.0 { (t2.re.stderr.powi(2) + ttd.stderr.powi(2)).sqrt() / imag } else { 0.0 };
    Ok(vec![
        TableRow { quantity: "Re Tr T^2".into(), theory: 1.0, simulated: t2.re.estimate, stderr: t2.re.stderr },
        TableRow { quantity: "Im Tr T^2".into(), theory: 0.0, simulated: t2.im.estimate, stderr: t2.im.stderr },
        TableRow { quantity: "Tr TT^dag".into(), theory: 2.0, simulated: ttd.estimate, stderr: ttd.stderr },
        TableRow { quantity: "||T - T^dag||_2".into(), theory: 2f64.sqrt(), simulated: imag, stderr: imag_err },
    ])
}

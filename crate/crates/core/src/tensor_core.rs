//! Dense complex linear algebra shared by the physics modules.
//!
//! Composite indices are first-factor major: for factors (A, B) the joint
//! index is `a * dim_b + b`.

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{Eig, Eigh, Inverse, SVD, UPLO};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

pub type CMat = Array2<C64>;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate factor label `{0}`")]
    DuplicateLabel(String),
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("eigenvalue {0} lies on the branch cut of the principal logarithm")]
    BranchCut(C64),
    #[error("dimension product overflows")]
    Overflow,
    #[error("lapack failure: {0}")]
    Lapack(String),
}

impl From<ndarray_linalg::error::LinalgError> for LinalgError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        LinalgError::Lapack(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Ordered tensor factorization of a Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceShape {
    factors: Vec<(String, usize)>,
}

impl SpaceShape {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> =
            factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (i, (l, d)) in factors.iter().enumerate() {
            if *d == 0 {
                return Err(LinalgError::Dimension(format!("factor `{l}` has dimension 0")));
            }
            if factors[..i].iter().any(|(m, _)| m == l) {
                return Err(LinalgError::DuplicateLabel(l.clone()));
            }
        }
        let mut p: usize = 1;
        for (_, d) in &factors {
            p = p.checked_mul(*d).ok_or(LinalgError::Overflow)?;
        }
        Ok(SpaceShape { factors })
    }

    pub fn bipartite(dim_a: usize, dim_b: usize) -> Self {
        SpaceShape::new([("A", dim_a), ("B", dim_b)]).expect("valid bipartite shape")
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, d)| *d)
            .ok_or_else(|| LinalgError::UnknownLabel(label.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchattenOrder {
    Finite(f64),
    Infinity,
}

impl SchattenOrder {
    pub fn p(p: f64) -> Self {
        if p.is_infinite() {
            SchattenOrder::Infinity
        } else {
            SchattenOrder::Finite(p)
        }
    }

    /// Hölder conjugate exponent.
    pub fn conjugate(self) -> Self {
        match self {
            SchattenOrder::Infinity => SchattenOrder::Finite(1.0),
            SchattenOrder::Finite(p) if p == 1.0 => SchattenOrder::Infinity,
            SchattenOrder::Finite(p) => SchattenOrder::Finite(p / (p - 1.0)),
        }
    }
}

pub fn check_finite(m: &CMat) -> Result<()> {
    for ((i, j), z) in m.indexed_iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(LinalgError::NonFinite(i, j));
        }
    }
    Ok(())
}

pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &CMat) -> C64 {
    m.diag().sum()
}

/// Tr(a b) without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            s += a[[i, k]] * b[[k, i]];
        }
    }
    s
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn kron(a: &CMat, b: &CMat) -> Result<CMat> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let rows = ra.checked_mul(rb).ok_or(LinalgError::Overflow)?;
    let cols = ca.checked_mul(cb).ok_or(LinalgError::Overflow)?;
    let mut out = Array2::zeros((rows, cols));
    for i in 0..ra {
        for j in 0..ca {
            let x = a[[i, j]];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = x * b[[k, l]];
                }
            }
        }
    }
    Ok(out)
}

/// Mixed-radix digits of `idx`, most significant factor first.
fn digits(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

pub fn partial_trace(m: &CMat, shape: &SpaceShape, keep: &[&str]) -> Result<CMat> {
    let n = shape.dim();
    if m.dim() != (n, n) {
        return Err(LinalgError::Dimension(format!(
            "matrix {:?} does not match shape of dimension {n}",
            m.dim()
        )));
    }
    for l in keep {
        shape.dim_of(l)?;
    }
    let dims: Vec<usize> = shape.factors.iter().map(|(_, d)| *d).collect();
    let kept: Vec<bool> = shape.factors.iter().map(|(l, _)| keep.contains(&l.as_str())).collect();
    let kdim: usize = dims.iter().zip(&kept).filter(|(_, k)| **k).map(|(d, _)| d).product();
    let mut out = Array2::zeros((kdim, kdim));
    let mut di = vec![0; dims.len()];
    let mut dj = vec![0; dims.len()];
    for i in 0..n {
        digits(i, &dims, &mut di);
        for j in 0..n {
            digits(j, &dims, &mut dj);
            let traced_match = (0..dims.len()).all(|k| kept[k] || di[k] == dj[k]);
            if !traced_match {
                continue;
            }
            let (mut ki, mut kj) = (0, 0);
            for k in 0..dims.len() {
                if kept[k] {
                    ki = ki * dims[k] + di[k];
                    kj = kj * dims[k] + dj[k];
                }
            }
            out[[ki, kj]] += m[[i, j]];
        }
    }
    Ok(out)
}

/// Bipartite partial traces; returns (Tr_B m, Tr_A m).
pub fn bipartite_marginals(m: &CMat, dim_a: usize, dim_b: usize) -> (CMat, CMat) {
    let mut ra = Array2::zeros((dim_a, dim_a));
    let mut rb = Array2::zeros((dim_b, dim_b));
    for a in 0..dim_a {
        for ap in 0..dim_a {
            for b in 0..dim_b {
                ra[[a, ap]] += m[[a * dim_b + b, ap * dim_b + b]];
            }
        }
    }
    for b in 0..dim_b {
        for bp in 0..dim_b {
            for a in 0..dim_a {
                rb[[b, bp]] += m[[a * dim_b + b, a * dim_b + bp]];
            }
        }
    }
    (ra, rb)
}

pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(vec![]);
    }
    let (_, s, _) = m.svd(false, false)?;
    let mut s: Vec<f64> = s.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(s)
}

/// Full SVD `m = u diag(s) vt`, singular values descending.
pub fn svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (u, s, vt) = m.svd(true, true)?;
    Ok((u.expect("u requested"), s.to_vec(), vt.expect("vt requested")))
}

pub fn schatten_from_singular(s: &[f64], p: SchattenOrder) -> f64 {
    match p {
        SchattenOrder::Infinity => s.iter().cloned().fold(0.0, f64::max),
        SchattenOrder::Finite(p) => {
            let mx = s.iter().cloned().fold(0.0, f64::max);
            if mx == 0.0 {
                return 0.0;
            }
            mx * s.iter().map(|x| (x / mx).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

pub fn schatten_norm(m: &CMat, p: SchattenOrder) -> Result<f64> {
    if let SchattenOrder::Finite(q) = p {
        if q <= 0.0 {
            return Err(LinalgError::Dimension(format!("Schatten order {q} must be positive")));
        }
        if q == 2.0 {
            return Ok(frobenius(m));
        }
    }
    Ok(schatten_from_singular(&singular_values(m)?, p))
}

/// Realignment: `out[(a dA + a'), (b dB + b')] = m[(a dB + b), (a' dB + b')]`.
pub fn realign(m: &CMat, dim_a: usize, dim_b: usize) -> Result<CMat> {
    let n = dim_a * dim_b;
    if m.dim() != (n, n) {
        return Err(LinalgError::Dimension(format!(
            "realign expects {n}x{n}, got {:?}",
            m.dim()
        )));
    }
    let mut out = Array2::zeros((dim_a * dim_a, dim_b * dim_b));
    for a in 0..dim_a {
        for ap in 0..dim_a {
            for b in 0..dim_b {
                for bp in 0..dim_b {
                    out[[a * dim_a + ap, b * dim_b + bp]] = m[[a * dim_b + b, ap * dim_b + bp]];
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`realign`].
pub fn unrealign(mt: &CMat, dim_a: usize, dim_b: usize) -> Result<CMat> {
    if mt.dim() != (dim_a * dim_a, dim_b * dim_b) {
        return Err(LinalgError::Dimension(format!(
            "unrealign expects {}x{}, got {:?}",
            dim_a * dim_a,
            dim_b * dim_b,
            mt.dim()
        )));
    }
    let n = dim_a * dim_b;
    let mut out = Array2::zeros((n, n));
    for a in 0..dim_a {
        for ap in 0..dim_a {
            for b in 0..dim_b {
                for bp in 0..dim_b {
                    out[[a * dim_b + b, ap * dim_b + bp]] = mt[[a * dim_a + ap, b * dim_b + bp]];
                }
            }
        }
    }
    Ok(out)
}

/// General eigendecomposition, eigenvectors as columns.
pub fn eig(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    square(m)?;
    let (w, v) = m.eig()?;
    Ok((w.to_vec(), v))
}

pub fn eigvals(m: &CMat) -> Result<Vec<C64>> {
    square(m)?;
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    let (w, _) = m.eig()?;
    Ok(w.to_vec())
}

/// Hermitian eigendecomposition (ascending eigenvalues).
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    square(m)?;
    // column-major copy: the row-major path hands back conjugated eigenvectors
    let f = fortran(m);
    let (w, v) = f.eigh(UPLO::Upper)?;
    Ok((w.to_vec(), v))
}

fn fortran(m: &CMat) -> CMat {
    m.t().as_standard_layout().into_owned().reversed_axes()
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    square(m)?;
    Ok(m.inv()?)
}

fn square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::Dimension(format!("expected square, got {:?}", m.dim())));
    }
    Ok(())
}

/// Applies `f` to the eigenvalues of a diagonalizable matrix.
pub fn matrix_function(m: &CMat, f: impl Fn(C64) -> C64) -> Result<CMat> {
    let (w, v) = eig(m)?;
    let vinv = inverse(&v)?;
    let fw = Array1::from_iter(w.iter().map(|&z| f(z)));
    let scaled = &v * &fw.view().insert_axis(ndarray::Axis(0));
    Ok(scaled.dot(&vinv))
}

/// Condition number of an eigenvector basis above which the matrix is treated
/// as numerically defective.
const DEFECTIVE_COND: f64 = 1e10;

pub fn principal_log(m: &CMat) -> Result<CMat> {
    principal_log_tol(m, 1e-12)
}

/// Principal matrix logarithm. Eigenvalues within `tol` of the closed negative
/// real axis are rejected. Near-defective inputs are perturbed by a tiny
/// Hermitian matrix before diagonalization.
pub fn principal_log_tol(m: &CMat, tol: f64) -> Result<CMat> {
    square(m)?;
    let scale = frobenius(m).max(1.0);
    let (w, v) = eig(m)?;
    let v = {
        let cond = condition_number(&v)?;
        if cond > DEFECTIVE_COND {
            log::warn!("principal_log: eigenbasis condition {cond:.3e}, perturbing input");
            let p = random_hermitian(m.nrows(), &mut ChaCha8Rng::seed_from_u64(0x5eed));
            let mp = m + &(p * C64::new(1e-12 * scale, 0.0));
            return log_of_diagonalizable(&mp, tol * scale);
        }
        v
    };
    for &z in &w {
        if z.im.abs() <= tol * scale && z.re <= tol * scale {
            return Err(LinalgError::BranchCut(z));
        }
    }
    let vinv = inverse(&v)?;
    let lw = Array1::from_iter(w.iter().map(|z| z.ln()));
    let scaled = &v * &lw.view().insert_axis(ndarray::Axis(0));
    Ok(scaled.dot(&vinv))
}

fn log_of_diagonalizable(m: &CMat, tol: f64) -> Result<CMat> {
    let (w, _) = eig(m)?;
    for &z in &w {
        if z.im.abs() <= tol && z.re <= tol {
            return Err(LinalgError::BranchCut(z));
        }
    }
    matrix_function(m, |z| z.ln())
}

fn condition_number(v: &CMat) -> Result<f64> {
    let s = singular_values(v)?;
    let lo = s.last().cloned().unwrap_or(0.0);
    Ok(if lo == 0.0 { f64::INFINITY } else { s[0] / lo })
}

pub fn matrix_power(m: &CMat, n: u32) -> Result<CMat> {
    square(m)?;
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            result = result.dot(&base);
        }
        k >>= 1;
        if k > 0 {
            base = base.dot(&base);
        }
    }
    Ok(result)
}

/// The d^2 x d^2 swap S|i>|j> = |j>|i>.
pub fn swap_operator(d: usize) -> CMat {
    let mut s = Array2::zeros((d * d, d * d));
    for i in 0..d {
        for j in 0..d {
            s[[j * d + i, i * d + j]] = C64::new(1.0, 0.0);
        }
    }
    s
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.nrows() == m.ncols() && max_abs_diff(m, &dagger(m)) <= tol
}

pub fn random_matrix<R: rand::Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    Array2::from_shape_fn((rows, cols), |_| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

pub fn random_hermitian<R: rand::Rng>(n: usize, rng: &mut R) -> CMat {
    let g = random_matrix(n, n, rng);
    (&g + &dagger(&g)) * C64::new(0.5, 0.0)
}

/// Haar-random unitary from the QR of a Ginibre matrix (Gram-Schmidt with
/// phase fix).
pub fn random_unitary<R: rand::Rng>(n: usize, rng: &mut R) -> CMat {
    let g = random_matrix(n, n, rng);
    gram_schmidt(g.view())
}

fn gram_schmidt(g: ArrayView2<C64>) -> CMat {
    let n = g.nrows();
    let mut q: CMat = Array2::zeros((n, n));
    for j in 0..n {
        let mut v = g.column(j).to_owned();
        for _ in 0..2 {
            for k in 0..j {
                let qk = q.column(k);
                let proj: C64 = qk.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for i in 0..n {
                    v[i] -= proj * qk[i];
                }
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            q[[i, j]] = v[i] / nrm;
        }
    }
    q
}

/// Random density matrix of the given rank (Wishart-type).
pub fn random_density<R: rand::Rng>(n: usize, rank: usize, rng: &mut R) -> CMat {
    let g = random_matrix(n, rank.max(1), rng);
    let r = g.dot(&dagger(&g));
    let tr = trace(&r);
    r / tr
}

pub fn random_pure_state<R: rand::Rng>(n: usize, rng: &mut R) -> Array1<C64> {
    let g = random_matrix(n, 1, rng);
    let nrm = frobenius(&g);
    g.column(0).mapv(|z| z / nrm)
}

pub fn projector(psi: &Array1<C64>) -> CMat {
    let n = psi.len();
    Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj())
}

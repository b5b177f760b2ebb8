//! Spacetime density matrix `T` for two (or more) time slices.
//!
//! Entries follow
//! `T[(a b), (a' b')] = Tr[rho (|a'><a| x 1) E^dag(|b'><b| x 1)]`
//! with `E^dag(X) = sum_i K_i^dag X K_i`, so that
//! `Tr(T (O_A x O_B)) = Tr(rho O_A E^dag(O_B))`.

#![allow(non_snake_case)]

use crate::tensor_core::{
    self as tc, dagger, frobenius, realign, schatten_from_singular, singular_values, trace,
    CMat, LinalgError, SchattenOrder, SpaceShape,
};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdmError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid region: {0}")]
    Region(String),
    #[error("invalid channel: {0}")]
    Channel(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("no causal contact: M is numerically zero (norm {0:.3e})")]
    Degenerate(f64),
    #[error("dimension {0} exceeds the configured cap {1}")]
    Cap(usize, usize),
}

pub type Result<T> = std::result::Result<T, SdmError>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub region_a_sites: Vec<usize>,
    pub region_b_sites: Vec<usize>,
    pub total_sites: usize,
    pub local_dim: usize,
}

impl RegionSpec {
    pub fn new(a: Vec<usize>, b: Vec<usize>, total_sites: usize, local_dim: usize) -> Result<Self> {
        let r = RegionSpec { region_a_sites: a, region_b_sites: b, total_sites, local_dim };
        r.validate()?;
        Ok(r)
    }

    pub fn qubits(a: Vec<usize>, b: Vec<usize>, total_sites: usize) -> Result<Self> {
        Self::new(a, b, total_sites, 2)
    }

    /// A and B both cover the whole system.
    pub fn whole(total_sites: usize, local_dim: usize) -> Self {
        let all: Vec<usize> = (0..total_sites).collect();
        RegionSpec { region_a_sites: all.clone(), region_b_sites: all, total_sites, local_dim }
    }

    pub fn validate(&self) -> Result<()> {
        if self.local_dim < 1 {
            return Err(SdmError::Region("local dimension must be positive".into()));
        }
        for (name, sites) in [("A", &self.region_a_sites), ("B", &self.region_b_sites)] {
            check_sites(name, sites, self.total_sites)?;
        }
        Ok(())
    }

    pub fn full_dim(&self) -> usize {
        self.local_dim.pow(self.total_sites as u32)
    }

    pub fn dim_a(&self) -> usize {
        self.local_dim.pow(self.region_a_sites.len() as u32)
    }

    pub fn dim_b(&self) -> usize {
        self.local_dim.pow(self.region_b_sites.len() as u32)
    }

    /// Swaps in the complements of A and B.
    pub fn complement(&self) -> RegionSpec {
        RegionSpec {
            region_a_sites: complement_sites(&self.region_a_sites, self.total_sites),
            region_b_sites: complement_sites(&self.region_b_sites, self.total_sites),
            total_sites: self.total_sites,
            local_dim: self.local_dim,
        }
    }
}

fn check_sites(name: &str, sites: &[usize], total: usize) -> Result<()> {
    for (i, &s) in sites.iter().enumerate() {
        if s >= total {
            return Err(SdmError::Region(format!("site {s} of {name} outside 0..{total}")));
        }
        if sites[..i].contains(&s) {
            return Err(SdmError::Region(format!("site {s} repeated in {name}")));
        }
    }
    Ok(())
}

pub fn complement_sites(sites: &[usize], total: usize) -> Vec<usize> {
    (0..total).filter(|s| !sites.contains(s)).collect()
}

/// `map[r * dim_rest + rbar]` is the full-system index whose digits on
/// `sites` spell `r` and whose remaining digits spell `rbar`. Site 0 is the
/// most significant digit.
pub fn site_index_map(sites: &[usize], total: usize, local_dim: usize) -> Vec<usize> {
    let rest = complement_sites(sites, total);
    let dr = local_dim.pow(sites.len() as u32);
    let dbar = local_dim.pow(rest.len() as u32);
    let mut map = vec![0; dr * dbar];
    for r in 0..dr {
        for rb in 0..dbar {
            let mut full = 0usize;
            let mut digit = vec![0usize; total];
            spread(r, sites, local_dim, &mut digit);
            spread(rb, &rest, local_dim, &mut digit);
            for &d in &digit {
                full = full * local_dim + d;
            }
            map[r * dbar + rb] = full;
        }
    }
    map
}

fn spread(mut idx: usize, sites: &[usize], local_dim: usize, digit: &mut [usize]) {
    for &s in sites.iter().rev() {
        digit[s] = idx % local_dim;
        idx /= local_dim;
    }
}

#[derive(Clone, Debug)]
pub enum ChannelSpec {
    Unitary(CMat),
    Kraus(Vec<CMat>),
}

impl ChannelSpec {
    pub fn identity(dim: usize) -> Self {
        ChannelSpec::Unitary(tc::identity(dim))
    }

    pub fn operators(&self) -> &[CMat] {
        match self {
            ChannelSpec::Unitary(u) => std::slice::from_ref(u),
            ChannelSpec::Kraus(k) => k,
        }
    }

    pub fn dim(&self) -> usize {
        self.operators().first().map(|k| k.nrows()).unwrap_or(0)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let ops = self.operators();
        if ops.is_empty() {
            return Err(SdmError::Channel("no operators".into()));
        }
        let n = ops[0].nrows();
        let mut acc: CMat = Array2::zeros((n, n));
        for k in ops {
            if k.dim() != (n, n) {
                return Err(SdmError::Channel(format!("operator shape {:?}, expected {n}x{n}", k.dim())));
            }
            acc = acc + dagger(k).dot(k);
        }
        let err = tc::max_abs_diff(&acc, &tc::identity(n));
        if err > tol {
            let what = match self {
                ChannelSpec::Unitary(_) => "U^dag U",
                ChannelSpec::Kraus(_) => "sum K^dag K",
            };
            return Err(SdmError::Channel(format!("{what} deviates from identity by {err:.3e}")));
        }
        Ok(())
    }

    /// Heisenberg map `X -> sum_i K_i^dag X K_i`.
    pub fn adjoint_apply(&self, x: &CMat) -> CMat {
        let mut out = Array2::zeros(x.dim());
        for k in self.operators() {
            out = out + dagger(k).dot(&x.dot(k));
        }
        out
    }

    /// Schrödinger map `X -> sum_i K_i X K_i^dag`.
    pub fn apply(&self, x: &CMat) -> CMat {
        let mut out = Array2::zeros(x.dim());
        for k in self.operators() {
            out = out + k.dot(&x.dot(&dagger(k)));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SpacetimeDensityMatrix {
    pub matrix: CMat,
    pub shape: SpaceShape,
    pub regions: Option<RegionSpec>,
}

impl SpacetimeDensityMatrix {
    pub fn from_matrix(matrix: CMat, dim_a: usize, dim_b: usize) -> Result<Self> {
        if matrix.dim() != (dim_a * dim_b, dim_a * dim_b) {
            return Err(SdmError::Linalg(LinalgError::Dimension(format!(
                "matrix {:?} vs dims {dim_a}x{dim_b}",
                matrix.dim()
            ))));
        }
        Ok(SpacetimeDensityMatrix { matrix, shape: SpaceShape::bipartite(dim_a, dim_b), regions: None })
    }

    pub fn dim_a(&self) -> usize {
        self.shape.factors()[0].1
    }

    pub fn dim_b(&self) -> usize {
        self.shape.factors()[1].1
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(MatrixJson::from(&self.matrix)).map(|mut v| {
            v["dim_a"] = self.dim_a().into();
            v["dim_b"] = self.dim_b().into();
            v
        })
        .expect("matrix serializes")
    }
}

/// Row-major interleaved (re, im) layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let data = m.iter().flat_map(|z| [z.re, z.im]).collect();
        MatrixJson { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Option<CMat> {
        if self.data.len() != 2 * self.rows * self.cols {
            return None;
        }
        Array2::from_shape_vec(
            (self.rows, self.cols),
            self.data.chunks(2).map(|c| C64::new(c[0], c[1])).collect(),
        )
        .ok()
    }
}

fn check_state(rho: &CMat, dim: usize) -> Result<()> {
    if rho.dim() != (dim, dim) {
        return Err(SdmError::State(format!("rho is {:?}, system dimension {dim}", rho.dim())));
    }
    tc::check_finite(rho)?;
    if !tc::is_hermitian(rho, 1e-10) {
        return Err(SdmError::State("rho is not Hermitian".into()));
    }
    let tr = trace(rho);
    if (tr - ONE).norm() > 1e-10 {
        return Err(SdmError::State(format!("Tr rho = {tr}")));
    }
    let (w, _) = tc::eigh(rho)?;
    if w[0] < -1e-10 {
        return Err(SdmError::State(format!("rho has eigenvalue {:.3e}", w[0])));
    }
    Ok(())
}

pub fn build_T(rho: &CMat, channel: &ChannelSpec, regions: &RegionSpec) -> Result<SpacetimeDensityMatrix> {
    regions.validate()?;
    let n = regions.full_dim();
    if channel.dim() != n {
        return Err(SdmError::Channel(format!("channel dimension {} vs system {n}", channel.dim())));
    }
    channel.validate(1e-10)?;
    check_state(rho, n)?;
    let (da, db) = (regions.dim_a(), regions.dim_b());
    let (dabar, dbbar) = (n / da, n / db);
    let ia = site_index_map(&regions.region_a_sites, regions.total_sites, regions.local_dim);
    let ib = site_index_map(&regions.region_b_sites, regions.total_sites, regions.local_dim);
    let mut t: CMat = Array2::zeros((da * db, da * db));
    for k in channel.operators() {
        let kr = k.dot(rho);
        // T[(a b),(a' b')] += sum conj(K[(b' bb),(a ab)]) (K rho)[(b bb),(a' ab)]
        for a in 0..da {
            for ap in 0..da {
                for b in 0..db {
                    for bp in 0..db {
                        let mut s = ZERO;
                        for ab in 0..dabar {
                            let x = ia[a * dabar + ab];
                            let y = ia[ap * dabar + ab];
                            for bb in 0..dbbar {
                                s += k[[ib[bp * dbbar + bb], x]].conj() * kr[[ib[b * dbbar + bb], y]];
                            }
                        }
                        t[[a * db + b, ap * db + bp]] += s;
                    }
                }
            }
        }
    }
    Ok(SpacetimeDensityMatrix {
        matrix: t,
        shape: SpaceShape::bipartite(da, db),
        regions: Some(regions.clone()),
    })
}

/// `J = sum_ij E(|i><j|) x |j><i|` with `E` the Heisenberg map of the
/// channel, so that `T = J (rho x 1)` for whole-system slices.
pub fn build_J(channel: &ChannelSpec) -> CMat {
    let n = channel.dim();
    let mut j: CMat = Array2::zeros((n * n, n * n));
    let mut e = Array2::zeros((n, n));
    for i in 0..n {
        for jj in 0..n {
            e.fill(ZERO);
            e[[i, jj]] = ONE;
            let img = channel.adjoint_apply(&e);
            for r in 0..n {
                for c in 0..n {
                    let v = img[[r, c]];
                    if v != ZERO {
                        j[[r * n + jj, c * n + i]] += v;
                    }
                }
            }
        }
    }
    j
}

pub fn adjoint_T(t: &SpacetimeDensityMatrix) -> SpacetimeDensityMatrix {
    SpacetimeDensityMatrix { matrix: dagger(&t.matrix), shape: t.shape.clone(), regions: t.regions.clone() }
}

/// `Tr(X (O_A x O_B))` for a bipartite matrix `X`.
pub fn contract(x: &CMat, o_a: &CMat, o_b: &CMat) -> C64 {
    let (da, db) = (o_a.nrows(), o_b.nrows());
    let mut s = ZERO;
    for a in 0..da {
        for ap in 0..da {
            let oa = o_a[[ap, a]];
            if oa == ZERO {
                continue;
            }
            for b in 0..db {
                for bp in 0..db {
                    s += x[[a * db + b, ap * db + bp]] * oa * o_b[[bp, b]];
                }
            }
        }
    }
    s
}

pub fn trace_moment(t: &SpacetimeDensityMatrix, n: u32) -> C64 {
    match n {
        0 => C64::new(t.matrix.nrows() as f64, 0.0),
        1 => trace(&t.matrix),
        2 => tc::trace_product(&t.matrix, &t.matrix),
        _ => {
            let half = tc::matrix_power(&t.matrix, n / 2).expect("square");
            if n.is_multiple_of(2) {
                tc::trace_product(&half, &half)
            } else {
                tc::trace_product(&half, &half.dot(&t.matrix))
            }
        }
    }
}

pub fn trace_T_Tdagger(t: &SpacetimeDensityMatrix) -> f64 {
    frobenius(&t.matrix).powi(2)
}

pub fn imagitivity(t: &SpacetimeDensityMatrix, p: SchattenOrder) -> Result<f64> {
    let d = &t.matrix - &dagger(&t.matrix);
    Ok(tc::schatten_norm(&d, p)?)
}

/// Two-norm imagitivity from moments: `sqrt(2 Tr TT^dag - 2 Re Tr T^2)`.
pub fn imagitivity2_from_moments(t: &SpacetimeDensityMatrix) -> f64 {
    (2.0 * trace_T_Tdagger(t) - 2.0 * trace_moment(t, 2).re).max(0.0).sqrt()
}

/// Returns `(rho_A, rho_B)`.
pub fn marginals(t: &SpacetimeDensityMatrix) -> (CMat, CMat) {
    tc::bipartite_marginals(&t.matrix, t.dim_a(), t.dim_b())
}

pub fn holder_bound(t: &SpacetimeDensityMatrix, p: SchattenOrder, o_a: &CMat, o_b: &CMat) -> Result<f64> {
    if let SchattenOrder::Finite(x) = p {
        if x < 1.0 {
            return Err(SdmError::Linalg(LinalgError::Dimension(format!("Hölder needs p >= 1, got {x}"))));
        }
    }
    let q = p.conjugate();
    Ok(tc::schatten_norm(&t.matrix, p)? * tc::schatten_norm(o_a, q)? * tc::schatten_norm(o_b, q)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub commutator_abs: f64,
    pub th1_upper: f64,
    pub th3_upper: f64,
    pub th2_lower: f64,
    pub im_bound_lower: f64,
    #[serde(skip)]
    pub operators_used: (CMat, CMat),
}

impl BoundReport {
    /// Smallest slack of `th2 <= th3 <= th1` and `commutator <= th3`.
    pub fn chain_slack(&self) -> f64 {
        (self.th3_upper - self.th2_lower)
            .min(self.th1_upper - self.th3_upper)
            .min(self.th3_upper - self.commutator_abs)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["operator_a"] = serde_json::to_value(MatrixJson::from(&self.operators_used.0)).unwrap();
        v["operator_b"] = serde_json::to_value(MatrixJson::from(&self.operators_used.1)).unwrap();
        v
    }
}

/// `M = i (T - T^dag)`.
pub fn commutator_kernel(t: &SpacetimeDensityMatrix) -> CMat {
    (&t.matrix - &dagger(&t.matrix)) * C64::new(0.0, 1.0)
}

pub fn commutator_bounds(t: &SpacetimeDensityMatrix, o_a: &CMat, o_b: &CMat) -> Result<BoundReport> {
    let (da, db) = (t.dim_a(), t.dim_b());
    let (na, nb) = (frobenius(o_a), frobenius(o_b));
    if na == 0.0 || nb == 0.0 {
        return Err(SdmError::State("observables must be nonzero".into()));
    }
    let oa = o_a / C64::new(na, 0.0);
    let ob = o_b / C64::new(nb, 0.0);
    let m = commutator_kernel(t);
    let commutator_abs = contract(&m, &oa, &ob).norm();
    let th1_upper = frobenius(&m);
    let th3_upper = singular_values(&realign(&m, da, db)?)?.first().cloned().unwrap_or(0.0);
    let dmin = da.min(db) as f64;
    let tr2 = trace_moment(t, 2);
    Ok(BoundReport {
        commutator_abs,
        th1_upper,
        th3_upper,
        th2_lower: th1_upper / dmin,
        im_bound_lower: 2.0 / dmin * (tr2.norm() - tr2.re),
        operators_used: (oa, ob),
    })
}

/// Operators reaching `|<[O_A, O_B(t)]>| = ||M_T||_inf ||O_A||_2 ||O_B||_2`.
pub fn extract_saturating_operators(t: &SpacetimeDensityMatrix) -> Result<(CMat, CMat)> {
    let (da, db) = (t.dim_a(), t.dim_b());
    let m = commutator_kernel(t);
    let nm = frobenius(&m);
    if nm < 1e-12 * (da * db) as f64 {
        return Err(SdmError::Degenerate(nm));
    }
    let mt = realign(&m, da, db)?;
    let (u, _, _) = tc::svd(&mt)?;
    let x: Array1<C64> = u.column(0).mapv(|z| z.conj());
    let mut y: Array1<C64> = mt.t().dot(&x).mapv(|z| z.conj());
    let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    y.mapv_inplace(|z| z / ny);
    let o_a = Array2::from_shape_fn((da, da), |(ap, a)| x[a * da + ap]);
    let o_b = Array2::from_shape_fn((db, db), |(bp, b)| y[b * db + bp]);
    Ok((o_a, o_b))
}

/// `|<[O_A, O_B(t)]>| / (||O_A||_2 ||O_B||_2)`.
pub fn commutator_ratio(t: &SpacetimeDensityMatrix, o_a: &CMat, o_b: &CMat) -> f64 {
    contract(&commutator_kernel(t), o_a, o_b).norm() / (frobenius(o_a) * frobenius(o_b))
}

/// Spacetime matrix on (complement of A at time 0, B) for a pure state,
/// with the complement leg transposed.
pub fn build_T_complement_transposed(
    psi: &Array1<C64>,
    u: &CMat,
    regions: &RegionSpec,
) -> Result<CMat> {
    regions.validate()?;
    let n = regions.full_dim();
    let (da, db) = (regions.dim_a(), regions.dim_b());
    let (dabar, dbbar) = (n / da, n / db);
    let ia = site_index_map(&regions.region_a_sites, regions.total_sites, regions.local_dim);
    let ib = site_index_map(&regions.region_b_sites, regions.total_sites, regions.local_dim);
    let phi = u.dot(psi);
    // out[(abar b),(abar' b')] = sum_a conj(psi[(a abar)]) sum_bb conj(U[(b' bb),(a abar')]) phi[(b bb)]
    let mut out: CMat = Array2::zeros((dabar * db, dabar * db));
    for abar in 0..dabar {
        for abp in 0..dabar {
            for b in 0..db {
                for bp in 0..db {
                    let mut s = ZERO;
                    for a in 0..da {
                        let pc = psi[ia[a * dabar + abar]].conj();
                        if pc == ZERO {
                            continue;
                        }
                        let col = ia[a * dabar + abp];
                        let mut inner = ZERO;
                        for bb in 0..dbbar {
                            inner += u[[ib[bp * dbbar + bb], col]].conj() * phi[ib[b * dbbar + bb]];
                        }
                        s += pc * inner;
                    }
                    out[[abar * db + b, abp * db + bp]] = s;
                }
            }
        }
    }
    Ok(out)
}

/// Largest distance under a greedy matching of two spectra, the shorter one
/// padded with zeros.
pub fn spectrum_distance(x: &[C64], y: &[C64]) -> f64 {
    let len = x.len().max(y.len());
    let mut xs: Vec<C64> = x.to_vec();
    let mut ys: Vec<C64> = y.to_vec();
    xs.resize(len, ZERO);
    ys.resize(len, ZERO);
    xs.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap().then(a.re.partial_cmp(&b.re).unwrap()));
    let mut used = vec![false; len];
    let mut worst: f64 = 0.0;
    for a in &xs {
        let (k, d) = ys
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, b)| (k, (a - b).norm()))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
            .expect("lists have equal length");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// Spectral distance between `T_AB` and the complement-transposed
/// construction for a pure state.
pub fn spectrum_duality_check(rho_pure: &CMat, channel: &ChannelSpec, regions: &RegionSpec) -> Result<f64> {
    let u = match channel {
        ChannelSpec::Unitary(u) => u,
        ChannelSpec::Kraus(_) => return Err(SdmError::Channel("duality needs a unitary".into())),
    };
    let psi = pure_vector(rho_pure)?;
    let t = build_T(rho_pure, channel, regions)?;
    let dual = build_T_complement_transposed(&psi, u, regions)?;
    Ok(spectrum_distance(&range_spectrum(&t.matrix)?, &range_spectrum(&dual)?))
}

/// Eigenvalues of `m` via its compression to the numerical range: with
/// `m = U S V^dag` of rank r the nonzero eigenvalues are those of the r x r
/// matrix `S V^dag U`, padded with exact zeros. Avoids the sqrt(eps) spread of
/// defective zero clusters.
pub fn range_spectrum(m: &CMat) -> Result<Vec<C64>> {
    let (u, s, vt) = tc::svd(m)?;
    let smax = s.first().cloned().unwrap_or(0.0);
    let r = s.iter().filter(|x| **x > 1e-12 * smax.max(1e-300)).count();
    let mut k: CMat = Array2::zeros((r, r));
    for i in 0..r {
        for j in 0..r {
            k[[i, j]] = (0..m.nrows()).map(|l| vt[[i, l]] * u[[l, j]]).sum::<C64>() * s[i];
        }
    }
    let mut w = if r > 0 { tc::eigvals(&k)? } else { Vec::new() };
    w.resize(m.nrows(), ZERO);
    Ok(w)
}

/// State vector of a rank-one density matrix.
pub fn pure_vector(rho: &CMat) -> Result<Array1<C64>> {
    let purity = tc::trace_product(rho, rho).re;
    if (purity - 1.0).abs() > 1e-9 {
        return Err(SdmError::State(format!("state is mixed (purity {purity:.6})")));
    }
    let (w, v) = tc::eigh(rho)?;
    let k = w.len() - 1;
    Ok(v.column(k).to_owned())
}

pub fn audenaert_slack(t: &SpacetimeDensityMatrix, p: f64) -> Result<f64> {
    let order = SchattenOrder::p(p);
    let (ra, rb) = marginals(t);
    Ok(1.0 + tc::schatten_norm(&t.matrix, order)?
        - tc::schatten_norm(&rb, order)?
        - tc::schatten_norm(&ra, order)?)
}

/// Assembles `|psi_A><psi_A| x rho_rest` on the full system, where the rest
/// is the complement of A in site order.
pub fn product_state(psi_a: &Array1<C64>, rho_rest: &CMat, regions: &RegionSpec) -> Result<CMat> {
    let n = regions.full_dim();
    let da = regions.dim_a();
    let dr = n / da;
    if psi_a.len() != da || rho_rest.dim() != (dr, dr) {
        return Err(SdmError::State("product factors do not match the regions".into()));
    }
    let ia = site_index_map(&regions.region_a_sites, regions.total_sites, regions.local_dim);
    let mut rho: CMat = Array2::zeros((n, n));
    for a in 0..da {
        for ap in 0..da {
            let pa = psi_a[a] * psi_a[ap].conj();
            for r in 0..dr {
                for rp in 0..dr {
                    rho[[ia[a * dr + r], ia[ap * dr + rp]]] = pa * rho_rest[[r, rp]];
                }
            }
        }
    }
    Ok(rho)
}

/// Returns `(||T||_p, ||rho_B||_p)` for a product initial state.
pub fn mono_check(
    psi_a: &Array1<C64>,
    rho_bar: &CMat,
    channel: &ChannelSpec,
    regions: &RegionSpec,
    p: f64,
) -> Result<(f64, f64)> {
    let nrm = psi_a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if (nrm - 1.0).abs() > 1e-10 {
        return Err(SdmError::State("psi_A is not normalized".into()));
    }
    let rho = product_state(psi_a, rho_bar, regions)?;
    let t = build_T(&rho, channel, regions)?;
    let (_, rb) = marginals(&t);
    let order = SchattenOrder::p(p);
    Ok((
        schatten_from_singular(&singular_values(&t.matrix)?, order),
        schatten_from_singular(&singular_values(&rb)?, order),
    ))
}

/// Multi-slice spacetime matrix with one slot per region and a channel
/// between successive slots.
#[derive(Clone, Debug)]
pub struct MultiT {
    pub matrix: CMat,
    pub shape: SpaceShape,
}

impl MultiT {
    pub fn slot_dims(&self) -> Vec<usize> {
        self.shape.factors().iter().map(|(_, d)| *d).collect()
    }
}

pub const MULTI_T_CAP: usize = 1 << 12;

/// Entries `Tr[rho P1 E1^dag(P2 E2^dag(... Pk))]` with
/// `Pj = |rj'><rj| x 1`, indexed `[(r1..rk), (r1'..rk')]`.
pub fn multi_interval_T(
    rho: &CMat,
    channels: &[ChannelSpec],
    slots: &[Vec<usize>],
    total_sites: usize,
    local_dim: usize,
) -> Result<MultiT> {
    let k = slots.len();
    if k < 2 || channels.len() != k - 1 {
        return Err(SdmError::Region(format!("{k} slots need {} channels, got {}", k.max(1) - 1, channels.len())));
    }
    for (i, s) in slots.iter().enumerate() {
        check_sites(&format!("slot {i}"), s, total_sites)?;
    }
    let n = local_dim.pow(total_sites as u32);
    check_state(rho, n)?;
    for c in channels {
        if c.dim() != n {
            return Err(SdmError::Channel("channel dimension mismatch".into()));
        }
        c.validate(1e-10)?;
    }
    let dims: Vec<usize> = slots.iter().map(|s| local_dim.pow(s.len() as u32)).collect();
    let total: usize = dims.iter().product();
    if total > MULTI_T_CAP {
        return Err(SdmError::Cap(total, MULTI_T_CAP));
    }
    let maps: Vec<Vec<usize>> = slots.iter().map(|s| site_index_map(s, total_sites, local_dim)).collect();
    // states[(r1,r1',...,rj,rj')] = E_j(... E_1(rho P1) P2 ...) Pj
    let mut states: Vec<CMat> = vec![rho.clone()];
    for j in 0..k {
        let d = dims[j];
        let dbar = n / d;
        let mut next = Vec::with_capacity(states.len() * d * d);
        for s in &states {
            let s = if j == 0 { s.clone() } else { channels[j - 1].apply(s) };
            for r in 0..d {
                for rp in 0..d {
                    next.push(right_project(&s, &maps[j], dbar, r, rp));
                }
            }
        }
        states = next;
    }
    let labels: Vec<(String, usize)> = (0..k).map(|i| (format!("R{i}"), dims[i])).collect();
    let shape = SpaceShape::new(labels)?;
    let mut out: CMat = Array2::zeros((total, total));
    let mut pos = vec![0usize; 2 * k];
    for (flat, s) in states.iter().enumerate() {
        let mut f = flat;
        for j in (0..k).rev() {
            pos[2 * j + 1] = f % dims[j];
            f /= dims[j];
            pos[2 * j] = f % dims[j];
            f /= dims[j];
        }
        let (mut row, mut col) = (0, 0);
        for j in 0..k {
            row = row * dims[j] + pos[2 * j];
            col = col * dims[j] + pos[2 * j + 1];
        }
        out[[row, col]] = trace(s);
    }
    Ok(MultiT { matrix: out, shape })
}

/// `S (|r'><r| x 1)`.
fn right_project(s: &CMat, map: &[usize], dbar: usize, r: usize, rp: usize) -> CMat {
    let n = s.nrows();
    let mut out: CMat = Array2::zeros((n, n));
    for rb in 0..dbar {
        let src = map[rp * dbar + rb];
        let dst = map[r * dbar + rb];
        for i in 0..n {
            out[[i, dst]] = s[[i, src]];
        }
    }
    out
}

/// Reshapes the first `split` slots (bra and ket legs) against the rest.
pub fn past_future_matrix(multi: &MultiT, split: usize) -> Result<CMat> {
    let dims = multi.slot_dims();
    let k = dims.len();
    if split == 0 || split >= k {
        return Err(SdmError::Region(format!("split {split} outside 1..{k}")));
    }
    let past: usize = dims[..split].iter().product();
    let future: usize = dims[split..].iter().product();
    let mut out: CMat = Array2::zeros((past * past, future * future));
    for row in 0..past * future {
        let (rp, rf) = (row / future, row % future);
        for col in 0..past * future {
            let (cp, cf) = (col / future, col % future);
            out[[rp * past + cp, rf * future + cf]] = multi.matrix[[row, col]];
        }
    }
    Ok(out)
}

pub fn past_future_singular_values(multi: &MultiT, split: usize) -> Result<Vec<f64>> {
    Ok(singular_values(&past_future_matrix(multi, split)?)?)
}

/// `-Tr(T Log T)` on the principal branch; zero eigenvalues contribute zero.
pub fn vn_entropy_principal(t: &SpacetimeDensityMatrix) -> Result<C64> {
    let w = tc::eigvals(&t.matrix)?;
    Ok(entropy_of_spectrum(&w, 1e-12))
}

pub fn entropy_of_spectrum(w: &[C64], tol: f64) -> C64 {
    let mut s = ZERO;
    for &z in w {
        if z.norm() < tol {
            log::debug!("dropping eigenvalue {z:.3e} from the entropy sum");
            continue;
        }
        s -= z * z.ln();
    }
    s
}

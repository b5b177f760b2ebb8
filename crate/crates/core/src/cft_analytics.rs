//! Closed-form two-interval predictions for (1+1)-d CFTs continued to timelike separation.

#![allow(non_snake_case)]

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CftError {
    #[error("{0} series did not converge")]
    NonConvergence(&'static str),
    #[error("degenerate kinematics: {0}")]
    Degenerate(String),
    #[error("too close to a branch point: {0}")]
    BranchProximity(String),
    #[error("invalid parameter: {0}")]
    Param(String),
}

pub type Result<T> = std::result::Result<T, CftError>;

pub const SERIES_TOL: f64 = 1e-13;
const MAX_TERMS: usize = 4000;
const I: C64 = C64 { re: 0.0, im: 1.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn check_nome(q: C64, name: &'static str) -> Result<()> {
    if !q.is_finite() || q.norm() >= 1.0 {
        return Err(CftError::NonConvergence(name));
    }
    Ok(())
}

/// `theta_2(q) = 2 q^{1/4} sum_{n>=0} q^{n(n+1)}`, nome convention, principal `q^{1/4}`.
pub fn theta2(q: C64) -> Result<C64> {
    check_nome(q, "theta2")?;
    if q.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut sum = C64::new(0.0, 0.0);
    for n in 0..MAX_TERMS {
        let term = q.powf((n * (n + 1)) as f64);
        sum += term;
        if term.norm() < SERIES_TOL * sum.norm().max(1e-300) {
            return Ok(2.0 * q.powf(0.25) * sum);
        }
    }
    Err(CftError::NonConvergence("theta2"))
}

fn theta34(q: C64, sign: f64, name: &'static str) -> Result<C64> {
    check_nome(q, name)?;
    let mut sum = ONE;
    let mut s = 1.0;
    for n in 1..MAX_TERMS {
        s *= sign;
        let term = 2.0 * s * q.powu((n * n) as u32);
        sum += term;
        if term.norm() < SERIES_TOL * sum.norm().max(1e-300) {
            return Ok(sum);
        }
    }
    Err(CftError::NonConvergence(name))
}

/// `theta_3(q) = 1 + 2 sum q^{n^2}`.
pub fn theta3(q: C64) -> Result<C64> {
    theta34(q, 1.0, "theta3")
}

/// `theta_4(q) = 1 + 2 sum (-1)^n q^{n^2}`.
pub fn theta4(q: C64) -> Result<C64> {
    theta34(q, -1.0, "theta4")
}

pub fn nome(tau: C64) -> C64 {
    (2.0 * PI * I * tau).exp()
}

/// Dedekind eta with the `q^{1/24}` prefactor taken from `tau` directly.
pub fn dedekind_eta(tau: C64) -> Result<C64> {
    let q = nome(tau);
    check_nome(q, "eta")?;
    let mut prod = ONE;
    let mut qn = ONE;
    for _ in 1..MAX_TERMS {
        qn *= q;
        prod *= ONE - qn;
        if qn.norm() < SERIES_TOL * 1e-3 {
            return Ok((I * PI * tau / 12.0).exp() * prod);
        }
    }
    Err(CftError::NonConvergence("eta"))
}

fn agm(mut a: C64, mut b: C64) -> Result<C64> {
    for _ in 0..200 {
        let a1 = 0.5 * (a + b);
        let mut g = (a * b).sqrt();
        if (a1 - g).norm() > (a1 + g).norm() {
            g = -g;
        }
        a = a1;
        b = g;
        if (a - b).norm() <= 1e-9 * a.norm() {
            // quadratic convergence: one more mean is exact to rounding
            return Ok(0.5 * (a + b));
        }
    }
    Err(CftError::NonConvergence("agm"))
}

/// Complete elliptic integral of the first kind in the parameter convention, `K(0) = pi/2`.
pub fn elliptic_k(m: C64) -> Result<C64> {
    if !m.is_finite() {
        return Err(CftError::Param(format!("K({m})")));
    }
    let b = (ONE - m).sqrt();
    if b.norm() < 1e-300 {
        return Err(CftError::BranchProximity("K diverges at m = 1".into()));
    }
    Ok(PI / (2.0 * agm(ONE, b)?))
}

fn check_cross_ratio(x: C64) -> Result<()> {
    if x.norm() < 1e-14 || (ONE - x).norm() < 1e-14 {
        return Err(CftError::BranchProximity(format!("x = {x}")));
    }
    Ok(())
}

/// `tau = (i/2) K(1-x)/K(x)`.
pub fn tau_from_x(x: C64) -> Result<C64> {
    check_cross_ratio(x)?;
    Ok(0.5 * I * elliptic_k(ONE - x)? / elliptic_k(x)?)
}

/// `tau_bar = -(i/2) K(1-xb)/K(xb)`.
pub fn tau_bar_from_x_bar(xb: C64) -> Result<C64> {
    check_cross_ratio(xb)?;
    Ok(-0.5 * I * elliptic_k(ONE - xb)? / elliptic_k(xb)?)
}

/// `x = theta_2(q)^4 / theta_3(q)^4` with `q = exp(2 pi i tau)`.
pub fn x_from_tau(tau: C64) -> Result<C64> {
    let q = nome(tau);
    Ok((theta2(q)? / theta3(q)?).powu(4))
}

/// Barred counterpart, nome `exp(-2 pi i tau_bar)`.
pub fn x_bar_from_tau_bar(tau_bar: C64) -> Result<C64> {
    let q = nome(-tau_bar);
    Ok((theta2(q)? / theta3(q)?).powu(4))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusModulus {
    pub tau: C64,
    pub tau_bar: C64,
}

impl TorusModulus {
    pub fn principal(x: C64, xb: C64) -> Result<Self> {
        Ok(Self { tau: tau_from_x(x)?, tau_bar: tau_bar_from_x_bar(xb)? })
    }

    /// Inside the domain reached by continuation from `-i tau > 0`.
    pub fn in_domain(&self) -> bool {
        self.tau.im > 0.0 && self.tau_bar.im < 0.0
    }
}

/// S transformation on the torus modulus `2 tau`; equivalent to `x -> 1 - x`.
pub fn s_transform(m: TorusModulus) -> TorusModulus {
    TorusModulus { tau: -1.0 / (4.0 * m.tau), tau_bar: -1.0 / (4.0 * m.tau_bar) }
}

/// `theta_3(e^{i pi w}) / eta(w)`, evaluated at whichever of `w`, `-1/w` is deeper in the upper half plane.
fn ff_chiral(w: C64) -> Result<C64> {
    if w.im <= 0.0 {
        return Err(CftError::NonConvergence("chiral block"));
    }
    let ws = -1.0 / w;
    let w = if ws.im > w.im { ws } else { w };
    Ok(theta3((I * PI * w).exp())? / dedekind_eta(w)?)
}

/// Dirac fermion torus partition function `theta_3(q) theta_3(qb) / (eta(2 tau) eta(-2 tau_bar))`.
pub fn free_fermion_z2(m: TorusModulus) -> Result<C64> {
    Ok(ff_chiral(2.0 * m.tau)? * ff_chiral(-2.0 * m.tau_bar)?)
}

/// Interval endpoints in light-cone coordinates `z = s - t`, `zb = s + t`.
/// Endpoints 0,1 bound A and carry time `+i eps`; endpoints 2,3 bound B and carry `-i eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct CftKinematics {
    pub z: [C64; 4],
    pub zb: [C64; 4],
    pub ordering_eps: f64,
    pub c: f64,
    pub eps_uv: f64,
    s: [f64; 4],
    t: [f64; 4],
}

impl CftKinematics {
    pub fn from_points(s: [f64; 4], t: [f64; 4], ordering_eps: f64, c: f64, eps_uv: f64) -> Result<Self> {
        if !(ordering_eps > 0.0) {
            return Err(CftError::Param("ordering_eps must be positive".into()));
        }
        if !(eps_uv > 0.0) || !(c > 0.0) {
            return Err(CftError::Param("c and eps_uv must be positive".into()));
        }
        if !(s[0] < s[1] && s[2] < s[3]) {
            return Err(CftError::Degenerate("interval endpoints must be increasing".into()));
        }
        if t[0] != t[1] || t[2] != t[3] {
            return Err(CftError::Degenerate("each interval must lie on one time slice".into()));
        }
        let sign = [1.0, 1.0, -1.0, -1.0];
        let mut z = [C64::new(0.0, 0.0); 4];
        let mut zb = z;
        for i in 0..4 {
            let time = C64::new(t[i], sign[i] * ordering_eps);
            z[i] = s[i] - time;
            zb[i] = s[i] + time;
        }
        Ok(Self { z, zb, ordering_eps, c, eps_uv, s, t })
    }

    /// A = `[a.0, a.1]` at time 0, B = `[b.0, b.1]` at time `dt`.
    pub fn two_intervals(a: (f64, f64), b: (f64, f64), dt: f64, ordering_eps: f64, c: f64, eps_uv: f64) -> Result<Self> {
        Self::from_points([a.0, a.1, b.0, b.1], [0.0, 0.0, dt, dt], ordering_eps, c, eps_uv)
    }

    /// Default ordering epsilon, `1e-6` times the largest coordinate spread.
    pub fn default_eps(a: (f64, f64), b: (f64, f64), dt: f64) -> f64 {
        let pts = [a.0, a.1, b.0, b.1];
        let lo = pts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        1e-6 * (hi - lo).max(dt.abs()).max(1.0)
    }

    pub fn with_ordering_eps(&self, eps: f64) -> Result<Self> {
        Self::from_points(self.s, self.t, eps, self.c, self.eps_uv)
    }

    /// Same configuration with all times scaled by `lambda`; `lambda = 0` is equal time.
    pub fn at_fraction(&self, lambda: f64) -> Self {
        let t = self.t.map(|x| x * lambda);
        Self::from_points(self.s, t, self.ordering_eps, self.c, self.eps_uv).expect("validated")
    }

    pub fn lengths(&self) -> (f64, f64) {
        (self.s[1] - self.s[0], self.s[3] - self.s[2])
    }

    fn min_separation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..4 {
            for j in (i + 1)..4 {
                m = m.min((self.z[j] - self.z[i]).norm()).min((self.zb[j] - self.zb[i]).norm());
            }
        }
        m
    }

    /// Path parameters from equal time to the full configuration.
    /// Steps shrink near the points where an A-B separation crosses the light cone.
    pub fn path(&self) -> Vec<f64> {
        let dt = (self.t[2] - self.t[0]).abs();
        let mut out = vec![0.0];
        if dt == 0.0 {
            return out;
        }
        let mut lambda = 0.0;
        while lambda < 1.0 {
            let k = self.at_fraction(lambda);
            let mut d = f64::INFINITY;
            for i in 0..2 {
                for j in 2..4 {
                    d = d.min((k.z[j] - k.z[i]).norm()).min((k.zb[j] - k.zb[i]).norm());
                }
            }
            let h = (0.1 * d / dt).min(0.01);
            lambda = (lambda + h).min(1.0);
            out.push(lambda);
        }
        out
    }
}

fn log_cross(z: &[C64; 4]) -> (C64, C64) {
    let l = |i: usize, j: usize| (z[j] - z[i]).ln();
    let lx = l(0, 3) + l(1, 2) - l(0, 2) - l(1, 3);
    let l1 = l(0, 1) + l(2, 3) - l(0, 2) - l(1, 3);
    (lx, l1)
}

/// `(x, x_bar)` from the four-point formula.
pub fn cross_ratio(k: &CftKinematics) -> Result<(C64, C64)> {
    if k.min_separation() < 1e-300 {
        return Err(CftError::Degenerate("coincident endpoints".into()));
    }
    let f = |z: &[C64; 4]| (z[3] - z[0]) * (z[2] - z[1]) / ((z[2] - z[0]) * (z[3] - z[1]));
    Ok((f(&k.z), f(&k.zb)))
}

/// Logarithms of `x`, `1-x`, `x_bar`, `1-x_bar` continued from equal time.
#[derive(Debug, Clone, Copy)]
pub struct ContinuedLogs {
    pub log_x: C64,
    pub log_1mx: C64,
    pub log_xb: C64,
    pub log_1mxb: C64,
}

/// Every endpoint difference keeps a fixed-sign imaginary part (or stays real positive),
/// so summing principal logs of the factors is continuous along the path.
pub fn continued_logs(k: &CftKinematics) -> Result<ContinuedLogs> {
    if k.min_separation() < 1e-300 {
        return Err(CftError::Degenerate("coincident endpoints".into()));
    }
    let (log_x, log_1mx) = log_cross(&k.z);
    let (log_xb, log_1mxb) = log_cross(&k.zb);
    Ok(ContinuedLogs { log_x, log_1mx, log_xb, log_1mxb })
}

fn unwrap_step(prev: C64, prev_val: C64, val: C64) -> C64 {
    prev + (val / prev_val).ln()
}

/// Independent route: step along the path and unwrap `log x`, `log x_bar` incrementally.
pub fn tracked_log_cross(k: &CftKinematics) -> Result<(C64, C64)> {
    let path = k.path();
    let (mut x, mut xb) = cross_ratio(&k.at_fraction(0.0))?;
    let (mut lx, mut lxb) = (x.ln(), xb.ln());
    for &lambda in &path[1..] {
        let (nx, nxb) = cross_ratio(&k.at_fraction(lambda))?;
        lx = unwrap_step(lx, x, nx);
        lxb = unwrap_step(lxb, xb, nxb);
        x = nx;
        xb = nxb;
    }
    Ok((lx, lxb))
}

fn mobius_group() -> Vec<Mobius> {
    let mut out = vec![[1.0, 0.0, 0.0, 1.0]];
    for a in -3i32..=3 {
        for b in -3i32..=3 {
            for c in -3i32..=3 {
                for d in -3i32..=3 {
                    if a * d - b * c == 1 && !(a == 1 && b == 0 && c == 0 && d == 1) {
                        out.push([a as f64, b as f64, c as f64, d as f64]);
                    }
                }
            }
        }
    }
    out
}

type Mobius = [f64; 4];

fn mobius_apply(g: &Mobius, w: C64) -> C64 {
    (g[0] * w + g[1]) / (g[2] * w + g[3])
}

fn mobius_mul(g: &Mobius, h: &Mobius) -> Mobius {
    [
        g[0] * h[0] + g[1] * h[2],
        g[0] * h[1] + g[1] * h[3],
        g[2] * h[0] + g[3] * h[2],
        g[2] * h[1] + g[3] * h[3],
    ]
}

/// Continues a modulus in the upper half plane from principal values.
/// Holds the accumulated transformation mapping the principal branch onto the continued one.
struct ModulusTracker {
    acc: Mobius,
    cur: C64,
}

impl ModulusTracker {
    fn new(w: C64) -> Self {
        Self { acc: [1.0, 0.0, 0.0, 1.0], cur: w }
    }

    /// Returns the step size in units of `Im` of the previous value.
    fn step(&mut self, group: &[Mobius], principal: C64) -> f64 {
        let scale = self.cur.im.max(1e-300);
        let w = mobius_apply(&self.acc, principal);
        let mut best = (self.acc, w, (w - self.cur).norm());
        if best.2 >= 0.2 * scale {
            for g in group {
                let m = mobius_mul(&self.acc, g);
                let w = mobius_apply(&m, principal);
                let d = (w - self.cur).norm();
                if d < best.2 {
                    best = (m, w, d);
                }
            }
        }
        self.acc = best.0;
        self.cur = best.1;
        best.2 / scale
    }
}

/// Torus modulus continued along the path.
/// Branch jumps of `K` act on `2 tau` as modular transformations; each step undoes the jump.
pub fn tracked_modulus(k: &CftKinematics) -> Result<TorusModulus> {
    let path = k.path();
    let group = mobius_group();
    let (x0, xb0) = cross_ratio(&k.at_fraction(0.0))?;
    let start = TorusModulus::principal(x0, xb0)?;
    if !start.in_domain() {
        return Err(CftError::Degenerate("equal-time configuration not spacelike".into()));
    }
    let mut tr = ModulusTracker::new(2.0 * start.tau);
    let mut trb = ModulusTracker::new(-2.0 * start.tau_bar);
    for &lambda in &path[1..] {
        let (x, xb) = cross_ratio(&k.at_fraction(lambda))?;
        let p = TorusModulus::principal(x, xb)?;
        let d1 = tr.step(&group, 2.0 * p.tau);
        let d2 = trb.step(&group, -2.0 * p.tau_bar);
        if d1 > 0.2 || d2 > 0.2 {
            return Err(CftError::BranchProximity(format!("lost track of modulus at lambda = {lambda}")));
        }
    }
    Ok(TorusModulus { tau: 0.5 * tr.cur, tau_bar: -0.5 * trb.cur })
}

/// Free-fermion two-interval `Tr rho^n`, fractional powers through continued logs.
pub fn ff_tsallis_two_intervals(k: &CftKinematics, n: u32) -> Result<C64> {
    if n < 2 {
        return Err(CftError::Param("n must be at least 2".into()));
    }
    let nf = n as f64;
    let expo = (nf - 1.0 / nf) / 12.0;
    let l = continued_logs(k)?;
    let (la, lb) = k.lengths();
    let log_len = 2.0 * (la.ln() + lb.ln());
    let arg = 4.0 * k.eps_uv.ln() - l.log_x - l.log_xb - log_len;
    Ok((expo * arg).exp())
}

/// Single-interval `Tr rho^n = (eps/len)^{(n - 1/n)/6}`.
pub fn single_interval_tsallis(len: f64, n: u32, eps_uv: f64) -> f64 {
    let nf = n as f64;
    (eps_uv / len).powf((nf - 1.0 / nf) / 6.0)
}

/// Cutoff reproducing a measured purity, `eps = len * purity^4` for `c = 1`.
pub fn calibrate_eps(len: f64, purity: f64) -> f64 {
    len * purity.powi(4)
}

/// `Tr rho_AB^2 / (Tr rho_A^2 Tr rho_B^2) = (x x_bar)^{-1/8}`, cutoff independent.
pub fn ff_purity_ratio(k: &CftKinematics) -> Result<C64> {
    let l = continued_logs(k)?;
    Ok((-(l.log_x + l.log_xb) / 8.0).exp())
}

/// `S(AB) - S(A) - S(B)` for the free fermion, `(log x + log x_bar)/6`.
pub fn ff_mutual_info(k: &CftKinematics) -> Result<C64> {
    let l = continued_logs(k)?;
    Ok((l.log_x + l.log_xb) / 6.0)
}

pub type PartitionFn<'a> = &'a dyn Fn(TorusModulus) -> Result<C64>;

/// Two-replica torus formula for `Tr T^2` with a pluggable partition function.
pub fn tr_T2_torus(k: &CftKinematics, z2_fn: PartitionFn) -> Result<C64> {
    let m = tracked_modulus(k)?;
    let z2 = z2_fn(m)?;
    let c = k.c;
    let l = continued_logs(k)?;
    let (la, lb) = k.lengths();
    let log_len = 2.0 * (la.ln() + lb.ln());
    let pre = (c / 8.0) * (4.0 * k.eps_uv.ln() - log_len);
    let anomaly = -(c / 24.0) * (l.log_x - 2.0 * l.log_1mx + l.log_xb - 2.0 * l.log_1mxb);
    Ok(z2 * 2f64.powf(-2.0 * c / 3.0) * (pre + anomaly).exp())
}

pub fn tr_T2_torus_ff(k: &CftKinematics) -> Result<C64> {
    tr_T2_torus(k, &free_fermion_z2)
}

/// `Tr T^2` divided by the product of single-interval purities.
pub fn factorization_ratio(k: &CftKinematics) -> Result<C64> {
    let (la, lb) = k.lengths();
    let p = single_interval_tsallis(la, 2, k.eps_uv) * single_interval_tsallis(lb, 2, k.eps_uv);
    Ok(tr_T2_torus_ff(k)? / p)
}

#[derive(Debug, Clone, Copy)]
pub struct RichardsonCheck {
    pub at_eps: C64,
    pub at_half: C64,
    pub extrapolated: C64,
    /// Relative change of the extrapolation when the pair is halved again.
    pub residual: f64,
}

/// One Richardson step in the ordering epsilon, cross-checked with the next halving.
pub fn richardson(k: &CftKinematics, f: &dyn Fn(&CftKinematics) -> Result<C64>) -> Result<RichardsonCheck> {
    let e = k.ordering_eps;
    let v1 = f(k)?;
    let v2 = f(&k.with_ordering_eps(0.5 * e)?)?;
    let v4 = f(&k.with_ordering_eps(0.25 * e)?)?;
    let r1 = 2.0 * v2 - v1;
    let r2 = 2.0 * v4 - v2;
    Ok(RichardsonCheck {
        at_eps: v1,
        at_half: v2,
        extrapolated: r1,
        residual: (r1 - r2).norm() / r1.norm().max(1e-300),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Geodesic {
    /// Pairs each interval's endpoints: `(2c/3) log(L/eps)`.
    Gamma,
    /// Connects the intervals across: `(2c/3) log(sqrt(L^2 - dt^2)/eps)`.
    GammaPrime,
}

#[derive(Debug, Clone)]
pub struct HoloSelection {
    pub candidates: Vec<(Geodesic, C64)>,
    pub selected: Geodesic,
}

/// Two equal intervals of length `L` with time offset `dt`; picks the candidate of minimal real part.
pub fn holographic_two_interval(l: f64, dt: f64, c: f64, eps_uv: f64) -> Result<HoloSelection> {
    if !(l > 0.0) || !(eps_uv > 0.0) {
        return Err(CftError::Param("L and eps_uv must be positive".into()));
    }
    let pref = 2.0 * c / 3.0;
    let gamma = C64::new(pref * (l / eps_uv).ln(), 0.0);
    let arg = C64::new(l * l - dt * dt, 0.0);
    let gamma_p = pref * (0.5 * arg.ln() - eps_uv.ln());
    let selected = if gamma_p.re <= gamma.re { Geodesic::GammaPrime } else { Geodesic::Gamma };
    Ok(HoloSelection { candidates: vec![(Geodesic::Gamma, gamma), (Geodesic::GammaPrime, gamma_p)], selected })
}

/// Bisection for the `dt` at which the selected geodesic changes.
pub fn holographic_switch(l: f64, c: f64, eps_uv: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 2.0 * l);
    let sel = |dt: f64| holographic_two_interval(l, dt, c, eps_uv).map(|s| s.selected);
    let s_lo = sel(lo)?;
    if sel(hi)? == s_lo {
        return Err(CftError::Degenerate("no switch in [0, 2L]".into()));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if sel(mid)? == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(t, Tr rho_AB^2/(Tr rho_A^2 Tr rho_B^2))` prediction curve for overlay with lattice scans.
pub fn purity_ratio_curve(a: (f64, f64), b: (f64, f64), times: &[f64]) -> Result<Vec<(f64, C64)>> {
    times
        .iter()
        .map(|&t| {
            let k = CftKinematics::two_intervals(a, b, t, CftKinematics::default_eps(a, b, t), 1.0, 1.0)?;
            Ok((t, ff_purity_ratio(&k)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_at_zero() {
        assert!((elliptic_k(C64::new(0.0, 0.0)).unwrap() - PI / 2.0).norm() < 1e-15);
    }

    #[test]
    fn tau_at_half() {
        let t = tau_from_x(C64::new(0.5, 0.0)).unwrap();
        assert!((t - 0.5 * I).norm() < 1e-14);
    }

    #[test]
    fn jacobi_identity() {
        let q = C64::new((-PI).exp(), 0.0);
        let r = theta3(q).unwrap().powu(4) - theta2(q).unwrap().powu(4) - theta4(q).unwrap().powu(4);
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn holographic_spacelike() {
        let s = holographic_two_interval(10.0, 0.0, 1.0, 0.1).unwrap();
        assert_eq!(s.selected, Geodesic::GammaPrime);
        assert!((s.candidates[0].1 - s.candidates[1].1).norm() < 1e-12);
    }
}

//! Generalized (dual) pre-Bethe and Bethe vectors, the free-fermion Bethe
//! equations χ_ν(z) = 0, twin classification and on-shell certification.

use crate::gauge::{
    a_with_derivative, d_with_derivative, dual_vacuum, gauge_apply, gauge_apply_left, vacuum, Block, GaugeError, GaugeIndexWindow, GaugeParams,
};
use crate::linalg::{rel_l2, u3_sign, DualVector, StateVector};
use crate::theta::{ThetaError, COLLISION_TOL};
use crate::vertex::{monodromy_apply, monodromy_apply_left, ModelParams};
use crate::C64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};
use thiserror::Error;

pub const DISTINCT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BetheError {
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error("root count mismatch: found {found}, argument principle gives {counted}, expected {expected}; try a finer grid")]
    RootCountMismatch { found: usize, counted: i64, expected: usize },
    #[error("twin pairing failed: root {0} has no partner")]
    TwinPairingFailure(C64),
    #[error("derivative singularity: d(v) vanishes at {0}")]
    DerivativeSingularity(C64),
    #[error("parameters {0} and {1} coincide")]
    ParameterCollision(usize, usize),
    #[error("twin-free selection has {got} roots, expected {expected}")]
    SelectionSize { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Materialized {
    Right(StateVector),
    Left(DualVector),
}

impl Materialized {
    pub fn amplitudes(&self) -> &[C64] {
        match self {
            Materialized::Right(v) => &v.0,
            Materialized::Left(w) => &w.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetheState {
    pub nu: i64,
    pub params_u: Vec<C64>,
    pub r: i64,
    pub side: Side,
    pub on_shell: bool,
    pub vector: Materialized,
}

impl BetheState {
    pub fn m(&self) -> usize {
        self.params_u.len()
    }

    pub fn right(&self) -> Option<&StateVector> {
        match &self.vector {
            Materialized::Right(v) => Some(v),
            Materialized::Left(_) => None,
        }
    }

    pub fn left(&self) -> Option<&DualVector> {
        match &self.vector {
            Materialized::Left(w) => Some(w),
            Materialized::Right(_) => None,
        }
    }

    /// Expected U₃ eigenvalue: (−1)^{ν+m}.
    pub fn u3_parity(&self) -> f64 {
        if (self.nu + self.m() as i64).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Largest amplitude in the wrong U₃ sector, relative to the largest amplitude.
    pub fn parity_leak(&self) -> f64 {
        let amp = self.vector.amplitudes();
        let want = self.u3_parity();
        let max = amp.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
        amp.iter().enumerate().filter(|(i, _)| u3_sign(*i) != want).map(|(_, x)| x.norm()).fold(0.0, f64::max) / max
    }
}

fn check_distinct(us: &[C64]) -> Result<(), BetheError> {
    for i in 0..us.len() {
        for j in i + 1..us.len() {
            if (us[i] - us[j]).norm() < DISTINCT_TOL {
                return Err(BetheError::ParameterCollision(i + 1, j + 1));
            }
        }
    }
    Ok(())
}

/// B_{l−r−1,l+r+1}(u_{n−r}) ··· B_{l−n,l+n}(u_1) |Ω^{l−n}⟩
pub fn pre_bethe_vector(l: i64, us: &[C64], p: &ModelParams, g: &GaugeParams) -> Result<StateVector, BetheError> {
    let n = p.n() as i64;
    let window = GaugeIndexWindow { lo: l - n - us.len() as i64, hi: l + n + us.len() as i64 };
    let mut v = vacuum(l - n, p, g).0;
    for (j, &u) in us.iter().enumerate() {
        let j = j as i64 + 1;
        let (k1, k2) = (l - n + j - 1, l + n - j + 1);
        window.check(k1)?;
        window.check(k2)?;
        v = gauge_apply(Block::B, k1, k2, u, p, g, &v)?;
    }
    Ok(StateVector(v))
}

/// ⟨Ω̄^{l−n}| C̄_{l−n,l+n}(v_1) ··· C̄_{l−r−1,l+r+1}(v_{n−r}), C̄_{kl} = γ_kγ_l C_{kl}
pub fn dual_pre_bethe_vector(l: i64, vs: &[C64], p: &ModelParams, g: &GaugeParams) -> Result<DualVector, BetheError> {
    let n = p.n() as i64;
    let mut w = dual_vacuum(l - n, p, g).0;
    for (j, &v) in vs.iter().enumerate() {
        let j = j as i64 + 1;
        let (k1, k2) = (l - n + j - 1, l + n - j + 1);
        let gg = g.gamma(k1, p)? * g.gamma(k2, p)?;
        w = gauge_apply_left(Block::C, k1, k2, v, p, g, &w)?.into_iter().map(|x| x * gg).collect();
    }
    Ok(DualVector(w))
}

/// The four gauge-labelled pre-vectors; Fourier sums over them are cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct PreBetheSet {
    pub side: Side,
    pub params_u: Vec<C64>,
    pub pre: [Vec<C64>; 4],
}

impl PreBetheSet {
    pub fn right(us: &[C64], p: &ModelParams, g: &GaugeParams) -> Result<Self, BetheError> {
        check_distinct(us)?;
        let pre = [0, 1, 2, 3].map(|l| pre_bethe_vector(l, us, p, g).map(|v| v.0));
        let [a, b, c, d] = pre;
        Ok(PreBetheSet { side: Side::Right, params_u: us.to_vec(), pre: [a?, b?, c?, d?] })
    }

    pub fn left(vs: &[C64], p: &ModelParams, g: &GaugeParams) -> Result<Self, BetheError> {
        check_distinct(vs)?;
        let pre = [0, 1, 2, 3].map(|l| dual_pre_bethe_vector(l, vs, p, g).map(|v| v.0));
        let [a, b, c, d] = pre;
        Ok(PreBetheSet { side: Side::Left, params_u: vs.to_vec(), pre: [a?, b?, c?, d?] })
    }

    /// Σ_l e^{∓iπνlη} pre_l, minus sign for right vectors.
    pub fn fourier(&self, nu: i64, p: &ModelParams) -> Vec<C64> {
        let sgn = if self.side == Side::Right { -1 } else { 1 };
        let dim = self.pre[0].len();
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for (l, pre) in self.pre.iter().enumerate() {
            let ph = p.eta().phase(sgn * nu * l as i64);
            for (o, x) in out.iter_mut().zip(pre) {
                *o += ph * x;
            }
        }
        out
    }

    pub fn state(&self, nu: i64, p: &ModelParams, on_shell: bool) -> BetheState {
        let amp = self.fourier(nu, p);
        let vector = match self.side {
            Side::Right => Materialized::Right(StateVector(amp)),
            Side::Left => Materialized::Left(DualVector(amp)),
        };
        BetheState { nu: nu.rem_euclid(4), params_u: self.params_u.clone(), r: p.n() as i64 - self.params_u.len() as i64, side: self.side, on_shell, vector }
    }
}

pub fn bethe_vector(nu: i64, us: &[C64], p: &ModelParams, g: &GaugeParams) -> Result<BetheState, BetheError> {
    Ok(PreBetheSet::right(us, p, g)?.state(nu, p, false))
}

pub fn dual_bethe_vector(nu: i64, vs: &[C64], p: &ModelParams, g: &GaugeParams) -> Result<BetheState, BetheError> {
    Ok(PreBetheSet::left(vs, p, g)?.state(nu, p, false))
}

type CacheKey = (Side, Vec<(u64, u64)>);

/// Pre-vector cache keyed by side and exact parameter bits. Reads share a
/// lock; a miss computes outside the lock and then inserts.
#[derive(Debug, Default)]
pub struct VectorCache {
    map: RwLock<HashMap<CacheKey, Arc<PreBetheSet>>>,
}

impl VectorCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(side: Side, us: &[C64]) -> CacheKey {
        (side, us.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect())
    }

    pub fn get_or_build(&self, side: Side, us: &[C64], p: &ModelParams, g: &GaugeParams) -> Result<Arc<PreBetheSet>, BetheError> {
        let key = Self::key(side, us);
        if let Some(hit) = self.map.read().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let built = Arc::new(match side {
            Side::Right => PreBetheSet::right(us, p, g)?,
            Side::Left => PreBetheSet::left(us, p, g)?,
        });
        let mut w = self.map.write().expect("cache lock");
        Ok(w.entry(key).or_insert(built).clone())
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// χ_ν(z) = (−1)^n e^{iπην} a(z) + e^{−iπην} d(z)
pub fn chi(nu: i64, z: C64, p: &ModelParams) -> C64 {
    chi_with_derivative(nu, z, p).0
}

/// (χ_ν, χ_ν', |a|+|d|) at z.
pub fn chi_with_derivative(nu: i64, z: C64, p: &ModelParams) -> (C64, C64, f64) {
    let (a, da) = a_with_derivative(z, p);
    let (d, dd) = d_with_derivative(z, p);
    let sgn = if p.n().is_multiple_of(2) { 1.0 } else { -1.0 };
    let pa = p.eta().phase(nu) * sgn;
    let pd = p.eta().phase(-nu);
    (pa * a + pd * d, pa * da + pd * dd, a.norm() + d.norm())
}

/// χ with an explicit sign (−1)^m on the a-term.
pub fn chi_with_sign(nu: i64, m: i64, z: C64, p: &ModelParams) -> C64 {
    let a = crate::gauge::a_func(z, p);
    let d = crate::gauge::d_func(z, p);
    let sgn = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    p.eta().phase(nu) * sgn * a + p.eta().phase(-nu) * d
}

/// |χ_ν(z)| relative to |a(z)| + |d(z)|.
pub fn chi_residual(nu: i64, z: C64, p: &ModelParams) -> f64 {
    let (c, _, s) = chi_with_derivative(nu, z, p);
    c.norm() / s.max(1e-300)
}

/// z* = z + (−1)^ε/2, ε = 0 iff 0 ≤ Re z < 1/2.
pub fn twin(z: C64) -> C64 {
    let r = z.re.rem_euclid(1.0);
    if r < 0.5 {
        z + 0.5
    } else {
        z - 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwinSelection {
    LowerHalf,
    UpperHalf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootOptions {
    pub grid: usize,
    pub dedup_tol: f64,
    pub twin_tol: f64,
    pub residual_tol: f64,
    pub selection: TwinSelection,
    pub max_newton: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { grid: 80, dedup_tol: 1e-8, twin_tol: 1e-7, residual_tol: 1e-9, selection: TwinSelection::LowerHalf, max_newton: 60 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetheRootSet {
    pub nu: i64,
    pub roots: Vec<C64>,
    pub residuals: Vec<f64>,
    pub twin_pairs: Vec<(usize, usize)>,
    pub twin_residuals: Vec<f64>,
    pub selected: Vec<C64>,
    pub contour_count: f64,
}

fn newton(nu: i64, z0: C64, p: &ModelParams, opts: &RootOptions) -> Option<C64> {
    let mut z = z0;
    let t = p.ctx().tau().im;
    for _ in 0..opts.max_newton {
        let (c, dc, _) = chi_with_derivative(nu, z, p);
        if dc.norm() == 0.0 {
            return None;
        }
        let step = c / dc;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) || z.im.abs() > 2.0 * t {
            return None;
        }
        if step.norm() < 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    Some(z)
}

fn reduce_root(z: C64, p: &ModelParams) -> C64 {
    p.ctx().reduce(z, crate::theta::PeriodScale::Single).u
}

fn contour_count(nu: i64, p: &ModelParams, shift: C64) -> f64 {
    // Gauss-Legendre, 8 nodes per panel
    const X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
    const W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
    let t = p.ctx().tau().im;
    let lo = shift + C64::new(0.0, -t / 2.0);
    let corners = [lo, lo + 1.0, lo + C64::new(1.0, t), lo + C64::new(0.0, t)];
    let panels = 48;
    let mut total = C64::new(0.0, 0.0);
    for e in 0..4 {
        let (z0, z1) = (corners[e], corners[(e + 1) % 4]);
        let h = (z1 - z0) / panels as f64;
        for k in 0..panels {
            let mid = z0 + h * (k as f64 + 0.5);
            for (x, w) in X.iter().zip(W) {
                for s in [-1.0, 1.0] {
                    let z = mid + h * (0.5 * s * x);
                    let (c, dc, _) = chi_with_derivative(nu, z, p);
                    total += dc / c * h * (0.5 * w);
                }
            }
        }
    }
    (total / (C64::i() * 2.0 * PI)).re
}

/// All N roots of χ_ν in the cell 0 ≤ Re z < 1, |Im z| ≤ Im τ/2.
pub fn solve_bethe_roots(nu: i64, p: &ModelParams, opts: &RootOptions) -> Result<BetheRootSet, BetheError> {
    let big_n = p.n_sites();
    let t = p.ctx().tau().im;
    let g = opts.grid.max(4);
    let pt = |i: usize, j: usize| C64::new(i as f64 / g as f64, -t / 2.0 + t * (j as f64 + 0.5) / g as f64);
    let vals: Vec<Vec<f64>> = (0..g).map(|i| (0..g).map(|j| chi_residual(nu, pt(i, j), p)).collect()).collect();
    let mut seeds = Vec::new();
    for i in 0..g {
        for j in 0..g {
            let v = vals[i][j];
            let mut is_min = true;
            for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = (i as i64 + di).rem_euclid(g as i64) as usize;
                    let jj = j as i64 + dj;
                    if jj < 0 || jj >= g as i64 {
                        continue;
                    }
                    if vals[ii][jj as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push(pt(i, j));
            }
        }
    }
    let mut roots: Vec<C64> = Vec::new();
    let absorb = |seeds: &[C64], roots: &mut Vec<C64>| {
        for &s in seeds {
            if let Some(z) = newton(nu, s, p, opts) {
                let z = reduce_root(z, p);
                if chi_residual(nu, z, p) < opts.residual_tol && roots.iter().all(|&r| p.ctx().lattice_distance(z - r, 1.0) > opts.dedup_tol) {
                    roots.push(z);
                }
            }
        }
    };
    absorb(&seeds, &mut roots);
    if roots.len() < big_n {
        let stride = (g / 20).max(1);
        let extra: Vec<C64> = (0..g).step_by(stride).flat_map(|i| (0..g).step_by(stride).map(move |j| (i, j))).map(|(i, j)| pt(i, j)).collect();
        absorb(&extra, &mut roots);
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    // contour away from every root
    let candidates = [
        C64::new(0.0, 0.0),
        C64::new(0.013, 0.011 * t),
        C64::new(0.037, -0.023 * t),
        C64::new(0.071, 0.041 * t),
        C64::new(0.113, -0.059 * t),
        C64::new(0.167, 0.083 * t),
        C64::new(0.229, -0.107 * t),
        C64::new(0.311, 0.131 * t),
    ];
    let shift =
        candidates.iter().copied().max_by(|a, b| boundary_clearance(&roots, *a, t, p).total_cmp(&boundary_clearance(&roots, *b, t, p))).unwrap_or_default();
    let counted_f = contour_count(nu, p, shift);
    let counted = counted_f.round() as i64;
    if roots.len() != big_n || counted != big_n as i64 || (counted_f - counted as f64).abs() > 0.1 {
        return Err(BetheError::RootCountMismatch { found: roots.len(), counted, expected: big_n });
    }

    let scale_at = |z: C64| {
        let (_, _, s) = chi_with_derivative(nu, z, p);
        s.max(1e-300)
    };
    let residuals: Vec<f64> = roots.iter().map(|&z| chi_residual(nu, z, p)).collect();
    let mut partner = vec![usize::MAX; roots.len()];
    let mut twin_pairs = Vec::new();
    let mut twin_residuals = Vec::new();
    for (i, &z) in roots.iter().enumerate() {
        let zs = twin(z);
        let j = roots.iter().position(|&r| p.ctx().lattice_distance(zs - r, 1.0) < opts.twin_tol).ok_or(BetheError::TwinPairingFailure(z))?;
        if j == i {
            return Err(BetheError::TwinPairingFailure(z));
        }
        partner[i] = j;
        let sgn = if nu.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        twin_residuals.push((chi(nu, zs, p) - chi(nu, z, p) * sgn).norm() / scale_at(z));
        if z.re < 0.5 {
            twin_pairs.push((i, j));
        }
    }
    if partner.iter().enumerate().any(|(i, &j)| partner[j] != i) || twin_pairs.len() != big_n / 2 {
        return Err(BetheError::TwinPairingFailure(roots[0]));
    }
    let selected: Vec<C64> = twin_pairs
        .iter()
        .map(|&(i, j)| match opts.selection {
            TwinSelection::LowerHalf => roots[i],
            TwinSelection::UpperHalf => roots[j],
        })
        .collect();
    if selected.len() != p.n() {
        return Err(BetheError::SelectionSize { got: selected.len(), expected: p.n() });
    }
    Ok(BetheRootSet { nu: nu.rem_euclid(4), roots, residuals, twin_pairs, twin_residuals, selected, contour_count: counted_f })
}

fn boundary_clearance(roots: &[C64], shift: C64, t: f64, p: &ModelParams) -> f64 {
    let lo_re = shift.re;
    let lo_im = shift.im - t / 2.0;
    roots
        .iter()
        .flat_map(|&r| {
            let dre = (r.re - lo_re).rem_euclid(1.0);
            let dre = dre.min(1.0 - dre);
            let z = r - shift;
            let n = ((z.im + t / 2.0) / t).floor();
            let w = r - p.ctx().tau() * n;
            let dim = (w.im - lo_im).rem_euclid(t);
            let dim = dim.min(t - dim);
            [dre, dim]
        })
        .fold(f64::INFINITY, f64::min)
}

/// T_ν(z|ū) = χ_ν(z) f(z, ū)
pub fn eigenvalue(nu: i64, z: C64, us: &[C64], p: &ModelParams) -> Result<C64, BetheError> {
    Ok(chi(nu, z, p) * p.ctx().f_set(p.eta(), z, us)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenResidual {
    pub right: f64,
    pub left: f64,
    pub eigenvalue: C64,
}

/// ‖𝖳(z)ψ − T_ν ψ‖/‖T_ν ψ‖ for a right state.
pub fn eigen_residual_right(state: &StateVector, nu: i64, us: &[C64], z: C64, p: &ModelParams) -> Result<(f64, C64), BetheError> {
    let lam = eigenvalue(nu, z, us, p)?;
    let t = monodromy_apply(z, p, &state.0);
    let tv: Vec<C64> = t[0][0].iter().zip(&t[1][1]).map(|(a, d)| a + d).collect();
    let lv: Vec<C64> = state.0.iter().map(|x| x * lam).collect();
    Ok((rel_l2(&tv, &lv), lam))
}

pub fn eigen_residual_left(state: &DualVector, nu: i64, vs: &[C64], z: C64, p: &ModelParams) -> Result<(f64, C64), BetheError> {
    let lam = eigenvalue(nu, z, vs, p)?;
    let t = monodromy_apply_left(z, p, &state.0);
    let tw: Vec<C64> = t[0][0].iter().zip(&t[1][1]).map(|(a, d)| a + d).collect();
    let lw: Vec<C64> = state.0.iter().map(|x| x * lam).collect();
    Ok((rel_l2(&tw, &lw), lam))
}

/// Both-side eigenrelation check for a twin-free on-shell parameter set.
pub fn eigen_check(nu: i64, roots: &[C64], z: C64, p: &ModelParams, g: &GaugeParams) -> Result<EigenResidual, BetheError> {
    let right = bethe_vector(nu, roots, p, g)?;
    let left = dual_bethe_vector(nu, roots, p, g)?;
    let (r, lam) = eigen_residual_right(right.right().expect("right"), nu, roots, z, p)?;
    let (l, _) = eigen_residual_left(left.left().expect("left"), nu, roots, z, p)?;
    Ok(EigenResidual { right: r, left: l, eigenvalue: lam })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueData {
    pub nu: i64,
    pub roots: Vec<C64>,
    pub omega: Vec<C64>,
    pub omega_via_d: Vec<C64>,
    pub v: Vec<C64>,
}

impl EigenvalueData {
    pub fn omega_agreement(&self) -> f64 {
        self.omega.iter().zip(&self.omega_via_d).map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(1e-300)).fold(0.0, f64::max)
    }

    pub fn eigenvalue(&self, z: C64, p: &ModelParams) -> Result<C64, BetheError> {
        eigenvalue(self.nu, z, &self.roots, p)
    }
}

/// 𝒱_a = (a/d)'(v_a) and Ω^ν_a by both displayed expressions.
pub fn omega_and_v(nu: i64, roots: &[C64], p: &ModelParams) -> Result<EigenvalueData, BetheError> {
    let ctx = p.ctx();
    let p0 = ctx.t1_prime0();
    let sgn = if p.n().is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut omega = Vec::new();
    let mut omega_d = Vec::new();
    let mut vv = Vec::new();
    for (a_idx, &va) in roots.iter().enumerate() {
        let (a, da) = a_with_derivative(va, p);
        let (d, dd) = d_with_derivative(va, p);
        if d.norm() < COLLISION_TOL * (a.norm() + 1.0) {
            return Err(BetheError::DerivativeSingularity(va));
        }
        let v = (da * d - a * dd) / (d * d);
        let rest: Vec<C64> = roots.iter().enumerate().filter(|(i, _)| *i != a_idx).map(|(_, &x)| x).collect();
        let f = ctx.f_set(p.eta(), va, &rest)?;
        omega.push(p.eta().phase(nu) * sgn * a * f * v / p0);
        omega_d.push(-p.eta().phase(-nu) * d * f * v / p0);
        vv.push(v);
    }
    Ok(EigenvalueData { nu: nu.rem_euclid(4), roots: roots.to_vec(), omega, omega_via_d: omega_d, v: vv })
}

//! Residuals of the linear systems obeyed by the scalar products and of the
//! structured-matrix identities used to solve them.
//!
//! Contour-integral lemmas are checked as finite sum identities: both sides
//! are evaluated, nothing is integrated numerically.

use crate::bethe::{chi, chi_with_sign};
use crate::linalg::{CMatrix, LinalgError};
use crate::scalar::{omega_ab, OnShell, ScalarError};
use crate::theta::{alpha, alpha_hat, alpha_odd_hat, beta_minus_hat, beta_plus_hat, ModularContext, ThetaError, COLLISION_TOL};
use crate::vertex::ModelParams;
use crate::C64;
use thiserror::Error;

/// Singular values below this fraction of the largest count as zero.
pub const NULL_SV_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CascadeError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("pole collision at {0}")]
    PoleCollision(C64),
    #[error("gauge singularity: {0}")]
    GaugeSingularity(String),
    #[error("expected {expected} parameters, got {got}")]
    Cardinality { expected: usize, got: usize },
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn without(s: &[C64], skip: &[usize]) -> Vec<C64> {
    s.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, &x)| x).collect()
}

fn prod(it: impl Iterator<Item = C64>) -> C64 {
    it.fold(one(), |a, b| a * b)
}

fn checked_div(num: C64, den: C64) -> Result<C64, CascadeError> {
    if den.norm() < COLLISION_TOL {
        return Err(CascadeError::PoleCollision(den));
    }
    Ok(num / den)
}

fn max_abs(v: impl Iterator<Item = C64>) -> f64 {
    v.map(|x| x.norm()).fold(0.0, f64::max)
}

fn sign(p: i64) -> f64 {
    if p.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn eps_sign(eps: u8) -> f64 {
    sign(eps as i64)
}

/// Ω^ε_jk = −f(u_k, ū_k) α_ε(u_jk) / (f(u_j, v̄) h(u_j, u_k))
pub fn omega_eps(p: &ModelParams, eps: u8, u: &[C64], v: &[C64], x: C64) -> Result<CMatrix, CascadeError> {
    let ctx = p.ctx();
    let eta = p.eta();
    let m = u.len();
    let mut out = CMatrix::zeros(m, m);
    for j in 0..m {
        let fj = ctx.f_set(eta, u[j], v)?;
        for k in 0..m {
            let fk = ctx.f_set(eta, u[k], &without(u, &[k]))?;
            let h = ctx.h_func(eta, u[j], u[k]);
            out[(j, k)] = checked_div(-fk * alpha(ctx, eps as i64, u[j] - u[k], x)?, fj * h)?;
        }
    }
    Ok(out)
}

/// A_jk = f(v_k, v̄_k) θ1(u_j − v_k + x) / (f(u_j, v̄) f(v_k, ū) θ1(u_j − v_k))
pub fn a_matrix(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<CMatrix, CascadeError> {
    let ctx = p.ctx();
    let eta = p.eta();
    let mut out = CMatrix::zeros(u.len(), v.len());
    for (j, &uj) in u.iter().enumerate() {
        let fu = ctx.f_set(eta, uj, v)?;
        for (k, &vk) in v.iter().enumerate() {
            let fv = ctx.f_set(eta, vk, &without(v, &[k]))?;
            let fvu = ctx.f_set(eta, vk, u)?;
            out[(j, k)] = checked_div(fv * ctx.t1(uj - vk + x), fu * fvu * ctx.t1(uj - vk))?;
        }
    }
    Ok(out)
}

/// B_jk = θ2(u_k − v_j − x) f(u_k, ū_k) / θ1(u_k − v_j)
pub fn b_matrix(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<CMatrix, CascadeError> {
    let ctx = p.ctx();
    let eta = p.eta();
    let mut out = CMatrix::zeros(v.len(), u.len());
    for (k, &uk) in u.iter().enumerate() {
        let fk = ctx.f_set(eta, uk, &without(u, &[k]))?;
        for (j, &vj) in v.iter().enumerate() {
            out[(j, k)] = checked_div(ctx.t2(uk - vj - x) * fk, ctx.t1(uk - vj))?;
        }
    }
    Ok(out)
}

fn mat_rel_dev(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = (a - b).max_abs();
    d / a.max_abs().max(b.max_abs()).max(1e-300)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmProductReport {
    /// I − Ω¹Ω⁰ against −θ2(0)²/(θ1(x)θ2(x))·AB
    pub factorized: f64,
    /// direct H_jk sum against its residue form
    pub h_residue: f64,
    /// (Ω¹Ω⁰)_jk against the H_jk expression
    pub product_entries: f64,
}

/// H_jk as a direct sum over ū.
pub fn h_sum(ctx: &ModularContext, j: usize, k: usize, u: &[C64], v: &[C64], x: C64) -> Result<C64, CascadeError> {
    let mut s = zero();
    for a in 0..u.len() {
        let ua = u[a];
        let num = prod(u.iter().map(|&q| ctx.t2(ua - q))) * prod(v.iter().map(|&q| ctx.t1(ua - q)));
        let den = prod(without(u, &[a]).iter().map(|&q| ctx.t1(ua - q))) * prod(v.iter().map(|&q| ctx.t2(ua - q)));
        let tail = ctx.t2(ua - u[j] - x) * ctx.t1(ua - u[k] + x) / (ctx.t2(ua - u[j]) * ctx.t2(ua - u[k]));
        s += checked_div(num, den)? * tail;
    }
    Ok(s)
}

/// H_jk through the residues at v̄ and the diagonal term.
pub fn h_residue(p: &ModelParams, j: usize, k: usize, u: &[C64], v: &[C64], x: C64) -> Result<C64, CascadeError> {
    let ctx = p.ctx();
    let eta = p.eta();
    let t20 = ctx.t2(zero());
    let mut s = zero();
    if j == k {
        s += ctx.f_set(eta, u[j], v)? / ctx.f_set(eta, u[j], &without(u, &[j]))? * ctx.t1(x) * ctx.t2(x) / t20;
    }
    let mut acc = zero();
    for q in 0..v.len() {
        let vq = v[q];
        let f = ctx.f_set(eta, vq, &without(v, &[q]))? / ctx.f_set(eta, vq, u)?;
        acc += f * ctx.t1(u[j] - vq + x) * ctx.t2(u[k] - vq - x) / checked_div(ctx.t1(u[j] - vq) * ctx.t1(u[k] - vq), one())?;
    }
    Ok(s + t20 * acc)
}

/// Holds for #ū = #v̄ − 2p + 1 with integer p.
pub fn om_product_identity(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<OmProductReport, CascadeError> {
    if (u.len() as i64 - v.len() as i64 - 1).rem_euclid(2) != 0 {
        return Err(CascadeError::Cardinality { expected: v.len() + 1, got: u.len() });
    }
    let ctx = p.ctx();
    let eta = p.eta();
    let m = u.len();
    let o1 = omega_eps(p, 1, u, v, x)?;
    let o0 = omega_eps(p, 0, u, v, x)?;
    let oo = o1.matmul(&o0)?;
    let lhs = &CMatrix::identity(m) - &oo;
    let pre = -ctx.t2(zero()).powi(2) / (ctx.t1(x) * ctx.t2(x));
    let rhs = a_matrix(p, u, v, x)?.matmul(&b_matrix(p, u, v, x)?)?.scale(pre);
    let mut h_dev: f64 = 0.0;
    let mut e_dev: f64 = 0.0;
    for j in 0..m {
        for k in 0..m {
            let h = h_sum(ctx, j, k, u, v, x)?;
            let hr = h_residue(p, j, k, u, v, x)?;
            h_dev = h_dev.max((h - hr).norm() / h.norm().max(hr.norm()).max(1e-300));
            let pred = ctx.t2(zero()) * ctx.f_set(eta, u[k], &without(u, &[k]))? / (ctx.t1(x) * ctx.t2(x) * ctx.f_set(eta, u[j], v)?) * h;
            e_dev = e_dev.max((oo[(j, k)] - pred).norm() / oo[(j, k)].norm().max(pred.norm()).max(1e-300));
        }
    }
    Ok(OmProductReport { factorized: mat_rel_dev(&lhs, &rhs), h_residue: h_dev, product_entries: e_dev })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    /// |det| over the Hadamard bound of I − Ω¹Ω⁰
    pub det_ratio: f64,
    pub singular_values: Vec<f64>,
    pub null_dim: usize,
}

/// Rank of I − Ω¹Ω⁰ when #ū exceeds #v̄.
pub fn product_rank(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<RankReport, CascadeError> {
    let m = u.len();
    let oo = omega_eps(p, 1, u, v, x)?.matmul(&omega_eps(p, 0, u, v, x)?)?;
    let k = &CMatrix::identity(m) - &oo;
    let det = k.det()?;
    let hadamard: f64 = (0..m).map(|r| k.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).product();
    let sv = k.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let null_dim = sv.iter().filter(|&&s| s < NULL_SV_TOL * top).count();
    Ok(RankReport { det_ratio: det.norm() / hadamard.max(1e-300), singular_values: sv, null_dim })
}

/// Elliptic Cauchy matrix θ1(x_j − y_k + λ)/θ1(x_j − y_k).
pub fn cauchy_matrix(ctx: &ModularContext, xs: &[C64], ys: &[C64], lambda: C64) -> Result<CMatrix, CascadeError> {
    let mut out = CMatrix::zeros(xs.len(), ys.len());
    for (j, &xj) in xs.iter().enumerate() {
        for (k, &yk) in ys.iter().enumerate() {
            out[(j, k)] = checked_div(ctx.t1(xj - yk + lambda), ctx.t1(xj - yk))?;
        }
    }
    Ok(out)
}

/// Closed-form inverse of the square elliptic Cauchy matrix.
pub fn cauchy_inverse(ctx: &ModularContext, xs: &[C64], ys: &[C64], lambda: C64) -> Result<CMatrix, CascadeError> {
    let n = xs.len();
    if ys.len() != n {
        return Err(CascadeError::Cardinality { expected: n, got: ys.len() });
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && ((xs[i] - xs[j]).norm() < 1e-6 || (ys[i] - ys[j]).norm() < 1e-6) {
                return Err(CascadeError::PoleCollision(xs[i] - xs[j]));
            }
        }
    }
    let s: C64 = xs.iter().sum::<C64>() - ys.iter().sum::<C64>();
    let pre = ctx.t1(lambda) * ctx.t1(s + lambda);
    if pre.norm() < COLLISION_TOL {
        return Err(CascadeError::GaugeSingularity("θ1(λ)θ1(S+λ) vanishes".into()));
    }
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let num = ctx.t1(s + lambda - xs[k] + ys[j]) * prod(ys.iter().map(|&q| ctx.t1(xs[k] - q))) * prod(xs.iter().map(|&q| ctx.t1(q - ys[j])));
            let den =
                ctx.t1(xs[k] - ys[j]) * prod(without(xs, &[k]).iter().map(|&q| ctx.t1(xs[k] - q))) * prod(without(ys, &[j]).iter().map(|&q| ctx.t1(q - ys[j])));
            out[(j, k)] = checked_div(num, den * pre)?;
        }
    }
    Ok(out)
}

/// max |M·M⁻¹ − I|
pub fn identity_residual(m: &CMatrix, inv: &CMatrix) -> Result<f64, CascadeError> {
    let prod = m.matmul(inv)?;
    Ok((&prod - &CMatrix::identity(m.rows())).max_abs())
}

/// Sizes for κ = 2: #v̄ = n, #ū = n − 1. Returns (Ā, Ā⁻¹ closed, B̄, B̄⁻¹ closed).
pub fn kappa2_inverses(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<[CMatrix; 4], CascadeError> {
    let ctx = p.ctx();
    let eta = p.eta();
    let n = v.len();
    if u.len() + 1 != n {
        return Err(CascadeError::Cardinality { expected: n - 1, got: u.len() });
    }
    let a = a_matrix(p, u, v, x)?;
    let b = b_matrix(p, u, v, x)?;
    let bar_a = CMatrix::from_fn(n - 1, n - 1, |r, c| a[(r, c)]);
    let bar_b = CMatrix::from_fn(n - 1, n - 1, |r, c| b[(r, c)]);
    let s: C64 = v[..n - 1].iter().sum::<C64>() - u.iter().sum::<C64>();
    let vn = v[n - 1];
    let mut ai = CMatrix::zeros(n - 1, n - 1);
    let mut bi = CMatrix::zeros(n - 1, n - 1);
    for j in 0..n - 1 {
        for k in 0..n - 1 {
            let vj = v[j];
            let num = -ctx.f_set(eta, u[k], v)?
                * prod(u.iter().map(|&q| ctx.t2(q - vj)))
                * ctx.t1(u[k] - vj - x + s)
                * prod(without(v, &[n - 1]).iter().map(|&q| ctx.t1(u[k] - q)));
            let den = ctx.f_func(eta, vn, vj)?
                * ctx.t1(x)
                * ctx.t1(x - s)
                * prod(without(v, &[n - 1, j]).iter().map(|&q| ctx.t2(q - vj)))
                * ctx.t1(u[k] - vj)
                * prod(without(u, &[k]).iter().map(|&q| ctx.t1(u[k] - q)));
            ai[(j, k)] = checked_div(num, den)?;
            let vk = v[k];
            let num = prod(u.iter().map(|&q| ctx.t1(q - vk))) * ctx.t2(u[j] - vk + x + s) * prod(without(v, &[n - 1]).iter().map(|&q| ctx.t1(u[j] - q)));
            let den = ctx.t2(x)
                * ctx.t2(x + s)
                * prod(without(v, &[n - 1, k]).iter().map(|&q| ctx.t1(q - vk)))
                * ctx.t1(u[j] - vk)
                * prod(without(u, &[j]).iter().map(|&q| ctx.t2(u[j] - q)));
            bi[(j, k)] = checked_div(num, den)?;
        }
    }
    Ok([bar_a, ai, bar_b, bi])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOneReport {
    pub assembled: C64,
    pub closed: C64,
    /// 𝒜_j by matrix arithmetic against the residue formula
    pub cal_a: f64,
    /// ℬ_k likewise
    pub cal_b: f64,
    /// det(I + L) against 1 + tr L
    pub det_vs_trace: f64,
}

impl RankOneReport {
    pub fn deviation(&self) -> f64 {
        (self.assembled - self.closed).norm() / self.assembled.norm().max(self.closed.norm()).max(1e-300)
    }
}

fn cal_ab_assembled(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<(Vec<C64>, Vec<C64>), CascadeError> {
    let n = v.len();
    let a = a_matrix(p, u, v, x)?;
    let b = b_matrix(p, u, v, x)?;
    let bar_a = CMatrix::from_fn(n - 1, n - 1, |r, c| a[(r, c)]);
    let bar_b = CMatrix::from_fn(n - 1, n - 1, |r, c| b[(r, c)]);
    let col: Vec<C64> = (0..n - 1).map(|r| a[(r, n - 1)]).collect();
    let cal_a = bar_a.solve(&col)?;
    let row: Vec<C64> = (0..n - 1).map(|c| b[(n - 1, c)]).collect();
    let cal_b = bar_b.inv()?.vecmat(&row)?;
    Ok((cal_a, cal_b))
}

/// 1 + Σ_k L_kk by assembling 𝒜 = Ā⁻¹A_{·n}, ℬ = B_{n·}B̄⁻¹.
pub fn trace_assembled(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<C64, CascadeError> {
    let (a, b) = cal_ab_assembled(p, u, v, x)?;
    Ok(one() + a.iter().zip(&b).map(|(x, y)| x * y).sum::<C64>())
}

/// 1 + Σ_k L_kk in closed form; θ(·|2τ) differences of the v's.
pub fn trace_closed(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<C64, CascadeError> {
    let ctx = p.ctx();
    let n = v.len();
    let vn = v[n - 1];
    let s: C64 = v[..n - 1].iter().sum::<C64>() - u.iter().sum::<C64>();
    let t1 = |z: C64| ctx.tt1(z);
    let t4 = |z: C64| ctx.tt4(z);
    let den = t1(2.0 * x) * t4(2.0 * s) - t4(2.0 * x) * t1(2.0 * s);
    if den.norm() < COLLISION_TOL {
        return Err(CascadeError::PoleCollision(s));
    }
    let pre = checked_div(prod(without(v, &[n - 1]).iter().map(|&q| t1(2.0 * vn - 2.0 * q))), prod(u.iter().map(|&q| t1(2.0 * vn - 2.0 * q))))?;
    let mut sum = zero();
    for k in 0..n - 1 {
        let vk = v[k];
        let r = checked_div(prod(u.iter().map(|&q| t1(2.0 * q - 2.0 * vk))), prod(without(v, &[k]).iter().map(|&q| t1(2.0 * q - 2.0 * vk))))?;
        let w = 2.0 * (vn - vk) + 2.0 * s;
        sum += r * (t1(2.0 * x) * t4(w) - t4(2.0 * x) * t1(w)) / den;
    }
    Ok(one() + pre * sum)
}

/// 𝒜_j and ℬ_k from their residue formulas.
pub fn cal_ab_closed(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<(Vec<C64>, Vec<C64>), CascadeError> {
    let ctx = p.ctx();
    let n = v.len();
    let vn = v[n - 1];
    let s: C64 = v[..n - 1].iter().sum::<C64>() - u.iter().sum::<C64>();
    let vbar = without(v, &[n - 1]);
    let mut ca = Vec::with_capacity(n - 1);
    let mut cb = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let vj = v[j];
        let num = prod(u.iter().map(|&q| ctx.t2(q - vj))) * ctx.t1(vn - vj - x + s) * prod(vbar.iter().map(|&q| ctx.t2(vn - q)));
        let den = ctx.t1(x - s) * prod(without(v, &[n - 1, j]).iter().map(|&q| ctx.t2(q - vj))) * ctx.t2(vn - vj) * prod(u.iter().map(|&q| ctx.t2(vn - q)));
        ca.push(checked_div(num, den)?);
        let num = -prod(u.iter().map(|&q| ctx.t1(q - vj))) * ctx.t2(vn - vj + x + s) * prod(vbar.iter().map(|&q| ctx.t1(vn - q)));
        let den = ctx.t2(x + s) * prod(without(v, &[n - 1, j]).iter().map(|&q| ctx.t1(q - vj))) * ctx.t1(vn - vj) * prod(u.iter().map(|&q| ctx.t1(vn - q)));
        cb.push(checked_div(num, den)?);
    }
    Ok((ca, cb))
}

fn vec_rel_dev(a: &[C64], b: &[C64]) -> f64 {
    let d = max_abs(a.iter().zip(b).map(|(x, y)| x - y));
    d / max_abs(a.iter().chain(b).copied()).max(1e-300)
}

pub fn rank_one_trace(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<RankOneReport, CascadeError> {
    let n = v.len();
    if u.len() + 1 != n {
        return Err(CascadeError::Cardinality { expected: n - 1, got: u.len() });
    }
    let (a, b) = cal_ab_assembled(p, u, v, x)?;
    let (ca, cb) = cal_ab_closed(p, u, v, x)?;
    let l = CMatrix::from_fn(n - 1, n - 1, |r, c| a[r] * b[c]);
    let det = (&CMatrix::identity(n - 1) + &l).det()?;
    let assembled = one() + l.trace();
    Ok(RankOneReport {
        assembled,
        closed: trace_closed(p, u, v, x)?,
        cal_a: vec_rel_dev(&a, &ca),
        cal_b: vec_rel_dev(&b, &cb),
        det_vs_trace: (det - assembled).norm() / assembled.norm().max(1e-300),
    })
}

/// Offsets used to approach u_k = v_k.
pub const LIMIT_OFFSETS: [f64; 3] = [1e-5, 1e-6, 1e-7];

/// Quadratic extrapolation to zero offset through three samples.
pub fn richardson(ds: [f64; 3], vals: [C64; 3]) -> C64 {
    let mut acc = zero();
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= ds[j] / (ds[j] - ds[i]);
            }
        }
        acc += vals[i] * w;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateReport {
    pub extrapolated: C64,
    pub factored: C64,
}

impl DegenerateReport {
    pub fn deviation(&self) -> f64 {
        (self.extrapolated - self.factored).norm() / self.factored.norm().max(1e-300)
    }
}

/// The trace at u_k = v_k (k = 2..n−1) against its factored product, n ≥ 3.
pub fn degenerate_trace(p: &ModelParams, u1: C64, v: &[C64], x: C64) -> Result<DegenerateReport, CascadeError> {
    let ctx = p.ctx();
    let n = v.len();
    if n < 3 {
        return Err(CascadeError::Cardinality { expected: 3, got: n });
    }
    let mut vals = [zero(); 3];
    for (i, d) in LIMIT_OFFSETS.iter().enumerate() {
        let mut u = vec![u1];
        u.extend(v[1..n - 1].iter().map(|&q| q + *d));
        vals[i] = trace_assembled(p, &u, v, x)?;
    }
    let (v1, vn) = (v[0], v[n - 1]);
    let num = ctx.t1(v1 - vn) * ctx.t2(v1 + vn - 2.0 * u1) * ctx.t1(x) * ctx.t2(x);
    let den = ctx.t1(vn - u1) * ctx.t2(vn - u1) * ctx.t1(v1 - u1 - x) * ctx.t2(v1 - u1 + x);
    Ok(DegenerateReport { extrapolated: richardson(LIMIT_OFFSETS, vals), factored: checked_div(num, den)? })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroEigenReport {
    pub null_dim: usize,
    pub singular_values: Vec<f64>,
    /// ‖MΨ‖/(‖M‖‖Ψ‖) for each extracted vector
    pub null_residuals: Vec<f64>,
    /// closed-form columns of the extended inverse against LU inversion
    pub inverse_columns: f64,
    /// max |B_ext · column − e|
    pub inverse_product: f64,
    /// ‖K Y¹‖/(‖K‖‖Y¹‖) for K = I − Ω¹Ω⁰
    pub y1_null: Vec<f64>,
    /// Y⁰ = −Ω⁰Y¹ against the product form carrying f(u_j, z̄_l)
    pub y0_form: f64,
}

fn frob_vec(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// κ = −2 geometry: #v̄ = n, #ū = n + 3, three extension points z̄.
pub fn zero_eigenvectors(p: &ModelParams, u: &[C64], v: &[C64], z: &[C64], x: C64) -> Result<ZeroEigenReport, CascadeError> {
    let ctx = p.ctx();
    let eta = p.eta();
    let n = v.len();
    let m = u.len();
    if m != n + 3 || z.len() != 3 {
        return Err(CascadeError::Cardinality { expected: n + 3, got: m });
    }
    let a = a_matrix(p, u, v, x)?;
    let b = b_matrix(p, u, v, x)?;
    let mm = a.matmul(&b)?;
    let sv = mm.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let null_dim = sv.iter().filter(|&&s| s < NULL_SV_TOL * top).count();
    let ext_rows = b_matrix(p, u, z, x)?;
    let bext = CMatrix::from_fn(m, m, |r, c| if r < n { b[(r, c)] } else { ext_rows[(r - n, c)] });
    let binv = bext.inv()?;
    let st: C64 = v.iter().sum::<C64>() - u.iter().sum::<C64>() + z.iter().sum::<C64>();
    let mut null_residuals = Vec::new();
    let mut col_dev: f64 = 0.0;
    let mut prod_dev: f64 = 0.0;
    for l in 0..3 {
        let psi = binv.column(n + l);
        let mpsi = mm.matvec(&psi)?;
        null_residuals.push(frob_vec(&mpsi) / (mm.frobenius() * frob_vec(&psi)).max(1e-300));
        let zl = z[l];
        let pre = ctx.t2(x) * ctx.t2(x + st);
        let mut cf = Vec::with_capacity(m);
        for j in 0..m {
            let uj = u[j];
            let num = ctx.t2(uj - zl + x + st)
                * prod(v.iter().map(|&q| ctx.t1(uj - q)))
                * prod(z.iter().map(|&q| ctx.t1(uj - q)))
                * prod(u.iter().map(|&q| ctx.t1(q - zl)));
            let den = ctx.t1(uj - zl)
                * prod(without(u, &[j]).iter().map(|&q| ctx.t2(uj - q)))
                * prod(v.iter().map(|&q| ctx.t1(q - zl)))
                * prod(without(z, &[l]).iter().map(|&q| ctx.t1(q - zl)));
            cf.push(checked_div(num, den * pre)?);
        }
        col_dev = col_dev.max(vec_rel_dev(&psi, &cf));
        let e = bext.matvec(&cf)?;
        let d = max_abs(e.iter().enumerate().map(|(i, &val)| if i == n + l { val - one() } else { val }));
        prod_dev = prod_dev.max(d);
    }
    // propagation into the transformed system
    let o1 = omega_eps(p, 1, u, v, x)?;
    let o0 = omega_eps(p, 0, u, v, x)?;
    let k = &CMatrix::identity(m) - &o1.matmul(&o0)?;
    let mut y1_null = Vec::new();
    let mut y0_dev: f64 = 0.0;
    for l in 0..3 {
        let zl = z[l];
        let zbar = without(z, &[l]);
        let mut y1 = Vec::with_capacity(m);
        let mut pred = Vec::with_capacity(m);
        for j in 0..m {
            let uj = u[j];
            let core =
                prod(zbar.iter().map(|&q| ctx.t1(uj - q))) * prod(v.iter().map(|&q| ctx.t1(uj - q))) / prod(without(u, &[j]).iter().map(|&q| ctx.t2(uj - q)));
            y1.push(ctx.t2(x + uj - zl + st) * core);
            pred.push(ctx.f_set(eta, uj, &zbar)? * ctx.t2(x) / ctx.t1(x) * core * ctx.t1(x + uj - zl + st));
        }
        let ky = k.matvec(&y1)?;
        y1_null.push(frob_vec(&ky) / (k.frobenius() * frob_vec(&y1)).max(1e-300));
        let y0: Vec<C64> = o0.matvec(&y1)?.into_iter().map(|q| -q).collect();
        y0_dev = y0_dev.max(vec_rel_dev(&y0, &pred));
    }
    Ok(ZeroEigenReport { null_dim, singular_values: sv, null_residuals, inverse_columns: col_dev, inverse_product: prod_dev, y1_null, y0_form: y0_dev })
}

/// G^a_j summed directly against −J_j from the residue relation; #ū = n − 1.
pub fn contour_sum_cal_a(p: &ModelParams, u: &[C64], v: &[C64], x: C64) -> Result<Vec<(C64, C64)>, CascadeError> {
    let ctx = p.ctx();
    let n = v.len();
    if u.len() + 1 != n {
        return Err(CascadeError::Cardinality { expected: n - 1, got: u.len() });
    }
    let vn = v[n - 1];
    let vbar = without(v, &[n - 1]);
    let s: C64 = vbar.iter().sum::<C64>() - u.iter().sum::<C64>();
    let mut out = Vec::with_capacity(n - 1);
    for &vj in &v[..n - 1] {
        let mut g = zero();
        for a in 0..u.len() {
            let ua = u[a];
            let num = ctx.t1(ua - vj - x + s) * ctx.t1(ua - vn + x) * prod(vbar.iter().map(|&q| ctx.t1(ua - q)));
            let den = ctx.t1(ua - vj) * ctx.t1(ua - vn) * prod(without(u, &[a]).iter().map(|&q| ctx.t1(ua - q)));
            g += checked_div(num, den)?;
        }
        let num = ctx.t1(x) * ctx.t1(vn - vj - x + s) * prod(vbar.iter().map(|&q| ctx.t1(vn - q)));
        let den = ctx.t1(vn - vj) * prod(u.iter().map(|&q| ctx.t1(vn - q)));
        out.push((g, -checked_div(num, den)?));
    }
    Ok(out)
}

/// X_j^λ = S^{ν,λ}(v̄|ū_j) for every deletion j and sector λ.
pub fn deletion_table(os: &OnShell, u: &[C64]) -> Result<Vec<[C64; 4]>, CascadeError> {
    (0..u.len()).map(|j| Ok(os.brute_all(&without(u, &[j]))?)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousReport {
    /// `None` for p ≠ 0, where X vanishes and only `trivial` is meaningful
    pub sandwich: Option<f64>,
    pub eps_system: Option<f64>,
    pub transformed: Option<f64>,
    /// largest |⟨Ψ^ν|Ψ^λ(ū_j)⟩| relative to vector norms
    pub trivial: f64,
}

/// Homogeneous system for κ = 2p with #ū = n − 2p + 1, X from brute force.
pub fn homogeneous_residual(os: &OnShell, pidx: i64, u: &[C64]) -> Result<HomogeneousReport, CascadeError> {
    let p = os.params();
    let ctx = p.ctx();
    let eta = p.eta();
    let n = os.n() as i64;
    let m = u.len();
    if m as i64 != n - 2 * pidx + 1 {
        return Err(CascadeError::Cardinality { expected: (n - 2 * pidx + 1).max(0) as usize, got: m });
    }
    let mut trivial: f64 = 0.0;
    for j in 0..m {
        trivial = trivial.max(os.vanishing_ratio(&without(u, &[j]), &[0, 1, 2, 3])?);
    }
    if pidx != 0 {
        return Ok(HomogeneousReport { sandwich: None, eps_system: None, transformed: None, trivial });
    }
    let x = os.gauge().x();
    let nu = os.nu;
    let xs = deletion_table(os, u)?;
    let fv: Vec<C64> = u.iter().map(|&uj| ctx.f_set(eta, uj, &os.roots)).collect::<Result<_, _>>()?;
    let fu: Vec<C64> = (0..m).map(|k| ctx.f_set(eta, u[k], &without(u, &[k]))).collect::<Result<_, _>>()?;
    let chis: Vec<[C64; 4]> = u.iter().map(|&z| [0, 1, 2, 3].map(|mu| chi(mu, z, p))).collect();
    let mut sandwich: f64 = 0.0;
    for j in 0..m {
        let mut scale: f64 = 0.0;
        let mut res: f64 = 0.0;
        for lam in 0..4i64 {
            let lhs = fv[j] * chis[j][nu as usize] * xs[j][lam as usize];
            let mut sum = zero();
            scale = scale.max(lhs.norm());
            for mu in 0..4i64 {
                for k in 0..m {
                    let t = fu[k] / ctx.h_func(eta, u[j], u[k]) * alpha_hat(ctx, lam - mu, u[j] - u[k], x)? * chis[k][mu as usize] * xs[k][mu as usize] * 0.25;
                    scale = scale.max(t.norm());
                    sum += t;
                }
            }
            res = res.max((lhs - sum).norm());
        }
        sandwich = sandwich.max(res / scale.max(1e-300));
    }
    let xe = |eps: u8, j: usize| xs[j][nu as usize] + eps_sign(eps) * xs[j][((nu + 2) % 4) as usize];
    let chi_nu: Vec<C64> = chis.iter().map(|c| c[nu as usize]).collect();
    let mut eps_system: f64 = 0.0;
    let mut transformed: f64 = 0.0;
    for eps in 0..2u8 {
        for j in 0..m {
            let lhs = chi_nu[j] * xe(eps, j);
            let others = |j: usize| prod((0..m).filter(|&a| a != j).map(|a| chi_nu[a]));
            let y = |e: u8, k: usize| xe(e, k) / others(k);
            let lhs_y = y(eps, j);
            let mut sum = zero();
            let mut sum_y = zero();
            let mut scale = lhs.norm();
            let mut scale_y = lhs_y.norm();
            for k in 0..m {
                let c = fu[k] / ctx.h_func(eta, u[j], u[k]) * alpha(ctx, eps as i64, u[j] - u[k], x)? / fv[j];
                let t = c * chi_nu[k] * xe(1 - eps, k);
                let ty = c * y(1 - eps, k);
                scale = scale.max(t.norm());
                scale_y = scale_y.max(ty.norm());
                sum += t;
                sum_y += ty;
            }
            eps_system = eps_system.max((lhs - sum).norm() / scale.max(1e-300));
            transformed = transformed.max((lhs_y - sum_y).norm() / scale_y.max(1e-300));
        }
    }
    Ok(HomogeneousReport { sandwich: Some(sandwich), eps_system: Some(eps_system), transformed: Some(transformed), trivial })
}

/// Where the balanced scalar products in the inhomogeneous part come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    Oracle,
    ClosedForm,
}

fn sp_all(os: &OnShell, set: &[C64], pop: Population) -> Result<[C64; 4], CascadeError> {
    if pop == Population::ClosedForm && set.len() == os.n() {
        let mut out = [zero(); 4];
        for (mu, o) in out.iter_mut().enumerate() {
            *o = os.balanced_closed_form(mu as i64, set)?;
        }
        return Ok(out);
    }
    Ok(os.brute_all(set)?)
}

/// Inhomogeneous system for κ = 2p + 1 with #w̄ = n − 2p. Returns the largest
/// |LHS − RHS| relative to the largest term, over j and λ.
pub fn inhomogeneous_residual(os: &OnShell, pidx: i64, w: &[C64], pop: Population) -> Result<f64, CascadeError> {
    let p = os.params();
    let ctx = p.ctx();
    let eta = p.eta();
    let n = os.n() as i64;
    let m = w.len();
    if m as i64 != n - 2 * pidx {
        return Err(CascadeError::Cardinality { expected: (n - 2 * pidx).max(0) as usize, got: m });
    }
    let g = os.gauge();
    let (x, y) = (g.x(), g.y());
    let xs = deletion_table(os, w)?;
    let full = sp_all(os, w, pop)?;
    let mut pair_sp = Vec::new();
    for a in 0..m {
        for b in 0..a {
            pair_sp.push(((a, b), sp_all(os, &without(w, &[a, b]), pop)?));
        }
    }
    let fw: Vec<C64> = (0..m).map(|k| ctx.f_set(eta, w[k], &without(w, &[k]))).collect::<Result<_, _>>()?;
    let sgn = sign(pidx);
    let t20 = ctx.t2(zero());
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let wj = w[j];
        let ty1 = ctx.t1(y + wj);
        if ty1.norm() < COLLISION_TOL {
            return Err(CascadeError::PoleCollision(wj));
        }
        let tnu = os.t_nu(wj)?;
        let omegas: Vec<C64> = pair_sp.iter().map(|((a, b), _)| omega_ab(p, *a, *b, wj, w)).collect::<Result<_, _>>()?;
        let mut res: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for lam in 0..4i64 {
            let mut terms: Vec<C64> = vec![tnu * xs[j][lam as usize]];
            let pre = -ctx.t2(y + wj) / (ty1 * 4.0);
            for mu in 0..4i64 {
                for k in 0..m {
                    let chi_t = chi_with_sign(mu, n - 1, w[k], p);
                    terms.push(pre * fw[k] / ctx.h_func(eta, wj, w[k]) * alpha_odd_hat(ctx, lam - mu, wj - w[k], x)? * chi_t * xs[k][mu as usize]);
                }
            }
            let pre1 = -sgn / (ty1 * 2.0 * ctx.t1(x).powi(2) * ctx.t2(x).powi(2));
            for (((a, b), sp), om) in pair_sp.iter().zip(&omegas) {
                for mu in 0..4i64 {
                    terms.push(pre1 * om * beta_minus_hat(ctx, lam - mu, wj, w[*a], w[*b], g.t, x) * sp[mu as usize]);
                }
            }
            let pre2 = -sgn * t20 * t20 / (ty1 * 8.0);
            for mu in 0..4i64 {
                terms.push(pre2 * beta_plus_hat(ctx, lam - mu, wj, g.s) * full[mu as usize]);
            }
            res = res.max(terms.iter().sum::<C64>().norm());
            scale = scale.max(max_abs(terms.iter().copied()));
        }
        worst = worst.max(res / scale.max(1e-300));
    }
    Ok(worst)
}

/// X^λ_{m+1} at w_{m+1} = −y* from the explicit expression; returns (explicit, brute) per λ.
pub fn direct_expression(os: &OnShell, u: &[C64], pop: Population) -> Result<[(C64, C64); 4], CascadeError> {
    let p = os.params();
    let ctx = p.ctx();
    let n = os.n() as i64;
    let m1 = u.len() as i64 + 1;
    if (n - m1).rem_euclid(2) != 0 {
        return Err(CascadeError::Cardinality { expected: (n - 1).max(0) as usize, got: u.len() });
    }
    let g = os.gauge();
    let x = g.x();
    let z = g.minus_y_star();
    let mut w = u.to_vec();
    w.push(z);
    let t = os.t_nu(z)?;
    if t.norm() < COLLISION_TOL {
        return Err(CascadeError::GaugeSingularity("T_ν(−y*) vanishes".into()));
    }
    let sgn = sign((n - m1) / 2);
    let t20 = ctx.t2(zero());
    let full = sp_all(os, &w, pop)?;
    let brute = os.brute_all(u)?;
    let mut out = [(zero(), zero()); 4];
    for lam in 0..4i64 {
        let mut acc = zero();
        for mu in 0..4i64 {
            acc += t20 / 8.0 * beta_plus_hat(ctx, lam - mu, z, g.s) * full[mu as usize];
        }
        let pre = one() / (2.0 * ctx.t1(x).powi(2) * ctx.t2(x).powi(2) * t20);
        for a in 0..w.len() {
            for b in 0..a {
                let sp = sp_all(os, &without(&w, &[a, b]), pop)?;
                let om = omega_ab(p, a, b, z, &w)?;
                for mu in 0..4i64 {
                    acc += pre * om * beta_minus_hat(ctx, lam - mu, z, w[a], w[b], g.t, x) * sp[mu as usize];
                }
            }
        }
        out[lam as usize] = (sgn * acc / t, brute[lam as usize]);
    }
    Ok(out)
}

/// Max relative change of X_j when u_j alone is moved by `shift`.
pub fn uj_independence(os: &OnShell, u: &[C64], shift: C64) -> Result<f64, CascadeError> {
    let base = deletion_table(os, u)?;
    let mut worst: f64 = 0.0;
    for j in 0..u.len() {
        let mut moved = u.to_vec();
        moved[j] += shift;
        let again = os.brute_all(&without(&moved, &[j]))?;
        let scale = max_abs(base[j].iter().copied()).max(1e-300);
        worst = worst.max(max_abs(base[j].iter().zip(&again).map(|(a, b)| a - b)) / scale);
    }
    Ok(worst)
}

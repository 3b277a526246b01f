//! Scalar products between an on-shell dual Bethe vector and an arbitrary
//! Bethe vector: brute force, balanced closed forms and the κ = ±1 formulas.
//!
//! The pairing is bilinear. ⟨Ψ| is built independently from C̄ operators and
//! is never the Hermitian adjoint of |Ψ⟩.

use crate::bethe::{omega_and_v, BetheError, EigenvalueData, PreBetheSet, Side, VectorCache};
use crate::gauge::{a_func, d_func, GaugeParams};
use crate::linalg::DualVector;
use crate::theta::{quarter_turn, ThetaError, COLLISION_TOL};
use crate::vertex::ModelParams;
use crate::C64;
use thiserror::Error;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error(transparent)]
    Bethe(#[from] BetheError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error("normalization ⟨Ψ|Ψ⟩ is degenerate (relative size {0:e})")]
    DegenerateNormalization(f64),
    #[error("pole collision between {0} and {1}")]
    PoleCollision(C64, C64),
    #[error("evaluation point −y* is singular: {0}")]
    EvaluationPointSingular(String),
    #[error("expected {expected} parameters, got {got}")]
    Cardinality { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Brute,
    Closed,
    Cascade,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarProductResult {
    pub value: C64,
    pub method: Method,
    pub residual_vs_oracle: Option<f64>,
}

/// Relative deviation of two complex numbers against the larger modulus.
pub fn rel_dev(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

/// A twin-free on-shell dual Bethe vector together with its normalization.
#[derive(Debug)]
pub struct OnShell {
    pub nu: i64,
    pub roots: Vec<C64>,
    pub dual: DualVector,
    pub norm: C64,
    pub data: EigenvalueData,
    params: ModelParams,
    gauge: GaugeParams,
    cache: VectorCache,
}

impl OnShell {
    pub fn new(nu: i64, roots: &[C64], p: &ModelParams, g: &GaugeParams) -> Result<Self, ScalarError> {
        let nu = nu.rem_euclid(4);
        if roots.len() != p.n() {
            return Err(ScalarError::Cardinality { expected: p.n(), got: roots.len() });
        }
        let dual = PreBetheSet::left(roots, p, g)?.fourier(nu, p);
        let right = PreBetheSet::right(roots, p, g)?.fourier(nu, p);
        let norm: C64 = dual.iter().zip(&right).map(|(a, b)| a * b).sum();
        let scale = l2(&dual) * l2(&right);
        if norm.norm() < NORM_TOL * scale {
            return Err(ScalarError::DegenerateNormalization(norm.norm() / scale.max(1e-300)));
        }
        let data = omega_and_v(nu, roots, p)?;
        Ok(OnShell { nu, roots: roots.to_vec(), dual: DualVector(dual), norm, data, params: p.clone(), gauge: *g, cache: VectorCache::new() })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn gauge(&self) -> &GaugeParams {
        &self.gauge
    }

    pub fn n(&self) -> usize {
        self.roots.len()
    }

    fn right_set(&self, us: &[C64]) -> Result<std::sync::Arc<PreBetheSet>, ScalarError> {
        Ok(self.cache.get_or_build(Side::Right, us, &self.params, &self.gauge)?)
    }

    /// Unnormalized ⟨Ψ^ν(v̄)|Ψ^λ(ū)⟩ for λ = 0..3 and the two vector norms.
    pub fn raw_pairings(&self, us: &[C64]) -> Result<([C64; 4], f64), ScalarError> {
        let set = self.right_set(us)?;
        let mut out = [C64::new(0.0, 0.0); 4];
        let mut scale: f64 = 0.0;
        for (lam, o) in out.iter_mut().enumerate() {
            let b = set.fourier(lam as i64, &self.params);
            *o = self.dual.0.iter().zip(&b).map(|(a, b)| a * b).sum();
            scale = scale.max(l2(&self.dual.0) * l2(&b));
        }
        Ok((out, scale))
    }

    /// S^{ν,λ}(v̄|ū) for every λ.
    pub fn brute_all(&self, us: &[C64]) -> Result<[C64; 4], ScalarError> {
        let (raw, _) = self.raw_pairings(us)?;
        Ok(raw.map(|x| x / self.norm))
    }

    /// S^{ν,λ}(v̄|ū) = 𝒩 ⟨Ψ^ν(v̄)|Ψ^λ(ū)⟩
    pub fn brute_force_sp(&self, lambda: i64, us: &[C64]) -> Result<C64, ScalarError> {
        Ok(self.brute_all(us)?[lambda.rem_euclid(4) as usize])
    }

    /// S^{ν+o} + (−1)^ε S^{ν+o+2} from brute force; o = 0 balanced, o = 1 odd imbalance.
    pub fn brute_eps(&self, offset: i64, eps: u8, us: &[C64]) -> Result<C64, ScalarError> {
        let s = self.brute_all(us)?;
        let i = (self.nu + offset).rem_euclid(4) as usize;
        let j = (self.nu + offset + 2).rem_euclid(4) as usize;
        Ok(s[i] + sign(eps) * s[j])
    }

    /// Largest |⟨Ψ^ν|Ψ^λ(ū)⟩|/(‖Ψ^ν‖‖Ψ^λ‖) over the listed sectors.
    pub fn vanishing_ratio(&self, us: &[C64], sectors: &[i64]) -> Result<f64, ScalarError> {
        let set = self.right_set(us)?;
        let mut worst: f64 = 0.0;
        for &lam in sectors {
            let b = set.fourier(lam, &self.params);
            let v: C64 = self.dual.0.iter().zip(&b).map(|(a, b)| a * b).sum();
            worst = worst.max(v.norm() / (l2(&self.dual.0) * l2(&b)).max(1e-300));
        }
        Ok(worst)
    }

    /// Proposition 1 check for |κ| = 2: every sector.
    pub fn kappa2_vanishing(&self, us: &[C64]) -> Result<f64, ScalarError> {
        let m = us.len() as i64;
        let kappa = self.n() as i64 - m;
        if kappa.abs() != 2 {
            return Err(ScalarError::Cardinality { expected: (self.n() as i64 + 2) as usize, got: us.len() });
        }
        self.vanishing_ratio(us, &[0, 1, 2, 3])
    }

    /// Sectors λ with ν + κ ≢ λ (mod 2).
    pub fn forbidden_sectors(&self, m: usize) -> Vec<i64> {
        let kappa = self.n() as i64 - m as i64;
        (0..4).filter(|lam| (self.nu + kappa - lam).rem_euclid(2) != 0).collect()
    }

    /// T_ν(z|v̄)
    pub fn t_nu(&self, z: C64) -> Result<C64, ScalarError> {
        Ok(self.data.eigenvalue(z, &self.params)?)
    }

    fn check_poles(&self, us: &[C64]) -> Result<(), ScalarError> {
        let ctx = self.params.ctx();
        for &u in us {
            for &v in &self.roots {
                if ctx.t2(u - v).norm() < COLLISION_TOL {
                    return Err(ScalarError::PoleCollision(u, v));
                }
            }
        }
        Ok(())
    }

    /// Π_{a<b}θ2(v_ab)θ2(u_ab) / Π θ2(u_a−v_b) · Π_k T_ν(u_k|v̄)/Ω_k
    pub fn common_factor(&self, us: &[C64]) -> Result<C64, ScalarError> {
        let n = self.n();
        if us.len() != n {
            return Err(ScalarError::Cardinality { expected: n, got: us.len() });
        }
        self.check_poles(us)?;
        let ctx = self.params.ctx();
        let vs = &self.roots;
        let mut num = C64::new(1.0, 0.0);
        for a in 0..n {
            for b in a + 1..n {
                num *= ctx.t2(vs[a] - vs[b]) * ctx.t2(us[a] - us[b]);
            }
        }
        let den: C64 = us.iter().flat_map(|&u| vs.iter().map(move |&v| (u, v))).map(|(u, v)| ctx.t2(u - v)).product();
        let mut pr = C64::new(1.0, 0.0);
        for (k, &u) in us.iter().enumerate() {
            pr *= self.t_nu(u)? / self.data.omega[k];
        }
        Ok(num / den * pr)
    }

    /// Balanced closed form S^{ν,μ}_{n,n} through φ₁.
    pub fn balanced_closed_form(&self, mu: i64, us: &[C64]) -> Result<C64, ScalarError> {
        let ctx = self.params.ctx();
        let mu = mu.rem_euclid(4);
        let dm = mu - self.nu;
        if dm.rem_euclid(2) != 0 {
            self.common_factor(us)?;
            return Ok(C64::new(0.0, 0.0));
        }
        let x = self.gauge.x();
        let s: C64 = self.roots.iter().sum::<C64>() - us.iter().sum::<C64>();
        let shift = ctx.tau() * (0.5 * dm as f64);
        let den = ctx.tt1(s + shift) * ctx.tt1(2.0 * x);
        if den.norm() < COLLISION_TOL {
            return Err(ScalarError::PoleCollision(s, x));
        }
        let phi1 = (C64::i() * std::f64::consts::PI * dm as f64 * x).exp() * ctx.t1(s) * ctx.tt1(s + 2.0 * x + shift) / den;
        Ok(phi1 * ctx.tt1_prime0() / ctx.t1_prime0() * self.common_factor(us)?)
    }

    /// S^{ν;ε}_{n,n} = θ1(S+x_ε)/θ1(x_ε) · common
    pub fn balanced_eps(&self, eps: u8, us: &[C64]) -> Result<C64, ScalarError> {
        let ctx = self.params.ctx();
        let xe = self.gauge.x() + self.params.eta().value() * eps as f64;
        let d = ctx.t1(xe);
        if d.norm() < COLLISION_TOL {
            return Err(ThetaError::GaugeSingularity(eps as i64).into());
        }
        let s: C64 = self.roots.iter().sum::<C64>() - us.iter().sum::<C64>();
        Ok(ctx.t1(s + xe) / d * self.common_factor(us)?)
    }

    fn minus_y_star_checked(&self, us: &[C64]) -> Result<(C64, C64), ScalarError> {
        let z = self.gauge.minus_y_star();
        let ctx = self.params.ctx();
        for &w in us.iter().chain(&self.roots) {
            if ctx.lattice_distance(z - w, 0.5) < 1e-6 {
                return Err(ScalarError::EvaluationPointSingular(format!("−y* collides with {w}")));
            }
        }
        let t = self.t_nu(z)?;
        let scale = (a_func(z, &self.params).norm() + d_func(z, &self.params).norm()).max(1e-300);
        if t.norm() < COLLISION_TOL * scale {
            return Err(ScalarError::EvaluationPointSingular("T_ν(−y*) vanishes".into()));
        }
        Ok((z, t))
    }

    /// κ = +1 through the balanced form at {ū, −y*}.
    pub fn imbalance_plus1_route(&self, eps: u8, us: &[C64]) -> Result<C64, ScalarError> {
        self.expect_len(us, self.n() - 1)?;
        let ctx = self.params.ctx();
        let (z, t) = self.minus_y_star_checked(us)?;
        let xe = self.gauge.x() + self.params.eta().value() * eps as f64;
        let mut w = us.to_vec();
        w.push(z);
        let bal = self.balanced_eps(eps, &w)?;
        Ok(-quarter_turn(-(eps as i64)) * ctx.t2(C64::new(0.0, 0.0)) * ctx.t1(xe) / (t * 2.0) * bal)
    }

    /// κ = +1 explicit form.
    pub fn imbalance_plus1(&self, eps: u8, us: &[C64]) -> Result<C64, ScalarError> {
        let n = self.n();
        self.expect_len(us, n - 1)?;
        self.check_poles(us)?;
        let ctx = self.params.ctx();
        let vs = &self.roots;
        let y = self.gauge.y();
        let se = self.gauge.s + self.params.eta().value() * eps as f64;
        let sp: C64 = vs.iter().sum::<C64>() - us.iter().sum::<C64>();
        let mut num = C64::new(1.0, 0.0);
        for a in 0..n {
            for b in a + 1..n {
                num *= ctx.t2(vs[a] - vs[b]);
            }
        }
        for a in 0..us.len() {
            for b in a + 1..us.len() {
                num *= ctx.t2(us[a] - us[b]);
            }
        }
        let den: C64 = us.iter().flat_map(|&u| vs.iter().map(move |&v| u - v)).map(|d| ctx.t2(d)).product();
        let uy: C64 = us.iter().map(|&u| ctx.t1(u + y)).product();
        let vy: C64 = vs.iter().map(|&v| ctx.t1(v + y)).product();
        if vy.norm() < COLLISION_TOL {
            return Err(ScalarError::EvaluationPointSingular("θ1(v+y) vanishes".into()));
        }
        let mut tp = C64::new(1.0, 0.0);
        for &u in us {
            tp *= self.t_nu(u)?;
        }
        let om: C64 = self.data.omega.iter().product();
        Ok(quarter_turn(-(eps as i64)) * 0.5 * ctx.t2(C64::new(0.0, 0.0)) * ctx.t2(sp + se) * uy / vy * num / den * tp / om)
    }

    /// κ = −1 double sum.
    pub fn imbalance_minus1(&self, eps: u8, us: &[C64]) -> Result<C64, ScalarError> {
        self.expect_len(us, self.n() + 1)?;
        let p = &self.params;
        let ctx = p.ctx();
        let (z, t) = self.minus_y_star_checked(us)?;
        let x = self.gauge.x();
        let xe = x + p.eta().value() * eps as f64;
        let te = self.gauge.t + p.eta().value() * eps as f64;
        let mut w = us.to_vec();
        w.push(z);
        let mut tot = C64::new(0.0, 0.0);
        for a in 0..w.len() {
            for b in 0..a {
                let wab: Vec<C64> = w.iter().enumerate().filter(|(i, _)| *i != a && *i != b).map(|(_, &q)| q).collect();
                let bal = self.balanced_eps(eps, &wab)?;
                tot += omega_ab(p, a, b, z, &w)? * ctx.t1(w[a] - te) * ctx.t1(w[b] - te) * bal;
            }
        }
        let pre = -2.0 * quarter_turn(-(eps as i64)) * ctx.t1(xe) / (ctx.t1(x).powi(2) * ctx.t2(x).powi(2) * ctx.t2(C64::new(0.0, 0.0)) * t);
        Ok(pre * tot)
    }

    fn expect_len(&self, us: &[C64], want: usize) -> Result<(), ScalarError> {
        if us.len() != want {
            return Err(ScalarError::Cardinality { expected: want, got: us.len() });
        }
        Ok(())
    }
}

fn sign(eps: u8) -> f64 {
    if eps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// ω_ab(z) = [d(w_a)a(w_b) − d(w_b)a(w_a)] f(w_a, w̄_a) f(w̄_b, w_b) / (f(w_a,w_b) h(w_a,z) h(z,w_b))
pub fn omega_ab(p: &ModelParams, a: usize, b: usize, z: C64, w: &[C64]) -> Result<C64, ThetaError> {
    let ctx = p.ctx();
    let eta = p.eta();
    let (wa, wb) = (w[a], w[b]);
    let rest_a: Vec<C64> = w.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, &q)| q).collect();
    let rest_b: Vec<C64> = w.iter().enumerate().filter(|(i, _)| *i != b).map(|(_, &q)| q).collect();
    let fa = ctx.f_set(eta, wa, &rest_a)?;
    let fb = ctx.f_set_left(eta, &rest_b, wb)?;
    let br = d_func(wa, p) * a_func(wb, p) - d_func(wb, p) * a_func(wa, p);
    let den = ctx.f_func(eta, wa, wb)? * ctx.h_func(eta, wa, z) * ctx.h_func(eta, z, wb);
    if den.norm() < COLLISION_TOL {
        return Err(ThetaError::PoleCollision(wa - wb));
    }
    Ok(br * fa * fb / den)
}

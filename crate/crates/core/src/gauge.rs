//! Gauge matrices M_k(u), gauge-transformed monodromy and the gauge vacua.

use crate::linalg::{kron_vec, rel_l2, DualVector, LinalgError, StateVector};
use crate::theta::{ThetaError, COLLISION_TOL};
use crate::vertex::{monodromy_apply, monodromy_apply_left, monodromy_full, ModelParams, OperatorBlock};
use crate::C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaugeError {
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("gauge singularity: {0}")]
    Singular(String),
    #[error("gauge index {index} outside window [{lo}, {hi}]")]
    OutsideWindow { index: i64, lo: i64, hi: i64 },
}

pub type Mat2 = [[C64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeParams {
    pub s: C64,
    pub t: C64,
}

/// Inclusive range of gauge indices a computation touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaugeIndexWindow {
    pub lo: i64,
    pub hi: i64,
}

impl GaugeIndexWindow {
    pub fn covers(&self, k: i64) -> bool {
        (self.lo..=self.hi).contains(&k)
    }

    pub fn check(&self, k: i64) -> Result<(), GaugeError> {
        if self.covers(k) {
            Ok(())
        } else {
            Err(GaugeError::OutsideWindow { index: k, lo: self.lo, hi: self.hi })
        }
    }

    /// Indices used by pre-Bethe vectors with gauge label l ∈ 0..4 on a chain with n = N/2.
    pub fn for_bethe(n: usize) -> Self {
        let n = n as i64;
        GaugeIndexWindow { lo: -n - 1, hi: 3 + n + 1 }
    }
}

impl GaugeParams {
    pub fn new(s: C64, t: C64) -> Self {
        GaugeParams { s, t }
    }

    pub fn x(&self) -> C64 {
        (self.s + self.t) * 0.5
    }
    pub fn y(&self) -> C64 {
        (self.s - self.t) * 0.5
    }
    /// −y* = −y + 1/2
    pub fn minus_y_star(&self) -> C64 {
        -self.y() + 0.5
    }

    pub fn s_k(&self, k: i64, p: &ModelParams) -> C64 {
        self.s + p.eta().value() * k as f64
    }
    pub fn t_k(&self, k: i64, p: &ModelParams) -> C64 {
        self.t + p.eta().value() * k as f64
    }
    pub fn x_k(&self, k: i64, p: &ModelParams) -> C64 {
        self.x() + p.eta().value() * k as f64
    }

    /// γ_k = 2/(θ2(x_k)θ2(0))
    pub fn gamma(&self, k: i64, p: &ModelParams) -> Result<C64, GaugeError> {
        let ctx = p.ctx();
        let den = ctx.t2(self.x_k(k, p));
        if den.norm() < COLLISION_TOL {
            return Err(GaugeError::Singular(format!("theta2(x_{k}) vanishes")));
        }
        Ok(C64::new(2.0, 0.0) / (den * ctx.t2(C64::new(0.0, 0.0))))
    }

    /// Genericity conditions needed by the closed forms.
    pub fn validate(&self, p: &ModelParams, window: GaugeIndexWindow) -> Result<(), GaugeError> {
        let ctx = p.ctx();
        for k in window.lo..=window.hi {
            self.gamma(k, p)?;
        }
        for l in 0..4 {
            if ctx.t1(self.x_k(l, p)).norm() < COLLISION_TOL {
                return Err(GaugeError::Singular(format!("theta1(x_{l}) vanishes")));
            }
        }
        if ctx.t2(self.x()).norm() < COLLISION_TOL || ctx.t1(self.x()).norm() < COLLISION_TOL {
            return Err(GaugeError::Singular("theta1(x) theta2(x) vanishes".into()));
        }
        Ok(())
    }
}

pub fn gauge_matrix(k: i64, u: C64, p: &ModelParams, g: &GaugeParams) -> Result<Mat2, GaugeError> {
    let ctx = p.ctx();
    let gk = g.gamma(k, p)?;
    let sk = g.s_k(k, p) + u;
    let tk = g.t_k(k, p) - u;
    Ok([[ctx.tt1(sk), gk * ctx.tt1(tk)], [ctx.tt4(sk), gk * ctx.tt4(tk)]])
}

/// det M_k(u) = 2θ1(y+u)/θ2(0)
pub fn gauge_det(u: C64, p: &ModelParams, g: &GaugeParams) -> C64 {
    let ctx = p.ctx();
    ctx.t1(g.y() + u) * 2.0 / ctx.t2(C64::new(0.0, 0.0))
}

pub fn gauge_matrix_inverse(k: i64, u: C64, p: &ModelParams, g: &GaugeParams) -> Result<Mat2, GaugeError> {
    let m = gauge_matrix(k, u, p, g)?;
    if p.ctx().t1(g.y() + u).norm() < COLLISION_TOL {
        return Err(LinalgError::SingularMatrix { step: 0, pivot: 0.0, scale: 1.0 }.into());
    }
    let det = gauge_det(u, p, g);
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

/// Coefficients c[i][j][a][b] with 𝒯_{k,l}[i][j] = Σ_ab c · 𝒯[a][b].
fn gauge_coefficients(k: i64, l: i64, u: C64, p: &ModelParams, g: &GaugeParams) -> Result<[[Mat2; 2]; 2], GaugeError> {
    let mi = gauge_matrix_inverse(k, u, p, g)?;
    let ml = gauge_matrix(l, u, p, g)?;
    let mut c = [[[[C64::new(0.0, 0.0); 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    c[i][j][a][b] = mi[i][a] * ml[b][j];
                }
            }
        }
    }
    Ok(c)
}

/// 𝒯_{k,l}(u) = M_k⁻¹(u) 𝒯(u) M_l(u)
pub fn gauge_monodromy(k: i64, l: i64, u: C64, p: &ModelParams, g: &GaugeParams) -> Result<OperatorBlock, GaugeError> {
    let t = OperatorBlock::from_full(&monodromy_full(u, p));
    let c = gauge_coefficients(k, l, u, p, g)?;
    let entry = |i: usize, j: usize| {
        let mut acc = t.a.scale(c[i][j][0][0]);
        acc = &acc + &t.b.scale(c[i][j][0][1]);
        acc = &acc + &t.c.scale(c[i][j][1][0]);
        &acc + &t.d.scale(c[i][j][1][1])
    };
    Ok(OperatorBlock { a: entry(0, 0), b: entry(0, 1), c: entry(1, 0), d: entry(1, 1) })
}

fn combine(c: &Mat2, t: &[[Vec<C64>; 2]; 2]) -> Vec<C64> {
    let dim = t[0][0].len();
    (0..dim).map(|i| c[0][0] * t[0][0][i] + c[0][1] * t[0][1][i] + c[1][0] * t[1][0][i] + c[1][1] * t[1][1][i]).collect()
}

/// Which gauge-transformed block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    A,
    B,
    C,
    D,
}

impl Block {
    fn ij(self) -> (usize, usize) {
        match self {
            Block::A => (0, 0),
            Block::B => (0, 1),
            Block::C => (1, 0),
            Block::D => (1, 1),
        }
    }
}

/// X_{k,l}(u)|v⟩ without materialising the operator.
pub fn gauge_apply(block: Block, k: i64, l: i64, u: C64, p: &ModelParams, g: &GaugeParams, v: &[C64]) -> Result<Vec<C64>, GaugeError> {
    let c = gauge_coefficients(k, l, u, p, g)?;
    let (i, j) = block.ij();
    Ok(combine(&c[i][j], &monodromy_apply(u, p, v)))
}

/// ⟨w|X_{k,l}(u) without materialising the operator.
pub fn gauge_apply_left(block: Block, k: i64, l: i64, u: C64, p: &ModelParams, g: &GaugeParams, w: &[C64]) -> Result<Vec<C64>, GaugeError> {
    let c = gauge_coefficients(k, l, u, p, g)?;
    let (i, j) = block.ij();
    Ok(combine(&c[i][j], &monodromy_apply_left(u, p, w)))
}

/// |Ω^l⟩ = ⊗_k (θ1(s_{k+l−1}+ξ_k|2τ), θ4(s_{k+l−1}+ξ_k|2τ))
pub fn vacuum(l: i64, p: &ModelParams, g: &GaugeParams) -> StateVector {
    let ctx = p.ctx();
    let parts: Vec<[C64; 2]> = (1..=p.n_sites())
        .map(|k| {
            let z = g.s_k(k as i64 + l - 1, p) + p.xi()[k - 1];
            [ctx.tt1(z), ctx.tt4(z)]
        })
        .collect();
    StateVector(kron_vec(&parts))
}

/// ⟨Ω̄^l| = ⊗_k (−θ4(t_{k+l}−ξ_k|2τ), θ1(t_{k+l}−ξ_k|2τ))
pub fn dual_vacuum(l: i64, p: &ModelParams, g: &GaugeParams) -> DualVector {
    let ctx = p.ctx();
    let parts: Vec<[C64; 2]> = (1..=p.n_sites())
        .map(|k| {
            let z = g.t_k(k as i64 + l, p) - p.xi()[k - 1];
            [-ctx.tt4(z), ctx.tt1(z)]
        })
        .collect();
    DualVector(kron_vec(&parts))
}

/// a(u) = Π θ1(u − ξ_k + η)
pub fn a_func(u: C64, p: &ModelParams) -> C64 {
    let e = p.eta().value();
    p.xi().iter().map(|&x| p.ctx().t1(u - x + e)).product()
}

/// d(u) = Π θ1(u − ξ_k)
pub fn d_func(u: C64, p: &ModelParams) -> C64 {
    p.xi().iter().map(|&x| p.ctx().t1(u - x)).product()
}

/// (a(u), a'(u))
pub fn a_with_derivative(u: C64, p: &ModelParams) -> (C64, C64) {
    let e = p.eta().value();
    prod_with_derivative(p, p.xi().iter().map(|&x| u - x + e))
}

/// (d(u), d'(u))
pub fn d_with_derivative(u: C64, p: &ModelParams) -> (C64, C64) {
    prod_with_derivative(p, p.xi().iter().map(|&x| u - x))
}

fn prod_with_derivative(p: &ModelParams, args: impl Iterator<Item = C64>) -> (C64, C64) {
    let ctx = p.ctx();
    args.fold((C64::new(1.0, 0.0), C64::new(0.0, 0.0)), |(f, df), z| {
        let (t, dt) = ctx.theta_with_prime(crate::theta::ThetaKind::One, z, crate::theta::PeriodScale::Single);
        (f * t, df * t + f * dt)
    })
}

/// Residuals of the six vacuum relations at gauge index l: C, A, D on |Ω^l⟩
/// then B, A, D on ⟨Ω̄^l|. Vanishing actions are measured against the
/// surviving ones on the same vacuum.
pub fn vacuum_actions(l: i64, u: C64, p: &ModelParams, g: &GaugeParams) -> Result<[f64; 6], GaugeError> {
    let n = p.n_sites() as i64;
    let (a, d) = (a_func(u, p), d_func(u, p));
    let om = vacuum(l, p, g).0;
    let ca = gauge_apply(Block::C, l, l + n, u, p, g, &om)?;
    let aa = gauge_apply(Block::A, l, l + n, u, p, g, &om)?;
    let da = gauge_apply(Block::D, l, l + n, u, p, g, &om)?;
    let up: Vec<C64> = vacuum(l + 1, p, g).0.iter().map(|z| a * z).collect();
    let dn: Vec<C64> = vacuum(l - 1, p, g).0.iter().map(|z| d * z).collect();
    let dual = dual_vacuum(l, p, g).0;
    let bl = gauge_apply_left(Block::B, l, l + n, u, p, g, &dual)?;
    let al = gauge_apply_left(Block::A, l, l + n, u, p, g, &dual)?;
    let dl = gauge_apply_left(Block::D, l, l + n, u, p, g, &dual)?;
    let ratio = g.gamma(l, p)? / g.gamma(l + n, p)?;
    let al_pred: Vec<C64> = dual_vacuum(l - 1, p, g).0.iter().map(|z| ratio * a * z).collect();
    let dl_pred: Vec<C64> = dual_vacuum(l + 1, p, g).0.iter().map(|z| d * z / ratio).collect();
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok([
        norm(&ca) / norm(&aa).max(norm(&da)).max(1e-300),
        rel_l2(&aa, &up),
        rel_l2(&da, &dn),
        norm(&bl) / norm(&al).max(norm(&dl)).max(1e-300),
        rel_l2(&al, &al_pred),
        rel_l2(&dl, &dl_pred),
    ])
}

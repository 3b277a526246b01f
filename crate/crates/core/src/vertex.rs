//! 8-vertex R-matrix, inhomogeneous monodromy, transfer matrix and the XYZ
//! Hamiltonian.
//!
//! Layout of the monodromy on `aux ⊗ H`: the auxiliary space is the most
//! significant factor, then sites 1..N. Blocks are `A = (0,0)`, `B = (0,1)`,
//! `C = (1,0)`, `D = (1,1)` in the auxiliary space.

use crate::linalg::{kron, pauli, CMatrix, DenseOperator, LinalgError, DEFAULT_DIM_CAP};
use crate::theta::{Eta, ModularContext, PeriodScale, ThetaError, ThetaKind};
use crate::C64;
use thiserror::Error;

pub const XI_DISTINCT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VertexError {
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("N must be even and at least 2, got {0}")]
    OddChain(usize),
    #[error("expected {expected} inhomogeneities, got {got}")]
    XiLength { expected: usize, got: usize },
    #[error("inhomogeneities {0} and {1} coincide")]
    XiCollision(usize, usize),
    #[error("the Hamiltonian cross-check needs the homogeneous chain")]
    NotHomogeneous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    n_sites: usize,
    eta: Eta,
    ctx: ModularContext,
    xi: Vec<C64>,
    dim_cap: usize,
}

impl ModelParams {
    pub fn new(n_sites: usize, eta: Eta, ctx: ModularContext, xi: Vec<C64>) -> Result<Self, VertexError> {
        Self::with_cap(n_sites, eta, ctx, xi, DEFAULT_DIM_CAP, XI_DISTINCT_TOL)
    }

    pub fn with_cap(n_sites: usize, eta: Eta, ctx: ModularContext, xi: Vec<C64>, dim_cap: usize, xi_tol: f64) -> Result<Self, VertexError> {
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return Err(VertexError::OddChain(n_sites));
        }
        if xi.len() != n_sites {
            return Err(VertexError::XiLength { expected: n_sites, got: xi.len() });
        }
        let dim = 1usize << n_sites;
        if dim > dim_cap {
            return Err(LinalgError::DimensionOverflow { dim, cap: dim_cap }.into());
        }
        let homogeneous = xi.iter().all(|x| x.norm() == 0.0);
        if !homogeneous {
            for i in 0..n_sites {
                for j in i + 1..n_sites {
                    if (xi[i] - xi[j]).norm() < xi_tol {
                        return Err(VertexError::XiCollision(i + 1, j + 1));
                    }
                }
            }
        }
        Ok(ModelParams { n_sites, eta, ctx, xi, dim_cap })
    }

    /// Same chain with all ξ_k = 0.
    pub fn homogeneous(&self) -> Self {
        ModelParams { xi: vec![C64::new(0.0, 0.0); self.n_sites], ..self.clone() }
    }

    pub fn with_xi(&self, xi: Vec<C64>) -> Result<Self, VertexError> {
        Self::new(self.n_sites, self.eta, self.ctx.clone(), xi)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn n(&self) -> usize {
        self.n_sites / 2
    }
    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }
    pub fn eta(&self) -> Eta {
        self.eta
    }
    pub fn ctx(&self) -> &ModularContext {
        &self.ctx
    }
    pub fn xi(&self) -> &[C64] {
        &self.xi
    }
    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }
}

/// The four Boltzmann weights and their u-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    pub u: C64,
    pub entries: [[C64; 4]; 4],
}

impl RMatrix {
    fn from_weights(u: C64, w: Weights) -> Self {
        let z = C64::new(0.0, 0.0);
        RMatrix { u, entries: [[w.a, z, z, w.d], [z, w.b, w.c, z], [z, w.c, w.b, z], [w.d, z, z, w.a]] }
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |i, j| self.entries[i][j])
    }
}

fn weights_with_derivative(p: &ModelParams, u: C64) -> (Weights, Weights) {
    let ctx = p.ctx();
    let e = p.eta().value();
    let d2 = PeriodScale::Double;
    let zero = C64::new(0.0, 0.0);
    let norm = C64::new(2.0, 0.0) / (ctx.theta(ThetaKind::Two, zero, PeriodScale::Single) * ctx.theta(ThetaKind::Four, zero, d2));
    let k4 = ctx.theta(ThetaKind::Four, e, d2) * norm;
    let k1 = ctx.theta(ThetaKind::One, e, d2) * norm;
    let (p1, dp1) = ctx.theta_with_prime(ThetaKind::One, u + e, d2);
    let (p4, dp4) = ctx.theta_with_prime(ThetaKind::Four, u + e, d2);
    let (q1, dq1) = ctx.theta_with_prime(ThetaKind::One, u, d2);
    let (q4, dq4) = ctx.theta_with_prime(ThetaKind::Four, u, d2);
    let w = Weights { a: k4 * p1 * q4, b: k4 * p4 * q1, c: k1 * p4 * q4, d: k1 * p1 * q1 };
    let dw = Weights { a: k4 * (dp1 * q4 + p1 * dq4), b: k4 * (dp4 * q1 + p4 * dq1), c: k1 * (dp4 * q4 + p4 * dq4), d: k1 * (dp1 * q1 + p1 * dq1) };
    (w, dw)
}

pub fn weights(p: &ModelParams, u: C64) -> Weights {
    weights_with_derivative(p, u).0
}

pub fn build_r(u: C64, p: &ModelParams) -> RMatrix {
    RMatrix::from_weights(u, weights(p, u))
}

pub fn build_r_derivative(u: C64, p: &ModelParams) -> RMatrix {
    RMatrix::from_weights(u, weights_with_derivative(p, u).1)
}

/// Bit masks of the auxiliary qubit and of site k (1-based) in `aux ⊗ H`.
fn masks(n_sites: usize, k: usize) -> (usize, usize) {
    (1 << n_sites, 1 << (n_sites - k))
}

/// `M ← M · R_{0k}` in place.
fn right_mul_embedded(m: &mut CMatrix, r: &[[C64; 4]; 4], n_sites: usize, k: usize) {
    let (am, sm) = masks(n_sites, k);
    let rows = m.rows();
    let cols = m.cols();
    for base in 0..cols {
        if base & am != 0 || base & sm != 0 {
            continue;
        }
        let idx = [base, base | sm, base | am, base | am | sm];
        for row in 0..rows {
            let old = idx.map(|c| m[(row, c)]);
            for (j, &c) in idx.iter().enumerate() {
                m[(row, c)] = (0..4).map(|i| old[i] * r[i][j]).sum();
            }
        }
    }
}

/// `v ← R_{0k} v`
fn apply_embedded(v: &mut [C64], r: &[[C64; 4]; 4], n_sites: usize, k: usize) {
    let (am, sm) = masks(n_sites, k);
    for base in 0..v.len() {
        if base & am != 0 || base & sm != 0 {
            continue;
        }
        let idx = [base, base | sm, base | am, base | am | sm];
        let old = idx.map(|c| v[c]);
        for (i, &c) in idx.iter().enumerate() {
            v[c] = (0..4).map(|j| r[i][j] * old[j]).sum();
        }
    }
}

/// `w ← w R_{0k}`
fn apply_embedded_left(w: &mut [C64], r: &[[C64; 4]; 4], n_sites: usize, k: usize) {
    let (am, sm) = masks(n_sites, k);
    for base in 0..w.len() {
        if base & am != 0 || base & sm != 0 {
            continue;
        }
        let idx = [base, base | sm, base | am, base | am | sm];
        let old = idx.map(|c| w[c]);
        for (j, &c) in idx.iter().enumerate() {
            w[c] = (0..4).map(|i| old[i] * r[i][j]).sum();
        }
    }
}

/// 2×2 block view of an operator on `aux ⊗ H`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBlock {
    pub a: DenseOperator,
    pub b: DenseOperator,
    pub c: DenseOperator,
    pub d: DenseOperator,
}

impl OperatorBlock {
    pub fn from_full(full: &CMatrix) -> Self {
        let dim = full.rows() / 2;
        let blk = |r0: usize, c0: usize| CMatrix::from_fn(dim, dim, |i, j| full[(r0 + i, c0 + j)]);
        OperatorBlock { a: blk(0, 0), b: blk(0, dim), c: blk(dim, 0), d: blk(dim, dim) }
    }

    pub fn to_full(&self) -> CMatrix {
        let dim = self.a.rows();
        CMatrix::from_fn(2 * dim, 2 * dim, |i, j| {
            let (bi, bj) = (i / dim, j / dim);
            let m = match (bi, bj) {
                (0, 0) => &self.a,
                (0, 1) => &self.b,
                (1, 0) => &self.c,
                _ => &self.d,
            };
            m[(i % dim, j % dim)]
        })
    }

    pub fn get(&self, a: usize, b: usize) -> &DenseOperator {
        match (a, b) {
            (0, 0) => &self.a,
            (0, 1) => &self.b,
            (1, 0) => &self.c,
            _ => &self.d,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }
}

/// 𝒯(u) = R_{01}(u−ξ_1)···R_{0N}(u−ξ_N) as a dense `2·2^N` matrix.
pub fn monodromy_full(u: C64, p: &ModelParams) -> CMatrix {
    let n = p.n_sites();
    let mut m = CMatrix::identity(2 * p.dim());
    for k in 1..=n {
        let r = build_r(u - p.xi()[k - 1], p);
        right_mul_embedded(&mut m, &r.entries, n, k);
    }
    m
}

/// 𝒯(u) and d𝒯/du by the product rule with analytic R'.
pub fn monodromy_with_derivative(u: C64, p: &ModelParams) -> (CMatrix, CMatrix) {
    let n = p.n_sites();
    let mut m = CMatrix::identity(2 * p.dim());
    let mut dm = CMatrix::zeros(2 * p.dim(), 2 * p.dim());
    for k in 1..=n {
        let (w, dw) = weights_with_derivative(p, u - p.xi()[k - 1]);
        let r = RMatrix::from_weights(u, w);
        let dr = RMatrix::from_weights(u, dw);
        right_mul_embedded(&mut dm, &r.entries, n, k);
        let mut tmp = m.clone();
        right_mul_embedded(&mut tmp, &dr.entries, n, k);
        dm = &dm + &tmp;
        right_mul_embedded(&mut m, &r.entries, n, k);
    }
    (m, dm)
}

pub fn build_monodromy(u: C64, p: &ModelParams) -> OperatorBlock {
    OperatorBlock::from_full(&monodromy_full(u, p))
}

/// 𝖳(u) = A(u) + D(u)
pub fn transfer(u: C64, p: &ModelParams) -> DenseOperator {
    let b = build_monodromy(u, p);
    &b.a + &b.d
}

/// Matrix-free action of the four monodromy blocks on a state:
/// returns `[[A v, B v], [C v, D v]]`.
pub fn monodromy_apply(u: C64, p: &ModelParams, v: &[C64]) -> [[Vec<C64>; 2]; 2] {
    let n = p.n_sites();
    let dim = p.dim();
    let rs: Vec<_> = (1..=n).map(|k| build_r(u - p.xi()[k - 1], p).entries).collect();
    let col = |b: usize| {
        let mut full = vec![C64::new(0.0, 0.0); 2 * dim];
        full[b * dim..(b + 1) * dim].copy_from_slice(v);
        for k in (1..=n).rev() {
            apply_embedded(&mut full, &rs[k - 1], n, k);
        }
        let bottom = full.split_off(dim);
        (full, bottom)
    };
    let (a, c) = col(0);
    let (b, d) = col(1);
    [[a, b], [c, d]]
}

/// Matrix-free action on a dual vector: returns `[[w A, w B], [w C, w D]]`.
pub fn monodromy_apply_left(u: C64, p: &ModelParams, w: &[C64]) -> [[Vec<C64>; 2]; 2] {
    let n = p.n_sites();
    let dim = p.dim();
    let rs: Vec<_> = (1..=n).map(|k| build_r(u - p.xi()[k - 1], p).entries).collect();
    let row = |a: usize| {
        let mut full = vec![C64::new(0.0, 0.0); 2 * dim];
        full[a * dim..(a + 1) * dim].copy_from_slice(w);
        for k in 1..=n {
            apply_embedded_left(&mut full, &rs[k - 1], n, k);
        }
        let right = full.split_off(dim);
        (full, right)
    };
    let (a, b) = row(0);
    let (c, d) = row(1);
    [[a, b], [c, d]]
}

/// `‖R12(u−v) 𝒯1(u) 𝒯2(v) − 𝒯2(v) 𝒯1(u) R12(u−v)‖_max`
pub fn rtt_residual(u: C64, v: C64, p: &ModelParams) -> f64 {
    let dim = p.dim();
    let tu = monodromy_full(u, p);
    let tv = monodromy_full(v, p);
    // basis of aux1 ⊗ aux2 ⊗ H as (a1, a2, s)
    let emb = |t: &CMatrix, first: bool| {
        CMatrix::from_fn(4 * dim, 4 * dim, |i, j| {
            let (a1, a2, s) = (i / (2 * dim), (i / dim) % 2, i % dim);
            let (b1, b2, sp) = (j / (2 * dim), (j / dim) % 2, j % dim);
            if first {
                if a2 != b2 {
                    return C64::new(0.0, 0.0);
                }
                t[(a1 * dim + s, b1 * dim + sp)]
            } else {
                if a1 != b1 {
                    return C64::new(0.0, 0.0);
                }
                t[(a2 * dim + s, b2 * dim + sp)]
            }
        })
    };
    let t1 = emb(&tu, true);
    let t2 = emb(&tv, false);
    let r = build_r(u - v, p).to_matrix().kron_pair(&CMatrix::identity(dim));
    let lhs = &(&r * &t1) * &t2;
    let rhs = &(&t2 * &t1) * &r;
    (&lhs - &rhs).max_abs()
}

/// H from the logarithmic derivative of the homogeneous transfer matrix at 0.
pub fn hamiltonian_log_derivative(p: &ModelParams) -> Result<DenseOperator, VertexError> {
    if p.xi().iter().any(|x| x.norm() != 0.0) {
        return Err(VertexError::NotHomogeneous);
    }
    let ctx = p.ctx();
    let e = p.eta().value();
    let zero = C64::new(0.0, 0.0);
    let (m, dm) = monodromy_with_derivative(zero, p);
    let tb = OperatorBlock::from_full(&m);
    let dtb = OperatorBlock::from_full(&dm);
    let t0 = &tb.a + &tb.d;
    let dt0 = &dtb.a + &dtb.d;
    let lu = t0.lu()?;
    let dim = p.dim();
    let mut logd = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        let col = lu.solve(&dt0.column(c));
        for (r, x) in col.into_iter().enumerate() {
            logd[(r, c)] = x;
        }
    }
    let p0 = ctx.t1_prime0();
    let pre = ctx.t1(e) * 2.0 / p0;
    let shift = ctx.t1_prime(e) / p0 * p.n_sites() as f64;
    Ok(&logd.scale(pre) - &CMatrix::identity(dim).scale(shift))
}

/// (J_x, J_y, J_z)
pub fn couplings(p: &ModelParams) -> (C64, C64, C64) {
    let ctx = p.ctx();
    let e = p.eta().value();
    let zero = C64::new(0.0, 0.0);
    (ctx.t4(e) / ctx.t4(zero), ctx.t3(e) / ctx.t3(zero), ctx.t2(e) / ctx.t2(zero))
}

/// Σ_j (J_x σˣσˣ + J_y σʸσʸ + J_z σᶻσᶻ), periodic.
pub fn hamiltonian_direct(p: &ModelParams) -> Result<DenseOperator, VertexError> {
    let n = p.n_sites();
    let (jx, jy, jz) = couplings(p);
    let dim = p.dim();
    let mut h = CMatrix::zeros(dim, dim);
    let bond = |op: CMatrix, j: usize| -> Result<CMatrix, LinalgError> {
        let ops: Vec<CMatrix> = (0..n).map(|k| if k == j || k == (j + 1) % n { op.clone() } else { pauli::identity() }).collect();
        kron(&ops, p.dim_cap())
    };
    for j in 0..n {
        h = &h + &bond(pauli::x(), j)?.scale(jx);
        h = &h + &bond(pauli::y(), j)?.scale(jy);
        h = &h + &bond(pauli::z(), j)?.scale(jz);
    }
    Ok(h)
}

//! Dense complex linear algebra on the 2^N quantum space.
//!
//! Site 1 is the most significant tensor factor. Pairings between a dual
//! vector and a state are bilinear: nothing is ever conjugated.

use crate::C64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use thiserror::Error;

pub const DEFAULT_DIM_CAP: usize = 1 << 10;
const PIVOT_REL_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("singular matrix (pivot {pivot:e} at step {step}, scale {scale:e})")]
    SingularMatrix { step: usize, pivot: f64, scale: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty operand")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

pub type DenseOperator = CMatrix;

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch { left: self.cols, right: other.rows });
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch { left: self.cols, right: v.len() });
        }
        Ok((0..self.rows).map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// Row vector times matrix.
    pub fn vecmat(&self, v: &[C64]) -> Result<Vec<C64>, LinalgError> {
        if self.rows != v.len() {
            return Err(LinalgError::DimensionMismatch { left: self.rows, right: v.len() });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for (r, &w) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += w * a;
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    pub fn kron_pair(&self, other: &CMatrix) -> CMatrix {
        let (r2, c2) = (other.rows, other.cols);
        CMatrix::from_fn(self.rows * r2, self.cols * c2, |i, j| self[(i / r2, j / c2)] * other[(i % r2, j % c2)])
    }

    pub fn lu(&self) -> Result<Lu, LinalgError> {
        Lu::factor(self)
    }

    pub fn det(&self) -> Result<C64, LinalgError> {
        match Lu::factor(self) {
            Ok(lu) => Ok(lu.det()),
            Err(LinalgError::SingularMatrix { .. }) => Ok(C64::new(0.0, 0.0)),
            Err(e) => Err(e),
        }
    }

    pub fn inv(&self) -> Result<CMatrix, LinalgError> {
        Ok(Lu::factor(self)?.inverse())
    }

    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>, LinalgError> {
        let lu = Lu::factor(self)?;
        if rhs.len() != self.rows {
            return Err(LinalgError::DimensionMismatch { left: self.rows, right: rhs.len() });
        }
        Ok(lu.solve(rhs))
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)]);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, o: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, o: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, o: &CMatrix) -> CMatrix {
        self.matmul(o).expect("matmul shape")
    }
}

/// LU with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Lu, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare { rows: a.rows, cols: a.cols });
        }
        let n = a.rows;
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        let scale = a.max_abs();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n).map(|i| (i, lu[i * n + k].norm())).fold((k, -1.0), |best, x| if x.1 > best.1 { x } else { best });
            if pmax <= PIVOT_REL_TOL * scale || pmax == 0.0 {
                return Err(LinalgError::SingularMatrix { step: k, pivot: pmax, scale });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] / piv;
                lu[i * n + k] = l;
                if l != C64::new(0.0, 0.0) {
                    for j in k + 1..n {
                        let ukj = lu[k * n + j];
                        lu[i * n + j] -= l * ukj;
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm, sign })
    }

    pub fn det(&self) -> C64 {
        (0..self.n).map(|i| self.lu[i * self.n + i]).product::<C64>() * self.sign
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                x[i] = x[i] - u * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    pub fn inverse(&self) -> CMatrix {
        let n = self.n;
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            e[c] = C64::new(1.0, 0.0);
            let col = self.solve(&e);
            for (r, v) in col.into_iter().enumerate() {
                inv[(r, c)] = v;
            }
        }
        inv
    }
}

/// Kronecker product in the given order, leftmost factor most significant.
pub fn kron(ops: &[CMatrix], dim_cap: usize) -> Result<CMatrix, LinalgError> {
    let first = ops.first().ok_or(LinalgError::Empty)?;
    let dim: usize = ops.iter().map(CMatrix::rows).product();
    if dim > dim_cap {
        return Err(LinalgError::DimensionOverflow { dim, cap: dim_cap });
    }
    Ok(ops[1..].iter().fold(first.clone(), |acc, m| acc.kron_pair(m)))
}

/// Tensor product of local vectors.
pub fn kron_vec(parts: &[[C64; 2]]) -> Vec<C64> {
    parts.iter().fold(vec![C64::new(1.0, 0.0)], |acc, p| acc.iter().flat_map(|a| [a * p[0], a * p[1]]).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<C64>);

#[derive(Debug, Clone, PartialEq)]
pub struct DualVector(pub Vec<C64>);

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

impl StateVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }
    pub fn apply(&self, op: &CMatrix) -> Result<StateVector, LinalgError> {
        op.matvec(&self.0).map(StateVector)
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

impl DualVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }
    /// `⟨w| Op`
    pub fn apply(&self, op: &CMatrix) -> Result<DualVector, LinalgError> {
        op.vecmat(&self.0).map(DualVector)
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

/// Bilinear pairing `Σ_i w_i ψ_i`, no conjugation.
pub fn pair(dual: &DualVector, state: &StateVector) -> Result<C64, LinalgError> {
    if dual.dim() != state.dim() {
        return Err(LinalgError::DimensionMismatch { left: dual.dim(), right: state.dim() });
    }
    Ok(dual.0.iter().zip(&state.0).map(|(a, b)| a * b).sum())
}

/// Max-norm of `a - b`, relative to the larger of the two max-norms (floored at 1e-300).
pub fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let s = a.iter().chain(b).map(|x| x.norm()).fold(0.0, f64::max);
    d / s.max(1e-300)
}

/// Euclidean distance of `a - b` over the Euclidean norm of `b`.
pub fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    d / norm2(b).max(1e-300)
}

/// σ^z ⊗ … ⊗ σ^z is diagonal: (-1)^{popcount}.
pub fn u3_sign(index: usize) -> f64 {
    if index.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub mod pauli {
    use super::CMatrix;
    use crate::C64;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2)
    }
    pub fn x() -> CMatrix {
        CMatrix::from_rows(&[vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]])
    }
    pub fn y() -> CMatrix {
        CMatrix::from_rows(&[vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)], vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)]])
    }
    pub fn z() -> CMatrix {
        CMatrix::diag(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)])
    }
}

//! Jacobi theta functions with argument reduction and certified truncation.
//!
//! Conventions: `q = exp(iπτ)`,
//! `θ1(u) = -i Σ (-1)^k q^{(k+1/2)^2} e^{iπ(2k+1)u}` and the usual θ2, θ3, θ4.
//! Every evaluation first moves `u` into the cell `0 ≤ Re u < 1`,
//! `|Im u| ≤ Im τ / 2` and reapplies the quasi-periodicity factor.

use crate::C64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("invalid modulus: Im(tau) = {im} is below the floor {floor}")]
    InvalidModulus { im: f64, floor: f64 },
    #[error("truncation would need {needed} terms, cap is {cap}")]
    TruncationOverflow { needed: usize, cap: usize },
    #[error("theta kind must be 1..=4, got {0}")]
    InvalidKind(u8),
    #[error("period scale must be 1 or 2, got {0}")]
    InvalidScale(u8),
    #[error("non-finite argument {0}")]
    NonFinite(C64),
    #[error("pole collision: |theta1({0})| below tolerance")]
    PoleCollision(C64),
    #[error("gauge singularity: |theta1(x_l)| below tolerance at l = {0}")]
    GaugeSingularity(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaKind {
    One,
    Two,
    Three,
    Four,
}

impl TryFrom<u8> for ThetaKind {
    type Error = ThetaError;
    fn try_from(k: u8) -> Result<Self, ThetaError> {
        match k {
            1 => Ok(ThetaKind::One),
            2 => Ok(ThetaKind::Two),
            3 => Ok(ThetaKind::Three),
            4 => Ok(ThetaKind::Four),
            _ => Err(ThetaError::InvalidKind(k)),
        }
    }
}

/// θ(·|τ) or θ(·|2τ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PeriodScale {
    Single,
    Double,
}

impl PeriodScale {
    fn factor(self) -> f64 {
        match self {
            PeriodScale::Single => 1.0,
            PeriodScale::Double => 2.0,
        }
    }
}

impl TryFrom<u8> for PeriodScale {
    type Error = ThetaError;
    fn try_from(k: u8) -> Result<Self, ThetaError> {
        match k {
            1 => Ok(PeriodScale::Single),
            2 => Ok(PeriodScale::Double),
            _ => Err(ThetaError::InvalidScale(k)),
        }
    }
}

/// Anisotropy η. Rational values keep their Fourier phases exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta {
    Rational { num: i64, den: i64 },
    Complex(C64),
}

impl Eta {
    pub const HALF: Eta = Eta::Rational { num: 1, den: 2 };

    pub fn value(self) -> C64 {
        match self {
            Eta::Rational { num, den } => C64::new(num as f64 / den as f64, 0.0),
            Eta::Complex(c) => c,
        }
    }

    pub fn is_half(self) -> bool {
        matches!(self, Eta::Rational { num, den } if 2 * num == den)
    }

    /// `exp(iπην)`, exact when πην is a multiple of π/2.
    pub fn phase(self, nu: i64) -> C64 {
        match self {
            Eta::Rational { num, den } => {
                let period = 2 * den;
                let r = (num * nu).rem_euclid(period);
                if (2 * r) % den == 0 {
                    quarter_turn(2 * r / den)
                } else {
                    let a = PI * r as f64 / den as f64;
                    C64::new(a.cos(), a.sin())
                }
            }
            Eta::Complex(c) => (C64::i() * PI * c * nu as f64).exp(),
        }
    }
}

/// `i^k` without rounding.
pub fn quarter_turn(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Lattice reduction record: `u = reduced + m + n·τ'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticPoint {
    pub u: C64,
    pub half_period_shifts: (i64, i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModularContext {
    tau: C64,
    q: C64,
    eps_target: f64,
    k_max_cap: usize,
    im_floor: f64,
}

pub const DEFAULT_EPS: f64 = 1e-14;
pub const DEFAULT_K_CAP: usize = 64;
pub const DEFAULT_IM_FLOOR: f64 = 0.05;
pub const COLLISION_TOL: f64 = 1e-9;

impl ModularContext {
    pub fn new(tau: C64) -> Result<Self, ThetaError> {
        Self::with_policy(tau, DEFAULT_EPS, DEFAULT_K_CAP, DEFAULT_IM_FLOOR)
    }

    pub fn with_policy(tau: C64, eps_target: f64, k_max_cap: usize, im_floor: f64) -> Result<Self, ThetaError> {
        if !(tau.re.is_finite() && tau.im.is_finite()) {
            return Err(ThetaError::NonFinite(tau));
        }
        if tau.im < im_floor {
            return Err(ThetaError::InvalidModulus { im: tau.im, floor: im_floor });
        }
        let ctx = ModularContext { tau, q: (C64::i() * PI * tau).exp(), eps_target, k_max_cap, im_floor };
        // worst case after reduction is |Im u| = Im τ/2 with the derivative weight
        let needed = ctx.terms_needed(tau.im, tau.im / 2.0, true);
        if needed > k_max_cap {
            return Err(ThetaError::TruncationOverflow { needed, cap: k_max_cap });
        }
        Ok(ctx)
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn q(&self) -> C64 {
        self.q
    }

    pub fn eps_target(&self) -> f64 {
        self.eps_target
    }

    pub fn k_max_cap(&self) -> usize {
        self.k_max_cap
    }

    pub fn im_floor(&self) -> f64 {
        self.im_floor
    }

    fn scaled_tau(&self, scale: PeriodScale) -> C64 {
        self.tau * scale.factor()
    }

    /// Smallest K with the tail beyond K below eps (half-integer indices
    /// cover the integer ones too).
    fn terms_needed(&self, im_tau: f64, im_u: f64, deriv: bool) -> usize {
        let y = im_u.abs();
        let log_eps = self.eps_target.ln() - 2.0;
        for k in 0..=self.k_max_cap + 1 {
            let j = k as f64 + 1.5;
            let mut log_term = -PI * im_tau * j * j + 2.0 * PI * j * y;
            if deriv {
                log_term += (2.0 * PI * j).ln();
            }
            let log_ratio = -PI * im_tau * (2.0 * j + 1.0) + 2.0 * PI * y;
            if log_term < log_eps && log_ratio < -0.5 {
                return k + 1;
            }
        }
        self.k_max_cap + 1
    }

    pub fn reduce(&self, u: C64, scale: PeriodScale) -> EllipticPoint {
        let tp = self.scaled_tau(scale);
        let n = (u.im / tp.im).round();
        let w = u - tp * n;
        let m = w.re.floor();
        EllipticPoint { u: w - m, half_period_shifts: (m as i64, n as i64) }
    }

    /// Value and derivative of θ_kind on the reduced cell.
    fn series(&self, kind: ThetaKind, u: C64, tp: C64, deriv: bool) -> (C64, C64) {
        let k_max = self.terms_needed(tp.im, u.im, deriv).min(self.k_max_cap);
        let ipt = C64::i() * PI * tp;
        let mut val = C64::new(0.0, 0.0);
        let mut der = C64::new(0.0, 0.0);
        match kind {
            ThetaKind::One | ThetaKind::Two => {
                for k in 0..=k_max {
                    let j = k as f64 + 0.5;
                    let w = (ipt * (j * j)).exp();
                    let freq = PI * (2.0 * j);
                    let arg = u * freq;
                    let sgn = if kind == ThetaKind::One && k % 2 == 1 { -1.0 } else { 1.0 };
                    if kind == ThetaKind::One {
                        val += w * arg.sin() * sgn;
                        if deriv {
                            der += w * arg.cos() * (sgn * freq);
                        }
                    } else {
                        val += w * arg.cos();
                        if deriv {
                            der -= w * arg.sin() * freq;
                        }
                    }
                }
                (val * 2.0, der * 2.0)
            }
            ThetaKind::Three | ThetaKind::Four => {
                for k in 1..=k_max + 1 {
                    let kf = k as f64;
                    let w = (ipt * (kf * kf)).exp();
                    let freq = 2.0 * PI * kf;
                    let arg = u * freq;
                    let sgn = if kind == ThetaKind::Four && k % 2 == 1 { -1.0 } else { 1.0 };
                    val += w * arg.cos() * sgn;
                    if deriv {
                        der -= w * arg.sin() * (sgn * freq);
                    }
                }
                (val * 2.0 + 1.0, der * 2.0)
            }
        }
    }

    fn eval_both(&self, kind: ThetaKind, u: C64, scale: PeriodScale, deriv: bool) -> (C64, C64) {
        let tp = self.scaled_tau(scale);
        let p = self.reduce(u, scale);
        let (m, n) = p.half_period_shifts;
        let (v0, d0) = self.series(kind, p.u, tp, deriv);
        // θ(u0 + m + nτ') = s_m s_n^n exp(-iπ(2n u0 + n²τ')) θ(u0)
        let odd_m = m.rem_euclid(2) == 1;
        let odd_n = n.rem_euclid(2) == 1;
        let sign = match kind {
            ThetaKind::One => (odd_m as u8 + odd_n as u8) % 2,
            ThetaKind::Two => odd_m as u8,
            ThetaKind::Three => 0,
            ThetaKind::Four => odd_n as u8,
        };
        let nf = n as f64;
        let pref = (-C64::i() * PI * (p.u * (2.0 * nf) + tp * (nf * nf))).exp();
        let pref = if sign == 1 { -pref } else { pref };
        let val = pref * v0;
        let der = if deriv { pref * (d0 - C64::i() * (2.0 * PI * nf) * v0) } else { C64::new(0.0, 0.0) };
        (val, der)
    }

    pub fn eval_theta(&self, kind: u8, u: C64, scale: u8) -> Result<C64, ThetaError> {
        let kind = ThetaKind::try_from(kind)?;
        let scale = PeriodScale::try_from(scale)?;
        if !(u.re.is_finite() && u.im.is_finite()) {
            return Err(ThetaError::NonFinite(u));
        }
        Ok(self.theta(kind, u, scale))
    }

    pub fn eval_theta_derivative(&self, kind: u8, u: C64, scale: u8) -> Result<C64, ThetaError> {
        let kind = ThetaKind::try_from(kind)?;
        let scale = PeriodScale::try_from(scale)?;
        if !(u.re.is_finite() && u.im.is_finite()) {
            return Err(ThetaError::NonFinite(u));
        }
        Ok(self.theta_prime(kind, u, scale))
    }

    pub fn eval_theta1_derivative(&self, u: C64, scale: u8) -> Result<C64, ThetaError> {
        self.eval_theta_derivative(1, u, scale)
    }

    pub fn theta(&self, kind: ThetaKind, u: C64, scale: PeriodScale) -> C64 {
        self.eval_both(kind, u, scale, false).0
    }

    pub fn theta_prime(&self, kind: ThetaKind, u: C64, scale: PeriodScale) -> C64 {
        self.eval_both(kind, u, scale, true).1
    }

    pub fn theta_with_prime(&self, kind: ThetaKind, u: C64, scale: PeriodScale) -> (C64, C64) {
        self.eval_both(kind, u, scale, true)
    }

    pub fn t1(&self, u: C64) -> C64 {
        self.theta(ThetaKind::One, u, PeriodScale::Single)
    }
    pub fn t2(&self, u: C64) -> C64 {
        self.theta(ThetaKind::Two, u, PeriodScale::Single)
    }
    pub fn t3(&self, u: C64) -> C64 {
        self.theta(ThetaKind::Three, u, PeriodScale::Single)
    }
    pub fn t4(&self, u: C64) -> C64 {
        self.theta(ThetaKind::Four, u, PeriodScale::Single)
    }
    /// θ1(u|2τ)
    pub fn tt1(&self, u: C64) -> C64 {
        self.theta(ThetaKind::One, u, PeriodScale::Double)
    }
    /// θ4(u|2τ)
    pub fn tt4(&self, u: C64) -> C64 {
        self.theta(ThetaKind::Four, u, PeriodScale::Double)
    }
    pub fn t1_prime(&self, u: C64) -> C64 {
        self.theta_prime(ThetaKind::One, u, PeriodScale::Single)
    }
    pub fn t1_prime0(&self) -> C64 {
        self.t1_prime(C64::new(0.0, 0.0))
    }
    pub fn tt1_prime0(&self) -> C64 {
        self.theta_prime(ThetaKind::One, C64::new(0.0, 0.0), PeriodScale::Double)
    }

    /// Distance from `d` to the lattice `P·Z + τ·Z`.
    pub fn lattice_distance(&self, d: C64, real_period: f64) -> f64 {
        let tau = self.tau;
        let d1 = d - tau * (d.im / tau.im).round();
        let d2 = d1 - real_period * (d1.re / real_period).round();
        let mut best = f64::INFINITY;
        for dm in -1..=1 {
            for dn in -1..=1 {
                best = best.min((d2 + real_period * dm as f64 + tau * dn as f64).norm());
            }
        }
        best
    }

    /// f(u,v) = θ1(u−v+η)/θ1(u−v)
    pub fn f_func(&self, eta: Eta, u: C64, v: C64) -> Result<C64, ThetaError> {
        let den = self.t1(u - v);
        if den.norm() < COLLISION_TOL {
            return Err(ThetaError::PoleCollision(u - v));
        }
        Ok(self.t1(u - v + eta.value()) / den)
    }

    /// h(u,v) = θ1(u−v+η)/θ1(η)
    pub fn h_func(&self, eta: Eta, u: C64, v: C64) -> C64 {
        let e = eta.value();
        self.t1(u - v + e) / self.t1(e)
    }

    /// Π_{v∈set} f(z, v); empty set gives 1.
    pub fn f_set(&self, eta: Eta, z: C64, set: &[C64]) -> Result<C64, ThetaError> {
        set.iter().try_fold(C64::new(1.0, 0.0), |acc, &v| Ok(acc * self.f_func(eta, z, v)?))
    }

    /// Π_{u∈set} f(u, z)
    pub fn f_set_left(&self, eta: Eta, set: &[C64], z: C64) -> Result<C64, ThetaError> {
        set.iter().try_fold(C64::new(1.0, 0.0), |acc, &u| Ok(acc * self.f_func(eta, u, z)?))
    }
}

/// `Σ_l e^{-iπημl} c_l` at η = 1/2.
pub fn fourier_hat(coeffs: &[C64; 4], mu: i64) -> C64 {
    coeffs.iter().enumerate().map(|(l, c)| quarter_turn(-mu * l as i64) * c).sum()
}

/// α_l(z) = θ1(z+x_l)/θ1(x_l), x_l = x + l/2.
pub fn alpha(ctx: &ModularContext, l: i64, z: C64, x: C64) -> Result<C64, ThetaError> {
    let xl = x + 0.5 * l as f64;
    let den = ctx.t1(xl);
    if den.norm() < COLLISION_TOL {
        return Err(ThetaError::GaugeSingularity(l));
    }
    Ok(ctx.t1(z + xl) / den)
}

/// θ2(z+x_l)/θ1(x_l): the variant that enters the odd-imbalance system.
pub fn alpha_odd(ctx: &ModularContext, l: i64, z: C64, x: C64) -> Result<C64, ThetaError> {
    let xl = x + 0.5 * l as f64;
    let den = ctx.t1(xl);
    if den.norm() < COLLISION_TOL {
        return Err(ThetaError::GaugeSingularity(l));
    }
    Ok(ctx.t2(z + xl) / den)
}

pub fn alpha_hat(ctx: &ModularContext, mu: i64, z: C64, x: C64) -> Result<C64, ThetaError> {
    let c = [alpha(ctx, 0, z, x)?, alpha(ctx, 1, z, x)?, alpha(ctx, 2, z, x)?, alpha(ctx, 3, z, x)?];
    Ok(fourier_hat(&c, mu))
}

pub fn alpha_odd_hat(ctx: &ModularContext, mu: i64, z: C64, x: C64) -> Result<C64, ThetaError> {
    let c = [alpha_odd(ctx, 0, z, x)?, alpha_odd(ctx, 1, z, x)?, alpha_odd(ctx, 2, z, x)?, alpha_odd(ctx, 3, z, x)?];
    Ok(fourier_hat(&c, mu))
}

/// β⁺_l(z) = θ2(z + s_l)
pub fn beta_plus(ctx: &ModularContext, l: i64, z: C64, s: C64) -> C64 {
    ctx.t2(z + s + 0.5 * l as f64)
}

/// β⁻_l(z; u, v) = θ2(z − t_l) θ2(z − u + x_l) θ2(z − v + x_l)
pub fn beta_minus(ctx: &ModularContext, l: i64, z: C64, u: C64, v: C64, t: C64, x: C64) -> C64 {
    let h = 0.5 * l as f64;
    ctx.t2(z - t - h) * ctx.t2(z - u + x + h) * ctx.t2(z - v + x + h)
}

pub fn beta_plus_hat(ctx: &ModularContext, mu: i64, z: C64, s: C64) -> C64 {
    let c = [0, 1, 2, 3].map(|l| beta_plus(ctx, l, z, s));
    fourier_hat(&c, mu)
}

pub fn beta_minus_hat(ctx: &ModularContext, mu: i64, z: C64, u: C64, v: C64, t: C64, x: C64) -> C64 {
    let c = [0, 1, 2, 3].map(|l| beta_minus(ctx, l, z, u, v, t, x));
    fourier_hat(&c, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn theta1_zero() {
        let ctx = ModularContext::new(c(0.0, 0.5)).unwrap();
        assert!(ctx.eval_theta(1, c(0.0, 0.0), 1).unwrap().norm() < 1e-14);
    }

    #[test]
    fn phase_exact() {
        assert_eq!(Eta::HALF.phase(1), c(0.0, 1.0));
        assert_eq!(Eta::HALF.phase(-3), c(0.0, 1.0));
        assert_eq!(Eta::HALF.phase(6), c(-1.0, 0.0));
    }

    #[test]
    fn reduction_lands_in_cell() {
        let ctx = ModularContext::new(c(0.22, 0.6)).unwrap();
        let p = ctx.reduce(c(-3.7, 2.9), PeriodScale::Single);
        assert!(p.u.re >= 0.0 && p.u.re < 1.0);
        assert!(p.u.im.abs() <= 0.3 + 1e-15);
    }

    #[test]
    fn low_modulus_rejected() {
        assert!(matches!(ModularContext::new(c(0.0, 0.01)), Err(ThetaError::InvalidModulus { .. })));
    }

    #[test]
    fn bad_kind() {
        let ctx = ModularContext::new(c(0.0, 0.5)).unwrap();
        assert_eq!(ctx.eval_theta(5, c(0.1, 0.0), 1), Err(ThetaError::InvalidKind(5)));
    }

    #[test]
    fn f_pole() {
        let ctx = ModularContext::new(c(0.0, 0.5)).unwrap();
        assert!(matches!(ctx.f_func(Eta::HALF, c(0.2, 0.0), c(0.2, 0.0)), Err(ThetaError::PoleCollision(_))));
    }
}

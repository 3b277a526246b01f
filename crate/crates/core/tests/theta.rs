mod common;

use common::c;
use ffaba::theta::{ModularContext, ThetaError};
use ffaba::C64;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Plain q-series with a fixed number of terms, no argument reduction.
fn series(kind: u8, u: C64, tau: C64) -> C64 {
    let q = |e: f64| (C64::i() * PI * tau * e).exp();
    let mut s = C64::new(0.0, 0.0);
    match kind {
        1 | 2 => {
            for k in 0..200 {
                let kf = k as f64;
                let w = q((kf + 0.5) * (kf + 0.5));
                let arg = (2.0 * kf + 1.0) * PI * u;
                s += if kind == 1 { w * (if k % 2 == 0 { 1.0 } else { -1.0 }) * arg.sin() } else { w * arg.cos() };
            }
            2.0 * s
        }
        _ => {
            for k in 1..200 {
                let kf = k as f64;
                let sign = if kind == 4 && k % 2 == 1 { -1.0 } else { 1.0 };
                s += sign * q(kf * kf) * (2.0 * kf * PI * u).cos();
            }
            1.0 + 2.0 * s
        }
    }
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_plain_series(kind in 1u8..=4, scale in 1u8..=2, ur in -1.0f64..1.0, ui in -0.3f64..0.3, tr in -0.5f64..0.5, ti in 0.5f64..1.5) {
        let tau = c(tr, ti);
        let ctx = ModularContext::new(tau).unwrap();
        let u = c(ur, ui);
        let got = ctx.eval_theta(kind, u, scale).unwrap();
        let want = series(kind, u, tau * scale as f64);
        prop_assert!(close(got, want, 1e-12), "kind {kind} scale {scale}: {got} vs {want}");
    }

    #[test]
    fn derivative_matches_finite_difference(kind in 1u8..=4, ur in -1.0f64..1.0, ui in -0.3f64..0.3, ti in 0.5f64..1.5) {
        let ctx = ModularContext::new(c(0.1, ti)).unwrap();
        let u = c(ur, ui);
        let h = 1e-3;
        let f = |d: f64| ctx.eval_theta(kind, u + d, 1).unwrap();
        let fd = (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h);
        let got = ctx.eval_theta_derivative(kind, u, 1).unwrap();
        prop_assert!(close(got, fd, 1e-8), "{got} vs {fd}");
    }

    #[test]
    fn quasi_periodicity(ur in -1.0f64..1.0, ui in -0.3f64..0.3, ti in 0.5f64..1.5) {
        let tau = c(0.2, ti);
        let ctx = ModularContext::new(tau).unwrap();
        let u = c(ur, ui);
        let e = (-C64::i() * PI * (2.0 * u + tau)).exp();
        prop_assert!(close(ctx.t1(u + tau), -e * ctx.t1(u), 1e-11));
        prop_assert!(close(ctx.t4(u + tau), -e * ctx.t4(u), 1e-11));
        prop_assert!(close(ctx.t3(u + 0.5), ctx.t4(u), 1e-11));
    }
}

#[test]
fn jacobi_constants() {
    for tau in [c(0.0, 0.5), c(0.1, 0.9), c(-0.3, 1.3)] {
        let ctx = ModularContext::new(tau).unwrap();
        let z = c(0.0, 0.0);
        let (t2, t3, t4) = (ctx.t2(z), ctx.t3(z), ctx.t4(z));
        assert!(close(t2.powi(4) + t4.powi(4), t3.powi(4), 1e-12));
        assert!(close(ctx.t1_prime0(), PI * t2 * t3 * t4, 1e-12));
    }
}

#[test]
fn shift_example() {
    let ctx = ModularContext::new(c(0.0, 0.5)).unwrap();
    assert_eq!(ctx.eval_theta(1, c(0.0, 0.0), 1).unwrap().norm(), 0.0);
    let a = ctx.eval_theta(1, c(0.25, 0.0), 1).unwrap();
    let b = ctx.eval_theta(2, c(-0.25, 0.0), 1).unwrap();
    assert!((a - b).norm() < 1e-15, "{a} {b}");
}

#[test]
fn bad_inputs() {
    let ctx = ModularContext::new(c(0.0, 0.5)).unwrap();
    assert!(matches!(ctx.eval_theta(5, c(0.1, 0.0), 1), Err(ThetaError::InvalidKind(5))));
    assert!(matches!(ctx.eval_theta(1, c(0.1, 0.0), 3), Err(ThetaError::InvalidScale(3))));
    assert!(matches!(ctx.eval_theta(1, c(f64::NAN, 0.0), 1), Err(ThetaError::NonFinite(_))));
    assert!(ModularContext::new(c(0.0, -0.5)).is_err());
    assert!(ModularContext::new(c(0.0, 0.0)).is_err());
}

#[test]
fn far_arguments_are_reduced() {
    let tau = c(0.1, 0.9);
    let ctx = ModularContext::new(tau).unwrap();
    let u = c(0.3, 0.1);
    // θ1(u + 3 + 2τ) = −e^{−4πi(u + τ)}·θ1(u) after three real and two τ shifts
    let far = u + 3.0 + 2.0 * tau;
    let factor = -(-4.0 * C64::i() * PI * (u + tau)).exp();
    assert!(close(ctx.t1(far), factor * ctx.t1(u), 1e-10));
}

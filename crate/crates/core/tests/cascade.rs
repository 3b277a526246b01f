mod common;

use common::{model, rel, scenario};
use ffaba::cascade::{
    cauchy_inverse, cauchy_matrix, contour_sum_cal_a, degenerate_trace, direct_expression, homogeneous_residual, inhomogeneous_residual, kappa2_inverses,
    om_product_identity, product_rank, rank_one_trace, trace_assembled, trace_closed, uj_independence, zero_eigenvectors, CascadeError, Population,
};
use ffaba::gauge::GaugeIndexWindow;
use ffaba::linalg::CMatrix;
use ffaba::sampling::{Exclusion, Sampler};
use ffaba::vertex::ModelParams;
use ffaba::C64;

struct Setup {
    p: ModelParams,
    s: Sampler,
    x: C64,
}

impl Setup {
    fn new(n_sites: usize, seed: u64) -> Self {
        let (p, mut s) = model(n_sites, seed);
        let x = s.gauge(&p, GaugeIndexWindow::for_bethe(p.n() + 2)).unwrap().x();
        Setup { p, s, x }
    }

    fn points(&mut self, count: usize) -> Vec<C64> {
        self.s.params(count, &Exclusion::new(vec![]), self.p.ctx()).unwrap()
    }

    fn split(&mut self, a: usize, b: usize) -> (Vec<C64>, Vec<C64>) {
        let all = self.points(a + b);
        (all[..a].to_vec(), all[a..].to_vec())
    }
}

fn max_rel(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).max_abs() / a.max_abs().max(b.max_abs())
}

#[test]
fn cauchy_inverse_single_entry() {
    let mut st = Setup::new(4, 1);
    let ctx = st.p.ctx().clone();
    let (xs, ys) = st.split(1, 1);
    let lam = C64::new(0.21, 0.05);
    let inv = cauchy_inverse(&ctx, &xs, &ys, lam).unwrap();
    let d = xs[0] - ys[0];
    assert!(rel(inv[(0, 0)], ctx.t1(d) / ctx.t1(d + lam)) < 1e-12);
}

#[test]
fn cauchy_inverse_against_lu() {
    let mut st = Setup::new(4, 2);
    let ctx = st.p.ctx().clone();
    for size in [2, 3, 4] {
        for _ in 0..5 {
            let (xs, ys) = st.split(size, size);
            let lam = st.s.complex_box((-0.4, 0.4), (-0.2, 0.2));
            let m = cauchy_matrix(&ctx, &xs, &ys, lam).unwrap();
            let closed = cauchy_inverse(&ctx, &xs, &ys, lam).unwrap();
            assert!(max_rel(&closed, &m.inv().unwrap()) < 1e-9, "size {size}");
        }
    }
}

#[test]
fn cauchy_size_mismatch() {
    let mut st = Setup::new(4, 3);
    let ctx = st.p.ctx().clone();
    let (xs, ys) = st.split(2, 3);
    assert!(matches!(cauchy_inverse(&ctx, &xs, &ys, C64::new(0.2, 0.0)), Err(CascadeError::Cardinality { .. })));
}

#[test]
fn square_part_inverses_against_lu() {
    for n_sites in [4, 6] {
        let mut st = Setup::new(n_sites, 4);
        let n = st.p.n();
        for _ in 0..5 {
            let (v, u) = st.split(n, n - 1);
            let [a, ai, b, bi] = kappa2_inverses(&st.p, &u, &v, st.x).unwrap();
            assert!(max_rel(&ai, &a.inv().unwrap()) < 1e-9);
            assert!(max_rel(&bi, &b.inv().unwrap()) < 1e-9);
        }
    }
}

#[test]
fn omega_product_identities() {
    for n_sites in [4, 6] {
        let mut st = Setup::new(n_sites, 5);
        let n = st.p.n() as i64;
        for _ in 0..5 {
            for p in [0i64, 1, -1] {
                let (v, u) = st.split(n as usize, (n - 2 * p + 1) as usize);
                let r = om_product_identity(&st.p, &u, &v, st.x).unwrap();
                assert!(r.factorized < 1e-9 && r.product_entries < 1e-9 && r.h_residue < 1e-10, "{r:?}");
            }
        }
    }
}

#[test]
fn rank_deficient_for_minus_one() {
    let mut st = Setup::new(4, 6);
    let n = st.p.n();
    let (v, u) = st.split(n, n + 3);
    let r = product_rank(&st.p, &u, &v, st.x).unwrap();
    assert!(r.det_ratio < 1e-9);
    assert!(r.null_dim >= 1);
}

#[test]
fn rank_one_trace_and_residue_forms() {
    for n_sites in [4, 6] {
        let mut st = Setup::new(n_sites, 7);
        let n = st.p.n();
        for _ in 0..5 {
            let (v, u) = st.split(n, n - 1);
            let r = rank_one_trace(&st.p, &u, &v, st.x).unwrap();
            assert!(r.deviation() < 1e-8 && r.det_vs_trace < 1e-8);
            assert!(r.cal_a < 1e-9 && r.cal_b < 1e-9);
            let (a, c) = (trace_assembled(&st.p, &u, &v, st.x).unwrap(), trace_closed(&st.p, &u, &v, st.x).unwrap());
            assert!(rel(a, c) < 1e-8);
        }
    }
}

#[test]
fn degenerate_trace_limit() {
    let mut st = Setup::new(6, 8);
    let n = st.p.n();
    for _ in 0..5 {
        let (v, u) = st.split(n, 1);
        assert!(degenerate_trace(&st.p, u[0], &v, st.x).unwrap().deviation() < 1e-6);
    }
    let mut small = Setup::new(4, 8);
    let (v, u) = small.split(2, 1);
    assert!(degenerate_trace(&small.p, u[0], &v, small.x).is_err());
}

#[test]
fn zero_eigenvectors_three_dimensional() {
    for n_sites in [4, 6] {
        let mut st = Setup::new(n_sites, 9);
        let n = st.p.n();
        for _ in 0..5 {
            let all = st.points(2 * n + 6);
            let (v, u, z) = (&all[..n], &all[n..2 * n + 3], &all[2 * n + 3..]);
            let r = zero_eigenvectors(&st.p, u, v, z, st.x).unwrap();
            assert_eq!(r.null_dim, 3);
            assert!(r.null_residuals.iter().all(|&x| x < 1e-9));
            assert!(r.inverse_columns < 1e-9 && r.inverse_product < 1e-9);
            assert!(r.y1_null.iter().all(|&x| x < 1e-9));
            assert!(r.y0_form < 1e-8);
        }
    }
}

#[test]
fn contour_sum_cancels() {
    for n_sites in [4, 6] {
        let mut st = Setup::new(n_sites, 10);
        let n = st.p.n();
        for _ in 0..5 {
            let (v, u) = st.split(n, n - 1);
            for (g, j) in contour_sum_cal_a(&st.p, &u, &v, st.x).unwrap() {
                assert!(rel(g, j) < 1e-10, "n = {n}");
            }
        }
    }
}

#[test]
fn homogeneous_systems_hold() {
    let mut sc = scenario(4, 11);
    let n = sc.params.n();
    for _ in 0..3 {
        let u = sc.free_params(n + 1).unwrap();
        let r = homogeneous_residual(&sc.on_shell, 0, &u).unwrap();
        assert!(r.sandwich.unwrap() < 1e-8);
        assert!(r.eps_system.unwrap() < 1e-8);
        assert!(r.transformed.unwrap() < 1e-8);
    }
    for p in [1i64, -1] {
        let u = sc.free_params((n as i64 - 2 * p + 1) as usize).unwrap();
        let r = homogeneous_residual(&sc.on_shell, p, &u).unwrap();
        assert!(r.sandwich.is_none());
        assert!(r.trivial < 1e-10);
    }
}

#[test]
fn inhomogeneous_systems_hold() {
    let mut sc = scenario(4, 12);
    let n = sc.params.n() as i64;
    for p in [0i64, -1] {
        for pop in [Population::Oracle, Population::ClosedForm] {
            let w = sc.free_params((n - 2 * p) as usize).unwrap();
            assert!(inhomogeneous_residual(&sc.on_shell, p, &w, pop).unwrap() < 1e-7);
        }
    }
}

#[test]
fn direct_expression_at_four_sites() {
    let mut sc = scenario(4, 13);
    let n = sc.params.n() as i64;
    for kappa in [1i64, -1] {
        let u = sc.free_params((n - kappa) as usize).unwrap();
        let d = direct_expression(&sc.on_shell, &u, Population::Oracle).unwrap();
        let scale = d.iter().map(|(a, b)| a.norm().max(b.norm())).fold(0.0, f64::max);
        for (a, b) in d {
            assert!((a - b).norm() / scale < 1e-8);
        }
    }
}

#[test]
fn deletion_result_ignores_deleted_parameter() {
    let mut sc = scenario(4, 14);
    let n = sc.params.n();
    let u = sc.free_params(n + 1).unwrap();
    assert!(uj_independence(&sc.on_shell, &u, C64::new(0.1, 0.0)).unwrap() < 1e-9);
}

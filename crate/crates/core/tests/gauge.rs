mod common;

use common::{c, model};
use ffaba::gauge::{
    a_func, d_func, dual_vacuum, gauge_apply, gauge_matrix, gauge_matrix_inverse, gauge_monodromy, vacuum, vacuum_actions, Block, GaugeIndexWindow, GaugeParams,
};
use ffaba::linalg::{rel_l2, CMatrix};
use ffaba::sampling::Sampler;
use ffaba::vertex::{monodromy_full, ModelParams, OperatorBlock};
use ffaba::C64;

fn setup(n: usize, seed: u64) -> (ModelParams, GaugeParams, Sampler) {
    let (p, mut s) = model(n, seed);
    let g = s.gauge(&p, GaugeIndexWindow::for_bethe(p.n() + 2)).unwrap();
    (p, g, s)
}

fn spectral(s: &mut Sampler) -> C64 {
    s.complex_box((0.0, 1.0), (-0.15, 0.15))
}

fn two(m: [[C64; 2]; 2]) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[i][j])
}

/// M_k^-1 T M_l with both 2x2 factors lifted to the full space.
fn oracle_gauged(k: i64, l: i64, u: C64, p: &ModelParams, g: &GaugeParams) -> OperatorBlock {
    let id = CMatrix::identity(p.dim());
    let mk = two(gauge_matrix(k, u, p, g).unwrap()).inv().unwrap();
    let ml = two(gauge_matrix(l, u, p, g).unwrap());
    let full = mk.kron_pair(&id).matmul(&monodromy_full(u, p)).unwrap().matmul(&ml.kron_pair(&id)).unwrap();
    OperatorBlock::from_full(&full)
}

#[test]
fn determinant_is_index_free() {
    let (p, g, mut s) = setup(4, 3);
    let ctx = p.ctx();
    for _ in 0..5 {
        let u = spectral(&mut s);
        let want = 2.0 * ctx.t1(g.y() + u) / ctx.t2(c(0.0, 0.0));
        for k in -4..=4 {
            let m = gauge_matrix(k, u, &p, &g).unwrap();
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            assert!((det - want).norm() <= 1e-11 * want.norm().max(1.0), "k = {k}");
        }
    }
}

#[test]
fn inverse_is_inverse() {
    let (p, g, mut s) = setup(2, 4);
    for k in -3..=3 {
        let u = spectral(&mut s);
        let m = two(gauge_matrix(k, u, &p, &g).unwrap());
        let mi = two(gauge_matrix_inverse(k, u, &p, &g).unwrap());
        assert!((&mi.matmul(&m).unwrap() - &CMatrix::identity(2)).max_abs() < 1e-12);
    }
}

#[test]
fn gauged_monodromy_matches_dense_conjugation() {
    let (p, g, mut s) = setup(4, 8);
    let u = spectral(&mut s);
    let got = gauge_monodromy(1, 3, u, &p, &g).unwrap();
    let want = oracle_gauged(1, 3, u, &p, &g);
    let scale = want.to_full().max_abs();
    assert!((&got.to_full() - &want.to_full()).max_abs() / scale < 1e-12);
    let v: Vec<C64> = vacuum(2, &p, &g).0;
    let bv = gauge_apply(Block::B, 1, 3, u, &p, &g, &v).unwrap();
    assert!(rel_l2(&bv, &want.b.matvec(&v).unwrap()) < 1e-12);
}

#[test]
fn vacuum_relations_dense() {
    for n in [2, 4] {
        let (p, g, mut s) = setup(n, 10 + n as u64);
        let nn = n as i64;
        for _ in 0..5 {
            let u = spectral(&mut s);
            let (a, d) = (a_func(u, &p), d_func(u, &p));
            for l in 0..4 {
                let t = oracle_gauged(l, l + nn, u, &p, &g);
                let om = vacuum(l, &p, &g).0;
                let aom = t.a.matvec(&om).unwrap();
                let up: Vec<C64> = vacuum(l + 1, &p, &g).0.iter().map(|z| a * z).collect();
                let dn: Vec<C64> = vacuum(l - 1, &p, &g).0.iter().map(|z| d * z).collect();
                assert!(rel_l2(&aom, &up) < 1e-10);
                assert!(rel_l2(&t.d.matvec(&om).unwrap(), &dn) < 1e-10);
                let cnorm: f64 = t.c.matvec(&om).unwrap().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let anorm: f64 = aom.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                assert!(cnorm / anorm < 1e-10);
                let dual = dual_vacuum(l, &p, &g).0;
                let bnorm: f64 = t.b.vecmat(&dual).unwrap().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let dnorm: f64 = t.d.vecmat(&dual).unwrap().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                assert!(bnorm / dnorm < 1e-10);
                for r in vacuum_actions(l, u, &p, &g).unwrap() {
                    assert!(r < 1e-10, "N = {n}, l = {l}: {r:e}");
                }
            }
        }
    }
}

#[test]
fn singular_inverse_is_reported() {
    let (p, g, _) = setup(2, 1);
    assert!(gauge_matrix_inverse(0, -g.y(), &p, &g).is_err());
}

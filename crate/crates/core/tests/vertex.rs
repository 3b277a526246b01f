mod common;

use common::{c, model};
use ffaba::linalg::{kron, pauli, u3_sign, CMatrix};
use ffaba::theta::{Eta, ModularContext};
use ffaba::vertex::{
    build_monodromy, build_r, couplings, hamiltonian_log_derivative, monodromy_full, rtt_residual, transfer, weights, ModelParams, VertexError,
};
use ffaba::C64;

fn unit(a: usize, b: usize) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| if (i, j) == (a, b) { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// R acting on tensor slots `i` and `j` of `slots` two-dimensional factors.
fn embed_r(r: &CMatrix, slots: usize, i: usize, j: usize) -> CMatrix {
    let dim = 1 << slots;
    let mut out = CMatrix::zeros(dim, dim);
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                for d in 0..2 {
                    let w = r[(2 * a + cc, 2 * b + d)];
                    if w.norm() == 0.0 {
                        continue;
                    }
                    let ops: Vec<CMatrix> = (0..slots)
                        .map(|k| {
                            if k == i {
                                unit(a, b)
                            } else if k == j {
                                unit(cc, d)
                            } else {
                                pauli::identity()
                            }
                        })
                        .collect();
                    out = &out + &kron(&ops, 1 << 12).unwrap().scale(w);
                }
            }
        }
    }
    out
}

fn oracle_monodromy(u: C64, p: &ModelParams) -> CMatrix {
    let n = p.n_sites();
    (1..=n).fold(CMatrix::identity(2 << n), |acc, k| acc.matmul(&embed_r(&build_r(u - p.xi()[k - 1], p).to_matrix(), n + 1, 0, k)).unwrap())
}

fn max_rel(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).max_abs() / a.max_abs().max(b.max_abs())
}

#[test]
fn r_at_zero_is_a_permutation() {
    let (p, _) = model(2, 3);
    let r = build_r(c(0.0, 0.0), &p).to_matrix();
    let a0 = r[(0, 0)];
    let perm = CMatrix::from_fn(4, 4, |i, j| if j == 2 * (i % 2) + i / 2 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    assert!(max_rel(&r, &perm.scale(a0)) < 1e-14);
}

#[test]
fn free_fermion_weights() {
    for seed in 0..5 {
        let (p, mut s) = model(2, seed);
        for _ in 0..10 {
            let u = s.complex_box((0.0, 1.0), (-0.3, 0.3));
            let w = weights(&p, u);
            let lhs = w.a * w.a + w.b * w.b;
            let rhs = w.c * w.c + w.d * w.d;
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
        }
        assert!(couplings(&p).2.norm() < 1e-12);
    }
}

#[test]
fn yang_baxter() {
    let (p, mut s) = model(2, 11);
    for _ in 0..5 {
        let u = s.complex_box((0.0, 1.0), (-0.2, 0.2));
        let v = s.complex_box((0.0, 1.0), (-0.2, 0.2));
        let r12 = embed_r(&build_r(u - v, &p).to_matrix(), 3, 0, 1);
        let r13 = embed_r(&build_r(u, &p).to_matrix(), 3, 0, 2);
        let r23 = embed_r(&build_r(v, &p).to_matrix(), 3, 1, 2);
        let lhs = r12.matmul(&r13).unwrap().matmul(&r23).unwrap();
        let rhs = r23.matmul(&r13).unwrap().matmul(&r12).unwrap();
        assert!(max_rel(&lhs, &rhs) < 1e-12);
    }
}

#[test]
fn monodromy_matches_kron_products() {
    for n in [2, 4] {
        let (p, mut s) = model(n, 5);
        let u = s.complex_box((0.0, 1.0), (-0.15, 0.15));
        assert!(max_rel(&monodromy_full(u, &p), &oracle_monodromy(u, &p)) < 1e-13);
    }
}

#[test]
fn rtt_against_hand_embedding() {
    for n in [2, 4] {
        let (p, mut s) = model(n, 17);
        for _ in 0..20 {
            let u = s.complex_box((0.0, 1.0), (-0.15, 0.15));
            let v = s.complex_box((0.0, 1.0), (-0.15, 0.15));
            let t1 = oracle_monodromy(u, &p);
            let t2 = oracle_monodromy(v, &p);
            // auxiliary spaces 1, 2 then the chain; T_1 and T_2 through a swap of the aux slots
            let dim = p.dim();
            let emb = |t: &CMatrix, slot: usize| {
                CMatrix::from_fn(4 * dim, 4 * dim, |i, j| {
                    let (a, b) = ([i / (2 * dim), (i / dim) % 2], [j / (2 * dim), (j / dim) % 2]);
                    if a[1 - slot] != b[1 - slot] {
                        return c(0.0, 0.0);
                    }
                    t[(a[slot] * dim + i % dim, b[slot] * dim + j % dim)]
                })
            };
            let (t1, t2) = (emb(&t1, 0), emb(&t2, 1));
            let r = build_r(u - v, &p).to_matrix().kron_pair(&CMatrix::identity(dim));
            let lhs = r.matmul(&t1).unwrap().matmul(&t2).unwrap();
            let rhs = t2.matmul(&t1).unwrap().matmul(&r).unwrap();
            let scale = lhs.max_abs();
            assert!((&lhs - &rhs).max_abs() / scale < 1e-10);
            assert!(rtt_residual(u, v, &p) / scale < 1e-10);
        }
    }
}

#[test]
fn transfer_matrices_commute() {
    for n in [2, 4] {
        let (p, mut s) = model(n, 23);
        let tu = transfer(s.complex_box((0.0, 1.0), (-0.15, 0.15)), &p);
        let tv = transfer(s.complex_box((0.0, 1.0), (-0.15, 0.15)), &p);
        assert!(tu.commutator(&tv).unwrap().max_abs() / (tu.max_abs() * tv.max_abs()) < 1e-12);
    }
}

#[test]
fn blocks_respect_parity() {
    let (p, mut s) = model(4, 2);
    let t = build_monodromy(s.complex_box((0.0, 1.0), (-0.15, 0.15)), &p);
    for (op, keeps) in [(&t.a, true), (&t.b, false), (&t.c, false), (&t.d, true)] {
        for i in 0..16 {
            for j in 0..16 {
                if (u3_sign(i) == u3_sign(j)) != keeps {
                    assert!(op[(i, j)].norm() < 1e-13 * op.max_abs());
                }
            }
        }
    }
}

fn xyz(n: usize, j: (C64, C64, C64)) -> CMatrix {
    let mut h = CMatrix::zeros(1 << n, 1 << n);
    for site in 0..n {
        for (op, w) in [(pauli::x(), j.0), (pauli::y(), j.1), (pauli::z(), j.2)] {
            let ops: Vec<CMatrix> = (0..n).map(|k| if k == site || k == (site + 1) % n { op.clone() } else { pauli::identity() }).collect();
            h = &h + &kron(&ops, 1 << 10).unwrap().scale(w);
        }
    }
    h
}

#[test]
fn hamiltonian_generic_eta() {
    let ctx = ModularContext::new(c(0.0, 0.8)).unwrap();
    for n in [2, 4] {
        let p = ModelParams::new(n, Eta::Complex(c(0.37, 0.11)), ctx.clone(), vec![c(0.0, 0.0); n]).unwrap();
        let h = hamiltonian_log_derivative(&p).unwrap();
        assert!((&h - &xyz(n, couplings(&p))).max_abs() < 1e-8);
    }
}

#[test]
fn hamiltonian_free_fermion() {
    let ctx = ModularContext::new(c(0.1, 0.9)).unwrap();
    let p = ModelParams::new(4, Eta::HALF, ctx, vec![c(0.0, 0.0); 4]).unwrap();
    let (jx, jy, jz) = couplings(&p);
    assert!(jz.norm() < 1e-12);
    let h = hamiltonian_log_derivative(&p).unwrap();
    assert!((&h - &xyz(4, (jx, jy, jz))).max_abs() < 1e-8);
}

#[test]
fn inhomogeneous_hamiltonian_rejected() {
    let (p, _) = model(2, 1);
    assert_eq!(hamiltonian_log_derivative(&p), Err(VertexError::NotHomogeneous));
}

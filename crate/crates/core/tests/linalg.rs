mod common;

use common::c;
use ffaba::linalg::{kron, kron_vec, pair, pauli, u3_sign, CMatrix, DualVector, LinalgError, StateVector, DEFAULT_DIM_CAP};
use ffaba::C64;
use proptest::prelude::*;

fn cofactor_det(m: &[Vec<C64>]) -> C64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<C64>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &x)| x).collect()).collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            m[0][j] * sign * cofactor_det(&minor)
        })
        .sum()
}

fn entries(n: usize) -> impl Strategy<Value = Vec<Vec<C64>>> {
    prop::collection::vec(prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b)), n), n)
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lu_det_matches_cofactor_expansion(rows in (1usize..6).prop_flat_map(entries)) {
        let m = CMatrix::from_rows(&rows);
        let want = cofactor_det(&rows);
        let got = m.det().unwrap();
        prop_assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0));
    }

    #[test]
    fn mixed_product(a in entries(2), b in entries(2), cc in entries(2), d in entries(2)) {
        let [a, b, cc, d] = [a, b, cc, d].map(|r| CMatrix::from_rows(&r));
        let lhs = kron(&[a.clone(), b.clone()], 16).unwrap().matmul(&kron(&[cc.clone(), d.clone()], 16).unwrap()).unwrap();
        let rhs = kron(&[a.matmul(&cc).unwrap(), b.matmul(&d).unwrap()], 16).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * lhs.max_abs().max(1.0));
    }

    #[test]
    fn inverse_is_two_sided(rows in entries(5)) {
        let m = CMatrix::from_rows(&rows);
        prop_assume!(cofactor_det(&rows).norm() > 1e-3);
        let inv = m.inv().unwrap();
        let id = CMatrix::identity(5);
        prop_assert!(max_diff(&m.matmul(&inv).unwrap(), &id) <= 1e-9);
        prop_assert!(max_diff(&inv.matmul(&m).unwrap(), &id) <= 1e-9);
    }

    #[test]
    fn pairing_is_associative(rows in entries(4), w in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4), v in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4)) {
        let op = CMatrix::from_rows(&rows);
        let w = DualVector(w.into_iter().map(|(a, b)| c(a, b)).collect());
        let v = StateVector(v.into_iter().map(|(a, b)| c(a, b)).collect());
        let lhs = pair(&w.apply(&op).unwrap(), &v).unwrap();
        let rhs = pair(&w, &v.apply(&op).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * 16.0);
    }

    #[test]
    fn solve_inverts_matvec(rows in entries(4), x in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4)) {
        let m = CMatrix::from_rows(&rows);
        prop_assume!(cofactor_det(&rows).norm() > 1e-3);
        let x: Vec<C64> = x.into_iter().map(|(a, b)| c(a, b)).collect();
        let y = m.solve(&m.matvec(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).norm() <= 1e-8);
        }
    }
}

#[test]
fn kron_by_hand() {
    let a = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(4.0, 0.0)]]);
    let b = CMatrix::from_rows(&[vec![c(0.0, 1.0), c(5.0, 0.0)], vec![c(6.0, 0.0), c(7.0, 0.0)]]);
    let k = kron(&[a.clone(), b.clone()], 16).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(k[(i, j)], a[(i / 2, j / 2)] * b[(i % 2, j % 2)]);
        }
    }
    // leftmost factor is most significant
    assert_eq!(k[(1, 2)], c(2.0, 0.0) * c(6.0, 0.0));
}

#[test]
fn kron_vec_matches_basis_order() {
    let up = [c(1.0, 0.0), c(0.0, 0.0)];
    let down = [c(0.0, 0.0), c(1.0, 0.0)];
    let v = kron_vec(&[up, down, down]);
    let hot: Vec<usize> = v.iter().enumerate().filter(|(_, x)| x.norm() > 0.0).map(|(i, _)| i).collect();
    assert_eq!(hot, vec![0b011]);
}

#[test]
fn pauli_algebra() {
    let (x, y, z, id) = (pauli::x(), pauli::y(), pauli::z(), pauli::identity());
    let i = c(0.0, 1.0);
    for m in [&x, &y, &z] {
        assert_eq!(m.matmul(m).unwrap(), id);
    }
    assert_eq!(x.matmul(&y).unwrap(), z.scale(i));
    assert_eq!(y.matmul(&z).unwrap(), x.scale(i));
    assert_eq!(z.matmul(&x).unwrap(), y.scale(i));
    assert_eq!(x.commutator(&y).unwrap(), z.scale(2.0 * i));
}

#[test]
fn u3_sign_matches_kron_of_sigma_z() {
    let zz = kron(&[pauli::z(), pauli::z(), pauli::z()], 8).unwrap();
    for i in 0..8 {
        assert_eq!(zz[(i, i)].re, u3_sign(i));
    }
}

#[test]
fn errors() {
    let a = CMatrix::identity(2);
    let b = CMatrix::identity(3);
    assert!(matches!(a.matmul(&b), Err(LinalgError::DimensionMismatch { .. })));
    assert!(matches!(kron(&[], 4), Err(LinalgError::Empty)));
    assert!(kron(&vec![a; 11], DEFAULT_DIM_CAP).is_err());
}

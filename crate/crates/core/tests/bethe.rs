mod common;

use common::{c, model, scenario, scenario_nu};
use ffaba::bethe::{bethe_vector, dual_bethe_vector, eigenvalue, omega_and_v, solve_bethe_roots, twin, BetheError, RootOptions};
use ffaba::linalg::{pair, rel_l2, u3_sign};
use ffaba::vertex::{transfer, ModelParams};
use ffaba::C64;
use std::f64::consts::PI;

fn chi_oracle(nu: i64, z: C64, p: &ModelParams) -> (C64, f64) {
    let ctx = p.ctx();
    let a: C64 = p.xi().iter().map(|&x| ctx.t1(z - x + 0.5)).product();
    let d: C64 = p.xi().iter().map(|&x| ctx.t1(z - x)).product();
    let sgn = if p.n().is_multiple_of(2) { 1.0 } else { -1.0 };
    let ph = (C64::i() * PI * 0.5 * nu as f64).exp();
    (sgn * ph * a + d / ph, a.norm() + d.norm())
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn roots_solve_chi_and_pair_into_twins() {
    for n in [2, 4, 6] {
        for nu in 0..4 {
            let sc = scenario_nu(n, nu, 40 + n as u64);
            let r = &sc.roots;
            assert_eq!(r.roots.len(), n);
            assert!((r.contour_count - n as f64).abs() < 1e-6);
            for &z in &r.roots {
                let (x, scale) = chi_oracle(nu, z, &sc.params);
                assert!(x.norm() / scale < 1e-9, "N = {n}, nu = {nu}");
            }
            assert_eq!(r.selected.len(), n / 2);
            for &(i, j) in &r.twin_pairs {
                let d = r.roots[i] - r.roots[j];
                assert!(((d.re.abs() - 0.5).abs() < 1e-7) && d.im.abs() < 1e-7);
            }
            for &v in &r.selected {
                let (x, scale) = chi_oracle(nu, twin(v), &sc.params);
                assert!(x.norm() / scale < 1e-9);
            }
        }
    }
}

#[test]
fn roots_are_deterministic() {
    let (p, _) = model(4, 9);
    let a = solve_bethe_roots(1, &p, &RootOptions::default()).unwrap();
    let b = solve_bethe_roots(1, &p, &RootOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn coarse_grid_is_reported() {
    let (p, _) = model(6, 2);
    let opts = RootOptions { grid: 2, ..RootOptions::default() };
    match solve_bethe_roots(0, &p, &opts) {
        Ok(r) => assert_eq!(r.roots.len(), 6),
        Err(e) => assert!(e.to_string().contains("grid"), "{e}"),
    }
}

#[test]
fn on_shell_vectors_are_transfer_eigenvectors() {
    for n in [4, 6] {
        let mut sc = scenario(n, 7);
        let (p, g, nu) = (sc.params.clone(), sc.gauge, sc.on_shell.nu);
        let roots = sc.roots.selected.clone();
        let right = bethe_vector(nu, &roots, &p, &g).unwrap();
        let left = dual_bethe_vector(nu, &roots, &p, &g).unwrap();
        for _ in 0..5 {
            let z = sc.free_params(1).unwrap()[0];
            let t = transfer(z, &p);
            let lam = eigenvalue(nu, z, &roots, &p).unwrap();
            let v = &right.right().unwrap().0;
            let w = &left.left().unwrap().0;
            let tv = t.matvec(v).unwrap();
            let tw = t.vecmat(w).unwrap();
            let lv: Vec<C64> = v.iter().map(|x| lam * x).collect();
            let lw: Vec<C64> = w.iter().map(|x| lam * x).collect();
            assert!(rel_l2(&tv, &lv) < 1e-9, "right, N = {n}");
            assert!(rel_l2(&tw, &lw) < 1e-9, "left, N = {n}");
        }
    }
}

#[test]
fn off_shell_vectors_are_not_eigenvectors() {
    let mut sc = scenario(4, 3);
    let (p, g, nu) = (sc.params.clone(), sc.gauge, sc.on_shell.nu);
    let us = sc.free_params(2).unwrap();
    let v = bethe_vector(nu, &us, &p, &g).unwrap();
    let z = sc.free_params(1).unwrap()[0];
    let v = &v.right().unwrap().0;
    let tv = transfer(z, &p).matvec(v).unwrap();
    let lam = eigenvalue(nu, z, &us, &p).unwrap();
    let lv: Vec<C64> = v.iter().map(|x| lam * x).collect();
    assert!(rel_l2(&tv, &lv) > 1e-3);
}

#[test]
fn omega_expressions_agree() {
    for n in [2, 4] {
        let sc = scenario(n, 12);
        let data = omega_and_v(sc.on_shell.nu, &sc.roots.selected, &sc.params).unwrap();
        assert!(data.omega_agreement() < 1e-9);
    }
}

#[test]
fn parity_sector() {
    let mut sc = scenario(4, 5);
    let (p, g) = (sc.params.clone(), sc.gauge);
    for m in 0..=4 {
        let us = sc.free_params(m).unwrap();
        for nu in 0..4 {
            let v = bethe_vector(nu, &us, &p, &g).unwrap();
            let want = if (nu + m as i64) % 2 == 0 { 1.0 } else { -1.0 };
            let amp = v.vector.amplitudes();
            let top = amp.iter().map(|x| x.norm()).fold(0.0, f64::max);
            for (i, x) in amp.iter().enumerate() {
                if u3_sign(i) != want {
                    assert!(x.norm() <= 1e-11 * top, "m = {m}, nu = {nu}");
                }
            }
        }
    }
}

#[test]
fn overfull_states_vanish() {
    for n in [2, 4] {
        let mut sc = scenario(n, 21);
        let (p, g) = (sc.params.clone(), sc.gauge);
        let us = sc.free_params(n + 1).unwrap();
        for nu in 0..4 {
            let full = bethe_vector(nu, &us[..n], &p, &g).unwrap();
            let over = bethe_vector(nu, &us, &p, &g).unwrap();
            assert!(norm(over.vector.amplitudes()) / norm(full.vector.amplitudes()) < 1e-10);
        }
    }
}

#[test]
fn symmetric_in_parameters() {
    let mut sc = scenario(4, 30);
    let (p, g) = (sc.params.clone(), sc.gauge);
    let us = sc.free_params(3).unwrap();
    let perm = vec![us[2], us[0], us[1]];
    for nu in 0..4 {
        let a = bethe_vector(nu, &us, &p, &g).unwrap();
        let b = bethe_vector(nu, &perm, &p, &g).unwrap();
        assert!(rel_l2(a.vector.amplitudes(), b.vector.amplitudes()) < 1e-9);
        let a = dual_bethe_vector(nu, &us, &p, &g).unwrap();
        let b = dual_bethe_vector(nu, &perm, &p, &g).unwrap();
        assert!(rel_l2(a.vector.amplitudes(), b.vector.amplitudes()) < 1e-9);
    }
}

#[test]
fn different_sectors_are_orthogonal_on_shell() {
    // left on-shell state with nu against a right on-shell state with nu + 1
    let sc = scenario(4, 14);
    let (p, g) = (sc.params.clone(), sc.gauge);
    let other = solve_bethe_roots(sc.on_shell.nu + 1, &p, &RootOptions::default()).unwrap();
    let w = dual_bethe_vector(sc.on_shell.nu, &sc.roots.selected, &p, &g).unwrap();
    let v = bethe_vector(sc.on_shell.nu + 1, &other.selected, &p, &g).unwrap();
    let (w, v) = (w.left().unwrap(), v.right().unwrap());
    assert!(norm(&v.0) > 1e-6 && norm(&w.0) > 1e-6);
    let overlap = pair(w, v).unwrap();
    assert!(overlap.norm() / (norm(&w.0) * norm(&v.0)) < 1e-9);
}

#[test]
fn colliding_parameters_rejected() {
    let sc = scenario(2, 1);
    let z = c(0.3, 0.01);
    let err = bethe_vector(0, &[z, z], &sc.params, &sc.gauge).unwrap_err();
    assert!(matches!(err, BetheError::ParameterCollision(1, 2)));
}

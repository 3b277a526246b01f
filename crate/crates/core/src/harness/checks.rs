//! The verification suite: every check is a pure function of the run
//! configuration, the chain length and a seed derived from the check id.

use super::config::RunConfig;
use crate::bethe::{bethe_vector, chi_with_derivative, dual_bethe_vector, eigen_check, twin, BetheError};
use crate::cascade::{self, CascadeError, Population};
use crate::gauge::{gauge_matrix, vacuum_actions, GaugeError, GaugeIndexWindow, GaugeParams};
use crate::linalg::{kron, pair, u3_sign, CMatrix, DualVector, LinalgError, StateVector};
use crate::sampling::{Exclusion, SampleError, Sampler, Scenario};
use crate::scalar::{rel_dev, ScalarError};
use crate::theta::{alpha, alpha_hat, beta_minus, beta_minus_hat, beta_plus, beta_plus_hat, Eta, ModularContext, ThetaError};
use crate::vertex::{build_monodromy, couplings, hamiltonian_direct, hamiltonian_log_derivative, rtt_residual, transfer, ModelParams, VertexError};
use crate::C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Bethe(#[from] BetheError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Vertex(#[from] VertexError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{0}")]
    Setup(String),
}

/// Which chain lengths a check runs at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sizes {
    /// once, independent of N
    Global,
    AtLeast(usize),
}

/// Inputs handed to a check.
#[derive(Debug, Clone)]
pub struct Job<'a> {
    pub cfg: &'a RunConfig,
    pub n_sites: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measured {
    pub residual: f64,
    pub flag: Option<&'static str>,
}

impl From<f64> for Measured {
    fn from(residual: f64) -> Self {
        Measured { residual, flag: None }
    }
}

type Runner = fn(&Job) -> Result<Measured, CheckError>;

pub struct Check {
    pub group: &'static str,
    pub name: &'static str,
    pub identity: &'static str,
    pub tolerance: f64,
    pub sizes: Sizes,
    run: Runner,
}

impl Check {
    pub fn key(&self) -> String {
        format!("{}.{}", self.group, self.name)
    }

    pub fn id(&self, n_sites: Option<usize>) -> String {
        match n_sites {
            Some(n) => format!("{}.N{n}", self.key()),
            None => self.key(),
        }
    }

    pub fn applies(&self, n_sites: usize) -> bool {
        match self.sizes {
            Sizes::Global => false,
            Sizes::AtLeast(k) => n_sites >= k,
        }
    }

    pub fn run(&self, job: &Job) -> Result<Measured, CheckError> {
        (self.run)(job)
    }
}

const THETA_POINTS: usize = 100;
const RTT_SAMPLES: usize = 20;
const VACUUM_POINTS: usize = 5;
const EIGEN_POINTS: usize = 5;
const DRAWS: usize = 10;
const SYSTEM_DRAWS: usize = 3;
const GENERIC_DRAWS: usize = 20;

fn track(acc: &mut f64, x: f64) {
    if x.is_nan() || *acc < x {
        *acc = x;
    }
}

fn rel(a: C64, b: C64, scale: f64) -> f64 {
    (a - b).norm() / scale.max(a.norm()).max(b.norm()).max(1e-300)
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

// ---------- theta ----------

fn theta_point(s: &mut Sampler) -> Result<(ModularContext, C64, C64), CheckError> {
    let tau = s.complex_box((-0.5, 0.5), (0.4, 1.2));
    let ctx = ModularContext::new(tau)?;
    Ok((ctx, s.complex_box((-1.0, 1.0), (-0.4, 0.4)), s.complex_box((-1.0, 1.0), (-0.4, 0.4))))
}

fn theta_shift(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..THETA_POINTS {
        let (ctx, u, _) = theta_point(&mut s)?;
        let tau = ctx.tau();
        let e = (-C64::i() * std::f64::consts::PI * (2.0 * u + tau)).exp();
        let pairs = [
            (ctx.t1(u + 0.5), ctx.t2(u)),
            (ctx.t2(u + 0.5), -ctx.t1(u)),
            (ctx.t1(u + 1.0), -ctx.t1(u)),
            (ctx.t2(u + 1.0), -ctx.t2(u)),
            (ctx.t1(u + tau), -e * ctx.t1(u)),
            (ctx.t2(u + tau), e * ctx.t2(u)),
        ];
        for (a, b) in pairs {
            track(&mut worst, rel(a, b, 0.0));
        }
    }
    Ok(worst.into())
}

fn theta_doubling(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..THETA_POINTS {
        let (ctx, u, v) = theta_point(&mut s)?;
        let lhs = 2.0 * ctx.tt1(u + v) * ctx.tt4(u - v);
        let (p, q) = (ctx.t1(u) * ctx.t2(v), ctx.t2(u) * ctx.t1(v));
        track(&mut worst, rel(lhs, p + q, p.norm().max(q.norm())));
    }
    Ok(worst.into())
}

fn theta_product(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..THETA_POINTS {
        let (ctx, u, v) = theta_point(&mut s)?;
        let (p, q) = (ctx.tt1(u + v) * ctx.tt4(u - v), ctx.tt4(u + v) * ctx.tt1(u - v));
        track(&mut worst, rel(ctx.t1(u) * ctx.t2(v), p + q, p.norm().max(q.norm())));
    }
    Ok(worst.into())
}

fn theta_diagonal(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..THETA_POINTS {
        let (ctx, u, _) = theta_point(&mut s)?;
        track(&mut worst, rel(ctx.t1(u) * ctx.t2(u), ctx.tt1(2.0 * u) * ctx.tt4(zero()), 0.0));
    }
    Ok(worst.into())
}

fn theta_derivative_ratio(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..THETA_POINTS {
        let (ctx, _, _) = theta_point(&mut s)?;
        let lhs = ctx.t1_prime0() / ctx.tt1_prime0();
        track(&mut worst, rel(lhs, 2.0 * ctx.tt4(zero()) / ctx.t2(zero()), 0.0));
    }
    Ok(worst.into())
}

fn theta_alpha_support(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..THETA_POINTS {
        let (ctx, z, x) = theta_point(&mut s)?;
        let h: Vec<C64> = (0..4).map(|mu| alpha_hat(&ctx, mu, z, x)).collect::<Result<_, _>>()?;
        let scale = h[0].norm().max(h[2].norm());
        track(&mut worst, h[1].norm() / scale);
        track(&mut worst, h[3].norm() / scale);
        for eps in 0..2i64 {
            let sg = if eps == 0 { 1.0 } else { -1.0 };
            track(&mut worst, rel(h[0] + sg * h[2], 4.0 * alpha(&ctx, eps, z, x)?, scale));
        }
    }
    Ok(worst.into())
}

fn theta_beta_parity(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..THETA_POINTS {
        let (ctx, z, a) = theta_point(&mut s)?;
        let (b, t, x) = (s.complex_box((-1.0, 1.0), (-0.3, 0.3)), s.complex_box((-0.4, 0.4), (-0.4, 0.4)), s.complex_box((-0.4, 0.4), (-0.4, 0.4)));
        for l in 0..4 {
            track(&mut worst, rel(beta_plus(&ctx, l + 2, z, a), -beta_plus(&ctx, l, z, a), 0.0));
            track(&mut worst, rel(beta_minus(&ctx, l + 2, z, a, b, t, x), -beta_minus(&ctx, l, z, a, b, t, x), 0.0));
        }
        for eps in 0..2i64 {
            let sg = if eps == 0 { 1.0 } else { -1.0 };
            let ph = C64::new(0.0, -1.0).powi(eps as i32) * 4.0;
            let hp = [1, 3].map(|mu| beta_plus_hat(&ctx, mu, z, a));
            track(&mut worst, rel(hp[0] + sg * hp[1], ph * beta_plus(&ctx, eps, z, a), hp[0].norm().max(hp[1].norm())));
            let hm = [1, 3].map(|mu| beta_minus_hat(&ctx, mu, z, a, b, t, x));
            track(&mut worst, rel(hm[0] + sg * hm[1], ph * beta_minus(&ctx, eps, z, a, b, t, x), hm[0].norm().max(hm[1].norm())));
        }
    }
    Ok(worst.into())
}

// ---------- hilbert ----------

fn random_matrix(s: &mut Sampler, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| s.complex_box((-1.0, 1.0), (-1.0, 1.0)))
}

fn hilbert_associativity(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..20 {
        let dim = 16;
        let op = random_matrix(&mut s, dim, dim);
        let w = DualVector(random_matrix(&mut s, 1, dim).row(0).to_vec());
        let v = StateVector(random_matrix(&mut s, dim, 1).column(0));
        let lhs = pair(&w.apply(&op)?, &v)?;
        let rhs = pair(&w, &v.apply(&op)?)?;
        let scale: f64 = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| (w.0[i] * op[(i, j)] * v.0[j]).norm()).sum();
        track(&mut worst, (lhs - rhs).norm() / scale);
    }
    Ok(worst.into())
}

fn hilbert_kron(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..20 {
        let [a, b, c, d] = [0; 4].map(|_| random_matrix(&mut s, 2, 2));
        let lhs = kron(&[a.clone(), b.clone()], 16)?.matmul(&kron(&[c.clone(), d.clone()], 16)?)?;
        let rhs = kron(&[a.matmul(&c)?, b.matmul(&d)?], 16)?;
        track(&mut worst, (&lhs - &rhs).max_abs() / lhs.max_abs());
    }
    Ok(worst.into())
}

fn hilbert_inverse(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..20 {
        let m = random_matrix(&mut s, 6, 6);
        let r = (&m.matmul(&m.inv()?)? - &CMatrix::identity(6)).max_abs();
        track(&mut worst, r / m.max_abs());
    }
    Ok(worst.into())
}

// ---------- vertex ----------

fn random_model(job: &Job, s: &mut Sampler) -> Result<ModelParams, CheckError> {
    Ok(job.cfg.model(job.n_sites, s)?)
}

fn spectral(s: &mut Sampler) -> C64 {
    s.complex_box((0.0, 1.0), (-0.15, 0.15))
}

fn vertex_rtt(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let mut worst = 0.0;
    for _ in 0..RTT_SAMPLES {
        let p = random_model(job, &mut s)?;
        track(&mut worst, rtt_residual(spectral(&mut s), spectral(&mut s), &p));
    }
    Ok(worst.into())
}

fn vertex_transfer_commute(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let p = random_model(job, &mut s)?;
    let mut worst = 0.0;
    for _ in 0..3 {
        let tu = transfer(spectral(&mut s), &p);
        let tv = transfer(spectral(&mut s), &p);
        track(&mut worst, tu.commutator(&tv)?.max_abs() / (tu.max_abs() * tv.max_abs() * p.dim() as f64));
    }
    Ok(worst.into())
}

fn vertex_hamiltonian(job: &Job) -> Result<Measured, CheckError> {
    let ctx = ModularContext::new(C64::new(0.0, 0.8))?;
    let p = ModelParams::new(job.n_sites, Eta::Complex(C64::new(0.37, 0.11)), ctx, vec![zero(); job.n_sites])?;
    let a = hamiltonian_log_derivative(&p)?;
    let b = hamiltonian_direct(&p)?;
    Ok((&a - &b).max_abs().into())
}

fn vertex_free_fermion(job: &Job) -> Result<Measured, CheckError> {
    let ctx = ModularContext::new(job.cfg.tau())?;
    let p = ModelParams::new(2, Eta::HALF, ctx, vec![zero(); 2])?;
    Ok(couplings(&p).2.norm().into())
}

fn vertex_block_parity(job: &Job) -> Result<Measured, CheckError> {
    let mut s = Sampler::new(job.seed);
    let p = random_model(job, &mut s)?;
    let mut worst = 0.0;
    for _ in 0..3 {
        let t = build_monodromy(spectral(&mut s), &p);
        for (op, same) in [(&t.a, true), (&t.b, false), (&t.c, false), (&t.d, true)] {
            let mut leak: f64 = 0.0;
            for i in 0..op.rows() {
                for j in 0..op.cols() {
                    if (u3_sign(i) == u3_sign(j)) != same {
                        leak = leak.max(op[(i, j)].norm());
                    }
                }
            }
            track(&mut worst, leak / op.max_abs());
        }
    }
    Ok(worst.into())
}

// ---------- gauge ----------

fn random_gauge_model(job: &Job) -> Result<(ModelParams, GaugeParams, Sampler), CheckError> {
    let mut s = Sampler::new(job.seed);
    let p = random_model(job, &mut s)?;
    let g = job.cfg.gauge(&p, &mut s)?;
    Ok((p, g, s))
}

fn gauge_vacuum(job: &Job) -> Result<Measured, CheckError> {
    let (p, g, mut s) = random_gauge_model(job)?;
    let mut worst = 0.0;
    for _ in 0..VACUUM_POINTS {
        let u = spectral(&mut s);
        for l in 0..4 {
            for r in vacuum_actions(l, u, &p, &g)? {
                track(&mut worst, r);
            }
        }
    }
    Ok(worst.into())
}

fn gauge_det(job: &Job) -> Result<Measured, CheckError> {
    let (p, g, mut s) = random_gauge_model(job)?;
    let ctx = p.ctx();
    let mut worst = 0.0;
    for _ in 0..VACUUM_POINTS {
        let u = spectral(&mut s);
        let want = 2.0 * ctx.t1(g.y() + u) / ctx.t2(zero());
        for k in -4..=4 {
            let m = gauge_matrix(k, u, &p, &g)?;
            track(&mut worst, rel(m[0][0] * m[1][1] - m[0][1] * m[1][0], want, 0.0));
        }
    }
    Ok(worst.into())
}

// ---------- bethe ----------

fn scenario(job: &Job) -> Result<Scenario, CheckError> {
    Ok(job.cfg.scenario(job.n_sites, job.seed)?)
}

fn bethe_root_count(job: &Job) -> Result<Measured, CheckError> {
    let sc = scenario(job)?;
    let n = job.n_sites as f64;
    Ok((sc.roots.contour_count - n).abs().max((sc.roots.roots.len() as f64 - n).abs()).into())
}

fn bethe_chi(job: &Job) -> Result<Measured, CheckError> {
    let sc = scenario(job)?;
    Ok(sc.roots.residuals.iter().fold(0.0, |a: f64, &b| if b.is_nan() { b } else { a.max(b) }).into())
}

fn bethe_twins(job: &Job) -> Result<Measured, CheckError> {
    let sc = scenario(job)?;
    if sc.roots.twin_pairs.len() * 2 != job.n_sites || sc.roots.selected.len() * 2 != job.n_sites {
        return Ok(f64::INFINITY.into());
    }
    Ok(sc.roots.twin_residuals.iter().fold(0.0, |a: f64, &b| a.max(b)).into())
}

fn bethe_eigen(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let mut worst = 0.0;
    for _ in 0..EIGEN_POINTS {
        let z = spectral(&mut sc.sampler);
        let e = eigen_check(sc.on_shell.nu, &sc.roots.selected, z, &sc.params, &sc.gauge)?;
        track(&mut worst, e.right);
        track(&mut worst, e.left);
    }
    Ok(worst.into())
}

fn bethe_twin_zeros(job: &Job) -> Result<Measured, CheckError> {
    let sc = scenario(job)?;
    let p = &sc.params;
    let mut worst = 0.0;
    let roots = &sc.roots.selected;
    for (a, &v) in roots.iter().enumerate() {
        let z = twin(v);
        let t = sc.on_shell.t_nu(z)?;
        // f(z, v_a) is the vanishing factor; scale by the rest
        let rest: Vec<C64> = roots.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &x)| x).collect();
        let (chi, _, ad) = chi_with_derivative(sc.on_shell.nu, z, p);
        track(&mut worst, t.norm() / (ad * p.ctx().f_set(p.eta(), z, &rest)?.norm()));
        // the twin is itself a zero of chi_nu
        track(&mut worst, chi.norm() / ad);
    }
    Ok(worst.into())
}

fn bethe_omega(job: &Job) -> Result<Measured, CheckError> {
    let sc = scenario(job)?;
    Ok(sc.on_shell.data.omega_agreement().into())
}

fn bethe_parity(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let (p, g, nu) = (sc.params.clone(), sc.gauge, sc.on_shell.nu);
    let n = p.n();
    let mut worst = 0.0;
    track(&mut worst, bethe_vector(nu, &sc.roots.selected, &p, &g)?.parity_leak());
    track(&mut worst, dual_bethe_vector(nu, &sc.roots.selected, &p, &g)?.parity_leak());
    // more than N creation operators give the zero vector
    for m in n.saturating_sub(2)..=(n + 2).min(p.n_sites()) {
        let us = sc.free_params(m)?;
        for lam in 0..4 {
            track(&mut worst, bethe_vector(lam, &us, &p, &g)?.parity_leak());
        }
    }
    Ok(worst.into())
}

fn bethe_overfull(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let (p, g) = (sc.params.clone(), sc.gauge);
    let norm = |v: &[C64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut worst = 0.0;
    for lam in 0..4 {
        let us = sc.free_params(p.n_sites() + 1)?;
        let full = bethe_vector(lam, &us[..p.n_sites()], &p, &g)?;
        let over = bethe_vector(lam, &us, &p, &g)?;
        track(&mut worst, norm(over.vector.amplitudes()) / norm(full.vector.amplitudes()));
    }
    Ok(worst.into())
}

fn bethe_symmetry(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let (p, g, nu) = (sc.params.clone(), sc.gauge, sc.on_shell.nu);
    let m = p.n().max(2);
    let mut worst = 0.0;
    for _ in 0..3 {
        let us = sc.free_params(m)?;
        let mut sw = us.clone();
        sw.swap(0, m - 1);
        let a = bethe_vector(nu, &us, &p, &g)?;
        let b = bethe_vector(nu, &sw, &p, &g)?;
        track(&mut worst, crate::linalg::rel_l2(a.vector.amplitudes(), b.vector.amplitudes()));
        let a = dual_bethe_vector(nu, &us, &p, &g)?;
        let b = dual_bethe_vector(nu, &sw, &p, &g)?;
        track(&mut worst, crate::linalg::rel_l2(a.vector.amplitudes(), b.vector.amplitudes()));
    }
    Ok(worst.into())
}

// ---------- scalar products ----------

fn scalar_balanced(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let us = sc.free_params(n)?;
        let os = &sc.on_shell;
        for eps in 0..2 {
            track(&mut worst, rel_dev(os.brute_eps(0, eps, &us)?, os.balanced_eps(eps, &us)?));
        }
        let brute = os.brute_all(&us)?;
        let allowed: Vec<i64> = (0..4).filter(|l| !os.forbidden_sectors(n).contains(l)).collect();
        for lam in allowed {
            track(&mut worst, rel_dev(brute[lam as usize], os.balanced_closed_form(lam, &us)?));
        }
    }
    Ok(worst.into())
}

fn scalar_plus1(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let us = sc.free_params(n - 1)?;
        for eps in 0..2 {
            let os = &sc.on_shell;
            track(&mut worst, rel_dev(os.brute_eps(1, eps, &us)?, os.imbalance_plus1(eps, &us)?));
        }
    }
    Ok(worst.into())
}

fn scalar_plus1_route(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let us = sc.free_params(n - 1)?;
        for eps in 0..2 {
            let os = &sc.on_shell;
            track(&mut worst, rel_dev(os.imbalance_plus1(eps, &us)?, os.imbalance_plus1_route(eps, &us)?));
        }
    }
    Ok(worst.into())
}

fn scalar_minus1(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let us = sc.free_params(n + 1)?;
        for eps in 0..2 {
            let os = &sc.on_shell;
            track(&mut worst, rel_dev(os.brute_eps(1, eps, &us)?, os.imbalance_minus1(eps, &us)?));
        }
    }
    Ok(worst.into())
}

fn kappa2_check(job: &Job, kappa: i64) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let m = sc.params.n() as i64 - kappa;
    let draws = if m == 0 { 1 } else { DRAWS };
    let mut worst = 0.0;
    for _ in 0..draws {
        let us = sc.free_params(m as usize)?;
        track(&mut worst, sc.on_shell.kappa2_vanishing(&us)?);
    }
    Ok(worst.into())
}

fn scalar_kappa_plus2(job: &Job) -> Result<Measured, CheckError> {
    kappa2_check(job, 2)
}

fn scalar_kappa_minus2(job: &Job) -> Result<Measured, CheckError> {
    kappa2_check(job, -2)
}

fn scalar_selection(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n() as i64;
    let mut worst = 0.0;
    for kappa in -2..=2i64 {
        let m = n - kappa;
        if m < 0 || m > job.n_sites as i64 {
            continue;
        }
        for _ in 0..3 {
            let us = sc.free_params(m as usize)?;
            let sectors = sc.on_shell.forbidden_sectors(m as usize);
            track(&mut worst, sc.on_shell.vanishing_ratio(&us, &sectors)?);
        }
    }
    Ok(Measured { residual: worst, flag: Some("selection-rule") })
}

fn scalar_permutation(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n();
    let mut worst = 0.0;
    for _ in 0..3 {
        let us = sc.free_params(n.max(2))?;
        let mut sw = us.clone();
        sw.swap(0, us.len() - 1);
        let os = &sc.on_shell;
        let (a, b) = (os.brute_all(&us)?, os.brute_all(&sw)?);
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for lam in 0..4 {
            track(&mut worst, rel(a[lam], b[lam], scale));
        }
        if us.len() == n {
            for eps in 0..2 {
                track(&mut worst, rel_dev(os.balanced_eps(eps, &us)?, os.balanced_eps(eps, &sw)?));
            }
        }
    }
    Ok(worst.into())
}

// ---------- cascade systems ----------

fn homogeneous(job: &Job, pick: fn(&cascade::HomogeneousReport) -> Option<f64>) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n();
    let mut worst = 0.0;
    for _ in 0..SYSTEM_DRAWS {
        let u = sc.free_params(n + 1)?;
        let r = cascade::homogeneous_residual(&sc.on_shell, 0, &u)?;
        track(&mut worst, pick(&r).unwrap_or(f64::NAN));
    }
    Ok(worst.into())
}

fn cascade_sandwich(job: &Job) -> Result<Measured, CheckError> {
    homogeneous(job, |r| r.sandwich)
}

fn cascade_eps_system(job: &Job) -> Result<Measured, CheckError> {
    homogeneous(job, |r| r.eps_system)
}

fn cascade_transformed(job: &Job) -> Result<Measured, CheckError> {
    homogeneous(job, |r| r.transformed)
}

fn cascade_trivial(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n() as i64;
    let mut worst = 0.0;
    for p in [1i64, -1] {
        for _ in 0..SYSTEM_DRAWS {
            let u = sc.free_params((n - 2 * p + 1) as usize)?;
            track(&mut worst, cascade::homogeneous_residual(&sc.on_shell, p, &u)?.trivial);
        }
    }
    Ok(worst.into())
}

fn inhomogeneous(job: &Job, pop: Population) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n() as i64;
    let mut worst = 0.0;
    for p in [0i64, -1] {
        for _ in 0..SYSTEM_DRAWS {
            let w = sc.free_params((n - 2 * p) as usize)?;
            track(&mut worst, cascade::inhomogeneous_residual(&sc.on_shell, p, &w, pop)?);
        }
    }
    Ok(worst.into())
}

fn cascade_inhomogeneous(job: &Job) -> Result<Measured, CheckError> {
    inhomogeneous(job, Population::Oracle)
}

fn cascade_inhomogeneous_closed(job: &Job) -> Result<Measured, CheckError> {
    inhomogeneous(job, Population::ClosedForm)
}

fn cascade_direct(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n() as i64;
    let mut worst = 0.0;
    for kappa in [1i64, -1] {
        for _ in 0..SYSTEM_DRAWS {
            let u = sc.free_params((n - kappa) as usize)?;
            let d = cascade::direct_expression(&sc.on_shell, &u, Population::Oracle)?;
            let scale = d.iter().map(|(a, b)| a.norm().max(b.norm())).fold(0.0, f64::max);
            for (a, b) in d {
                track(&mut worst, (a - b).norm() / scale.max(1e-300));
            }
        }
    }
    Ok(worst.into())
}

fn cascade_uj(job: &Job) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let n = sc.params.n();
    let u = sc.free_params(n + 1)?;
    Ok(cascade::uj_independence(&sc.on_shell, &u, C64::new(0.1, 0.0))?.into())
}

// ---------- structured matrices ----------

struct Structured {
    p: ModelParams,
    s: Sampler,
    x: C64,
}

impl Structured {
    fn new(job: &Job) -> Result<Self, CheckError> {
        let mut s = Sampler::new(job.seed);
        let p = random_model(job, &mut s)?;
        let x = s.gauge(&p, GaugeIndexWindow::for_bethe(p.n() + 2))?.x();
        Ok(Structured { p, s, x })
    }

    fn n(&self) -> usize {
        self.p.n()
    }

    fn points(&mut self, count: usize) -> Result<Vec<C64>, CheckError> {
        Ok(self.s.params(count, &Exclusion::new(vec![]), self.p.ctx())?)
    }

    /// Two disjoint generic sets.
    fn pair(&mut self, a: usize, b: usize) -> Result<(Vec<C64>, Vec<C64>), CheckError> {
        let all = self.points(a + b)?;
        Ok((all[..a].to_vec(), all[a..].to_vec()))
    }

    fn new_x(&mut self) -> Result<(), CheckError> {
        self.x = self.s.gauge(&self.p, GaugeIndexWindow::for_bethe(self.p.n() + 2))?.x();
        Ok(())
    }
}

fn om_report(job: &Job, pick: fn(&cascade::OmProductReport) -> f64) -> Result<Measured, CheckError> {
    let mut st = Structured::new(job)?;
    let n = st.n() as i64;
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        for p in [0i64, 1, -1] {
            let (v, u) = st.pair(n as usize, (n - 2 * p + 1) as usize)?;
            track(&mut worst, pick(&cascade::om_product_identity(&st.p, &u, &v, st.x)?));
        }
    }
    Ok(worst.into())
}

fn cascade_om_factorized(job: &Job) -> Result<Measured, CheckError> {
    om_report(job, |r| r.factorized)
}

fn appendix_c_om_entries(job: &Job) -> Result<Measured, CheckError> {
    om_report(job, |r| r.product_entries)
}

fn appendix_c_h_residue(job: &Job) -> Result<Measured, CheckError> {
    om_report(job, |r| r.h_residue)
}

fn cascade_rank_bound(job: &Job) -> Result<Measured, CheckError> {
    let mut st = Structured::new(job)?;
    let n = st.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let (v, u) = st.pair(n, n + 3)?;
        track(&mut worst, cascade::product_rank(&st.p, &u, &v, st.x)?.det_ratio);
    }
    Ok(worst.into())
}

fn appendix_b_cauchy(job: &Job) -> Result<Measured, CheckError> {
    let mut st = Structured::new(job)?;
    let n = st.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        for size in [1, n, n + 1] {
            let (xs, ys) = st.pair(size, size)?;
            let lam = st.s.complex_box((-0.4, 0.4), (-0.2, 0.2));
            let ctx = st.p.ctx();
            let inv = cascade::cauchy_inverse(ctx, &xs, &ys, lam)?;
            track(&mut worst, cascade::identity_residual(&cascade::cauchy_matrix(ctx, &xs, &ys, lam)?, &inv)?);
        }
    }
    Ok(worst.into())
}

fn kappa2(job: &Job, which: usize) -> Result<Measured, CheckError> {
    let mut st = Structured::new(job)?;
    let n = st.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let (v, u) = st.pair(n, n - 1)?;
        let m = cascade::kappa2_inverses(&st.p, &u, &v, st.x)?;
        track(&mut worst, cascade::identity_residual(&m[which], &m[which + 1])?);
    }
    Ok(worst.into())
}

fn appendix_b_a_inverse(job: &Job) -> Result<Measured, CheckError> {
    kappa2(job, 0)
}

fn appendix_b_b_inverse(job: &Job) -> Result<Measured, CheckError> {
    kappa2(job, 2)
}

fn rank_one(job: &Job, pick: fn(&cascade::RankOneReport) -> f64) -> Result<Measured, CheckError> {
    let mut st = Structured::new(job)?;
    let n = st.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let (v, u) = st.pair(n, n - 1)?;
        track(&mut worst, pick(&cascade::rank_one_trace(&st.p, &u, &v, st.x)?));
    }
    Ok(worst.into())
}

fn cascade_rank_one(job: &Job) -> Result<Measured, CheckError> {
    rank_one(job, |r| r.deviation().max(r.det_vs_trace))
}

fn appendix_c_cal_a(job: &Job) -> Result<Measured, CheckError> {
    rank_one(job, |r| r.cal_a)
}

fn appendix_c_cal_b(job: &Job) -> Result<Measured, CheckError> {
    rank_one(job, |r| r.cal_b)
}

fn cascade_degenerate(job: &Job) -> Result<Measured, CheckError> {
    let mut st = Structured::new(job)?;
    let n = st.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let (v, u) = st.pair(n, 1)?;
        track(&mut worst, cascade::degenerate_trace(&st.p, u[0], &v, st.x)?.deviation());
    }
    Ok(worst.into())
}

fn cascade_genericity(job: &Job) -> Result<Measured, CheckError> {
    let mut st = Structured::new(job)?;
    let n = st.n();
    let mut smallest = f64::INFINITY;
    for _ in 0..GENERIC_DRAWS {
        st.new_x()?;
        let (v, u) = st.pair(n, n - 1)?;
        smallest = smallest.min(cascade::trace_assembled(&st.p, &u, &v, st.x)?.norm());
    }
    Ok((1.0 / smallest).into())
}

fn zero_report(job: &Job, pick: fn(&cascade::ZeroEigenReport) -> f64) -> Result<Measured, CheckError> {
    let mut st = Structured::new(job)?;
    let n = st.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let all = st.points(2 * n + 6)?;
        let (v, u, z) = (&all[..n], &all[n..2 * n + 3], &all[2 * n + 3..]);
        track(&mut worst, pick(&cascade::zero_eigenvectors(&st.p, u, v, z, st.x)?));
    }
    Ok(worst.into())
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, &b| if b.is_nan() { b } else { a.max(b) })
}

fn appendix_b_null_vectors(job: &Job) -> Result<Measured, CheckError> {
    zero_report(job, |r| max_of(&r.null_residuals))
}

fn appendix_b_null_dimension(job: &Job) -> Result<Measured, CheckError> {
    zero_report(job, |r| (r.null_dim as f64 - 3.0).abs())
}

fn appendix_b_bext(job: &Job) -> Result<Measured, CheckError> {
    zero_report(job, |r| r.inverse_product.max(r.inverse_columns))
}

fn appendix_b_y_null(job: &Job) -> Result<Measured, CheckError> {
    zero_report(job, |r| max_of(&r.y1_null))
}

fn cascade_y0(job: &Job) -> Result<Measured, CheckError> {
    zero_report(job, |r| r.y0_form)
}

fn appendix_c_contour_sum(job: &Job) -> Result<Measured, CheckError> {
    let mut st = Structured::new(job)?;
    let n = st.n();
    let mut worst = 0.0;
    for _ in 0..DRAWS {
        let (v, u) = st.pair(n, n - 1)?;
        for (g, j) in cascade::contour_sum_cal_a(&st.p, &u, &v, st.x)? {
            track(&mut worst, rel(g, j, 0.0));
        }
    }
    Ok(worst.into())
}

macro_rules! check {
    ($group:literal, $name:literal, $identity:literal, $tol:expr, $sizes:expr, $f:ident) => {
        Check { group: $group, name: $name, identity: $identity, tolerance: $tol, sizes: $sizes, run: $f }
    };
}

use Sizes::{AtLeast, Global};

/// Every check the harness knows, in registry order.
pub static CHECKS: &[Check] = &[
    check!("theta", "shift", "half-period and quasi-period shifts of theta1, theta2", 1e-11, Global, theta_shift),
    check!("theta", "doubling", "2 theta1(u+v|2tau) theta4(u-v|2tau) = theta1(u)theta2(v) + theta2(u)theta1(v)", 1e-11, Global, theta_doubling),
    check!("theta", "product", "theta1(u)theta2(v) as a sum of doubled-modulus products", 1e-11, Global, theta_product),
    check!("theta", "diagonal", "theta1(u)theta2(u) = theta1(2u|2tau)theta4(0|2tau)", 1e-11, Global, theta_diagonal),
    check!("theta", "derivative-ratio", "theta1'(0|tau)/theta1'(0|2tau) = 2 theta4(0|2tau)/theta2(0|tau)", 1e-11, Global, theta_derivative_ratio),
    check!("theta", "alpha-support", "alpha-hat vanishes at mu = 1, 3; alpha-hat_0 +- alpha-hat_2 = 4 alpha", 1e-11, Global, theta_alpha_support),
    check!("theta", "beta-parity", "beta_(l+2) = -beta_l; beta-hat_1 +- beta-hat_3 = 4(-i)^eps beta_eps", 1e-11, Global, theta_beta_parity),
    check!("hilbert", "pairing-associativity", "bilinear pairing: (w Op) v = w (Op v)", 1e-11, Global, hilbert_associativity),
    check!("hilbert", "kron-mixed-product", "kron(A,B) kron(C,D) = kron(AC,BD)", 1e-12, Global, hilbert_kron),
    check!("hilbert", "inverse", "LU inverse: M M^-1 = I", 1e-10, Global, hilbert_inverse),
    check!("vertex", "free-fermion-coupling", "J_z = 0 at eta = 1/2", 1e-12, Global, vertex_free_fermion),
    check!("vertex", "rtt", "RTT relation of the monodromy", 1e-10, AtLeast(2), vertex_rtt),
    check!("vertex", "transfer-commute", "[T(u), T(v)] = 0", 1e-10, AtLeast(2), vertex_transfer_commute),
    check!("vertex", "hamiltonian", "log-derivative of T(u) against the XYZ Hamiltonian, generic eta", 1e-8, AtLeast(2), vertex_hamiltonian),
    check!("vertex", "block-parity", "A, D keep and B, C flip the sigma^z parity", 1e-12, AtLeast(2), vertex_block_parity),
    check!("gauge", "vacuum-actions", "C, A, D on the right vacua and B, A, D on the dual vacua", 1e-10, AtLeast(2), gauge_vacuum),
    check!("gauge", "det-index-independence", "det M_k(u) = 2 theta1(y+u)/theta2(0) for k in -4..4", 1e-11, AtLeast(2), gauge_det),
    check!("bethe", "root-count", "N roots of chi_nu in the cell, argument-principle count", 1e-6, AtLeast(2), bethe_root_count),
    check!("bethe", "chi-residual", "|chi_nu| at refined roots relative to |a| + |d|", 1e-9, AtLeast(2), bethe_chi),
    check!("bethe", "twin-pairing", "roots pair up under z -> z +- 1/2", 1e-7, AtLeast(2), bethe_twins),
    check!("bethe", "eigenrelation", "T(z) acting on on-shell left and right Bethe vectors", 1e-9, AtLeast(2), bethe_eigen),
    check!("bethe", "twin-zeros", "T_nu and chi_nu vanish at the twins of the roots", 1e-9, AtLeast(2), bethe_twin_zeros),
    check!("bethe", "omega-forms", "Omega via a(v) and via d(v) agree", 1e-9, AtLeast(2), bethe_omega),
    check!("bethe", "u3-parity", "Bethe vectors lie in one sigma^z-parity sector", 1e-11, AtLeast(2), bethe_parity),
    check!("bethe", "overfull-vanishes", "N+1 creation operators on the vacuum give zero", 1e-10, AtLeast(2), bethe_overfull),
    check!("bethe", "symmetry", "Bethe vectors are symmetric in their parameters", 1e-9, AtLeast(2), bethe_symmetry),
    check!("scalar", "balanced", "balanced scalar products: closed form against brute force", 1e-8, AtLeast(2), scalar_balanced),
    check!("scalar", "kappa-plus1", "kappa = +1 closed form against brute force", 1e-8, AtLeast(2), scalar_plus1),
    check!("scalar", "kappa-plus1-route", "kappa = +1 closed form against the balanced form at {u, -y*}", 1e-10, AtLeast(2), scalar_plus1_route),
    check!("scalar", "kappa-minus1", "kappa = -1 double sum against brute force", 1e-7, AtLeast(2), scalar_minus1),
    check!("scalar", "kappa-plus2", "kappa = +2 scalar products vanish", 1e-10, AtLeast(4), scalar_kappa_plus2),
    check!("scalar", "kappa-minus2", "kappa = -2 scalar products vanish", 1e-10, AtLeast(4), scalar_kappa_minus2),
    check!("scalar", "selection-rule", "forbidden-sector scalar products vanish, kappa in -2..2", 1e-11, AtLeast(2), scalar_selection),
    check!("scalar", "permutation-symmetry", "scalar products are symmetric in u", 1e-10, AtLeast(2), scalar_permutation),
    check!("cascade", "sandwich", "homogeneous sandwich system at p = 0 with brute-force X", 1e-8, AtLeast(4), cascade_sandwich),
    check!("cascade", "eps-system", "epsilon-combined homogeneous system", 1e-8, AtLeast(4), cascade_eps_system),
    check!("cascade", "transformed-system", "homogeneous system after removing chi_nu", 1e-8, AtLeast(4), cascade_transformed),
    check!("cascade", "trivial-solution", "X vanishes for p = +-1", 1e-10, AtLeast(4), cascade_trivial),
    check!("cascade", "inhomogeneous", "odd-imbalance system, all terms from brute force", 1e-7, AtLeast(4), cascade_inhomogeneous),
    check!("cascade", "inhomogeneous-closed", "odd-imbalance system, balanced terms from the closed form", 1e-7, AtLeast(4), cascade_inhomogeneous_closed),
    check!("cascade", "direct-expression", "explicit X at w = -y* against brute force", 1e-8, AtLeast(4), cascade_direct),
    check!("cascade", "uj-independence", "X_j does not depend on u_j", 1e-9, AtLeast(4), cascade_uj),
    check!("cascade", "om-factorization", "I - Omega^1 Omega^0 = -theta2(0)^2/(theta1(x)theta2(x)) A B", 1e-9, AtLeast(4), cascade_om_factorized),
    check!("cascade", "rank-bound", "det(I - Omega^1 Omega^0) = 0 for p = -1", 1e-9, AtLeast(4), cascade_rank_bound),
    check!("cascade", "rank-one-trace", "1 + tr L: matrix assembly against closed form", 1e-8, AtLeast(4), cascade_rank_one),
    check!("cascade", "degenerate-trace", "1 + tr L at u_k = v_k against the factored form", 1e-6, AtLeast(6), cascade_degenerate),
    check!("cascade", "trace-genericity", "inverse of the smallest |1 + tr L| over random draws", 1e6, AtLeast(4), cascade_genericity),
    check!("cascade", "y0-propagation", "Y^0 of a null vector carries f(u_j, z_l-bar)", 1e-8, AtLeast(4), cascade_y0),
    check!("appendix-b", "cauchy-inverse", "closed-form inverse of the elliptic Cauchy matrix", 1e-9, AtLeast(4), appendix_b_cauchy),
    check!("appendix-b", "a-inverse", "closed-form inverse of the square part of A", 1e-9, AtLeast(4), appendix_b_a_inverse),
    check!("appendix-b", "b-inverse", "closed-form inverse of the square part of B", 1e-9, AtLeast(4), appendix_b_b_inverse),
    check!("appendix-b", "bext-inverse", "closed-form columns of the extended B inverse", 1e-9, AtLeast(4), appendix_b_bext),
    check!("appendix-b", "null-vectors", "M Psi = 0 for the three extracted vectors", 1e-9, AtLeast(4), appendix_b_null_vectors),
    check!("appendix-b", "null-dimension", "null space of M = A B has dimension 3", 0.5, AtLeast(4), appendix_b_null_dimension),
    check!("appendix-b", "y1-null", "product-form Y^1 is a null vector of I - Omega^1 Omega^0", 1e-9, AtLeast(4), appendix_b_y_null),
    check!("appendix-c", "om-product-entries", "(Omega^1 Omega^0)_jk through H_jk", 1e-9, AtLeast(4), appendix_c_om_entries),
    check!("appendix-c", "h-residue", "H_jk sum against its residue form", 1e-10, AtLeast(4), appendix_c_h_residue),
    check!("appendix-c", "contour-sum", "G_j + J_j = 0 for the cal-A sum", 1e-10, AtLeast(4), appendix_c_contour_sum),
    check!("appendix-c", "cal-a", "cal-A_j residue formula against A^-1 A_n", 1e-9, AtLeast(4), appendix_c_cal_a),
    check!("appendix-c", "cal-b", "cal-B_k residue formula against B_n B^-1", 1e-9, AtLeast(4), appendix_c_cal_b),
];

pub fn find(key: &str) -> Option<&'static Check> {
    CHECKS.iter().find(|c| c.key() == key)
}

/// Scalar-product checks that exercise imbalance `kappa`.
pub fn scalar_keys_for_kappa(kappa: i64) -> &'static [&'static str] {
    match kappa {
        0 => &["scalar.balanced"],
        1 => &["scalar.kappa-plus1", "scalar.kappa-plus1-route"],
        -1 => &["scalar.kappa-minus1"],
        2 => &["scalar.kappa-plus2"],
        -2 => &["scalar.kappa-minus2"],
        _ => &[],
    }
}

/// Whether [`requested_sector`] has something to compare at this (N, ν, κ, λ).
pub fn requested_applies(n_sites: usize, nu: i64, kappa: i64, lambda: i64) -> bool {
    let m = (n_sites / 2) as i64 - kappa;
    let forbidden = (nu + kappa - lambda).rem_euclid(2) != 0;
    (0..=n_sites as i64).contains(&m) && (forbidden || kappa % 2 == 0)
}

/// A requested sector λ at imbalance κ: vanishing when the selection rule
/// forbids it, closed form against brute force when κ = 0 allows it.
pub fn requested_sector(job: &Job, kappa: i64, lambda: i64) -> Result<Measured, CheckError> {
    let mut sc = scenario(job)?;
    let m = sc.params.n() as i64 - kappa;
    if m < 0 {
        return Err(CheckError::Setup(format!("kappa = {kappa} needs m = {m} >= 0")));
    }
    let us = sc.free_params(m as usize)?;
    let os = &sc.on_shell;
    let lam = lambda.rem_euclid(4);
    if os.forbidden_sectors(m as usize).contains(&lam) {
        return Ok(Measured { residual: os.vanishing_ratio(&us, &[lam])?, flag: Some("selection-rule") });
    }
    match kappa {
        0 => Ok(rel_dev(os.brute_force_sp(lam, &us)?, os.balanced_closed_form(lam, &us)?).into()),
        2 | -2 => Ok(os.vanishing_ratio(&us, &[lam])?.into()),
        _ => Err(CheckError::Setup(format!("no single-sector closed form at kappa = {kappa}"))),
    }
}

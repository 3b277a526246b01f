//! Seeded draws of inhomogeneities, gauge parameters and free spectral
//! parameters, plus the assembled on-shell scenario used by the checks.

use crate::bethe::{solve_bethe_roots, BetheError, BetheRootSet, PreBetheSet, RootOptions};
use crate::gauge::{GaugeError, GaugeIndexWindow, GaugeParams};
use crate::linalg::rel_l2;
use crate::scalar::{OnShell, ScalarError};
use crate::theta::{Eta, ModularContext, ThetaError};
use crate::vertex::{ModelParams, VertexError};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const DEFAULT_TAU: C64 = C64::new(0.1, 0.9);
const MAX_TRIES: usize = 10_000;
const GAUGE_RETRIES: usize = 32;
/// Accepted disagreement between on-shell vectors built in opposite root orders.
pub const ORACLE_COND_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Vertex(#[from] VertexError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Bethe(#[from] BetheError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("rejection sampling gave up after {0} tries")]
    Exhausted(usize),
}

/// Exclusion rules for free parameters, distances taken modulo ½Z + τZ.
#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub points: Vec<C64>,
    pub min_pair: f64,
    pub min_point: f64,
}

impl Exclusion {
    pub fn new(points: Vec<C64>) -> Self {
        Exclusion { points, min_pair: 0.05, min_point: 0.02 }
    }
}

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn complex_box(&mut self, re: (f64, f64), im: (f64, f64)) -> C64 {
        C64::new(self.rng.random_range(re.0..re.1), self.rng.random_range(im.0..im.1))
    }

    pub fn u64(&mut self) -> u64 {
        self.rng.random()
    }

    /// Distinct inhomogeneities near the real axis.
    pub fn xi(&mut self, n_sites: usize) -> Result<Vec<C64>, SampleError> {
        for _ in 0..MAX_TRIES {
            let xi: Vec<C64> = (0..n_sites).map(|_| self.complex_box((-0.25, 0.25), (-0.08, 0.08))).collect();
            let ok = (0..n_sites).all(|i| (i + 1..n_sites).all(|j| (xi[i] - xi[j]).norm() > 0.02));
            if ok {
                return Ok(xi);
            }
        }
        Err(SampleError::Exhausted(MAX_TRIES))
    }

    /// Gauge (s, t) with components in [−0.4, 0.4], away from the singular loci.
    pub fn gauge(&mut self, p: &ModelParams, window: GaugeIndexWindow) -> Result<GaugeParams, SampleError> {
        let ctx = p.ctx();
        for _ in 0..MAX_TRIES {
            let s = self.complex_box((-0.4, 0.4), (-0.4, 0.4));
            let t = self.complex_box((-0.4, 0.4), (-0.4, 0.4));
            let g = GaugeParams::new(s, t);
            if ctx.lattice_distance(g.x(), 0.5) < 0.05 || ctx.lattice_distance(g.y(), 0.5) < 0.05 {
                continue;
            }
            if g.validate(p, window).is_ok() {
                return Ok(g);
            }
        }
        Err(SampleError::Exhausted(MAX_TRIES))
    }

    /// `count` free parameters in 0 ≤ Re < 1, |Im| ≤ 0.15.
    pub fn params(&mut self, count: usize, ex: &Exclusion, ctx: &ModularContext) -> Result<Vec<C64>, SampleError> {
        for _ in 0..MAX_TRIES {
            let mut out: Vec<C64> = Vec::with_capacity(count);
            let mut ok = true;
            for _ in 0..count {
                let z = self.complex_box((0.0, 1.0), (-0.15, 0.15));
                let far_pts = ex.points.iter().all(|&q| ctx.lattice_distance(z - q, 0.5) >= ex.min_point);
                let far_pair = out.iter().all(|&q| ctx.lattice_distance(z - q, 0.5) >= ex.min_pair);
                if !(far_pts && far_pair) {
                    ok = false;
                    break;
                }
                out.push(z);
            }
            if ok {
                return Ok(out);
            }
        }
        Err(SampleError::Exhausted(MAX_TRIES))
    }
}

/// Roundoff estimate for the on-shell vectors: they are symmetric in the
/// roots, so building them in reverse order exposes amplified rounding.
pub fn on_shell_conditioning(nu: i64, roots: &[C64], p: &ModelParams, g: &GaugeParams) -> Result<f64, SampleError> {
    let mut rev = roots.to_vec();
    rev.reverse();
    let mut worst: f64 = 0.0;
    for side in [PreBetheSet::left, PreBetheSet::right] {
        let a = side(roots, p, g)?.fourier(nu, p);
        let b = side(&rev, p, g)?.fourier(nu, p);
        worst = worst.max(rel_l2(&a, &b));
    }
    Ok(worst)
}

/// Model, gauge, solved roots and the on-shell dual vector for one sector ν.
#[derive(Debug)]
pub struct Scenario {
    pub params: ModelParams,
    pub gauge: GaugeParams,
    pub roots: BetheRootSet,
    pub on_shell: OnShell,
    pub sampler: Sampler,
}

impl Scenario {
    /// Random ξ̄ and gauge from `seed`; τ and ν given.
    pub fn random(n_sites: usize, tau: C64, nu: i64, seed: u64) -> Result<Self, SampleError> {
        let mut sampler = Sampler::new(seed);
        let ctx = ModularContext::new(tau)?;
        let xi = sampler.xi(n_sites)?;
        let params = ModelParams::new(n_sites, Eta::HALF, ctx, xi)?;
        let gauge = sampler.gauge(&params, GaugeIndexWindow::for_bethe(params.n() + 2))?;
        Self::from_parts(params, gauge, nu, sampler)
    }

    pub fn from_parts(params: ModelParams, gauge: GaugeParams, nu: i64, sampler: Sampler) -> Result<Self, SampleError> {
        Self::from_parts_with_grid(params, gauge, nu, sampler, RootOptions::default().grid)
    }

    pub fn from_parts_with_grid(params: ModelParams, gauge: GaugeParams, nu: i64, mut sampler: Sampler, grid: usize) -> Result<Self, SampleError> {
        let roots = solve_bethe_roots(nu, &params, &RootOptions { grid, ..RootOptions::default() })?;
        // resample the gauge while T_ν(−y*) vanishes or the on-shell vectors are ill-conditioned
        let mut gauge = gauge;
        let mut best: Option<(f64, GaugeParams, OnShell)> = None;
        for _ in 0..GAUGE_RETRIES {
            let on_shell = OnShell::new(nu, &roots.selected, &params, &gauge)?;
            let t_ok = on_shell.t_nu(gauge.minus_y_star()).map(|t| t.norm() > 1e-6).unwrap_or(false);
            let cond = if t_ok { on_shell_conditioning(nu, &roots.selected, &params, &gauge)? } else { f64::INFINITY };
            if best.as_ref().is_none_or(|b| cond < b.0) {
                best = Some((cond, gauge, on_shell));
            }
            if cond <= ORACLE_COND_TOL {
                break;
            }
            gauge = sampler.gauge(&params, GaugeIndexWindow::for_bethe(params.n() + 2))?;
        }
        let (_, gauge, on_shell) = best.expect("at least one attempt");
        Ok(Scenario { params, gauge, roots, on_shell, sampler })
    }

    /// Free parameters kept away from v̄, ξ̄ and ±y, −y*.
    pub fn free_params(&mut self, count: usize) -> Result<Vec<C64>, SampleError> {
        let mut pts: Vec<C64> = self.on_shell.roots.clone();
        pts.extend_from_slice(self.params.xi());
        pts.extend([self.gauge.y(), -self.gauge.y(), self.gauge.minus_y_star()]);
        let ex = Exclusion::new(pts);
        self.sampler.params(count, &ex, self.params.ctx())
    }
}

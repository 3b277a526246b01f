#![allow(dead_code)]

use ffaba::sampling::{Exclusion, Sampler, Scenario, DEFAULT_TAU};
use ffaba::theta::{Eta, ModularContext};
use ffaba::vertex::ModelParams;
use ffaba::C64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn scenario(n_sites: usize, seed: u64) -> Scenario {
    Scenario::random(n_sites, DEFAULT_TAU, 0, seed).expect("scenario")
}

pub fn scenario_nu(n_sites: usize, nu: i64, seed: u64) -> Scenario {
    Scenario::random(n_sites, DEFAULT_TAU, nu, seed).expect("scenario")
}

pub fn model(n_sites: usize, seed: u64) -> (ModelParams, Sampler) {
    let mut s = Sampler::new(seed);
    let ctx = ModularContext::new(DEFAULT_TAU).unwrap();
    let xi = s.xi(n_sites).unwrap();
    (ModelParams::new(n_sites, Eta::HALF, ctx, xi).unwrap(), s)
}

pub fn generic(s: &mut Sampler, p: &ModelParams, count: usize) -> Vec<C64> {
    s.params(count, &Exclusion::new(vec![]), p.ctx()).unwrap()
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

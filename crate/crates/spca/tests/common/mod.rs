#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spca::linalg::{self, cplx, herm, CMat};
use spca::model::{generate_scenario, Blocks, Evaluation, GeneratorConfig, RatePowerModel, Scenario};
use nalgebra::Complex;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small(seed: u64) -> Scenario<f64> {
    generate_scenario(&GeneratorConfig { links: 3, tx_antennas: 4, rx_antennas: 2, ..Default::default() }, seed).unwrap()
}

pub fn small_with_g(seed: u64, g: RatePowerModel<f64>) -> Scenario<f64> {
    generate_scenario(&GeneratorConfig { links: 3, tx_antennas: 3, rx_antennas: 2, g, ..Default::default() }, seed).unwrap()
}

pub fn rand_mat(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CMat<f64> {
    CMat::from_fn(n, m, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

pub fn rand_herm(rng: &mut ChaCha8Rng, n: usize) -> CMat<f64> {
    herm(&rand_mat(rng, n, n))
}

/// Random positive definite block with trace `frac · P`.
pub fn rand_block(rng: &mut ChaCha8Rng, n: usize, p: f64, frac: f64) -> CMat<f64> {
    let g = rand_mat(rng, n, n);
    let m = herm(&(&g * g.adjoint())) + linalg::scaled_eye(n, 0.05);
    let tr = linalg::trace_re(&m);
    m * cplx(frac * p / tr)
}

/// Interior point of the power-feasible set.
pub fn rand_point(sc: &Scenario<f64>, rng: &mut ChaCha8Rng) -> Blocks<f64> {
    Blocks(
        sc.links()
            .iter()
            .map(|l| {
                let frac = 0.2 + 0.7 * rng.random::<f64>();
                rand_block(rng, l.tx_antennas, l.p_max, frac)
            })
            .collect(),
    )
}

pub fn rand_direction(sc: &Scenario<f64>, rng: &mut ChaCha8Rng) -> Blocks<f64> {
    Blocks(sc.links().iter().map(|l| rand_herm(rng, l.tx_antennas)).collect())
}

pub fn gee(sc: &Scenario<f64>, q: &Blocks<f64>) -> f64 {
    Evaluation::new(sc, q.clone()).unwrap().gee()
}

pub fn see(sc: &Scenario<f64>, q: &Blocks<f64>) -> f64 {
    Evaluation::new(sc, q.clone()).unwrap().see()
}

/// Central difference of `f` at `q` along `dir`.
pub fn directional(f: impl Fn(&Blocks<f64>) -> f64, q: &Blocks<f64>, dir: &Blocks<f64>, h: f64) -> f64 {
    let shift = |s: f64| Blocks(q.iter().zip(dir.iter()).map(|(a, d)| a + d * cplx(s)).collect());
    (f(&shift(h)) - f(&shift(-h))) / (2.0 * h)
}

/// Scenario whose targets are `fraction` of the rates at a lopsided feasible
/// start (link 0 at full power, the others at 10%), so some targets bind.
pub fn binding_instance(seed: u64, fraction: f64) -> (Scenario<f64>, Blocks<f64>) {
    let sc = small(seed);
    let mut q0 = Blocks::uniform_full_power(&sc);
    for k in 1..sc.num_links() {
        q0[k] *= cplx(0.1);
    }
    let ev = Evaluation::new(&sc, q0.clone()).unwrap();
    let targets: Vec<f64> = ev.rates.iter().map(|r| fraction * r).collect();
    (sc.with_rate_targets(&targets).unwrap(), q0)
}

//! Finite-count statistics at φ = 0: the spread of Ŝ across seeds, the 1/√N
//! scaling of σ_S, and bootstrap against propagated errors.

use std::f64::consts::SQRT_2;

use chip_contextuality::chip::Device;
use chip_contextuality::montecarlo::{
    bootstrap_sigma_s, estimate_s, sample_counts, substream_seed, CountRecord,
};
use chip_contextuality::Context;

fn records(table: &[[f64; 4]; 4], n: u64, seed: u64) -> chip_contextuality::Result<Vec<CountRecord>> {
    Context::ALL
        .iter()
        .zip(table)
        .map(|(c, p)| sample_counts(*c, p, n, substream_seed(seed, c.index() as u64)))
        .collect()
}

fn main() -> chip_contextuality::Result<()> {
    let table = Device::Ideal.probabilities(0.0)?;
    let target = 2.0 * SQRT_2;

    let runs = 1000;
    let mut inside = 0;
    for seed in 0..runs {
        let est = estimate_s(&records(&table, 10_000, seed)?)?;
        if (est.s - target).abs() < 5.0 * est.sigma_s {
            inside += 1;
        }
    }
    println!("N = 1e4: {inside}/{runs} runs within 5 sigma of 2*sqrt2");

    let mut prev: Option<f64> = None;
    for n in [1_000, 4_000, 16_000, 64_000] {
        let est = estimate_s(&records(&table, n, 7)?)?;
        let ratio = prev.map_or(String::new(), |p| format!("  ratio to previous {:.3}", est.sigma_s / p));
        println!("N = {n:6}: S = {:.4} ± {:.5}{ratio}", est.s, est.sigma_s);
        prev = Some(est.sigma_s);
    }

    let recs = records(&Device::Ideal.probabilities(1.0)?, 10_000, 3)?;
    let prop = estimate_s(&recs)?.sigma_s;
    let boot = bootstrap_sigma_s(&recs, 1000, 3)?;
    println!("phi = 1: propagated sigma_S = {prop:.5}, bootstrap sigma_S = {boot:.5}");
    Ok(())
}

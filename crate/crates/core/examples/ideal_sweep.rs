//! Exact S(φ) of the ideal chip next to the closed form √2(1 + cos φ).
//!
//!     cargo run --example ideal_sweep -- [steps]

use std::f64::consts::{SQRT_2, TAU};
use std::io;

use chip_contextuality::pipeline::{run_sweep, write_sweep_csv, SweepSpec};

fn main() -> chip_contextuality::Result<()> {
    let steps = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("steps must be an integer"))
        .unwrap_or(21);
    let result = run_sweep(&SweepSpec::analytic(0.0, TAU, steps))?;

    let mut worst = 0.0_f64;
    for row in &result.rows {
        let closed = SQRT_2 * (1.0 + row.phi.cos());
        worst = worst.max((row.s - closed).abs());
        let mark = if row.s > row.bound { "violates" } else { "" };
        eprintln!("phi = {:7.4}  S = {:8.5}  closed form = {:8.5}  {mark}", row.phi, row.s, closed);
    }
    eprintln!("largest deviation from the closed form: {worst:.2e}");
    eprintln!("violation for |phi| < arccos(sqrt2 - 1) = {:.6}", (SQRT_2 - 1.0).acos());

    write_sweep_csv(&result.rows, io::stdout().lock())
}

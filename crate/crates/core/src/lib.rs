//! Simulator and analysis bench for a single-photon CHSH-like contextuality
//! test on a pair of four-mode photonic chips.
//!
//! A photon spread over four waveguides encodes two qubits: the *letter*
//! (which half of the chip) and the *digit* (mode parity). A preparation chip
//! sets up a φ-dependent superposition, and one of four measurement chips
//! applies `X` or `Z` to each qubit before detection. From the four outcome
//! distributions the crate computes
//!
//! `S = ⟨X₁₂X_AB⟩ + ⟨X₁₂Z_AB⟩ + ⟨Z₁₂X_AB⟩ − ⟨Z₁₂Z_AB⟩`,
//!
//! the compatibility correction `ε` of the classical bound `2 + ε`, and the
//! significance of a violation. A classical Galton-board model gives the
//! non-contextual baseline.
//!
//! ```
//! use chip_contextuality::pipeline::{run_sweep, SweepSpec};
//!
//! let sweep = run_sweep(&SweepSpec::analytic(0.0, std::f64::consts::PI, 3)).unwrap();
//! assert!((sweep.rows[0].s - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod calibration;
pub mod chip;
pub mod context;
pub mod error;
pub mod galton;
pub mod montecarlo;
pub mod optics;
pub mod pipeline;

pub use context::{Basis, Context};
pub use error::{Error, Result};

//! Phase calibration of circuit skeletons by damped least squares.
//!
//! A [`Skeleton`] is a fixed sequence of circuit sections interleaved with
//! layers of free single-mode phases. Calibration searches the free phases so
//! that the assembled circuit reproduces a target either as a unitary, up to
//! output-side diagonal phases (which no detector can see), or as an output
//! state for a given input mode, up to a global phase.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::optics::{phase_layer, ModeVector, TransferMatrix, MODES};

/// Acceptance threshold on the probe residual.
pub const CALIBRATION_TOL: f64 = 1e-9;

const PROBE_STATES: usize = 100;
const PROBE_SEED: u64 = 0xCA1B_0000_0000_0001;
const RESTART_SEED: u64 = 0xCA1B_0000_0000_0002;
const RANDOM_RESTARTS: usize = 24;
const MAX_ITER: usize = 300;
const FD_STEP: f64 = 1e-7;

#[derive(Clone, Debug)]
pub enum Stage {
    Fixed(TransferMatrix),
    /// One free phase per listed (1-based) mode.
    FreePhases(Vec<usize>),
}

#[derive(Clone, Debug, Default)]
pub struct Skeleton {
    stages: Vec<Stage>,
}

impl Skeleton {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fixed(mut self, section: TransferMatrix) -> Self {
        self.stages.push(Stage::Fixed(section));
        self
    }

    pub fn free_phases(mut self, modes: &[usize]) -> Result<Self> {
        if let Some(&bad) = modes.iter().find(|&&m| !(1..=MODES).contains(&m)) {
            return Err(Error::InvalidSpec(format!("free phase on invalid mode {bad}")));
        }
        self.stages.push(Stage::FreePhases(modes.to_vec()));
        Ok(self)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn parameter_count(&self) -> usize {
        self.stages
            .iter()
            .map(|s| match s {
                Stage::Fixed(_) => 0,
                Stage::FreePhases(m) => m.len(),
            })
            .sum()
    }

    /// Builds the circuit with `phases` filled into the free slots in order.
    pub fn assemble(&self, phases: &[f64]) -> Result<TransferMatrix> {
        if phases.len() != self.parameter_count() {
            return Err(Error::InvalidSpec(format!(
                "skeleton takes {} phases, got {}",
                self.parameter_count(),
                phases.len()
            )));
        }
        let mut rest = phases;
        let mut acc = TransferMatrix::identity();
        for stage in &self.stages {
            let section = match stage {
                Stage::Fixed(m) => *m,
                Stage::FreePhases(modes) => {
                    let (mine, tail) = rest.split_at(modes.len());
                    rest = tail;
                    let mut layer = [0.0; MODES];
                    for (&m, &p) in modes.iter().zip(mine) {
                        layer[m - 1] += p;
                    }
                    phase_layer(layer)
                }
            };
            acc = acc.then(&section);
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug)]
pub enum CalibrationTarget {
    /// Match a unitary up to output-side diagonal phases.
    Unitary(TransferMatrix),
    /// Match the state produced from a photon injected in `input_mode`,
    /// up to a global phase.
    State { input_mode: usize, state: ModeVector },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// Free phases wrapped into `(-π, π]`, in skeleton order.
    pub phases: Vec<f64>,
    /// Probe residual of the calibrated circuit; see [`probe_residual`].
    pub residual: f64,
}

/// Fixed random probe set shared by every calibration check.
pub fn probe_states() -> Vec<ModeVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    (0..PROBE_STATES).map(|_| ModeVector::random(&mut rng)).collect()
}

/// How far `circuit` is from `target`.
///
/// For a unitary target this is the largest outcome-probability deviation over
/// the probe states. For a state target it is the largest amplitude deviation
/// after removing the global phase.
pub fn probe_residual(target: &CalibrationTarget, circuit: &TransferMatrix) -> Result<f64> {
    match target {
        CalibrationTarget::Unitary(t) => {
            let mut worst = 0.0_f64;
            for v in probe_states() {
                let got = circuit.apply(&v).probabilities();
                let want = t.apply(&v).probabilities();
                for (g, w) in got.iter().zip(want.iter()) {
                    worst = worst.max((g - w).abs());
                }
            }
            Ok(worst)
        }
        CalibrationTarget::State { input_mode, state } => {
            let out = circuit.apply(&ModeVector::localized(*input_mode)?);
            Ok(out.distance_up_to_phase(state))
        }
    }
}

fn residual_vector(target: &CalibrationTarget, circuit: &TransferMatrix) -> Vec<f64> {
    match target {
        CalibrationTarget::Unitary(t) => {
            // U ≃ D·T for diagonal unitary D  ⇔  U·T† is diagonal.
            let prod = circuit * &t.dagger();
            let mut r = Vec::with_capacity(2 * MODES * (MODES - 1));
            for i in 0..MODES {
                for j in 0..MODES {
                    if i != j {
                        let e = prod.entry(i, j);
                        r.push(e.re);
                        r.push(e.im);
                    }
                }
            }
            r
        }
        CalibrationTarget::State { input_mode, state } => {
            let mut col = [Complex64::new(0.0, 0.0); MODES];
            for (i, c) in col.iter_mut().enumerate() {
                *c = circuit.entry(i, input_mode - 1);
            }
            let overlap = ModeVector::new(col).inner(state).conj();
            let rot = if overlap.norm() > 0.0 {
                overlap / overlap.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let mut r = Vec::with_capacity(2 * MODES);
            for (c, t) in col.iter().zip(state.amplitudes()) {
                let d = c - t * rot;
                r.push(d.re);
                r.push(d.im);
            }
            r
        }
    }
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Calibrates `skeleton` against `target` starting from zeros and a fixed set
/// of random restarts.
pub fn calibrate_physical(target: &CalibrationTarget, skeleton: &Skeleton) -> Result<Calibration> {
    calibrate_seeded(target, skeleton, None)
}

/// Like [`calibrate_physical`], trying `seed` phases first.
pub fn calibrate_seeded(
    target: &CalibrationTarget,
    skeleton: &Skeleton,
    seed: Option<&[f64]>,
) -> Result<Calibration> {
    if let CalibrationTarget::State { input_mode, .. } = target {
        ModeVector::localized(*input_mode)?;
    }
    let n = skeleton.parameter_count();
    if let Some(s) = seed {
        if s.len() != n {
            return Err(Error::InvalidSpec(format!(
                "seed has {} phases, skeleton takes {n}",
                s.len()
            )));
        }
    }

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(s) = seed {
        starts.push(s.to_vec());
    }
    starts.push(vec![0.0; n]);
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    for _ in 0..RANDOM_RESTARTS {
        starts.push((0..n).map(|_| rng.random_range(-PI..PI)).collect());
    }

    let cost_fn = |phases: &[f64]| -> Vec<f64> {
        // assemble only fails on a length mismatch, excluded above
        let u = skeleton.assemble(phases).expect("phase count checked");
        residual_vector(target, &u)
    };

    let mut best: Option<Calibration> = None;
    for start in starts {
        let solved = levenberg_marquardt(&cost_fn, start);
        let phases: Vec<f64> = solved.into_iter().map(wrap_phase).collect();
        let residual = probe_residual(target, &skeleton.assemble(&phases)?)?;
        let improved = best.as_ref().is_none_or(|b| residual < b.residual);
        if improved {
            best = Some(Calibration { phases, residual });
        }
        if residual < CALIBRATION_TOL {
            break;
        }
    }
    let best = best.expect("at least one start");
    if best.residual < CALIBRATION_TOL {
        Ok(best)
    } else {
        Err(Error::CalibrationFailed {
            residual: best.residual,
            tolerance: CALIBRATION_TOL,
        })
    }
}

fn half_norm_sqr(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Levenberg damped Gauss-Newton with a central-difference Jacobian.
fn levenberg_marquardt<F>(f: &F, mut x: Vec<f64>) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    if n == 0 {
        return x;
    }
    let mut r = f(&x);
    let mut cost = half_norm_sqr(&r);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITER {
        if cost < 1e-30 {
            break;
        }
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        let mut probe = x.clone();
        for k in 0..n {
            probe[k] = x[k] + FD_STEP;
            let plus = f(&probe);
            probe[k] = x[k] - FD_STEP;
            let minus = f(&probe);
            probe[k] = x[k];
            for i in 0..m {
                jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * FD_STEP);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * &rv;

        let mut accepted = false;
        while lambda < 1e16 {
            let damped = &jtj + DMatrix::<f64>::identity(n, n) * lambda;
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let candidate: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let cr = f(&candidate);
            let cc = half_norm_sqr(&cr);
            if cc < cost {
                let small_step = step.norm() < 1e-15;
                x = candidate;
                r = cr;
                cost = cc;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if small_step {
                    return x;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    x
}

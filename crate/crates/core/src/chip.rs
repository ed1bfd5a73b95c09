//! Preparation and measurement chips.
//!
//! The preparation chip is a binary tree of three couplers fed from mode 1:
//! C1 on (1, 3) splits the letter, R1 adds `φ` to the left branch, C2 on (1, 2)
//! and C3 on (3, 4) split the digit, and R2..R4 trim the phases of modes 2..4.
//!
//! Each measurement circuit applies `M₁₂` to the digit qubit and `N_AB` to the
//! letter qubit. `Z` is a straight waveguide. A physical `X₁₂` is a balanced
//! coupler on each of (1, 2) and (3, 4); a physical `X_AB` crosses modes 2 and 3,
//! couples the now-adjacent pairs and crosses back.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_seeded, Calibration, CalibrationTarget, Skeleton};
use crate::context::{Basis, Context};
use crate::error::{Error, Result};
use crate::optics::{
    check_transmissivity, coupler, crossing, phase_shifter, CouplerSpec, ModeVector,
    TransferMatrix, MODES,
};

/// Mode the heralded photon is injected into on the preparation chip.
pub const PREPARATION_INPUT_MODE: usize = 1;

/// Coupler transmissivities (C1, C2, C3) that produce the target magnitudes.
pub fn default_preparation_ts() -> [f64; 3] {
    [0.5, (2.0 - SQRT_2) / 4.0, (2.0 + SQRT_2) / 4.0]
}

/// R2..R4 phases that align the default tree with the target state.
pub fn default_preparation_phases() -> [f64; 3] {
    [-PI / 2.0, -PI / 2.0, 0.0]
}

/// Target preparation state:
/// `(e^{iφ}|00⟩ + (1+√2)(e^{iφ}|01⟩ + |10⟩) − |11⟩) / (2√(2+√2))`.
pub fn prepare_state_direct(phi: f64) -> ModeVector {
    let norm = 2.0 * (2.0 + SQRT_2).sqrt();
    let big = 1.0 + SQRT_2;
    let e = Complex64::from_polar(1.0, phi);
    ModeVector::new([
        e / norm,
        e * big / norm,
        Complex64::new(big / norm, 0.0),
        Complex64::new(-1.0 / norm, 0.0),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparationConfig {
    /// R1 phase in radians.
    #[serde(default)]
    pub phi: f64,
    /// Transmissivities of C1, C2, C3.
    #[serde(rename = "coupler_Ts", default = "default_preparation_ts")]
    pub coupler_ts: [f64; 3],
    /// R2, R3, R4 in radians.
    #[serde(default = "default_preparation_phases")]
    pub calibration_phases: [f64; 3],
}

impl Default for PreparationConfig {
    fn default() -> Self {
        Self {
            phi: 0.0,
            coupler_ts: default_preparation_ts(),
            calibration_phases: default_preparation_phases(),
        }
    }
}

impl PreparationConfig {
    pub fn with_phi(phi: f64) -> Self {
        Self {
            phi,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &t in &self.coupler_ts {
            check_transmissivity(t)?;
        }
        if !self.phi.is_finite() || self.calibration_phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidSpec("preparation phases must be finite".into()));
        }
        Ok(())
    }

    /// Couplers and R1 with R2..R4 left free.
    pub fn skeleton(&self) -> Result<Skeleton> {
        self.validate()?;
        let [t1, t2, t3] = self.coupler_ts;
        Skeleton::new()
            .fixed(coupler(&CouplerSpec::new(1, 3, t1)?)?)
            .fixed(phase_shifter(&[1, 2], self.phi)?)
            .fixed(coupler(&CouplerSpec::new(1, 2, t2)?)?)
            .fixed(coupler(&CouplerSpec::new(3, 4, t3)?)?)
            .free_phases(&[2, 3, 4])
    }

    pub fn circuit(&self) -> Result<TransferMatrix> {
        self.skeleton()?.assemble(&self.calibration_phases)
    }
}

/// Propagates the injected photon through the preparation chip.
pub fn prepare_state_circuit(config: &PreparationConfig) -> Result<ModeVector> {
    let u = config.circuit()?;
    Ok(u.apply(&ModeVector::localized(PREPARATION_INPUT_MODE)?))
}

/// Solves R2..R4 so the chip reproduces [`prepare_state_direct`] at the
/// configured `φ`.
pub fn calibrate_preparation(config: &PreparationConfig) -> Result<Calibration> {
    let target = CalibrationTarget::State {
        input_mode: PREPARATION_INPUT_MODE,
        state: prepare_state_direct(config.phi),
    };
    calibrate_seeded(
        &target,
        &config.skeleton()?,
        Some(&default_preparation_phases()),
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceMode {
    /// Exact Hadamard/identity tensor products.
    #[default]
    Ideal,
    /// Coupler, crossing and phase composition.
    Physical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub context: Context,
    #[serde(default)]
    pub mode: DeviceMode,
    /// Physical mode only; see [`coupler_count`] for length and order.
    /// Defaults to balanced couplers.
    #[serde(rename = "coupler_Ts", default, skip_serializing_if = "Option::is_none")]
    pub coupler_ts: Option<Vec<f64>>,
    /// Physical mode only; four phases per free layer. Defaults to the
    /// calibration of the balanced circuit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_phases: Option<Vec<f64>>,
}

impl MeasurementConfig {
    pub fn ideal(context: Context) -> Self {
        Self {
            context,
            mode: DeviceMode::Ideal,
            coupler_ts: None,
            calibration_phases: None,
        }
    }

    pub fn physical(context: Context) -> Self {
        Self {
            mode: DeviceMode::Physical,
            ..Self::ideal(context)
        }
    }

    pub fn with_coupler_ts(mut self, ts: Vec<f64>) -> Self {
        self.coupler_ts = Some(ts);
        self
    }

    pub fn resolved_coupler_ts(&self) -> Result<Vec<f64>> {
        let n = coupler_count(self.context);
        let ts = self.coupler_ts.clone().unwrap_or_else(|| vec![0.5; n]);
        if ts.len() != n {
            return Err(Error::InvalidSpec(format!(
                "context {} has {n} couplers, got {} transmissivities",
                self.context,
                ts.len()
            )));
        }
        for &t in &ts {
            check_transmissivity(t)?;
        }
        Ok(ts)
    }
}

fn hadamard() -> [[Complex64; 2]; 2] {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn identity2() -> [[Complex64; 2]; 2] {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [[one, zero], [zero, one]]
}

fn basis_gate(b: Basis) -> [[Complex64; 2]; 2] {
    match b {
        Basis::X => hadamard(),
        Basis::Z => identity2(),
    }
}

/// `N_AB ⊗ M₁₂` with `X ↦ H` and `Z ↦ I`.
pub fn ideal_measurement(context: Context) -> TransferMatrix {
    TransferMatrix::kron(basis_gate(context.letter), basis_gate(context.digit))
}

/// Couplers in the physical circuit, listed in the order their
/// transmissivities appear in `coupler_Ts`: the digit pair (1,2), (3,4) first,
/// then the letter pair (1,3), (2,4).
pub fn coupler_count(context: Context) -> usize {
    2 * [context.digit, context.letter]
        .iter()
        .filter(|b| **b == Basis::X)
        .count()
}

/// Physical circuit for `context` with one free phase layer (all four modes)
/// before each `X` block.
pub fn measurement_skeleton(context: Context, coupler_ts: &[f64]) -> Result<Skeleton> {
    if coupler_ts.len() != coupler_count(context) {
        return Err(Error::InvalidSpec(format!(
            "context {context} has {} couplers, got {} transmissivities",
            coupler_count(context),
            coupler_ts.len()
        )));
    }
    let mut ts = coupler_ts.iter().copied();
    let mut skel = Skeleton::new();
    if context.digit == Basis::X {
        let (a, b) = (ts.next().unwrap(), ts.next().unwrap());
        skel = skel
            .free_phases(&[1, 2, 3, 4])?
            .fixed(coupler(&CouplerSpec::new(1, 2, a)?)?)
            .fixed(coupler(&CouplerSpec::new(3, 4, b)?)?);
    }
    if context.letter == Basis::X {
        let (a, b) = (ts.next().unwrap(), ts.next().unwrap());
        // (1,3) and (2,4) become adjacent pairs after the first crossing
        skel = skel
            .free_phases(&[1, 2, 3, 4])?
            .fixed(crossing(2, 3)?)
            .fixed(coupler(&CouplerSpec::new(1, 2, a)?)?)
            .fixed(coupler(&CouplerSpec::new(3, 4, b)?)?)
            .fixed(crossing(2, 3)?);
    }
    Ok(skel)
}

/// Closed-form phases that turn balanced couplers into Hadamards.
fn analytic_measurement_phases(context: Context) -> Vec<f64> {
    let h = -PI / 2.0;
    match (context.digit, context.letter) {
        (Basis::Z, Basis::Z) => vec![],
        (Basis::X, Basis::Z) => vec![0.0, h, 0.0, h],
        (Basis::Z, Basis::X) => vec![0.0, 0.0, h, h],
        // the middle layer also undoes the digit couplers' output phases
        (Basis::X, Basis::X) => vec![0.0, h, 0.0, h, 0.0, h, h, 2.0 * h],
    }
}

/// Calibrates the physical circuit built from `coupler_ts` against the ideal
/// context unitary.
pub fn calibrate_measurement(context: Context, coupler_ts: &[f64]) -> Result<Calibration> {
    let skel = measurement_skeleton(context, coupler_ts)?;
    let target = CalibrationTarget::Unitary(ideal_measurement(context));
    calibrate_seeded(&target, &skel, Some(&analytic_measurement_phases(context)))
}

/// Calibration of the balanced physical circuit, computed once per context.
pub fn nominal_calibration_phases(context: Context) -> &'static [f64] {
    static CACHE: OnceLock<[Vec<f64>; 4]> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        Context::ALL.map(|c| {
            calibrate_measurement(c, &vec![0.5; coupler_count(c)])
                .expect("balanced couplers calibrate exactly")
                .phases
        })
    });
    &all[context.index()]
}

pub fn measurement_unitary(config: &MeasurementConfig) -> Result<TransferMatrix> {
    match config.mode {
        DeviceMode::Ideal => Ok(ideal_measurement(config.context)),
        DeviceMode::Physical => {
            let ts = config.resolved_coupler_ts()?;
            let skel = measurement_skeleton(config.context, &ts)?;
            match &config.calibration_phases {
                Some(p) => skel.assemble(p),
                None => skel.assemble(nominal_calibration_phases(config.context)),
            }
        }
    }
}

/// A full device description as read from a JSON config file.
///
/// Contexts absent from `measurements` use the ideal circuit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    #[serde(default)]
    pub preparation: PreparationConfig,
    #[serde(default)]
    pub measurements: Vec<MeasurementConfig>,
}

impl DeviceConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: DeviceConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.preparation.validate()?;
        let mut seen = [false; 4];
        for m in &self.measurements {
            let i = m.context.index();
            if seen[i] {
                return Err(Error::InvalidSpec(format!(
                    "context {} configured twice",
                    m.context
                )));
            }
            seen[i] = true;
            m.resolved_coupler_ts()?;
        }
        Ok(())
    }

    pub fn measurement(&self, context: Context) -> MeasurementConfig {
        self.measurements
            .iter()
            .find(|m| m.context == context)
            .cloned()
            .unwrap_or_else(|| MeasurementConfig::ideal(context))
    }
}

/// What the pipeline simulates: the exact target state with ideal Hadamard
/// measurements, or a configured device.
#[derive(Clone, Debug, PartialEq)]
pub enum Device {
    Ideal,
    Imperfect(DeviceConfig),
}

/// Per-context outcome probabilities at one value of `φ`, in
/// [`Context::ALL`] order.
pub type ContextTable = [[f64; MODES]; 4];

impl Device {
    pub fn state(&self, phi: f64) -> Result<ModeVector> {
        let state = match self {
            Device::Ideal => prepare_state_direct(phi),
            Device::Imperfect(cfg) => {
                let prep = PreparationConfig {
                    phi,
                    ..cfg.preparation.clone()
                };
                let u = prep.circuit()?;
                ensure_unitary(&u, "preparation circuit")?;
                u.apply(&ModeVector::localized(PREPARATION_INPUT_MODE)?)
            }
        };
        Ok(state)
    }

    pub fn measurement_unitaries(&self) -> Result<[TransferMatrix; 4]> {
        let mut out = [TransferMatrix::identity(); 4];
        for (slot, ctx) in out.iter_mut().zip(Context::ALL) {
            let cfg = match self {
                Device::Ideal => MeasurementConfig::ideal(ctx),
                Device::Imperfect(d) => d.measurement(ctx),
            };
            let u = measurement_unitary(&cfg)?;
            ensure_unitary(&u, &format!("{ctx} measurement circuit"))?;
            *slot = u;
        }
        Ok(out)
    }

    /// Outcome probabilities of all four contexts at `phi`.
    pub fn probabilities(&self, phi: f64) -> Result<ContextTable> {
        let unitaries = self.measurement_unitaries()?;
        self.probabilities_with(phi, &unitaries)
    }

    pub fn probabilities_with(
        &self,
        phi: f64,
        unitaries: &[TransferMatrix; 4],
    ) -> Result<ContextTable> {
        let state = self.state(phi)?;
        Ok(unitaries.map(|u| u.apply(&state).probabilities()))
    }
}

fn ensure_unitary(u: &TransferMatrix, what: &str) -> Result<()> {
    if u.is_unitary() {
        Ok(())
    } else {
        Err(Error::Consistency(format!(
            "{what} is not unitary (defect {:.3e})",
            u.unitarity_defect()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn direct_state_at_zero() {
        let s = prepare_state_direct(0.0);
        let p = s.probabilities();
        // |1|², |1+√2|² over 4(2+√2)
        let small = 1.0 / (4.0 * (2.0 + SQRT_2));
        let big = (3.0 + 2.0 * SQRT_2) / (4.0 * (2.0 + SQRT_2));
        for (got, want) in p.iter().zip([small, big, big, small]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((p[0] - 0.0732).abs() < 1e-4 && (p[1] - 0.4268).abs() < 1e-4);
        assert!(s.is_normalized());
    }

    #[test]
    fn direct_state_at_pi() {
        let s = prepare_state_direct(PI);
        let n = 2.0 * (2.0 + SQRT_2).sqrt();
        let want = [-1.0, -(1.0 + SQRT_2), 1.0 + SQRT_2, -1.0].map(|x| x / n);
        for (a, w) in s.amplitudes().iter().zip(want) {
            assert!((a.re - w).abs() < 1e-15 && a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn magnitudes_independent_of_phi() {
        let base = prepare_state_direct(0.0).probabilities();
        for k in 0..50 {
            let p = prepare_state_direct(0.13 * k as f64).probabilities();
            for (a, b) in p.iter().zip(base.iter()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn r1_phase_on_left_half_sweeps_phi() {
        let base = prepare_state_direct(0.0);
        for phi in [0.3, 1.7, -2.2, 5.9] {
            let shifted = phase_shifter(&[1, 2], phi).unwrap().apply(&base);
            assert!(shifted.distance_up_to_phase(&prepare_state_direct(phi)) < 1e-14);
        }
    }

    #[test]
    fn default_circuit_matches_direct() {
        let got = prepare_state_circuit(&PreparationConfig::default()).unwrap();
        assert!(got.distance_up_to_phase(&prepare_state_direct(0.0)) < 1e-9);
    }

    #[test]
    fn default_ts_match_target_ratios() {
        let [t1, t2, t3] = default_preparation_ts();
        assert_eq!(t1, 0.5);
        assert!((t2 - 0.1464).abs() < 1e-4 && (t3 - 0.8536).abs() < 1e-4);
        // |00⟩:|01⟩ = 1 : (1+√2) in amplitude
        let r = 1.0 / (1.0 + SQRT_2);
        assert!((t2 / (1.0 - t2) - r * r).abs() < 1e-15);
        assert!(((1.0 - t3) / t3 - r * r).abs() < 1e-15);
    }

    #[test]
    fn no_letter_split_keeps_left_half() {
        let cfg = PreparationConfig {
            coupler_ts: [1.0, 0.3, 0.6],
            ..PreparationConfig::default()
        };
        let p = prepare_state_circuit(&cfg).unwrap().probabilities();
        assert_eq!(p[2], 0.0);
        assert_eq!(p[3], 0.0);
    }

    #[test]
    fn invalid_preparation_rejected() {
        let cfg = PreparationConfig {
            coupler_ts: [0.5, 1.2, 0.5],
            ..PreparationConfig::default()
        };
        assert!(matches!(prepare_state_circuit(&cfg), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn preparation_calibrates_from_scratch() {
        let cfg = PreparationConfig::default();
        let target = CalibrationTarget::State {
            input_mode: PREPARATION_INPUT_MODE,
            state: prepare_state_direct(0.0),
        };
        let cal = crate::calibration::calibrate_physical(&target, &cfg.skeleton().unwrap()).unwrap();
        assert!(cal.residual < 1e-9);
        let seeded = calibrate_preparation(&cfg).unwrap();
        for (a, b) in seeded.phases.iter().zip(default_preparation_phases()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zz_is_identity_and_xz_splits_digit() {
        let zz = measurement_unitary(&MeasurementConfig::ideal(Context::ZZ)).unwrap();
        assert_eq!(zz, TransferMatrix::identity());
        let zz_phys = measurement_unitary(&MeasurementConfig::physical(Context::ZZ)).unwrap();
        assert_eq!(zz_phys, TransferMatrix::identity());
        let xz = ideal_measurement(Context::XZ);
        let p = xz.apply(&ModeVector::localized(1).unwrap()).probabilities();
        for (g, w) in p.iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn physical_matches_ideal_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let states: Vec<ModeVector> = (0..100).map(|_| ModeVector::random(&mut rng)).collect();
        for ctx in Context::ALL {
            let phys = measurement_unitary(&MeasurementConfig::physical(ctx)).unwrap();
            let ideal = ideal_measurement(ctx);
            assert!(phys.is_unitary());
            for v in &states {
                let a = phys.apply(v).probabilities();
                let b = ideal.apply(v).probabilities();
                for (x, y) in a.iter().zip(b.iter()) {
                    assert!((x - y).abs() < 1e-9, "{ctx}");
                }
            }
        }
    }

    #[test]
    fn nominal_phases_close_to_analytic() {
        for ctx in Context::ALL {
            let got = nominal_calibration_phases(ctx);
            let want = analytic_measurement_phases(ctx);
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(want) {
                let d = (g - w).rem_euclid(2.0 * PI);
                assert!(d.min(2.0 * PI - d) < 1e-9, "{ctx}: {got:?}");
            }
        }
    }

    #[test]
    fn coupler_count_and_length_checks() {
        assert_eq!(coupler_count(Context::ZZ), 0);
        assert_eq!(coupler_count(Context::XZ), 2);
        assert_eq!(coupler_count(Context::ZX), 2);
        assert_eq!(coupler_count(Context::XX), 4);
        let bad = MeasurementConfig::physical(Context::XX).with_coupler_ts(vec![0.5; 3]);
        assert!(measurement_unitary(&bad).is_err());
    }

    #[test]
    fn device_json_round_trip_and_errors() {
        let json = r#"{
            "preparation": {"coupler_Ts": [0.5, 0.15, 0.85]},
            "measurements": [
                {"context": "XX", "mode": "physical", "coupler_Ts": [0.5, 0.5, 0.45, 0.5]},
                {"context": "ZZ"}
            ]
        }"#;
        let cfg = DeviceConfig::from_json_str(json).unwrap();
        assert_eq!(cfg.preparation.calibration_phases, default_preparation_phases());
        assert_eq!(cfg.measurement(Context::XZ), MeasurementConfig::ideal(Context::XZ));
        let again = DeviceConfig::from_json_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);

        assert!(DeviceConfig::from_json_str(r#"{"measurements":[{"context":"XY"}]}"#).is_err());
        assert!(DeviceConfig::from_json_str(
            r#"{"measurements":[{"context":"XX"},{"context":"XX"}]}"#
        )
        .is_err());
        assert!(DeviceConfig::from_json_str(r#"{"preparation":{"coupler_Ts":[2,0.5,0.5]}}"#).is_err());
    }

    #[test]
    fn single_coupler_perturbation_is_continuous() {
        let state = prepare_state_direct(0.0);
        let fine = 200;
        for ctx in Context::ALL.into_iter().filter(|c| coupler_count(*c) > 0) {
            for k in 0..coupler_count(ctx) {
                let probs = |delta: f64| {
                    let mut ts = vec![0.5; coupler_count(ctx)];
                    ts[k] += delta;
                    let cfg = MeasurementConfig::physical(ctx).with_coupler_ts(ts);
                    measurement_unitary(&cfg).unwrap().apply(&state).probabilities()
                };
                let step = 0.1 / fine as f64;
                let mut lipschitz = 0.0_f64;
                let mut prev = probs(0.0);
                for i in 1..=fine {
                    let cur = probs(i as f64 * step);
                    let jump = cur.iter().zip(prev.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    lipschitz = lipschitz.max(jump / step);
                    prev = cur;
                }
                // dP/dT of a coupler near balance is O(1)
                assert!(lipschitz < 5.0, "{ctx} coupler {k}: {lipschitz}");
                // halving the step halves the jumps: no discontinuity
                let half = step / 2.0;
                for i in 0..(2 * fine) {
                    let a = probs(i as f64 * half);
                    let b = probs((i + 1) as f64 * half);
                    let jump = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    assert!(jump <= 1.5 * lipschitz * half);
                }
            }
        }
    }
}

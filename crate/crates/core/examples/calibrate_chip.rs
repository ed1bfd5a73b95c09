//! Phase calibration of the physical circuits.
//!
//! Builds each context from directional couplers, fits its free phase layers so
//! the circuit reproduces the ideal Hadamard measurement, then checks that the
//! coupler-built preparation chip lands on the target state.

use std::f64::consts::PI;

use chip_contextuality::calibration::{probe_residual, CalibrationTarget};
use chip_contextuality::chip::{
    calibrate_measurement, calibrate_preparation, coupler_count, ideal_measurement,
    measurement_skeleton, prepare_state_circuit, prepare_state_direct, PreparationConfig,
};
use chip_contextuality::{Context, Error};

fn main() -> chip_contextuality::Result<()> {
    for ctx in Context::ALL {
        let ts = vec![0.5; coupler_count(ctx)];
        let cal = calibrate_measurement(ctx, &ts)?;
        let circuit = measurement_skeleton(ctx, &ts)?.assemble(&cal.phases)?;
        let probe = probe_residual(&CalibrationTarget::Unitary(ideal_measurement(ctx)), &circuit)?;
        println!(
            "{ctx}: {} couplers, {} phases, fit residual {:.1e}, probe residual {:.1e}",
            ts.len(),
            cal.phases.len(),
            cal.residual,
            probe
        );
    }

    // An unbalanced coupler cannot be rescued by phases alone.
    match calibrate_measurement(Context::XZ, &[0.8, 0.5]) {
        Err(Error::CalibrationFailed { residual, tolerance }) => {
            println!("XZ with T = 0.8: calibration fails (residual {residual:.3} > {tolerance:e})")
        }
        other => println!("XZ with T = 0.8: unexpected {other:?}"),
    }

    let mut worst = 0.0_f64;
    for k in 0..8 {
        let phi = k as f64 * PI / 4.0;
        let cfg = PreparationConfig::with_phi(phi);
        let d = prepare_state_circuit(&cfg)?.distance_up_to_phase(&prepare_state_direct(phi));
        worst = worst.max(d);
    }
    println!("preparation circuit vs target state: max distance {worst:.1e}");

    let cal = calibrate_preparation(&PreparationConfig::with_phi(0.3))?;
    println!(
        "preparation phases fitted from scratch: {:?} (residual {:.1e})",
        cal.phases, cal.residual
    );
    Ok(())
}

//! How a mis-fabricated coupler opens a loophole: signalling between the
//! jointly measured qubits shows up as ε > 0 and lifts the bound to 2 + ε.

use chip_contextuality::analysis::{ContextProbabilities, InequalityReport};
use chip_contextuality::chip::{coupler_count, Device, DeviceConfig, MeasurementConfig};
use chip_contextuality::Context;

const PHI: f64 = 0.022;

fn report(device: &Device) -> chip_contextuality::Result<InequalityReport> {
    let table = device.probabilities(PHI)?;
    let sets = Context::ALL
        .iter()
        .zip(table)
        .map(|(c, p)| ContextProbabilities::new(*c, p))
        .collect::<chip_contextuality::Result<Vec<_>>>()?;
    InequalityReport::analytic(&sets)
}

fn main() -> chip_contextuality::Result<()> {
    let base = report(&Device::Ideal)?;
    println!("ideal: S = {:.5}  epsilon = {:.1e}  bound = {:.5}", base.s, base.epsilon, base.bound);

    for ctx in [Context::XX, Context::XZ, Context::ZX] {
        let n = coupler_count(ctx);
        for k in 0..n {
            let mut ts = vec![0.5; n];
            ts[k] = 0.6;
            let device = Device::Imperfect(DeviceConfig {
                measurements: vec![MeasurementConfig::physical(ctx).with_coupler_ts(ts.clone())],
                ..DeviceConfig::default()
            });
            let r = report(&device)?;
            println!(
                "{ctx} T = {ts:?}: S = {:.5}  epsilon = {:.5}  bound = {:.5}",
                r.s, r.epsilon, r.bound
            );
        }
    }
    Ok(())
}

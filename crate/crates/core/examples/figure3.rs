//! Ideal and device S(φ) side by side, from a device JSON file or a built-in
//! example device.
//!
//!     cargo run --example figure3 -- [device.json]

use std::f64::consts::TAU;
use std::io;

use chip_contextuality::chip::{Device, DeviceConfig};
use chip_contextuality::pipeline::{figure3_rows, write_figure3_csv, SweepSpec};

const EXAMPLE_DEVICE: &str = r#"{
  "preparation": { "phi": 0.0, "coupler_Ts": [0.52, 0.5, 0.5] },
  "measurements": [
    { "context": "XX", "mode": "physical", "coupler_Ts": [0.55, 0.5, 0.47, 0.5] },
    { "context": "XZ", "mode": "physical", "coupler_Ts": [0.5, 0.45] },
    { "context": "ZX", "mode": "physical" }
  ]
}"#;

fn main() -> chip_contextuality::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => DeviceConfig::from_path(path)?,
        None => DeviceConfig::from_json_str(EXAMPLE_DEVICE)?,
    };
    let rows = figure3_rows(&SweepSpec::analytic(0.0, TAU, 41), &Device::Imperfect(cfg))?;
    write_figure3_csv(&rows, io::stdout().lock())
}

//! All sixteen predetermined ±1 assignments and the value of S for each.

use chip_contextuality::analysis::{classical_bound_enumeration, deterministic_assignments};

fn main() {
    for a in deterministic_assignments() {
        println!(
            "X12 = {:+}  Z12 = {:+}  XAB = {:+}  ZAB = {:+}  ->  S = {:+}",
            a.x12,
            a.z12,
            a.xab,
            a.zab,
            a.chsh_value()
        );
    }
    println!("maximum: {}", classical_bound_enumeration());
}

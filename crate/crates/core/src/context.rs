//! Measurement contexts `M₁₂ N_AB` with `M, N ∈ {X, Z}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    X,
    Z,
}

/// A pair of compatible measurements: `digit` is `M₁₂`, `letter` is `N_AB`.
///
/// The tag string always lists the digit measurement first, so `"XZ"` is
/// `X₁₂ Z_AB`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Context {
    pub digit: Basis,
    pub letter: Basis,
}

impl Context {
    pub const XX: Context = Context { digit: Basis::X, letter: Basis::X };
    pub const XZ: Context = Context { digit: Basis::X, letter: Basis::Z };
    pub const ZX: Context = Context { digit: Basis::Z, letter: Basis::X };
    pub const ZZ: Context = Context { digit: Basis::Z, letter: Basis::Z };

    /// Canonical order used for every per-context array in this crate.
    pub const ALL: [Context; 4] = [Context::XX, Context::XZ, Context::ZX, Context::ZZ];

    /// Position in [`Context::ALL`].
    pub fn index(self) -> usize {
        match (self.digit, self.letter) {
            (Basis::X, Basis::X) => 0,
            (Basis::X, Basis::Z) => 1,
            (Basis::Z, Basis::X) => 2,
            (Basis::Z, Basis::Z) => 3,
        }
    }

    /// Coefficient of this context's correlator in `S`.
    pub fn chsh_sign(self) -> f64 {
        if self == Context::ZZ {
            -1.0
        } else {
            1.0
        }
    }

    pub fn tag(self) -> &'static str {
        ["XX", "XZ", "ZX", "ZZ"][self.index()]
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Context {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "XX" => Ok(Context::XX),
            "XZ" => Ok(Context::XZ),
            "ZX" => Ok(Context::ZX),
            "ZZ" => Ok(Context::ZZ),
            other => Err(Error::InvalidSpec(format!(
                "unknown context tag {other:?} (expected XX, XZ, ZX or ZZ)"
            ))),
        }
    }
}

impl TryFrom<String> for Context {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Context> for String {
    fn from(c: Context) -> String {
        c.tag().to_owned()
    }
}

//! Expectations, marginals, `S`, the compatibility correction `ε` and the
//! violation significance.
//!
//! Outcome signs: mode 1 and 4 give product `+1`, modes 2 and 3 give `−1`.
//! The letter measurement reads `+1` on the left half (modes 1, 2) and the
//! digit measurement reads `+1` on odd modes (1, 3).

use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::error::{Error, Result};
use crate::optics::MODES;

/// Tolerance on the sum of an input probability vector.
pub const PROBABILITY_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContextProbabilities {
    context: Context,
    p: [f64; MODES],
}

impl ContextProbabilities {
    pub fn new(context: Context, p: [f64; MODES]) -> Result<Self> {
        validate_probabilities(&p)?;
        Ok(Self { context, p })
    }

    pub fn context(&self) -> Context {
        self.context
    }

    pub fn probabilities(&self) -> &[f64; MODES] {
        &self.p
    }

    /// `P₁ − P₂ − P₃ + P₄`, evaluated as `(P₁ + P₄) − (P₂ + P₃)` so that
    /// pairwise-equal probabilities give exactly zero.
    pub fn expectation(&self) -> f64 {
        let [p1, p2, p3, p4] = self.p;
        (p1 + p4) - (p2 + p3)
    }

    /// `(letter, digit)` single-measurement marginals.
    pub fn marginals(&self) -> (f64, f64) {
        let [p1, p2, p3, p4] = self.p;
        ((p1 + p2) - (p3 + p4), (p1 + p3) - (p2 + p4))
    }
}

pub(crate) fn validate_probabilities(p: &[f64; MODES]) -> Result<()> {
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidInput(format!("probability {bad} outside [0, 1]")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(Error::InvalidInput(format!(
            "probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

pub fn expectation(cp: &ContextProbabilities) -> f64 {
    cp.expectation()
}

pub fn marginals(cp: &ContextProbabilities) -> (f64, f64) {
    cp.marginals()
}

/// Orders per-context inputs by [`Context::ALL`], rejecting duplicates and gaps.
pub fn by_context<T, F>(items: &[T], context_of: F) -> Result<[&T; 4]>
where
    F: Fn(&T) -> Context,
{
    let mut slots: [Option<&T>; 4] = [None; 4];
    for item in items {
        let ctx = context_of(item);
        let slot = &mut slots[ctx.index()];
        if slot.is_some() {
            return Err(Error::InvalidInput(format!("context {ctx} supplied twice")));
        }
        *slot = Some(item);
    }
    let missing: Vec<&str> = Context::ALL
        .iter()
        .filter(|c| slots[c.index()].is_none())
        .map(|c| c.tag())
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "missing context(s): {}",
            missing.join(", ")
        )));
    }
    Ok(slots.map(|s| s.expect("checked above")))
}

/// `E_XX + E_XZ + E_ZX − E_ZZ` from per-context correlators in
/// [`Context::ALL`] order.
pub fn chsh_combination(e: [f64; 4]) -> f64 {
    e[0] + e[1] + e[2] - e[3]
}

/// `ε = Σ_M |⟨M^X⟩ − ⟨M^Z⟩|` from `(letter, digit)` marginals in
/// [`Context::ALL`] order.
pub fn epsilon_from_marginals(m: [(f64, f64); 4]) -> f64 {
    let [xx, xz, zx, zz] = m;
    // X₁₂ with X_AB vs Z_AB, then Z₁₂
    let digit = (xx.1 - xz.1).abs() + (zx.1 - zz.1).abs();
    // X_AB with X₁₂ vs Z₁₂, then Z_AB
    let letter = (xx.0 - zx.0).abs() + (xz.0 - zz.0).abs();
    digit + letter
}

pub fn chsh_s(sets: &[ContextProbabilities]) -> Result<f64> {
    let sets = by_context(sets, |c| c.context)?;
    Ok(chsh_combination(sets.map(|c| c.expectation())))
}

pub fn epsilon(sets: &[ContextProbabilities]) -> Result<f64> {
    let sets = by_context(sets, |c| c.context)?;
    Ok(epsilon_from_marginals(sets.map(|c| c.marginals())))
}

/// z-score of `S` above the corrected bound `2 + ε`.
pub fn significance(s: f64, epsilon: f64, sigma_s: f64) -> Result<f64> {
    if !(sigma_s > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sigma_S must be positive, got {sigma_s}"
        )));
    }
    Ok((s - (2.0 + epsilon)) / sigma_s)
}

/// A ±1 value for each of X₁₂, Z₁₂, X_AB, Z_AB.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub x12: i8,
    pub z12: i8,
    pub xab: i8,
    pub zab: i8,
}

impl Assignment {
    /// The CHSH-like combination with every outcome predetermined.
    pub fn chsh_value(&self) -> i32 {
        let (x12, z12, xab, zab) = (
            self.x12 as i32,
            self.z12 as i32,
            self.xab as i32,
            self.zab as i32,
        );
        x12 * xab + x12 * zab + z12 * xab - z12 * zab
    }
}

/// All sixteen deterministic non-contextual assignments.
pub fn deterministic_assignments() -> impl Iterator<Item = Assignment> {
    (0u8..16).map(|bits| {
        let v = |k: u8| if bits >> k & 1 == 0 { 1 } else { -1 };
        Assignment {
            x12: v(0),
            z12: v(1),
            xab: v(2),
            zab: v(3),
        }
    })
}

/// Maximum of the combination over all deterministic assignments.
pub fn classical_bound_enumeration() -> f64 {
    deterministic_assignments()
        .map(|a| a.chsh_value())
        .max()
        .expect("sixteen assignments") as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    #[serde(rename = "XX")]
    pub xx: f64,
    #[serde(rename = "XZ")]
    pub xz: f64,
    #[serde(rename = "ZX")]
    pub zx: f64,
    #[serde(rename = "ZZ")]
    pub zz: f64,
}

impl Expectations {
    pub fn from_array(e: [f64; 4]) -> Self {
        Self {
            xx: e[0],
            xz: e[1],
            zx: e[2],
            zz: e[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.xx, self.xz, self.zx, self.zz]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub expectations: Expectations,
    #[serde(rename = "S")]
    pub s: f64,
    pub epsilon: f64,
    pub bound: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
    /// Absent when `sigma_S` is zero.
    pub significance: Option<f64>,
}

impl InequalityReport {
    /// Report from exact probabilities (`sigma_S = 0`, no significance).
    pub fn analytic(sets: &[ContextProbabilities]) -> Result<Self> {
        let ordered = by_context(sets, |c| c.context)?;
        Ok(Self::assemble(
            ordered.map(|c| c.expectation()),
            ordered.map(|c| c.marginals()),
            0.0,
        ))
    }

    /// Combines correlators, marginals and an uncertainty into a report.
    pub fn assemble(e: [f64; 4], marginals: [(f64, f64); 4], sigma_s: f64) -> Self {
        let s = chsh_combination(e);
        let epsilon = epsilon_from_marginals(marginals);
        let significance = significance(s, epsilon, sigma_s).ok();
        Self {
            expectations: Expectations::from_array(e),
            s,
            epsilon,
            bound: 2.0 + epsilon,
            sigma_s,
            significance,
        }
    }
}

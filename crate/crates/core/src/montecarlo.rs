//! Heralded single-photon counting and the estimators built on it.
//!
//! Each (φ, context) acquisition is one multinomial draw of `N` detection
//! events over the four output detectors. Draws use `ChaCha8Rng` seeded with
//! the record's own 64-bit seed, so a [`CountRecord`] alone is enough to
//! regenerate it. Per-record seeds come from a master seed through
//! [`substream_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::analysis::{by_context, chsh_combination, validate_probabilities, InequalityReport};
use crate::context::Context;
use crate::error::{Error, Result};
use crate::optics::MODES;

/// Default bootstrap replicate count.
pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 1000;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of substream `stream` under `master`: `splitmix64(master ^ splitmix64(stream))`.
///
/// Sweeps use `stream = 4 * phi_index + context.index()`.
pub fn substream_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

pub fn sweep_stream(phi_index: usize, context: Context) -> u64 {
    4 * phi_index as u64 + context.index() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub phi: f64,
    pub context: Context,
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
    pub n4: u64,
    #[serde(rename = "N")]
    pub total: u64,
    pub seed: u64,
}

impl CountRecord {
    pub fn new(phi: f64, context: Context, counts: [u64; MODES], seed: u64) -> Result<Self> {
        let r = Self {
            phi,
            context,
            n1: counts[0],
            n2: counts[1],
            n3: counts[2],
            n4: counts[3],
            total: counts.iter().sum(),
            seed,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn counts(&self) -> [u64; MODES] {
        [self.n1, self.n2, self.n3, self.n4]
    }

    pub fn validate(&self) -> Result<()> {
        if self.total == 0 {
            return Err(Error::InvalidInput(format!(
                "record for {} at phi={} has N = 0",
                self.context, self.phi
            )));
        }
        let sum: u64 = self.counts().iter().sum();
        if sum != self.total {
            return Err(Error::InvalidInput(format!(
                "counts sum to {sum} but N = {}",
                self.total
            )));
        }
        Ok(())
    }

    /// Relative frequencies `nᵢ / N`.
    pub fn frequencies(&self) -> [f64; MODES] {
        let n = self.total as f64;
        self.counts().map(|c| c as f64 / n)
    }

    /// `(letter, digit)` marginals from relative frequencies.
    pub fn marginals(&self) -> (f64, f64) {
        let [n1, n2, n3, n4] = self.counts().map(|c| c as i128);
        let n = self.total as f64;
        (((n1 + n2) - (n3 + n4)) as f64 / n, ((n1 + n3) - (n2 + n4)) as f64 / n)
    }
}

/// One multinomial draw of `n` photons with per-detector `probabilities`.
pub fn sample_counts(
    context: Context,
    probabilities: &[f64; MODES],
    n: u64,
    seed: u64,
) -> Result<CountRecord> {
    validate_probabilities(probabilities)?;
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = multinomial(&mut rng, probabilities, n)?;
    CountRecord::new(0.0, context, counts, seed)
}

/// Sequential conditional binomials; the last detector takes the remainder.
fn multinomial(rng: &mut ChaCha8Rng, p: &[f64; MODES], n: u64) -> Result<[u64; MODES]> {
    let mut counts = [0u64; MODES];
    let mut remaining = n;
    let mut mass: f64 = p.iter().sum();
    for i in 0..MODES - 1 {
        if remaining == 0 {
            break;
        }
        let q = if mass > 0.0 { (p[i] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, q)
            .map_err(|e| Error::InvalidInput(format!("binomial({remaining}, {q}): {e}")))?
            .sample(rng);
        counts[i] = draw;
        remaining -= draw;
        mass -= p[i];
    }
    counts[MODES - 1] = remaining;
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatedExpectation {
    pub value: f64,
    pub sigma: f64,
}

/// `(n₁ − n₂ − n₃ + n₄)/N` with `σ = √((1 − value²)/N)`.
pub fn estimate_expectation(record: &CountRecord) -> Result<EstimatedExpectation> {
    record.validate()?;
    let [n1, n2, n3, n4] = record.counts().map(|c| c as i128);
    let n = record.total as f64;
    let value = (n1 - n2 - n3 + n4) as f64 / n;
    let sigma = ((1.0 - value * value).max(0.0) / n).sqrt();
    Ok(EstimatedExpectation { value, sigma })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Uncertainty {
    /// Independent-context propagation of the per-context σ.
    Propagation,
    /// Parametric bootstrap: redraw each context from its observed
    /// frequencies `replicates` times and take the standard deviation of `S`.
    Bootstrap { replicates: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SEstimate {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
}

/// `S` with `σ_S = √(Σ σᵢ²)`.
pub fn estimate_s(records: &[CountRecord]) -> Result<SEstimate> {
    let ordered = by_context(records, |r| r.context)?;
    let mut e = [0.0; 4];
    let mut var = 0.0;
    for (slot, r) in e.iter_mut().zip(ordered) {
        let est = estimate_expectation(r)?;
        *slot = est.value;
        var += est.sigma * est.sigma;
    }
    Ok(SEstimate {
        s: chsh_combination(e),
        sigma_s: var.sqrt(),
    })
}

/// Bootstrap standard deviation of `S`.
pub fn bootstrap_sigma_s(records: &[CountRecord], replicates: usize, seed: u64) -> Result<f64> {
    if replicates < 2 {
        return Err(Error::InvalidInput("bootstrap needs at least 2 replicates".into()));
    }
    let ordered = by_context(records, |r| r.context)?;
    for r in ordered {
        r.validate()?;
    }
    let mut rngs: Vec<ChaCha8Rng> = ordered
        .iter()
        .map(|r| {
            let per_context = substream_seed(seed, r.context.index() as u64);
            ChaCha8Rng::seed_from_u64(substream_seed(per_context, r.seed))
        })
        .collect();
    let mut values = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let mut e = [0.0; 4];
        for ((slot, r), rng) in e.iter_mut().zip(ordered).zip(rngs.iter_mut()) {
            let counts = multinomial(rng, &r.frequencies(), r.total)?;
            let [n1, n2, n3, n4] = counts.map(|c| c as i128);
            *slot = (n1 - n2 - n3 + n4) as f64 / r.total as f64;
        }
        values.push(chsh_combination(e));
    }
    let mean = values.iter().sum::<f64>() / replicates as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
    Ok(var.sqrt())
}

/// Full inequality report from one record per context.
pub fn report_from_records(records: &[CountRecord], uncertainty: Uncertainty) -> Result<InequalityReport> {
    let ordered = by_context(records, |r| r.context)?;
    let mut e = [0.0; 4];
    for (slot, r) in e.iter_mut().zip(ordered) {
        *slot = estimate_expectation(r)?.value;
    }
    let sigma_s = match uncertainty {
        Uncertainty::Propagation => estimate_s(records)?.sigma_s,
        Uncertainty::Bootstrap { replicates, seed } => bootstrap_sigma_s(records, replicates, seed)?,
    };
    Ok(InequalityReport::assemble(e, ordered.map(|r| r.marginals()), sigma_s))
}

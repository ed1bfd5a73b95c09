//! Classical Galton-board model: a ball always sits in one definite channel.
//!
//! The preparation box drops each ball into channel 1..4 with a fixed
//! distribution. A `Z` slide leaves its bit alone; an `X` slide flips its bit
//! with probability `flip_probability` (one half unless configured). `M₁₂`
//! slides act on the digit bit, `N_AB` slides on the letter bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution};

use crate::analysis::{chsh_combination, validate_probabilities, ContextProbabilities};
use crate::context::{Basis, Context};
use crate::error::{Error, Result};
use crate::montecarlo::{estimate_s, substream_seed, CountRecord, SEstimate};
use crate::optics::MODES;

/// A ball's channel, `0..4` internally; `channel()` reports it 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallState(u8);

impl BallState {
    pub fn from_bits(letter: u8, digit: u8) -> Self {
        Self(2 * (letter & 1) + (digit & 1))
    }

    pub fn channel(self) -> usize {
        self.0 as usize + 1
    }

    pub fn letter(self) -> u8 {
        self.0 >> 1
    }

    pub fn digit(self) -> u8 {
        self.0 & 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaltonConfig {
    pub preparation: [f64; MODES],
    pub m12: Basis,
    pub nab: Basis,
    pub shots: u64,
    pub flip_probability: f64,
}

impl GaltonConfig {
    pub fn new(preparation: [f64; MODES], context: Context, shots: u64) -> Self {
        Self {
            preparation,
            m12: context.digit,
            nab: context.letter,
            shots,
            flip_probability: 0.5,
        }
    }

    pub fn context(&self) -> Context {
        Context {
            digit: self.m12,
            letter: self.nab,
        }
    }

    fn validate(&self) -> Result<()> {
        validate_probabilities(&self.preparation)?;
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::InvalidInput(format!(
                "flip probability {} outside [0, 1]",
                self.flip_probability
            )));
        }
        if self.shots == 0 {
            return Err(Error::InvalidInput("shots must be at least 1".into()));
        }
        Ok(())
    }
}

fn draw_channel<R: Rng>(rng: &mut R, cumulative: &[f64; MODES]) -> u8 {
    let u: f64 = rng.random::<f64>() * cumulative[MODES - 1];
    cumulative.iter().position(|c| u < *c).unwrap_or(MODES - 1) as u8
}

/// Throws `config.shots` balls through the board.
pub fn galton_run(config: &GaltonConfig, seed: u64) -> Result<CountRecord> {
    config.validate()?;
    let mut cumulative = [0.0; MODES];
    let mut acc = 0.0;
    for (c, p) in cumulative.iter_mut().zip(config.preparation) {
        acc += p;
        *c = acc;
    }
    // zero-probability channels must never be hit, even at the top edge
    let last_live = config.preparation.iter().rposition(|p| *p > 0.0).unwrap_or(0);
    for c in cumulative.iter_mut().skip(last_live) {
        *c = acc;
    }
    let flip = Bernoulli::new(config.flip_probability)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; MODES];
    for _ in 0..config.shots {
        let ball = BallState(draw_channel(&mut rng, &cumulative));
        let mut digit = ball.digit();
        let mut letter = ball.letter();
        if config.m12 == Basis::X && flip.sample(&mut rng) {
            digit ^= 1;
        }
        if config.nab == Basis::X && flip.sample(&mut rng) {
            letter ^= 1;
        }
        counts[BallState::from_bits(letter, digit).channel() - 1] += 1;
    }
    CountRecord::new(0.0, config.context(), counts, seed)
}

fn flip_bit(p: [f64; MODES], q: f64, partner: impl Fn(usize) -> usize) -> [f64; MODES] {
    let mut out = [0.0; MODES];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (1.0 - q) * p[i] + q * p[partner(i)];
    }
    out
}

/// Output distribution of one context, propagated exactly.
pub fn galton_exact(preparation: &[f64; MODES], context: Context, flip_probability: f64) -> Result<[f64; MODES]> {
    validate_probabilities(preparation)?;
    let mut p = *preparation;
    if context.digit == Basis::X {
        p = flip_bit(p, flip_probability, |i| i ^ 1);
    }
    if context.letter == Basis::X {
        p = flip_bit(p, flip_probability, |i| i ^ 2);
    }
    Ok(p)
}

/// All four context distributions in [`Context::ALL`] order.
pub fn galton_exact_table(preparation: &[f64; MODES], flip_probability: f64) -> Result<Vec<ContextProbabilities>> {
    Context::ALL
        .iter()
        .map(|c| ContextProbabilities::new(*c, galton_exact(preparation, *c, flip_probability)?))
        .collect()
}

/// Exact `S` of the board for `preparation`.
pub fn galton_s_exact(preparation: &[f64; MODES], flip_probability: f64) -> Result<f64> {
    let table = galton_exact_table(preparation, flip_probability)?;
    let e: Vec<f64> = table.iter().map(|c| c.expectation()).collect();
    Ok(chsh_combination([e[0], e[1], e[2], e[3]]))
}

/// One sampled record per context, each on its own substream of `seed`.
pub fn galton_records(preparation: &[f64; MODES], shots: u64, seed: u64, flip_probability: f64) -> Result<Vec<CountRecord>> {
    Context::ALL
        .iter()
        .map(|c| {
            let cfg = GaltonConfig {
                flip_probability,
                ..GaltonConfig::new(*preparation, *c, shots)
            };
            galton_run(&cfg, substream_seed(seed, c.index() as u64))
        })
        .collect()
}

/// Sampled `S` and `σ_S` with the balanced board.
pub fn galton_s(preparation: &[f64; MODES], shots: u64, seed: u64) -> Result<SEstimate> {
    estimate_s(&galton_records(preparation, shots, seed, 0.5)?)
}

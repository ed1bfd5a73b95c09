//! Four-mode linear optics: state vectors, transfer matrices and the
//! circuit elements the chips are built from.
//!
//! Modes are numbered 1..=4 in every public constructor. Mode `i` carries the
//! two-qubit basis label `|letter digit⟩` with `i - 1 = 2 * letter + digit`, so
//! mode 1 is `|00⟩`, mode 2 `|01⟩`, mode 3 `|10⟩` and mode 4 `|11⟩`. The letter
//! qubit tells which half of the chip (left = 0) holds the photon and the digit
//! qubit its parity (odd = 0).

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Number of spatial modes.
pub const MODES: usize = 4;

/// Absolute, entrywise tolerance for unitarity and normalization checks.
pub const UNITARY_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn check_mode(mode: usize) -> Result<usize> {
    if (1..=MODES).contains(&mode) {
        Ok(mode - 1)
    } else {
        Err(Error::InvalidSpec(format!("mode index {mode} outside 1..={MODES}")))
    }
}

fn check_pair(a: usize, b: usize) -> Result<(usize, usize)> {
    let (a, b) = (check_mode(a)?, check_mode(b)?);
    if a == b {
        return Err(Error::InvalidSpec(format!(
            "mode pair ({}, {}) must be two distinct modes",
            a + 1,
            b + 1
        )));
    }
    Ok((a, b))
}

/// Single-photon amplitudes over the four spatial modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeVector {
    amplitudes: [Complex64; MODES],
}

impl ModeVector {
    pub fn new(amplitudes: [Complex64; MODES]) -> Self {
        Self { amplitudes }
    }

    /// Photon localized in `mode` (1-based).
    pub fn localized(mode: usize) -> Result<Self> {
        let idx = check_mode(mode)?;
        let mut amplitudes = [ZERO; MODES];
        amplitudes[idx] = ONE;
        Ok(Self { amplitudes })
    }

    /// Haar-random normalized state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut amplitudes = [ZERO; MODES];
        for a in amplitudes.iter_mut() {
            *a = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        Self { amplitudes }.normalized()
    }

    pub fn amplitudes(&self) -> &[Complex64; MODES] {
        &self.amplitudes
    }

    /// Amplitude of `mode` (1-based). Panics on an out-of-range mode.
    pub fn amplitude(&self, mode: usize) -> Complex64 {
        self.amplitudes[mode - 1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let norm = self.norm_sqr().sqrt();
        Self {
            amplitudes: self.amplitudes.map(|a| a / norm),
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= UNITARY_TOL
    }

    /// Detection probability per output mode.
    pub fn probabilities(&self) -> [f64; MODES] {
        self.amplitudes.map(|a| a.norm_sqr())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &ModeVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Removes the global phase by making the largest-magnitude amplitude
    /// real and positive.
    pub fn phase_aligned(&self) -> Self {
        let pivot = self
            .amplitudes
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(ZERO);
        if pivot.norm() == 0.0 {
            return *self;
        }
        let rot = pivot.conj() / pivot.norm();
        Self {
            amplitudes: self.amplitudes.map(|a| a * rot),
        }
    }

    /// Largest amplitude difference after rotating `other` by the global
    /// phase that best aligns it with `self`, `arg⟨other|self⟩`.
    ///
    /// Aligning on the overlap rather than on a single pivot amplitude keeps
    /// the result stable when two amplitudes tie for the largest magnitude.
    pub fn distance_up_to_phase(&self, other: &ModeVector) -> f64 {
        let overlap = other.inner(self);
        let rot = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(x, y)| (x - y * rot).norm())
            .fold(0.0, f64::max)
    }
}

/// Dense 4×4 complex matrix mapping input amplitudes to output amplitudes.
///
/// `entry(i, j)` is the amplitude for a photon entering mode `j` to leave in
/// mode `i` (both 0-based).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix {
    entries: [[Complex64; MODES]; MODES],
}

impl Default for TransferMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl TransferMatrix {
    pub fn identity() -> Self {
        let mut entries = [[ZERO; MODES]; MODES];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self { entries }
    }

    /// Wraps raw entries. Unitarity is not checked here; see [`Self::is_unitary`].
    pub fn from_entries(entries: [[Complex64; MODES]; MODES]) -> Self {
        Self { entries }
    }

    pub fn diagonal(diag: [Complex64; MODES]) -> Self {
        let mut entries = [[ZERO; MODES]; MODES];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i][i] = d;
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[[Complex64; MODES]; MODES] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row][col]
    }

    pub fn dagger(&self) -> Self {
        let mut entries = [[ZERO; MODES]; MODES];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.entries[j][i].conj();
            }
        }
        Self { entries }
    }

    /// `next · self`: propagate through `self`, then through `next`.
    pub fn then(&self, next: &TransferMatrix) -> Self {
        next * self
    }

    pub fn apply(&self, v: &ModeVector) -> ModeVector {
        let mut out = [ZERO; MODES];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..MODES).map(|j| self.entries[i][j] * v.amplitudes[j]).sum();
        }
        ModeVector::new(out)
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.dagger() * *self;
        let id = Self::identity();
        let mut worst = 0.0_f64;
        for i in 0..MODES {
            for j in 0..MODES {
                worst = worst.max((prod.entries[i][j] - id.entries[i][j]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= UNITARY_TOL
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..MODES {
            for j in 0..MODES {
                worst = worst.max((self.entries[i][j] - other.entries[i][j]).norm());
            }
        }
        worst
    }

    /// Tensor product `letter ⊗ digit` of two 2×2 blocks.
    pub fn kron(letter: [[Complex64; 2]; 2], digit: [[Complex64; 2]; 2]) -> Self {
        let mut entries = [[ZERO; MODES]; MODES];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = letter[i / 2][j / 2] * digit[i % 2][j % 2];
            }
        }
        Self { entries }
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        &self * &rhs
    }
}

impl Mul for &TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: &TransferMatrix) -> TransferMatrix {
        let mut entries = [[ZERO; MODES]; MODES];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..MODES).map(|k| self.entries[i][k] * rhs.entries[k][j]).sum();
            }
        }
        TransferMatrix { entries }
    }
}

impl fmt::Display for TransferMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.entries {
            let cells: Vec<String> = row
                .iter()
                .map(|c| format!("{:+.4}{:+.4}i", c.re, c.im))
                .collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Two-mode directional coupler with power transmissivity `t` into the same
/// mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplerSpec {
    modes: (usize, usize),
    t: f64,
}

impl CouplerSpec {
    pub fn new(a: usize, b: usize, t: f64) -> Result<Self> {
        check_pair(a, b)?;
        check_transmissivity(t)?;
        Ok(Self { modes: (a, b), t })
    }

    pub fn balanced(a: usize, b: usize) -> Result<Self> {
        Self::new(a, b, 0.5)
    }

    pub fn modes(&self) -> (usize, usize) {
        self.modes
    }

    pub fn transmissivity(&self) -> f64 {
        self.t
    }
}

pub(crate) fn check_transmissivity(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("transmissivity {t} outside [0, 1]")))
    }
}

/// Beamsplitter `[[√T, i√(1−T)], [i√(1−T), √T]]` on the coupler's mode pair,
/// identity on the other two modes.
pub fn coupler(spec: &CouplerSpec) -> Result<TransferMatrix> {
    let (a, b) = check_pair(spec.modes.0, spec.modes.1)?;
    check_transmissivity(spec.t)?;
    let same = Complex64::new(spec.t.sqrt(), 0.0);
    let cross = Complex64::new(0.0, (1.0 - spec.t).sqrt());
    let mut m = TransferMatrix::identity();
    m.entries[a][a] = same;
    m.entries[b][b] = same;
    m.entries[a][b] = cross;
    m.entries[b][a] = cross;
    Ok(m)
}

/// Diagonal phase `e^{iθ}` on every listed mode.
pub fn phase_shifter(modes: &[usize], theta: f64) -> Result<TransferMatrix> {
    if modes.is_empty() {
        return Err(Error::InvalidSpec("phase shifter needs at least one mode".into()));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidSpec(format!("phase {theta} is not finite")));
    }
    let mut diag = [ONE; MODES];
    let phase = Complex64::from_polar(1.0, theta);
    for &m in modes {
        diag[check_mode(m)?] = phase;
    }
    Ok(TransferMatrix::diagonal(diag))
}

/// Independent phase on each of the four modes.
pub fn phase_layer(phases: [f64; MODES]) -> TransferMatrix {
    TransferMatrix::diagonal(phases.map(|p| Complex64::from_polar(1.0, p)))
}

/// Waveguide crossing: permutation swapping two modes.
pub fn crossing(a: usize, b: usize) -> Result<TransferMatrix> {
    let (a, b) = check_pair(a, b)?;
    let mut m = TransferMatrix::identity();
    m.entries[a][a] = ZERO;
    m.entries[b][b] = ZERO;
    m.entries[a][b] = ONE;
    m.entries[b][a] = ONE;
    Ok(m)
}

/// Product of sections in propagation order; the first section acts first.
/// An empty list composes to the identity.
pub fn compose<'a, I>(sections: I) -> TransferMatrix
where
    I: IntoIterator<Item = &'a TransferMatrix>,
{
    sections
        .into_iter()
        .fold(TransferMatrix::identity(), |acc, s| acc.then(s))
}

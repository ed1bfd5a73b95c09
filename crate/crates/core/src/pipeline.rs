//! End-to-end runs: phase sweeps, analysis of stored counts, the classical
//! baseline, and the flat-file formats they exchange.
//!
//! CSV files are UTF-8 with a fixed header, `.` decimals and LF line endings.
//! Floats are written in shortest round-trip form, so re-reading a file
//! reproduces every value bit for bit.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{significance, ContextProbabilities, Expectations, InequalityReport};
use crate::chip::{Device, ContextTable};
use crate::context::Context;
use crate::error::{Error, Result};
use crate::galton::galton_records;
use crate::montecarlo::{
    estimate_s, report_from_records, sample_counts, substream_seed, sweep_stream, CountRecord,
    Uncertainty,
};

/// Photons per (φ, context) when a sampled sweep does not say otherwise.
pub const DEFAULT_SHOTS: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    /// Exact probabilities; `sigma_S = 0` and no significance.
    Analytic,
    /// Multinomial counts of `shots` photons per (φ, context).
    Sampled {
        shots: u64,
        master_seed: u64,
        /// Bootstrap replicates; `None` uses analytic propagation.
        bootstrap: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub phi_start: f64,
    pub phi_end: f64,
    pub steps: usize,
    pub mode: SweepMode,
    pub device: Device,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
}

impl SweepSpec {
    pub fn analytic(phi_start: f64, phi_end: f64, steps: usize) -> Self {
        Self {
            phi_start,
            phi_end,
            steps,
            mode: SweepMode::Analytic,
            device: Device::Ideal,
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi_start.is_finite() && self.phi_end.is_finite()) {
            return Err(Error::InvalidInput("phase range must be finite".into()));
        }
        if !(self.phi_start < self.phi_end) {
            return Err(Error::InvalidInput(format!(
                "phi_start {} must be below phi_end {}",
                self.phi_start, self.phi_end
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidInput(format!("steps must be ≥ 2, got {}", self.steps)));
        }
        if let SweepMode::Sampled { shots, bootstrap, .. } = self.mode {
            if shots == 0 {
                return Err(Error::InvalidInput("shots must be at least 1".into()));
            }
            if matches!(bootstrap, Some(b) if b < 2) {
                return Err(Error::InvalidInput("bootstrap needs at least 2 replicates".into()));
            }
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidInput("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Evenly spaced grid including both endpoints exactly.
    pub fn phis(&self) -> Vec<f64> {
        let span = self.phi_end - self.phi_start;
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == last {
                    self.phi_end
                } else {
                    self.phi_start + span * i as f64 / last as f64
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub phi: f64,
    #[serde(rename = "E_XX")]
    pub e_xx: f64,
    #[serde(rename = "E_XZ")]
    pub e_xz: f64,
    #[serde(rename = "E_ZX")]
    pub e_zx: f64,
    #[serde(rename = "E_ZZ")]
    pub e_zz: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub epsilon: f64,
    pub bound: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
    pub significance: Option<f64>,
}

impl SweepRow {
    pub fn from_report(phi: f64, r: &InequalityReport) -> Self {
        let [e_xx, e_xz, e_zx, e_zz] = r.expectations.to_array();
        Self {
            phi,
            e_xx,
            e_xz,
            e_zx,
            e_zz,
            s: r.s,
            epsilon: r.epsilon,
            bound: r.bound,
            sigma_s: r.sigma_s,
            significance: r.significance,
        }
    }

    pub fn expectations(&self) -> Expectations {
        Expectations::from_array([self.e_xx, self.e_xz, self.e_zx, self.e_zz])
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Raw counts behind the rows; empty in analytic mode.
    pub counts: Vec<CountRecord>,
}

fn table_sets(table: &ContextTable) -> Result<Vec<ContextProbabilities>> {
    Context::ALL
        .iter()
        .zip(table)
        .map(|(c, p)| ContextProbabilities::new(*c, *p))
        .collect()
}

fn sweep_point(
    spec: &SweepSpec,
    unitaries: &[crate::optics::TransferMatrix; 4],
    index: usize,
    phi: f64,
) -> Result<(SweepRow, Vec<CountRecord>)> {
    let table = spec.device.probabilities_with(phi, unitaries)?;
    match spec.mode {
        SweepMode::Analytic => {
            let report = InequalityReport::analytic(&table_sets(&table)?)?;
            Ok((SweepRow::from_report(phi, &report), Vec::new()))
        }
        SweepMode::Sampled {
            shots,
            master_seed,
            bootstrap,
        } => {
            let records = Context::ALL
                .iter()
                .zip(&table)
                .map(|(c, p)| {
                    let seed = substream_seed(master_seed, sweep_stream(index, *c));
                    sample_counts(*c, p, shots, seed).map(|r| CountRecord { phi, ..r })
                })
                .collect::<Result<Vec<_>>>()?;
            let report = report_from_records(&records, uncertainty(bootstrap, master_seed))?;
            Ok((SweepRow::from_report(phi, &report), records))
        }
    }
}

fn uncertainty(bootstrap: Option<usize>, seed: u64) -> Uncertainty {
    match bootstrap {
        Some(replicates) => Uncertainty::Bootstrap { replicates, seed },
        None => Uncertainty::Propagation,
    }
}

/// Evaluates the pipeline at every grid phase. Rows come back in φ order
/// whatever the thread count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let unitaries = spec.device.measurement_unitaries()?;
    let phis = spec.phis();
    let work = || {
        phis.par_iter()
            .enumerate()
            .map(|(i, phi)| sweep_point(spec, &unitaries, i, *phi))
            .collect::<Result<Vec<_>>>()
    };
    let points = match spec.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut result = SweepResult::default();
    for (row, counts) in points {
        result.rows.push(row);
        result.counts.extend(counts);
    }
    Ok(result)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], header: &[&str], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    if rows.is_empty() {
        out.write_record(header)?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 10] = [
    "phi", "E_XX", "E_XZ", "E_ZX", "E_ZZ", "S", "epsilon", "bound", "sigma_S", "significance",
];

pub const COUNTS_HEADER: [&str; 8] = ["phi", "context", "n1", "n2", "n3", "n4", "N", "seed"];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    write_rows(rows, &SWEEP_HEADER, w)
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &SWEEP_HEADER)?;
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_counts_csv<W: Write>(records: &[CountRecord], w: W) -> Result<()> {
    write_rows(records, &COUNTS_HEADER, w)
}

pub fn read_counts_csv<R: Read>(r: R) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(&mut rdr, &COUNTS_HEADER)?;
    let mut out = Vec::new();
    for (line, row) in rdr.deserialize::<CountRecord>().enumerate() {
        let rec = row?;
        rec.validate()
            .map_err(|e| Error::InvalidInput(format!("data row {}: {e}", line + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let got = rdr.headers()?;
    if got.iter().ne(expected.iter().copied()) {
        return Err(Error::InvalidInput(format!(
            "unexpected CSV header {:?}, expected {:?}",
            got.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiReport {
    pub phi: f64,
    #[serde(flatten)]
    pub report: InequalityReport,
}

/// Groups records by φ (in order of first appearance) and reports each group.
pub fn analyze_records(records: &[CountRecord], uncertainty: Uncertainty) -> Result<Vec<PhiReport>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no count records".into()));
    }
    let mut groups: Vec<(f64, Vec<CountRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(phi, _)| phi.to_bits() == r.phi.to_bits()) {
            Some((_, g)) => g.push(*r),
            None => groups.push((r.phi, vec![*r])),
        }
    }
    groups
        .into_iter()
        .map(|(phi, g)| {
            let report = report_from_records(&g, uncertainty)
                .map_err(|e| Error::InvalidInput(format!("phi = {phi}: {e}")))?;
            Ok(PhiReport { phi, report })
        })
        .collect()
}

/// A published summary `(S, bound, σ_S)` re-evaluated as a z-score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    #[serde(rename = "S")]
    pub s: f64,
    pub epsilon: f64,
    pub bound: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
    pub significance: f64,
}

pub fn summary_report(s: f64, bound: f64, sigma_s: f64) -> Result<SummaryReport> {
    let epsilon = bound - 2.0;
    if epsilon < 0.0 {
        return Err(Error::InvalidInput(format!(
            "corrected bound {bound} is below the ideal non-contextual bound 2"
        )));
    }
    Ok(SummaryReport {
        s,
        epsilon,
        bound,
        sigma_s,
        significance: significance(s, epsilon, sigma_s)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Violation,
    NoViolation,
}

/// z-score above which a sampled `S` counts as violating the bound.
pub const VIOLATION_Z: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvReport {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

/// Runs the balanced Galton board in every context and compares `S` with 2.
pub fn hv_report(preparation: &[f64; 4], shots: u64, seed: u64) -> Result<(HvReport, Vec<CountRecord>)> {
    let records = galton_records(preparation, shots, seed, 0.5)?;
    let est = estimate_s(&records)?;
    let violated = if est.sigma_s > 0.0 {
        significance(est.s, 0.0, est.sigma_s)? > VIOLATION_Z
    } else {
        est.s > 2.0
    };
    let report = HvReport {
        s: est.s,
        sigma_s: est.sigma_s,
        bound: 2.0,
        verdict: if violated { Verdict::Violation } else { Verdict::NoViolation },
    };
    Ok((report, records))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure3Row {
    pub phi: f64,
    #[serde(rename = "S_ideal")]
    pub s_ideal: f64,
    #[serde(rename = "S_device")]
    pub s_device: f64,
    pub epsilon_device: f64,
    pub bound_device: f64,
}

pub const FIGURE3_HEADER: [&str; 5] = ["phi", "S_ideal", "S_device", "epsilon_device", "bound_device"];

/// Ideal and device curves side by side on the grid of `spec`, analytically.
pub fn figure3_rows(spec: &SweepSpec, device: &Device) -> Result<Vec<Figure3Row>> {
    let ideal = run_sweep(&SweepSpec {
        mode: SweepMode::Analytic,
        device: Device::Ideal,
        ..spec.clone()
    })?;
    let dev = run_sweep(&SweepSpec {
        mode: SweepMode::Analytic,
        device: device.clone(),
        ..spec.clone()
    })?;
    Ok(ideal
        .rows
        .iter()
        .zip(&dev.rows)
        .map(|(a, b)| Figure3Row {
            phi: a.phi,
            s_ideal: a.s,
            s_device: b.s,
            epsilon_device: b.epsilon,
            bound_device: b.bound,
        })
        .collect())
}

pub fn write_figure3_csv<W: Write>(rows: &[Figure3Row], w: W) -> Result<()> {
    write_rows(rows, &FIGURE3_HEADER, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn grid_hits_endpoints() {
        let spec = SweepSpec::analytic(0.0, 2.0 * PI, 201);
        let phis = spec.phis();
        assert_eq!(phis.len(), 201);
        assert_eq!(phis[0], 0.0);
        assert_eq!(phis[200], 2.0 * PI);
        assert_eq!(phis[100], PI);
    }

    #[test]
    fn spec_validation() {
        assert!(SweepSpec::analytic(1.0, 0.0, 10).validate().is_err());
        assert!(SweepSpec::analytic(0.0, 1.0, 1).validate().is_err());
        let mut s = SweepSpec::analytic(0.0, 1.0, 5);
        s.mode = SweepMode::Sampled { shots: 0, master_seed: 0, bootstrap: None };
        assert!(s.validate().is_err());
        s.mode = SweepMode::Sampled { shots: 10, master_seed: 0, bootstrap: Some(1) };
        assert!(s.validate().is_err());
        s.mode = SweepMode::Analytic;
        s.jobs = Some(0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn analytic_sweep_rows() {
        let res = run_sweep(&SweepSpec::analytic(0.0, 2.0 * PI, 201)).unwrap();
        assert_eq!(res.rows.len(), 201);
        assert!(res.counts.is_empty());
        let best = res.rows.iter().max_by(|a, b| a.s.total_cmp(&b.s)).unwrap();
        assert!(best.phi == 0.0 || best.phi == 2.0 * PI);
        assert!((best.s - 2.8284).abs() < 1e-4);
        assert!((best.s - 2.0 * SQRT_2).abs() < 1e-6);
        let mid = &res.rows[100];
        assert!(mid.s.abs() < 1e-12 && mid.epsilon < 1e-12);
        assert!(res.rows.iter().all(|r| r.significance.is_none() && r.sigma_s == 0.0));
    }

    #[test]
    fn violation_region_on_grid() {
        let edge = (SQRT_2 - 1.0).acos();
        assert!((edge - 1.1437).abs() < 1e-4);
        let res = run_sweep(&SweepSpec::analytic(-PI, PI, 401)).unwrap();
        for r in &res.rows {
            if (r.phi.abs() - edge).abs() > 1e-9 {
                assert_eq!(r.s > 2.0, r.phi.abs() < edge, "phi {}", r.phi);
            }
        }
    }

    #[test]
    fn counts_csv_round_trip() {
        let mut spec = SweepSpec::analytic(0.0, 1.0, 3);
        spec.mode = SweepMode::Sampled { shots: 1000, master_seed: 4, bootstrap: None };
        let res = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_counts_csv(&res.counts, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("phi,context,n1,n2,n3,n4,N,seed\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_counts_csv(buf.as_slice()).unwrap(), res.counts);
    }

    #[test]
    fn sweep_csv_has_fixed_header_and_blank_significance() {
        let res = run_sweep(&SweepSpec::analytic(0.0, 1.0, 2)).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&res.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
        assert!(lines.next().unwrap().ends_with(",0.0,"));
        assert_eq!(read_sweep_csv(buf.as_slice()).unwrap(), res.rows);
    }

    #[test]
    fn malformed_counts_rejected() {
        let bad_header = "phi,ctx,n1,n2,n3,n4,N,seed\n0,XX,1,1,1,1,4,0\n";
        assert!(read_counts_csv(bad_header.as_bytes()).is_err());
        let bad_sum = "phi,context,n1,n2,n3,n4,N,seed\n0,XX,1,1,1,1,5,0\n";
        assert!(read_counts_csv(bad_sum.as_bytes()).is_err());
        let bad_ctx = "phi,context,n1,n2,n3,n4,N,seed\n0,XY,1,1,1,1,4,0\n";
        assert!(read_counts_csv(bad_ctx.as_bytes()).is_err());
        let short = "phi,context,n1,n2,n3,n4,N,seed\n0,XX,1,1\n";
        assert!(read_counts_csv(short.as_bytes()).is_err());
    }

    #[test]
    fn analyze_requires_every_context() {
        let text = "phi,context,n1,n2,n3,n4,N,seed\n0,XX,1,1,1,1,4,0\n0,XZ,1,1,1,1,4,0\n0,ZX,1,1,1,1,4,0\n";
        let recs = read_counts_csv(text.as_bytes()).unwrap();
        assert!(analyze_records(&recs, Uncertainty::Propagation).is_err());
        assert!(analyze_records(&[], Uncertainty::Propagation).is_err());
    }

    #[test]
    fn summary_numbers() {
        let r = summary_report(2.69, 2.53, 0.012).unwrap();
        assert!((r.significance - 13.3333333333).abs() < 1e-8);
        assert!((r.epsilon - 0.53).abs() < 1e-12);
        assert!(summary_report(2.69, 1.9, 0.012).is_err());
        assert!(summary_report(2.69, 2.53, 0.0).is_err());
    }

    #[test]
    fn hv_verdicts() {
        let (r, recs) = hv_report(&[1.0, 0.0, 0.0, 0.0], 100_000, 3).unwrap();
        assert_eq!(r.verdict, Verdict::NoViolation);
        assert_eq!(recs.len(), 4);
        assert!((r.s + 1.0).abs() < 5.0 * r.sigma_s);
    }
}

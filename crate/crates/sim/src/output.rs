//! Machine-readable outputs.
//!
//! * `<preset>_trials.csv`: one row per trial, header
//!   `preset,rate_bits,rate_nats,omega,lambda,L,M,n,backend,trial,seed,ser,iters,nmse_block_1..nmse_block_K`
//!   where `K` is the largest column-block count among the series; shorter
//!   series leave the trailing cells empty. `omega` is empty for base
//!   matrices that are not band matrices, and `lambda` is then their column
//!   count. Floats carry 9 significant digits; lines end in LF.
//! * `<preset>_summary.json`: aggregates per rate point together with the
//!   state evolution predictions.
//! * `<preset>_wave.csv`: mean NMSE against block index at iterations
//!   1, 5, 10, 15, … next to the exact and asymptotic SE values.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use scsparc_core::{convert_rate, PropOneReport, RateUnit, SeMode, SeTrace};
use serde::{Deserialize, Serialize};

use crate::config::BaseSpec;
use crate::error::{SimError, SimResult};
use crate::experiment::{Aggregate, PointResult};
use crate::format::fmt_g9;

const FIXED_COLUMNS: [&str; 13] =
    ["preset", "rate_bits", "rate_nats", "omega", "lambda", "L", "M", "n", "backend", "trial", "seed", "ser", "iters"];

fn bits(nats: f64) -> f64 {
    convert_rate(nats, RateUnit::Nats, RateUnit::Bits)
}

/// `(omega, lambda)` cells: a 1×1 matrix is the (1,1) band matrix.
fn coupling_cells(spec: &BaseSpec, cols: usize) -> (String, String) {
    match spec {
        BaseSpec::Band { omega, lambda } => (omega.to_string(), lambda.to_string()),
        BaseSpec::Flat => ("1".into(), "1".into()),
        _ => (String::new(), cols.to_string()),
    }
}

pub fn trials_header(blocks: usize) -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((1..=blocks).map(|k| format!("nmse_block_{k}")))
        .collect()
}

/// Write the per-trial table. With no points the output is the header
/// alone, sized by `default_blocks`.
pub fn write_trials_csv<W: Write>(out: W, agg: &Aggregate, default_blocks: usize) -> SimResult<()> {
    let blocks = agg.points.iter().map(|p| p.base.cols()).max().unwrap_or(default_blocks);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(trials_header(blocks))?;
    let preset = agg.config.preset.as_str();
    let backend = agg.config.backend.as_str();
    for p in &agg.points {
        let (omega, lambda) = coupling_cells(&p.base_spec, p.base.cols());
        for r in &p.records {
            let mut row = vec![
                preset.to_string(),
                fmt_g9(bits(p.rate_nats)),
                fmt_g9(p.rate_nats),
                omega.clone(),
                lambda.clone(),
                p.params.sections().to_string(),
                p.params.section_size().to_string(),
                p.params.code_len().to_string(),
                backend.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                fmt_g9(r.ser),
                r.iterations.to_string(),
            ];
            row.extend(r.final_nmse.iter().map(|&v| fmt_g9(v)));
            row.resize(FIXED_COLUMNS.len() + blocks, String::new());
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| SimError::io("trials csv", e))?;
    Ok(())
}

/// One parsed row of a trials CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub preset: String,
    pub rate_bits: f64,
    pub rate_nats: f64,
    pub omega: Option<usize>,
    pub lambda: usize,
    pub code_len: usize,
    pub trial: usize,
    pub seed: u64,
    pub ser: f64,
    pub iterations: usize,
    pub nmse: Vec<f64>,
}

pub fn read_trials_csv<R: Read>(input: R) -> SimResult<Vec<TrialRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let fixed: Vec<&str> = headers.iter().take(FIXED_COLUMNS.len()).collect();
    if fixed != FIXED_COLUMNS {
        return Err(SimError::config("trials csv: unexpected header"));
    }
    let bad = |what: &str| SimError::config(format!("trials csv: bad {what}"));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| rec.get(i).unwrap_or("");
        rows.push(TrialRow {
            preset: num(0).to_string(),
            rate_bits: num(1).parse().map_err(|_| bad("rate_bits"))?,
            rate_nats: num(2).parse().map_err(|_| bad("rate_nats"))?,
            omega: if num(3).is_empty() { None } else { Some(num(3).parse().map_err(|_| bad("omega"))?) },
            lambda: num(4).parse().map_err(|_| bad("lambda"))?,
            code_len: num(7).parse().map_err(|_| bad("n"))?,
            trial: num(9).parse().map_err(|_| bad("trial"))?,
            seed: num(10).parse().map_err(|_| bad("seed"))?,
            ser: num(11).parse().map_err(|_| bad("ser"))?,
            iterations: num(12).parse().map_err(|_| bad("iters"))?,
            nmse: rec
                .iter()
                .skip(FIXED_COLUMNS.len())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| bad("nmse")))
                .collect::<SimResult<_>>()?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeSummary {
    pub mode: String,
    pub iterations: usize,
    pub converged: bool,
    /// Rows `t = 0..=iterations`.
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    /// Exact mode only; rows `t = 0..iterations`.
    pub tau: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    pub decoded_fraction: Vec<f64>,
    pub fully_decoded: bool,
}

impl From<&SeTrace> for SeSummary {
    fn from(t: &SeTrace) -> Self {
        Self {
            mode: match t.mode {
                SeMode::Exact => "exact",
                SeMode::Asymptotic => "asymptotic",
            }
            .into(),
            iterations: t.iterations,
            converged: t.converged,
            phi: t.phi.clone(),
            psi: t.psi.clone(),
            tau: t.tau.clone(),
            nu: t.nu.clone(),
            decoded_fraction: t.decoded_fractions(),
            fully_decoded: t.fully_decoded(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropOneSummary {
    pub omega: usize,
    pub lambda: usize,
    pub snr: f64,
    pub rate_nats: f64,
    pub rate_bits: f64,
    pub kappa: f64,
    pub rate_bound_nats: f64,
    pub rate_bound_bits: f64,
    pub rate_condition_ok: bool,
    /// `null` when the threshold is infinite: no ω works at this rate.
    pub omega_threshold: Option<f64>,
    pub omega_condition_ok: bool,
    pub c_star_lower_bound: usize,
    pub iteration_upper_bound: Option<usize>,
    pub full_decode_first_iter: bool,
}

impl From<&PropOneReport> for PropOneSummary {
    fn from(r: &PropOneReport) -> Self {
        Self {
            omega: r.omega,
            lambda: r.lambda,
            snr: r.snr,
            rate_nats: r.rate,
            rate_bits: r.rate_bits(),
            kappa: r.kappa,
            rate_bound_nats: r.rate_bound,
            rate_bound_bits: r.rate_bound_bits(),
            rate_condition_ok: r.rate_condition_ok,
            omega_threshold: r.omega_threshold.is_finite().then_some(r.omega_threshold),
            omega_condition_ok: r.omega_condition_ok,
            c_star_lower_bound: r.c_star_lower_bound,
            iteration_upper_bound: r.iteration_upper_bound,
            full_decode_first_iter: r.full_decode_first_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub base: String,
    pub omega: Option<usize>,
    pub lambda: Option<usize>,
    pub base_rows: usize,
    pub base_cols: usize,
    pub rate_bits: f64,
    pub rate_nats: f64,
    pub realised_rate_nats: f64,
    pub code_len: usize,
    pub trials: usize,
    pub mean_ser: f64,
    /// Across trials.
    pub ser_std_err: f64,
    /// Treating every section as an independent Bernoulli outcome.
    pub ser_binomial_std_err: f64,
    pub mean_iterations: f64,
    pub not_converged: usize,
    pub phi_clamped: usize,
    pub ser_bound_violations: usize,
    pub mean_final_nmse: Vec<f64>,
    /// Mean per-block NMSE for `t = 0..=T`.
    pub nmse_profile: Vec<Vec<f64>>,
    pub se: Option<SeSummary>,
    pub asymptotic_se: SeSummary,
    pub prop_one: Option<PropOneSummary>,
}

impl From<&PointResult> for PointSummary {
    fn from(p: &PointResult) -> Self {
        let band = p.base_spec.band();
        Self {
            base: p.base_spec.to_string(),
            omega: band.map(|b| b.0),
            lambda: band.map(|b| b.1),
            base_rows: p.base.rows(),
            base_cols: p.base.cols(),
            rate_bits: bits(p.rate_nats),
            rate_nats: p.rate_nats,
            realised_rate_nats: p.params.rate(),
            code_len: p.params.code_len(),
            trials: p.records.len(),
            mean_ser: p.mean_ser(),
            ser_std_err: p.ser_std_err(),
            ser_binomial_std_err: p.ser_binomial_std_err(),
            mean_iterations: p.mean_iterations(),
            not_converged: p.records.iter().filter(|r| !r.converged).count(),
            phi_clamped: p.records.iter().filter(|r| r.phi_clamped).count(),
            ser_bound_violations: p.records.iter().filter(|r| !r.ser_bound_holds()).count(),
            mean_final_nmse: p.mean_final_nmse(),
            nmse_profile: p.nmse_profile(),
            se: p.se.as_ref().map(SeSummary::from),
            asymptotic_se: SeSummary::from(&p.asymptotic),
            prop_one: p.prop_one.as_ref().map(PropOneSummary::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub preset: String,
    pub master_seed: u64,
    pub backend: String,
    pub sections: usize,
    pub section_size: usize,
    pub power: f64,
    pub noise_var: f64,
    pub snr: f64,
    pub trials: usize,
    pub fixed_operator: bool,
    pub points: Vec<PointSummary>,
}

impl From<&Aggregate> for Summary {
    fn from(agg: &Aggregate) -> Self {
        let c = &agg.config;
        Self {
            preset: c.preset.to_string(),
            master_seed: c.seed,
            backend: c.backend.to_string(),
            sections: c.sections,
            section_size: c.section_size,
            power: c.power,
            noise_var: c.noise_var,
            snr: c.snr(),
            trials: c.trials,
            fixed_operator: c.fixed_operator,
            points: agg.points.iter().map(PointSummary::from).collect(),
        }
    }
}

/// Iterations shown in the wave table: 1, 5, 10, 15, … up to `last`.
pub fn wave_iterations(last: usize) -> Vec<usize> {
    core::iter::once(1).chain((5..=last).step_by(5)).filter(|&t| t <= last).collect()
}

fn carried(rows: &[Vec<f64>], t: usize) -> Option<&Vec<f64>> {
    rows.get(t.min(rows.len().checked_sub(1)?))
}

pub fn write_wave_csv<W: Write>(out: W, agg: &Aggregate) -> SimResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["base", "rate_bits", "iteration", "block", "amp_nmse", "se_psi", "asymptotic_psi"])?;
    for p in &agg.points {
        let profile = p.nmse_profile();
        let se_len = p.se.as_ref().map_or(0, |s| s.psi.len());
        let last = profile.len().max(se_len).saturating_sub(1);
        for t in wave_iterations(last) {
            for c in 0..p.base.cols() {
                let cell = |rows: Option<&Vec<f64>>| rows.map(|r| fmt_g9(r[c])).unwrap_or_default();
                w.write_record([
                    p.base_spec.to_string(),
                    fmt_g9(bits(p.rate_nats)),
                    t.to_string(),
                    (c + 1).to_string(),
                    cell(carried(&profile, t)),
                    cell(p.se.as_ref().and_then(|s| carried(&s.psi, t))),
                    cell(carried(&p.asymptotic.psi, t)),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| SimError::io("wave csv", e))?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> SimResult<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| SimError::io("json", e))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub trials_csv: PathBuf,
    pub summary_json: PathBuf,
    pub wave_csv: PathBuf,
}

fn create(path: &Path) -> SimResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| SimError::io(path, e))
}

/// Write all three files into `dir`, creating it if needed.
pub fn write_outputs(agg: &Aggregate, dir: &Path) -> SimResult<OutputPaths> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let stem = agg.config.preset.as_str();
    let paths = OutputPaths {
        trials_csv: dir.join(format!("{stem}_trials.csv")),
        summary_json: dir.join(format!("{stem}_summary.json")),
        wave_csv: dir.join(format!("{stem}_wave.csv")),
    };
    let default_blocks = agg.config.bases.first().and_then(|b| b.build(agg.config.power).ok()).map_or(1, |b| b.cols());
    write_trials_csv(create(&paths.trials_csv)?, agg, default_blocks)?;
    write_json(create(&paths.summary_json)?, &Summary::from(agg))?;
    write_wave_csv(create(&paths.wave_csv)?, agg)?;
    Ok(paths)
}

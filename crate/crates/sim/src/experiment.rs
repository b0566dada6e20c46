//! Seeded Monte Carlo trials.
//!
//! Trial `i` of rate point `k` in series `s` draws every random quantity
//! (operator, message, noise) from streams keyed by
//! `(master_seed, s, k, i)`, so results do not depend on how trials are
//! scheduled across workers. Records are collected in trial order.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use scsparc_core::rng::{derive_seed, stream, TAG_MESSAGE};
use scsparc_core::{
    amp_decode, asymptotic_se, awgn, encode, hard_decision, proposition_one, se_recursion, section_error_rate,
    AmpConfig, BaseMatrix, CodeParams, DesignOperator, MessageVector, PropOneReport, SeTrace,
};

use crate::config::{BaseSpec, ExperimentConfig};
use crate::error::SimResult;

const TAG_TRIAL: u64 = 0x7472_6961;
const TAG_FIXED_OPERATOR: u64 = 0x6669_786f;
const TAG_STATE_EVOLUTION: u64 = 0x7365_7276;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Print a per-rate-point trial counter on stderr.
    pub progress: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub ser: f64,
    pub iterations: usize,
    pub converged: bool,
    pub phi_clamped: bool,
    /// Per-block NMSE of the final estimate.
    pub final_nmse: Vec<f64>,
    /// Per-block NMSE of every iterate, `t = 0..=iterations`.
    pub nmse_trace: Vec<Vec<f64>>,
}

impl TrialRecord {
    pub fn mean_final_nmse(&self) -> f64 {
        mean(&self.final_nmse)
    }

    /// SER ≤ 4·NMSE; a wrong section always carries squared error ≥ 1/4.
    pub fn ser_bound_holds(&self) -> bool {
        self.ser <= 4.0 * self.mean_final_nmse() + 1e-12
    }
}

/// All trials and predictions for one (base matrix, rate) pair.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub series: usize,
    pub base_spec: BaseSpec,
    pub base: BaseMatrix,
    pub rate_index: usize,
    /// Target rate in nats.
    pub rate_nats: f64,
    pub params: CodeParams,
    pub records: Vec<TrialRecord>,
    /// Monte Carlo state evolution at the realised rate, if requested.
    pub se: Option<SeTrace>,
    pub asymptotic: SeTrace,
    /// Only for band base matrices.
    pub prop_one: Option<PropOneReport>,
}

impl PointResult {
    pub fn mean_ser(&self) -> f64 {
        mean(&self.records.iter().map(|r| r.ser).collect::<Vec<_>>())
    }

    /// Standard error of the mean SER across trials.
    pub fn ser_std_err(&self) -> f64 {
        let n = self.records.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean_ser();
        let var = self.records.iter().map(|r| (r.ser - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }

    /// `sqrt(p(1−p)/N)` with `N` the number of decoded sections.
    pub fn ser_binomial_std_err(&self) -> f64 {
        let total = (self.records.len() * self.params.sections()) as f64;
        if total == 0.0 {
            return 0.0;
        }
        let p = self.mean_ser();
        (p * (1.0 - p) / total).sqrt()
    }

    pub fn mean_iterations(&self) -> f64 {
        mean(&self.records.iter().map(|r| r.iterations as f64).collect::<Vec<_>>())
    }

    pub fn mean_final_nmse(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.base.cols()];
        for r in &self.records {
            for (a, v) in acc.iter_mut().zip(&r.final_nmse) {
                *a += v;
            }
        }
        let n = self.records.len().max(1) as f64;
        acc.iter().map(|a| a / n).collect()
    }

    /// Mean per-block NMSE at each iteration `t = 0..=T`, where `T` is the
    /// longest trial; a trial that stopped early contributes its final value.
    pub fn nmse_profile(&self) -> Vec<Vec<f64>> {
        let depth = self.records.iter().map(|r| r.nmse_trace.len()).max().unwrap_or(0);
        let n = self.records.len() as f64;
        (0..depth)
            .map(|t| {
                let mut acc = vec![0.0; self.base.cols()];
                for r in &self.records {
                    let row = &r.nmse_trace[t.min(r.nmse_trace.len() - 1)];
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += v;
                    }
                }
                acc.iter().map(|a| a / n).collect()
            })
            .collect()
    }

    /// Mean NMSE per block at iteration `t` (carried forward past the end).
    pub fn nmse_at(&self, t: usize) -> Option<Vec<f64>> {
        let profile = self.nmse_profile();
        profile.get(t.min(profile.len().checked_sub(1)?)).cloned()
    }
}

#[derive(Debug, Clone)]
pub struct Aggregate {
    pub config: ExperimentConfig,
    /// Series-major, then rate order.
    pub points: Vec<PointResult>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn amp_config(cfg: &ExperimentConfig, base: &BaseMatrix) -> AmpConfig {
    let mut amp = AmpConfig::default_for(base);
    if let Some(max_iter) = cfg.max_iter {
        amp.max_iter = max_iter;
    }
    amp.stop_tol = cfg.stop_tol;
    amp
}

/// Predictions that need no coding trials: exact SE (optional), asymptotic
/// SE and, for band matrices, the coupling-width design report. Asymptotic
/// quantities use the target rate; exact SE uses the realised one.
pub(crate) fn predictions(
    cfg: &ExperimentConfig,
    spec: &BaseSpec,
    base: &BaseMatrix,
    params: &CodeParams,
    with_exact: bool,
    se_seed: u64,
) -> SimResult<(Option<SeTrace>, SeTrace, Option<PropOneReport>)> {
    let se = if with_exact {
        let max_iter = amp_config(cfg, base).max_iter.max(1);
        Some(se_recursion(base, params, max_iter, cfg.se_samples, se_seed)?)
    } else {
        None
    };
    let asymptotic = asymptotic_se(base, cfg.noise_var, params.rate_target())?;
    let prop_one = match spec.band() {
        Some((omega, lambda)) => Some(proposition_one(omega, lambda, cfg.snr(), params.rate_target())?),
        None => None,
    };
    Ok((se, asymptotic, prop_one))
}

pub(crate) fn se_seed(master: u64, series: usize, rate_index: usize) -> u64 {
    derive_seed(master, TAG_STATE_EVOLUTION, &[series as u64, rate_index as u64])
}

fn run_trial(
    cfg: &ExperimentConfig,
    params: &CodeParams,
    base: &BaseMatrix,
    fixed: Option<&DesignOperator>,
    trial: usize,
    seed: u64,
) -> SimResult<TrialRecord> {
    let sampled;
    let op = match fixed {
        Some(op) => op,
        None => {
            sampled = DesignOperator::sample(cfg.backend, params, base, seed)?;
            &sampled
        }
    };
    let msg = MessageVector::random(params.sections(), params.section_size(), &mut stream(seed, TAG_MESSAGE, &[]));
    let y = awgn(&encode(&msg, op)?, params.noise_var(), seed)?;
    let out = amp_decode(&y, op, &amp_config(cfg, base), Some(&msg))?;
    let ser = section_error_rate(&hard_decision(&out.beta, params.section_size())?, &msg)?;
    let final_nmse = out.trace.nmse.last().cloned().unwrap_or_default();
    Ok(TrialRecord {
        trial,
        seed,
        ser,
        iterations: out.trace.iterations,
        converged: out.trace.converged,
        phi_clamped: out.trace.phi_clamped,
        final_nmse,
        nmse_trace: out.trace.nmse,
    })
}

/// Run every (base matrix, rate) point of `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> SimResult<Aggregate> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers.unwrap_or(0)).build()?;
    let rates = cfg.rates_nats();
    let mut points = Vec::new();
    for (series, spec) in cfg.bases.iter().enumerate() {
        let base = spec.build(cfg.power)?;
        for (rate_index, &rate_nats) in rates.iter().enumerate() {
            let params = cfg.code_params(&base, rate_nats)?;
            let fixed = if cfg.fixed_operator {
                let seed = derive_seed(cfg.seed, TAG_FIXED_OPERATOR, &[series as u64, rate_index as u64]);
                Some(DesignOperator::sample(cfg.backend, &params, &base, seed)?)
            } else {
                None
            };
            let done = AtomicUsize::new(0);
            let label = format!("{} {} R={} {}", cfg.preset, spec, cfg.rates[rate_index], cfg.rate_unit);
            let records = pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|trial| {
                        let seed = derive_seed(cfg.seed, TAG_TRIAL, &[series as u64, rate_index as u64, trial as u64]);
                        let rec = run_trial(cfg, &params, &base, fixed.as_ref(), trial, seed);
                        if opts.progress {
                            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                            let mut err = std::io::stderr().lock();
                            let _ = write!(err, "\r[{label}] {k}/{}", cfg.trials);
                            let _ = err.flush();
                        }
                        rec
                    })
                    .collect::<SimResult<Vec<_>>>()
            })?;
            if opts.progress {
                eprintln!();
            }
            let (se, asymptotic, prop_one) =
                predictions(cfg, spec, &base, &params, cfg.exact_se, se_seed(cfg.seed, series, rate_index))?;
            points.push(PointResult {
                series,
                base_spec: spec.clone(),
                base: base.clone(),
                rate_index,
                rate_nats,
                params,
                records,
                se,
                asymptotic,
                prop_one,
            });
        }
    }
    Ok(Aggregate { config: cfg.clone(), points })
}

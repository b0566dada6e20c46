//! Trial-free predictions: exact SE, asymptotic SE and the coupling-width design
//! bounds for every (base matrix, rate) point of a configuration.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::SimResult;
use crate::experiment::{predictions, se_seed};
use crate::format::fmt_g9;
use crate::output::{PropOneSummary, SeSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictPoint {
    pub base: String,
    pub rate_bits: f64,
    pub rate_nats: f64,
    pub realised_rate_nats: f64,
    pub code_len: usize,
    pub exact_se: Option<SeSummary>,
    pub asymptotic_se: SeSummary,
    pub prop_one: Option<PropOneSummary>,
}

/// Evaluate the predictions; `exact` toggles the Monte Carlo SE.
pub fn predict(cfg: &ExperimentConfig, exact: bool) -> SimResult<Vec<PredictPoint>> {
    cfg.validate()?;
    let rates = cfg.rates_nats();
    let mut points = Vec::new();
    for (series, spec) in cfg.bases.iter().enumerate() {
        let base = spec.build(cfg.power)?;
        for (k, &rate) in rates.iter().enumerate() {
            let params = cfg.code_params(&base, rate)?;
            let (se, asymptotic, prop_one) = predictions(cfg, spec, &base, &params, exact, se_seed(cfg.seed, series, k))?;
            points.push(PredictPoint {
                base: spec.to_string(),
                rate_bits: rate / core::f64::consts::LN_2,
                rate_nats: rate,
                realised_rate_nats: params.rate(),
                code_len: params.code_len(),
                exact_se: se.as_ref().map(SeSummary::from),
                asymptotic_se: SeSummary::from(&asymptotic),
                prop_one: prop_one.as_ref().map(PropOneSummary::from),
            });
        }
    }
    Ok(points)
}

fn se_verdict(s: &SeSummary) -> String {
    let cols = s.psi.first().map_or(0, Vec::len);
    let last = s.decoded_fraction.last().copied().unwrap_or(0.0);
    if s.fully_decoded {
        format!("decodes in {} iterations", first_full(s).unwrap_or(s.iterations))
    } else {
        let got = (last * cols as f64).round() as usize;
        format!("stalls after {} iterations, {got}/{cols} blocks decoded", s.iterations)
    }
}

fn first_full(s: &SeSummary) -> Option<usize> {
    s.decoded_fraction.iter().position(|&f| f >= 1.0)
}

pub fn prop_one_verdict(p: &PropOneSummary) -> String {
    if !p.rate_condition_ok {
        return format!(
            "rate condition violated: R = {} bits >= (1/2κ)ln(1+κ·snr) = {} bits",
            fmt_g9(p.rate_bits),
            fmt_g9(p.rate_bound_bits)
        );
    }
    let threshold = p.omega_threshold.map_or("inf".to_string(), fmt_g9);
    let mut s = if p.omega_condition_ok {
        format!("omega {} > threshold {threshold}; c* >= {}", p.omega, p.c_star_lower_bound)
    } else {
        format!("omega {} <= threshold {threshold}; no decoding guarantee", p.omega)
    };
    if let Some(t) = p.iteration_upper_bound {
        let _ = write!(s, "; at most {t} iterations");
    }
    if p.full_decode_first_iter {
        s.push_str("; whole codeword decodes at t=1");
    }
    s
}

/// Human-readable report, one block per point.
pub fn render(points: &[PredictPoint]) -> String {
    let mut out = String::new();
    for p in points {
        let _ = writeln!(
            out,
            "{} R={} bits ({} nats), n={}",
            p.base,
            fmt_g9(p.rate_bits),
            fmt_g9(p.rate_nats),
            p.code_len
        );
        let _ = writeln!(out, "  asymptotic SE: {}", se_verdict(&p.asymptotic_se));
        if let Some(se) = &p.exact_se {
            let _ = writeln!(out, "  exact SE:      {}", se_verdict(se));
        }
        if let Some(prop) = &p.prop_one {
            let _ = writeln!(out, "  design bound:  {}", prop_one_verdict(prop));
        }
    }
    out
}

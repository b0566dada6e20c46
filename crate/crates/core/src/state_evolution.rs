//! State evolution: deterministic recursions predicting the per-block NMSE
//! of the AMP decoder.
//!
//! Exact mode iterates
//!
//! ```text
//! φ_r = σ² + (1/L_C) Σ_c W_rc ψ_c
//! τ_c = (R / ln M) / [(1/L_R) Σ_r W_rc / φ_r]
//! ψ_c ← 1 − E(τ_c)
//! ```
//!
//! where `E(τ)` is the expected posterior weight the section-wise denoiser
//! puts on the true location at effective noise level `τ`, estimated here by
//! Monte Carlo. In the large-`M` limit `E(τ_c)` becomes the indicator of
//! `(1/L_R) Σ_r W_rc / φ_r > 2R`, which gives the 0/1 asymptotic recursion.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{self, TAG_DENOISER_MSE};
use crate::{BaseMatrix, CodeParams, Error, Result};

/// Exact-mode recursion stops once `‖ψ^{t+1} − ψ^t‖_∞` falls below this.
pub const PSI_TOLERANCE: f64 = 1e-6;

/// Sample banks larger than this many values are streamed instead of stored.
const BANK_LIMIT: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseEstimate {
    pub mean: f64,
    pub std_err: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && !tau.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("tau must be positive"))
    }
}

// posterior weight on U_1 for one draw, via log-sum-exp
#[inline]
fn ratio(u: &[f64], tau: f64) -> f64 {
    let inv_sqrt = 1.0 / tau.sqrt();
    let a1 = u[0] * inv_sqrt + 1.0 / tau;
    let mut max = a1;
    for &x in &u[1..] {
        max = max.max(x * inv_sqrt);
    }
    let mut total = (a1 - max).exp();
    let head = total;
    for &x in &u[1..] {
        total += (x * inv_sqrt - max).exp();
    }
    head / total
}

// Welford's update; the naive Σx² − n·mean² cancels when every ratio is ≈ 1
#[derive(Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn estimate(&self) -> MseEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        MseEstimate { mean: self.mean, std_err: (var / self.n as f64).sqrt() }
    }
}

/// Monte Carlo estimate of `E(τ)` for section size `m`:
/// the mean over `n_samples` draws of `U_1..U_M ~ N(0,1)` of
/// `e^{U_1/√τ} / (e^{U_1/√τ} + e^{−1/τ} Σ_{j≥2} e^{U_j/√τ})`.
pub fn denoiser_mse(tau: f64, m: usize, n_samples: usize, seed: u64) -> Result<MseEstimate> {
    check_tau(tau)?;
    if m < 2 || n_samples == 0 {
        return Err(Error::InvalidArgument("need m >= 2 and at least one sample"));
    }
    let mut rng = rng::stream(seed, TAG_DENOISER_MSE, &[m as u64]);
    let mut u = vec![0.0; m];
    let mut acc = Moments::default();
    for _ in 0..n_samples {
        for v in u.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        acc.push(ratio(&u, tau));
    }
    Ok(acc.estimate())
}

/// Repeated evaluation of `E(τ)` with common random numbers: every `τ` is
/// evaluated on the same draws as [`denoiser_mse`] with the same seed, and
/// results are memoised per `τ`.
#[derive(Debug, Clone)]
pub struct DenoiserMse {
    m: usize,
    n_samples: usize,
    seed: u64,
    bank: Option<Vec<f64>>,
    cache: BTreeMap<u64, MseEstimate>,
}

impl DenoiserMse {
    pub fn new(m: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if m < 2 || n_samples == 0 {
            return Err(Error::InvalidArgument("need m >= 2 and at least one sample"));
        }
        let bank = (m.saturating_mul(n_samples) <= BANK_LIMIT).then(|| {
            let mut rng = rng::stream(seed, TAG_DENOISER_MSE, &[m as u64]);
            (0..m * n_samples).map(|_| rng.sample(StandardNormal)).collect()
        });
        Ok(Self { m, n_samples, seed, bank, cache: BTreeMap::new() })
    }

    pub fn section_size(&self) -> usize {
        self.m
    }

    pub fn estimate(&mut self, tau: f64) -> Result<MseEstimate> {
        check_tau(tau)?;
        if let Some(hit) = self.cache.get(&tau.to_bits()) {
            return Ok(*hit);
        }
        let est = match &self.bank {
            Some(bank) => {
                let mut acc = Moments::default();
                for u in bank.chunks_exact(self.m) {
                    acc.push(ratio(u, tau));
                }
                acc.estimate()
            }
            None => denoiser_mse(tau, self.m, self.n_samples, self.seed)?,
        };
        self.cache.insert(tau.to_bits(), est);
        Ok(est)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeMode {
    Exact,
    Asymptotic,
}

/// Per-iteration state evolution profiles. Row `t` of `phi`, `effective_snr`,
/// `tau` and `nu` is computed from `psi[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeTrace {
    pub mode: SeMode,
    /// `φ^t`, length `L_R`. The (ω, Λ) closed form reports `φ̄/σ²`.
    pub phi: Vec<Vec<f64>>,
    /// `ψ^t`, length `L_C`; `psi[0]` is all ones.
    pub psi: Vec<Vec<f64>>,
    /// `(1/L_R) Σ_r W_rc / φ_r`, compared against `2R`.
    pub effective_snr: Vec<Vec<f64>>,
    /// `τ^t` (exact mode only).
    pub tau: Vec<Vec<f64>>,
    /// `ν^t = 1/(τ^t ln M)` (exact mode only).
    pub nu: Vec<Vec<f64>>,
    /// Standard error of each Monte Carlo `E(τ)` behind `psi[t + 1]`.
    pub mse_std_err: Vec<Vec<f64>>,
    /// Number of updates, i.e. `psi.len() − 1`.
    pub iterations: usize,
    /// Reached a fixed point (asymptotic) or the `ψ` tolerance (exact).
    pub converged: bool,
}

impl SeTrace {
    fn new(mode: SeMode) -> Self {
        Self {
            mode,
            phi: Vec::new(),
            psi: Vec::new(),
            effective_snr: Vec::new(),
            tau: Vec::new(),
            nu: Vec::new(),
            mse_std_err: Vec::new(),
            iterations: 0,
            converged: false,
        }
    }

    pub fn final_psi(&self) -> &[f64] {
        self.psi.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Fraction of columns with `ψ^t_c = 0` (asymptotic) or below `1e-3`.
    pub fn decoded_fraction(&self, t: usize) -> f64 {
        let psi = &self.psi[t];
        psi.iter().filter(|&&p| p < 1e-3).count() as f64 / psi.len() as f64
    }

    pub fn decoded_fractions(&self) -> Vec<f64> {
        (0..self.psi.len()).map(|t| self.decoded_fraction(t)).collect()
    }

    /// Every column decoded at the last iteration.
    pub fn fully_decoded(&self) -> bool {
        self.final_psi().iter().all(|&p| p < 1e-3)
    }
}

fn phi_profile(base: &BaseMatrix, noise_var: f64, psi: &[f64]) -> Vec<f64> {
    let l_c = base.cols() as f64;
    (0..base.rows())
        .map(|r| noise_var + base.row(r).iter().zip(psi).map(|(w, p)| w * p).sum::<f64>() / l_c)
        .collect()
}

fn effective_snr(base: &BaseMatrix, phi: &[f64]) -> Result<Vec<f64>> {
    let l_r = base.rows() as f64;
    (0..base.cols())
        .map(|c| {
            let s: f64 = (0..base.rows()).map(|r| base.get(r, c) / phi[r]).sum::<f64>() / l_r;
            if s > 0.0 && s.is_finite() {
                Ok(s)
            } else {
                Err(Error::EmptyColumn(c))
            }
        })
        .collect()
}

/// Exact state evolution for base matrix `base` with the code's realised
/// rate, section size and noise variance. Runs at most `max_iter` updates.
pub fn se_recursion(
    base: &BaseMatrix,
    params: &CodeParams,
    max_iter: usize,
    n_samples: usize,
    seed: u64,
) -> Result<SeTrace> {
    if base.rows() != params.row_blocks() || base.cols() != params.col_blocks() {
        return Err(Error::BaseMismatch);
    }
    let mut mse = DenoiserMse::new(params.section_size(), n_samples, seed)?;
    se_recursion_with(base, params.noise_var(), params.rate(), &mut mse, max_iter)
}

/// As [`se_recursion`] with explicit noise variance and rate (nats), reusing
/// a denoiser MSE evaluator.
pub fn se_recursion_with(
    base: &BaseMatrix,
    noise_var: f64,
    rate: f64,
    mse: &mut DenoiserMse,
    max_iter: usize,
) -> Result<SeTrace> {
    if !(rate > 0.0) || !(noise_var >= 0.0) {
        return Err(Error::InvalidArgument("rate must be positive and noise variance nonnegative"));
    }
    base.check_columns()?;
    let ln_m = (mse.section_size() as f64).ln();
    let mut trace = SeTrace::new(SeMode::Exact);
    let mut psi = vec![1.0; base.cols()];
    loop {
        let phi = phi_profile(base, noise_var, &psi);
        let snr = effective_snr(base, &phi)?;
        let tau: Vec<f64> = snr.iter().map(|s| rate / ln_m / s).collect();
        trace.nu.push(tau.iter().map(|t| 1.0 / (t * ln_m)).collect());
        trace.phi.push(phi);
        trace.effective_snr.push(snr);
        trace.psi.push(psi.clone());
        if trace.iterations == max_iter || trace.converged {
            trace.tau.push(tau);
            break;
        }
        let mut next = Vec::with_capacity(psi.len());
        let mut errs = Vec::with_capacity(psi.len());
        for &t in &tau {
            let e = mse.estimate(t)?;
            next.push((1.0 - e.mean).clamp(0.0, 1.0));
            errs.push(e.std_err);
        }
        trace.tau.push(tau);
        trace.mse_std_err.push(errs);
        let diff = next.iter().zip(&psi).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        trace.converged = diff < PSI_TOLERANCE;
        psi = next;
        trace.iterations += 1;
    }
    Ok(trace)
}

/// Asymptotic (large-`M`) state evolution for an arbitrary base matrix.
///
/// Column `c` decodes at `t + 1` iff `(1/L_R) Σ_r W_rc / φ̄_r > 2R` strictly.
/// Runs from `ψ̄⁰ = 1` until the 0/1 profile repeats.
pub fn asymptotic_se(base: &BaseMatrix, noise_var: f64, rate: f64) -> Result<SeTrace> {
    if !(rate > 0.0) || !(noise_var >= 0.0) {
        return Err(Error::InvalidArgument("rate must be positive and noise variance nonnegative"));
    }
    base.check_columns()?;
    run_asymptotic(base.cols(), 2.0 * rate, |psi| {
        let phi = phi_profile(base, noise_var, psi);
        let snr = effective_snr(base, &phi)?;
        Ok((phi, snr))
    })
}

/// Closed form of [`asymptotic_se`] for the (ω, Λ) base matrix, parametrised
/// by `snr` alone. `phi` is reported in units of `σ²`.
pub fn asymptotic_se_band(omega: usize, lambda: usize, snr: f64, rate: f64) -> Result<SeTrace> {
    if omega == 0 || lambda == 0 {
        return Err(Error::InvalidArgument("omega and lambda must be at least 1"));
    }
    if lambda + 1 < 2 * omega {
        return Err(Error::CouplingTooShort { omega, lambda });
    }
    if !(snr > 0.0) || !(rate > 0.0) {
        return Err(Error::InvalidArgument("snr and rate must be positive"));
    }
    let rows = lambda + omega - 1;
    let kappa = rows as f64 / lambda as f64;
    let gain = kappa * snr / omega as f64;
    run_asymptotic(lambda, 2.0 * rate, |psi| {
        // 1-based row ρ covers columns max(1, ρ−ω+1) ..= min(ρ, Λ)
        let phi: Vec<f64> = (1..=rows)
            .map(|rho| {
                let lo = if rho <= omega { 1 } else { rho - omega + 1 };
                let hi = rho.min(lambda);
                1.0 + gain * psi[lo - 1..hi].iter().sum::<f64>()
            })
            .collect();
        let snr_eff = (0..lambda)
            .map(|c| snr / omega as f64 * phi[c..c + omega].iter().map(|p| 1.0 / p).sum::<f64>())
            .collect();
        Ok((phi, snr_eff))
    })
}

fn run_asymptotic<F>(cols: usize, threshold: f64, mut step: F) -> Result<SeTrace>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, Vec<f64>)>,
{
    let mut trace = SeTrace::new(SeMode::Asymptotic);
    let mut psi = vec![1.0; cols];
    // ψ̄ only ever flips 1 → 0, so a fixed point comes within `cols` updates
    for _ in 0..=cols + 1 {
        let (phi, snr) = step(&psi)?;
        let next: Vec<f64> = snr.iter().map(|&s| if s > threshold { 0.0 } else { 1.0 }).collect();
        trace.phi.push(phi);
        trace.effective_snr.push(snr);
        trace.psi.push(psi.clone());
        if next == psi {
            trace.converged = true;
            break;
        }
        psi = next;
        trace.iterations += 1;
    }
    Ok(trace)
}

/// Design quantities for an (ω, Λ) base matrix at a given `snr` and rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropOneReport {
    pub omega: usize,
    pub lambda: usize,
    pub snr: f64,
    /// Rate in nats.
    pub rate: f64,
    /// `(Λ+ω−1)/Λ`.
    pub kappa: f64,
    /// `(1/2κ) ln(1 + κ·snr)` in nats.
    pub rate_bound: f64,
    /// `rate < rate_bound`.
    pub rate_condition_ok: bool,
    /// `(1/(e^{2Rκ}−1) − 1/(κ·snr))^{-1}`; infinite when the difference is
    /// not positive, i.e. no coupling width suffices at this `κ`.
    pub omega_threshold: f64,
    /// `ω` strictly exceeds the threshold, so decoding starts.
    pub omega_condition_ok: bool,
    /// Lower bound on the columns decoded per end in the first iteration:
    /// `min(ω−1, ⌊ω (1+κ snr)/(κ snr)² (ln(1+κ snr) − 2Rκ)⌋)`, clamped at 0.
    /// Zero when the start condition fails.
    pub c_star_lower_bound: usize,
    /// `⌈Λ / (2c*)⌉` when `c* ≥ 1`.
    pub iteration_upper_bound: Option<usize>,
    /// `R < snr / (2(1 + κ·snr))`: everything decodes in the first iteration.
    pub full_decode_first_iter: bool,
}

impl PropOneReport {
    pub fn rate_bound_bits(&self) -> f64 {
        self.rate_bound / core::f64::consts::LN_2
    }

    pub fn rate_bits(&self) -> f64 {
        self.rate / core::f64::consts::LN_2
    }
}

pub fn proposition_one(omega: usize, lambda: usize, snr: f64, rate: f64) -> Result<PropOneReport> {
    if omega == 0 || lambda == 0 {
        return Err(Error::InvalidArgument("omega and lambda must be at least 1"));
    }
    if lambda + 1 < 2 * omega {
        return Err(Error::CouplingTooShort { omega, lambda });
    }
    if !(snr > 0.0) || !(rate > 0.0) {
        return Err(Error::InvalidArgument("snr and rate must be positive"));
    }
    let kappa = (lambda + omega - 1) as f64 / lambda as f64;
    let ks = kappa * snr;
    let rate_bound = (1.0 + ks).ln() / (2.0 * kappa);
    let diff = 1.0 / (2.0 * rate * kappa).exp_m1() - 1.0 / ks;
    let omega_threshold = if diff > 0.0 { 1.0 / diff } else { f64::INFINITY };
    let omega_condition_ok = (omega as f64) > omega_threshold;

    let c_star_lower_bound = if omega_condition_ok {
        let x = omega as f64 * (1.0 + ks) / (ks * ks) * ((1.0 + ks).ln() - 2.0 * rate * kappa);
        let floor = if x > 0.0 { x.floor() as usize } else { 0 };
        floor.min(omega - 1)
    } else {
        0
    };
    let iteration_upper_bound =
        (c_star_lower_bound >= 1).then(|| lambda.div_ceil(2 * c_star_lower_bound));

    Ok(PropOneReport {
        omega,
        lambda,
        snr,
        rate,
        kappa,
        rate_bound,
        rate_condition_ok: rate < rate_bound,
        omega_threshold,
        omega_condition_ok,
        c_star_lower_bound,
        iteration_upper_bound,
        full_decode_first_iter: rate < snr / (2.0 * (1.0 + ks)),
    })
}

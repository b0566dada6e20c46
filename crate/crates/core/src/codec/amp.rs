//! Approximate message passing decoder for SC-SPARCs.
//!
//! Starting from `β⁰ = 0` and `z⁻¹ = 0`, iteration `t` computes
//!
//! ```text
//! b_r   = (1/L_C) Σ_c W_rc (1 − ‖β_C(c)‖² / (L/L_C)) / φ_r^{t−1}   (0 at t = 0)
//! z     = y − A β + b̃ ⊙ z_prev
//! φ_r   = ‖z_R(r)‖² / M_R
//! ς_c   = (L / M_R) / Σ_r (W_rc / φ_r)
//! β_new = η(β + ς̃ ⊙ Aᵀ(z ⊙ φ̃⁻¹), ς̃)
//! ```
//!
//! and stops once `‖β_new − β‖² / (ML)` drops below the tolerance or the
//! iteration budget is spent.

use alloc::vec;
use alloc::vec::Vec;

use super::{denoise_into, nmse_per_block, MessageVector};
use crate::{BaseMatrix, DesignOperator, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpConfig {
    pub max_iter: usize,
    /// Threshold on the mean squared change of the estimate.
    pub stop_tol: f64,
    /// Lower clamp for the residual variances `φ_r`.
    pub phi_floor: f64,
}

impl AmpConfig {
    /// Defaults sized for a base matrix with `L_C = Λ` columns:
    /// `2⌈Λ/2⌉ + 25` iterations and tolerance `1e-8`.
    pub fn default_for(base: &BaseMatrix) -> Self {
        let lambda = base.cols();
        Self { max_iter: 2 * lambda.div_ceil(2) + 25, stop_tol: 1e-8, phi_floor: 1e-12 }
    }
}

/// Per-iteration record of the decoder.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AmpTrace {
    /// `φ^t`, one row per iteration.
    pub phi: Vec<Vec<f64>>,
    /// `ς^t`, one row per iteration.
    pub varsigma: Vec<Vec<f64>>,
    /// Onsager coefficients `b^t`.
    pub onsager: Vec<Vec<f64>>,
    /// Per-block NMSE of `β^t` for `t = 0..=iterations`; empty without a
    /// reference message.
    pub nmse: Vec<Vec<f64>>,
    /// Block-averaged NMSE, aligned with `nmse`.
    pub nmse_mean: Vec<f64>,
    pub has_truth: bool,
    /// Some `φ_r` fell to or below the floor and was clamped.
    pub phi_clamped: bool,
    pub iterations: usize,
    /// Stopped on the tolerance rather than the iteration budget.
    pub converged: bool,
    /// `‖β^{t+1} − β^t‖² / (ML)` at each iteration.
    pub change: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AmpOutcome {
    /// Final soft estimate.
    pub beta: Vec<f64>,
    pub trace: AmpTrace,
}

/// Run the decoder on channel output `y`. With `truth`, the trace records
/// the per-block NMSE of every iterate.
pub fn amp_decode(
    y: &[f64],
    op: &DesignOperator,
    config: &AmpConfig,
    truth: Option<&MessageVector>,
) -> Result<AmpOutcome> {
    let params = *op.params();
    let base = op.base();
    base.check_columns()?;
    let n = params.code_len();
    let ml = params.total_cols();
    if y.len() != n {
        return Err(Error::LengthMismatch { what: "channel output", expected: n, found: y.len() });
    }
    if !(config.phi_floor > 0.0) {
        return Err(Error::InvalidArgument("phi floor must be positive"));
    }
    let (l_r, l_c) = (base.rows(), base.cols());
    let m_r = params.rows_per_block();
    let m_c = params.cols_per_block();
    let l = params.sections() as f64;
    let per_block = params.sections_per_block() as f64;

    let mut trace = AmpTrace { has_truth: truth.is_some(), ..AmpTrace::default() };
    let mut beta = vec![0.0; ml];
    let record_nmse = |beta: &[f64], trace: &mut AmpTrace| -> Result<()> {
        if let Some(t) = truth {
            let e = nmse_per_block(beta, t, &params)?;
            trace.nmse_mean.push(e.mean);
            trace.nmse.push(e.per_block);
        }
        Ok(())
    };
    record_nmse(&beta, &mut trace)?;

    let mut z = vec![0.0; n];
    let mut z_prev = vec![0.0; n];
    let mut a_beta = vec![0.0; n];
    let mut s = vec![0.0; ml];
    let mut next = vec![0.0; ml];
    let mut phi_prev: Option<Vec<f64>> = None;

    for _ in 0..config.max_iter {
        let onsager: Vec<f64> = match &phi_prev {
            None => vec![0.0; l_r],
            Some(phi_prev) => {
                let shortfall: Vec<f64> = beta
                    .chunks_exact(m_c)
                    .map(|blk| 1.0 - blk.iter().map(|b| b * b).sum::<f64>() / per_block)
                    .collect();
                (0..l_r)
                    .map(|r| {
                        let acc: f64 =
                            base.row(r).iter().zip(&shortfall).map(|(w, d)| w * d).sum();
                        acc / l_c as f64 / phi_prev[r]
                    })
                    .collect()
            }
        };

        op.forward_into(&beta, &mut a_beta)?;
        for r in 0..l_r {
            let b = onsager[r];
            let rows = r * m_r..(r + 1) * m_r;
            for ((zi, (&yi, &ai)), &zp) in
                z[rows.clone()].iter_mut().zip(y[rows.clone()].iter().zip(&a_beta[rows.clone()])).zip(&z_prev[rows])
            {
                *zi = yi - ai + b * zp;
            }
        }

        let phi: Vec<f64> = z
            .chunks_exact(m_r)
            .map(|zr| {
                let v = zr.iter().map(|x| x * x).sum::<f64>() / m_r as f64;
                if v > config.phi_floor {
                    v
                } else {
                    trace.phi_clamped = true;
                    config.phi_floor
                }
            })
            .collect();
        let inv_phi: Vec<f64> = phi.iter().map(|p| 1.0 / p).collect();
        let varsigma: Vec<f64> = (0..l_c)
            .map(|c| {
                let acc: f64 = (0..l_r).map(|r| base.get(r, c) * inv_phi[r]).sum();
                l / m_r as f64 / acc
            })
            .collect();

        op.scaled_adjoint_into(&z, &inv_phi, &mut s)?;
        for (c, (sb, bb)) in s.chunks_exact_mut(m_c).zip(beta.chunks_exact(m_c)).enumerate() {
            let v = varsigma[c];
            for (sj, &bj) in sb.iter_mut().zip(bb) {
                *sj = bj + v * *sj;
            }
        }
        denoise_into(&s, &varsigma, &params, &mut next)?;

        let change = next.iter().zip(&beta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / ml as f64;
        core::mem::swap(&mut beta, &mut next);
        core::mem::swap(&mut z, &mut z_prev);
        trace.iterations += 1;
        trace.change.push(change);
        trace.onsager.push(onsager);
        trace.varsigma.push(varsigma);
        record_nmse(&beta, &mut trace)?;
        trace.phi.push(phi.clone());
        phi_prev = Some(phi);
        if change < config.stop_tol {
            trace.converged = true;
            break;
        }
    }
    Ok(AmpOutcome { beta, trace })
}

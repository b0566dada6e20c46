//! Messages, encoding, the AWGN channel, the section-wise denoiser and error
//! metrics. The AMP decoder itself lives in [`amp`].

pub mod amp;

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{self, TAG_NOISE};
use crate::{CodeParams, DesignOperator, Error, Result};

/// A SPARC message: one nonzero (equal to 1) per section of `M` columns.
///
/// `indices[ℓ]` is the zero-based position of the nonzero within section `ℓ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageVector {
    indices: Vec<usize>,
    section_size: usize,
}

impl MessageVector {
    pub fn from_indices(indices: Vec<usize>, section_size: usize) -> Result<Self> {
        if section_size == 0 || indices.is_empty() {
            return Err(Error::InvalidArgument("message must have at least one section"));
        }
        if indices.iter().any(|&i| i >= section_size) {
            return Err(Error::InvalidArgument("message index outside its section"));
        }
        Ok(Self { indices, section_size })
    }

    /// Uniformly random location in each of `sections` sections.
    pub fn random<R: Rng + ?Sized>(sections: usize, section_size: usize, rng: &mut R) -> Self {
        let indices = (0..sections).map(|_| rng.random_range(0..section_size)).collect();
        Self { indices, section_size }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn sections(&self) -> usize {
        self.indices.len()
    }

    pub fn section_size(&self) -> usize {
        self.section_size
    }

    /// Length-`ML` 0/1 vector.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut beta = vec![0.0; self.indices.len() * self.section_size];
        for (l, &i) in self.indices.iter().enumerate() {
            beta[l * self.section_size + i] = 1.0;
        }
        beta
    }
}

/// Codeword `x = A β`.
pub fn encode(message: &MessageVector, op: &DesignOperator) -> Result<Vec<f64>> {
    let p = op.params();
    if message.sections() != p.sections() || message.section_size() != p.section_size() {
        return Err(Error::LengthMismatch {
            what: "message",
            expected: p.total_cols(),
            found: message.sections() * message.section_size(),
        });
    }
    op.forward(&message.to_dense())
}

/// `y = x + w` with `w` i.i.d. `N(0, σ²)` drawn from the stream of `seed`.
pub fn awgn(x: &[f64], noise_var: f64, seed: u64) -> Result<Vec<f64>> {
    if !(noise_var >= 0.0) || !noise_var.is_finite() {
        return Err(Error::InvalidArgument("noise variance must be nonnegative"));
    }
    let sd = noise_var.sqrt();
    let mut rng = rng::stream(seed, TAG_NOISE, &[]);
    Ok(x
        .iter()
        .map(|&xi| {
            let w: f64 = rng.sample(StandardNormal);
            xi + sd * w
        })
        .collect())
}

/// Section-wise softmax `η(s, ς̃)`: within each section, entry `j` becomes
/// `exp(s_j/ς̃_j) / Σ exp(s_j'/ς̃_j')`, where `ς̃` repeats each of the `L_C`
/// entries of `varsigma` `M_C` times.
pub fn denoise(s: &[f64], varsigma: &[f64], params: &CodeParams) -> Result<Vec<f64>> {
    let mut out = vec![0.0; s.len()];
    denoise_into(s, varsigma, params, &mut out)?;
    Ok(out)
}

pub fn denoise_into(
    s: &[f64],
    varsigma: &[f64],
    params: &CodeParams,
    out: &mut [f64],
) -> Result<()> {
    if s.len() != params.total_cols() || out.len() != s.len() {
        return Err(Error::LengthMismatch {
            what: "denoiser input",
            expected: params.total_cols(),
            found: s.len(),
        });
    }
    if varsigma.len() != params.col_blocks() {
        return Err(Error::LengthMismatch {
            what: "varsigma",
            expected: params.col_blocks(),
            found: varsigma.len(),
        });
    }
    if varsigma.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("varsigma entries must be positive"));
    }
    let m = params.section_size();
    let m_c = params.cols_per_block();
    for (c, (sb, ob)) in s.chunks_exact(m_c).zip(out.chunks_exact_mut(m_c)).enumerate() {
        let inv = 1.0 / varsigma[c];
        for (sec, o) in sb.chunks_exact(m).zip(ob.chunks_exact_mut(m)) {
            let max = sec.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut total = 0.0;
            for (oj, &sj) in o.iter_mut().zip(sec) {
                let e = ((sj - max) * inv).exp();
                *oj = e;
                total += e;
            }
            let norm = 1.0 / total;
            o.iter_mut().for_each(|v| *v *= norm);
        }
    }
    Ok(())
}

/// Largest entry of each section; ties go to the lowest index.
pub fn hard_decision(beta: &[f64], section_size: usize) -> Result<MessageVector> {
    if section_size == 0 || beta.is_empty() || beta.len() % section_size != 0 {
        return Err(Error::InvalidArgument("estimate length is not a multiple of the section size"));
    }
    let indices = beta
        .chunks_exact(section_size)
        .map(|sec| {
            let mut best = 0;
            for (i, &v) in sec.iter().enumerate().skip(1) {
                if v > sec[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    Ok(MessageVector { indices, section_size })
}

/// Fraction of sections whose decoded index differs from the truth.
pub fn section_error_rate(decoded: &MessageVector, truth: &MessageVector) -> Result<f64> {
    if decoded.sections() != truth.sections() || decoded.section_size != truth.section_size {
        return Err(Error::LengthMismatch {
            what: "decoded message",
            expected: truth.sections(),
            found: decoded.sections(),
        });
    }
    let wrong = decoded.indices.iter().zip(&truth.indices).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.sections() as f64)
}

/// Per-block normalised squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNmse {
    /// `‖β^t_C(c) − β_C(c)‖² / (L/L_C)` for each column block.
    pub per_block: Vec<f64>,
    /// Average over blocks.
    pub mean: f64,
}

impl BlockNmse {
    /// Upper bound `4 · mean` on the section error rate of a hard decision.
    pub fn ser_bound(&self) -> f64 {
        4.0 * self.mean
    }
}

pub fn nmse_per_block(beta: &[f64], truth: &MessageVector, params: &CodeParams) -> Result<BlockNmse> {
    if beta.len() != params.total_cols()
        || truth.sections() != params.sections()
        || truth.section_size() != params.section_size()
    {
        return Err(Error::LengthMismatch {
            what: "estimate",
            expected: params.total_cols(),
            found: beta.len(),
        });
    }
    let m = params.section_size();
    let per_sec = params.sections_per_block();
    let per_block: Vec<f64> = beta
        .chunks_exact(params.cols_per_block())
        .enumerate()
        .map(|(c, block)| {
            let mut err = 0.0;
            for (k, sec) in block.chunks_exact(m).enumerate() {
                let idx = truth.indices[c * per_sec + k];
                for (i, &b) in sec.iter().enumerate() {
                    let d = if i == idx { b - 1.0 } else { b };
                    err += d * d;
                }
            }
            err / per_sec as f64
        })
        .collect();
    let mean = per_block.iter().sum::<f64>() / per_block.len() as f64;
    Ok(BlockNmse { per_block, mean })
}

//! Code parameters, rate units and block index bookkeeping.
//!
//! All rates are carried in nats internally. Indices are zero-based: row `i`
//! of the design matrix lies in row block `i / M_R`, column `j` in column
//! block `j / M_C` and in section `j / M`.

use core::fmt;
use core::ops::Range;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnit {
    Bits,
    Nats,
}

impl RateUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            RateUnit::Bits => "bits",
            RateUnit::Nats => "nats",
        }
    }
}

impl FromStr for RateUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bits" | "bit" => Ok(RateUnit::Bits),
            "nats" | "nat" => Ok(RateUnit::Nats),
            _ => Err(Error::UnknownUnit),
        }
    }
}

impl fmt::Display for RateUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Convert a rate between bits and nats per channel use.
pub fn convert_rate(value: f64, from: RateUnit, to: RateUnit) -> f64 {
    match (from, to) {
        (RateUnit::Bits, RateUnit::Nats) => value * core::f64::consts::LN_2,
        (RateUnit::Nats, RateUnit::Bits) => value / core::f64::consts::LN_2,
        _ => value,
    }
}

/// Shannon capacity `½ ln(1 + snr)` in nats.
pub fn capacity(snr: f64) -> f64 {
    0.5 * (1.0 + snr).ln()
}

/// Scalar parameters of an SC-SPARC.
///
/// Built with [`CodeParams::derive`], which fixes the code length `n` from the
/// target rate, then optionally [`CodeParams::with_channel`] for power and
/// noise variance. The rate actually realised, `L ln M / n`, is kept next to
/// the requested one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeParams {
    sections: usize,
    section_size: usize,
    rate_target: f64,
    rate: f64,
    power: f64,
    noise_var: f64,
    row_blocks: usize,
    col_blocks: usize,
    code_len: usize,
}

impl CodeParams {
    /// Derive the code length for `L` sections of size `M` at a target rate
    /// (nats), with `L_R × L_C` blocks.
    ///
    /// `n` is `L ln M / R` rounded to the nearest multiple of `L_R`.
    pub fn derive(
        sections: usize,
        section_size: usize,
        rate_nats: f64,
        row_blocks: usize,
        col_blocks: usize,
    ) -> Result<Self> {
        if sections == 0 || section_size == 0 || row_blocks == 0 || col_blocks == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive"));
        }
        if !(rate_nats > 0.0) || !rate_nats.is_finite() {
            return Err(Error::InvalidArgument("rate must be positive"));
        }
        if section_size < 2 {
            return Err(Error::InvalidArgument("section size must be at least 2"));
        }
        if sections % col_blocks != 0 {
            return Err(Error::SectionsNotDivisible { sections, col_blocks });
        }
        let info = sections as f64 * (section_size as f64).ln();
        let multiples = (info / rate_nats / row_blocks as f64).round();
        if !(multiples >= 1.0) {
            return Err(Error::ZeroCodeLength);
        }
        let code_len = multiples as usize * row_blocks;
        Self::with_code_len(sections, section_size, rate_nats, row_blocks, col_blocks, code_len)
    }

    /// Parameters with an explicit code length (must be a multiple of `L_R`).
    pub fn with_code_len(
        sections: usize,
        section_size: usize,
        rate_target: f64,
        row_blocks: usize,
        col_blocks: usize,
        code_len: usize,
    ) -> Result<Self> {
        if sections == 0 || section_size < 2 || row_blocks == 0 || col_blocks == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive"));
        }
        if sections % col_blocks != 0 {
            return Err(Error::SectionsNotDivisible { sections, col_blocks });
        }
        if code_len == 0 {
            return Err(Error::ZeroCodeLength);
        }
        if code_len % row_blocks != 0 {
            return Err(Error::InvalidArgument("code length must be a multiple of L_R"));
        }
        let rate = sections as f64 * (section_size as f64).ln() / code_len as f64;
        Ok(Self {
            sections,
            section_size,
            rate_target,
            rate,
            power: 1.0,
            noise_var: 1.0,
            row_blocks,
            col_blocks,
            code_len,
        })
    }

    /// Set the average power `P` and noise variance `σ²`.
    pub fn with_channel(mut self, power: f64, noise_var: f64) -> Result<Self> {
        if !(power > 0.0) || !(noise_var >= 0.0) || !power.is_finite() || !noise_var.is_finite()
        {
            return Err(Error::InvalidArgument("power must be positive and noise variance nonnegative"));
        }
        self.power = power;
        self.noise_var = noise_var;
        Ok(self)
    }

    /// Number of sections `L`.
    pub fn sections(&self) -> usize {
        self.sections
    }
    /// Columns per section `M`.
    pub fn section_size(&self) -> usize {
        self.section_size
    }
    /// Requested rate in nats.
    pub fn rate_target(&self) -> f64 {
        self.rate_target
    }
    /// Realised rate `L ln M / n` in nats.
    pub fn rate(&self) -> f64 {
        self.rate
    }
    pub fn power(&self) -> f64 {
        self.power
    }
    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }
    /// `L_R`.
    pub fn row_blocks(&self) -> usize {
        self.row_blocks
    }
    /// `L_C`.
    pub fn col_blocks(&self) -> usize {
        self.col_blocks
    }
    /// Code length `n`.
    pub fn code_len(&self) -> usize {
        self.code_len
    }
    /// Total columns `M L`.
    pub fn total_cols(&self) -> usize {
        self.sections * self.section_size
    }
    /// `M_R = n / L_R`.
    pub fn rows_per_block(&self) -> usize {
        self.code_len / self.row_blocks
    }
    /// `M_C = M L / L_C`.
    pub fn cols_per_block(&self) -> usize {
        self.total_cols() / self.col_blocks
    }
    pub fn sections_per_block(&self) -> usize {
        self.sections / self.col_blocks
    }
    /// Rate-loss factor `L_R / L_C`; equals `(Λ+ω−1)/Λ` for an (ω, Λ) base matrix.
    pub fn kappa(&self) -> f64 {
        self.row_blocks as f64 / self.col_blocks as f64
    }
    pub fn snr(&self) -> f64 {
        self.power / self.noise_var
    }
    /// AWGN capacity in nats.
    pub fn capacity(&self) -> f64 {
        capacity(self.snr())
    }
    pub fn layout(&self) -> BlockLayout {
        BlockLayout {
            section_size: self.section_size,
            rows_per_block: self.rows_per_block(),
            cols_per_block: self.cols_per_block(),
            row_blocks: self.row_blocks,
            col_blocks: self.col_blocks,
        }
    }
}

/// Index maps between rows/columns of the design matrix and their blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub section_size: usize,
    pub rows_per_block: usize,
    pub cols_per_block: usize,
    pub row_blocks: usize,
    pub col_blocks: usize,
}

impl BlockLayout {
    pub fn row_block(&self, row: usize) -> usize {
        row / self.rows_per_block
    }
    pub fn col_block(&self, col: usize) -> usize {
        col / self.cols_per_block
    }
    pub fn rows_of(&self, r: usize) -> Range<usize> {
        r * self.rows_per_block..(r + 1) * self.rows_per_block
    }
    pub fn cols_of(&self, c: usize) -> Range<usize> {
        c * self.cols_per_block..(c + 1) * self.cols_per_block
    }
    pub fn section_of(&self, col: usize) -> usize {
        col / self.section_size
    }
    pub fn n_rows(&self) -> usize {
        self.rows_per_block * self.row_blocks
    }
    pub fn n_cols(&self) -> usize {
        self.cols_per_block * self.col_blocks
    }
}

//! Random design operators with block-variance structure.
//!
//! Two backends share one interface:
//!
//! * `Gaussian`: block `(r, c)` has i.i.d. `N(0, W_rc / L)` entries. Blocks
//!   are stored densely while the total stays under a memory limit, and are
//!   regenerated from their seed on every multiply above it.
//! * `Hadamard`: block `(r, c)` is `sqrt(W_rc / L)` times `M_R` distinct rows
//!   of a `2^k × 2^k` Sylvester–Hadamard matrix, drawn uniformly from rows
//!   `1..2^k` (row 0 is all ones), restricted to columns `1..=M_C`. Only the
//!   row indices are stored; products go through [`fwht`].
//!
//! Zero entries of `W` give structurally zero blocks in both backends.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::hadamard::{self, fwht};
use crate::rng::{self, TAG_GAUSSIAN_BLOCK, TAG_HADAMARD_ROWS};
use crate::{BaseMatrix, CodeParams, Error, Result};

/// Default cap on stored Gaussian entries (2^26 f64 values, 512 MiB).
pub const DEFAULT_DENSE_LIMIT: usize = 1 << 26;

const MAX_HADAMARD_ORDER: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Gaussian,
    Hadamard,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Gaussian => "gaussian",
            Backend::Hadamard => "hadamard",
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "dense" => Ok(Backend::Gaussian),
            "hadamard" => Ok(Backend::Hadamard),
            _ => Err(Error::InvalidArgument("backend must be gaussian or hadamard")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
enum Blocks {
    Gaussian {
        // `None` for zero blocks, or for every block when regenerating
        stored: Vec<Option<Vec<f64>>>,
        regenerate: bool,
    },
    Hadamard {
        order: u32,
        rows: Vec<Option<Vec<u32>>>,
    },
}

/// The `n × ML` design matrix `A` as a linear operator.
#[derive(Debug, Clone)]
pub struct DesignOperator {
    params: CodeParams,
    base: BaseMatrix,
    seed: u64,
    // sqrt(W_rc / L), row-major over blocks
    scales: Vec<f64>,
    blocks: Blocks,
}

impl DesignOperator {
    pub fn sample(
        backend: Backend,
        params: &CodeParams,
        base: &BaseMatrix,
        seed: u64,
    ) -> Result<Self> {
        Self::sample_with_limit(backend, params, base, seed, DEFAULT_DENSE_LIMIT)
    }

    /// As [`DesignOperator::sample`], storing Gaussian blocks only if their
    /// total entry count is at most `dense_limit`.
    pub fn sample_with_limit(
        backend: Backend,
        params: &CodeParams,
        base: &BaseMatrix,
        seed: u64,
        dense_limit: usize,
    ) -> Result<Self> {
        if base.rows() != params.row_blocks() || base.cols() != params.col_blocks() {
            return Err(Error::BaseMismatch);
        }
        let l = params.sections() as f64;
        let scales: Vec<f64> = base.entries().iter().map(|w| (w / l).sqrt()).collect();
        let (l_r, l_c) = (base.rows(), base.cols());
        let (m_r, m_c) = (params.rows_per_block(), params.cols_per_block());

        let blocks = match backend {
            Backend::Gaussian => {
                let nonzero = scales.iter().filter(|&&s| s > 0.0).count();
                let regenerate = nonzero.saturating_mul(m_r * m_c) > dense_limit;
                let mut stored = vec![None; l_r * l_c];
                if !regenerate {
                    for (b, slot) in stored.iter_mut().enumerate() {
                        if scales[b] > 0.0 {
                            let mut buf = vec![0.0; m_r * m_c];
                            fill_gaussian_block(seed, b / l_c, b % l_c, scales[b], &mut buf);
                            *slot = Some(buf);
                        }
                    }
                }
                Blocks::Gaussian { stored, regenerate }
            }
            Backend::Hadamard => {
                let order = hadamard::order_for(m_r, m_c);
                if order > MAX_HADAMARD_ORDER {
                    return Err(Error::HadamardOrder(order));
                }
                let size = 1usize << order;
                let mut rows = vec![None; l_r * l_c];
                for (b, slot) in rows.iter_mut().enumerate() {
                    if scales[b] > 0.0 {
                        let mut rng =
                            rng::stream(seed, TAG_HADAMARD_ROWS, &[(b / l_c) as u64, (b % l_c) as u64]);
                        let picked = rand::seq::index::sample(&mut rng, size - 1, m_r);
                        *slot = Some(picked.into_iter().map(|i| (i + 1) as u32).collect());
                    }
                }
                Blocks::Hadamard { order, rows }
            }
        };
        Ok(Self { params: *params, base: base.clone(), seed, scales, blocks })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn base(&self) -> &BaseMatrix {
        &self.base
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn backend(&self) -> Backend {
        match self.blocks {
            Blocks::Gaussian { .. } => Backend::Gaussian,
            Blocks::Hadamard { .. } => Backend::Hadamard,
        }
    }

    /// Hadamard order `k`, if this is a Hadamard operator.
    pub fn hadamard_order(&self) -> Option<u32> {
        match self.blocks {
            Blocks::Hadamard { order, .. } => Some(order),
            Blocks::Gaussian { .. } => None,
        }
    }

    /// Row indices (into the `2^k` Hadamard matrix) used by block `(r, c)`.
    pub fn hadamard_rows(&self, r: usize, c: usize) -> Option<&[u32]> {
        match &self.blocks {
            Blocks::Hadamard { rows, .. } => rows[r * self.base.cols() + c].as_deref(),
            Blocks::Gaussian { .. } => None,
        }
    }

    /// `A β`.
    pub fn forward(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.params.code_len()];
        self.forward_into(beta, &mut out)?;
        Ok(out)
    }

    /// `out ← A β`.
    pub fn forward_into(&self, beta: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("beta", self.params.total_cols(), beta.len())?;
        check_len("output", self.params.code_len(), out.len())?;
        out.fill(0.0);
        let (l_r, l_c) = (self.base.rows(), self.base.cols());
        let (m_r, m_c) = (self.params.rows_per_block(), self.params.cols_per_block());
        match &self.blocks {
            Blocks::Gaussian { stored, regenerate } => {
                let mut scratch = if *regenerate { vec![0.0; m_r * m_c] } else { Vec::new() };
                for r in 0..l_r {
                    for c in 0..l_c {
                        let b = r * l_c + c;
                        let Some(block) = self.gaussian_block(stored, *regenerate, b, &mut scratch)
                        else {
                            continue;
                        };
                        let x = &beta[c * m_c..(c + 1) * m_c];
                        for (o, row) in out[r * m_r..(r + 1) * m_r].iter_mut().zip(block.chunks_exact(m_c)) {
                            *o += dot(row, x);
                        }
                    }
                }
            }
            Blocks::Hadamard { order, rows } => {
                let mut buf = vec![0.0; 1usize << order];
                for c in 0..l_c {
                    let x = &beta[c * m_c..(c + 1) * m_c];
                    if x.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    buf.fill(0.0);
                    buf[1..=m_c].copy_from_slice(x);
                    fwht(&mut buf);
                    for r in 0..l_r {
                        let b = r * l_c + c;
                        if let Some(sel) = &rows[b] {
                            let s = self.scales[b];
                            for (o, &i) in out[r * m_r..(r + 1) * m_r].iter_mut().zip(sel) {
                                *o += s * buf[i as usize];
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `Aᵀ z`.
    pub fn adjoint(&self, z: &[f64]) -> Result<Vec<f64>> {
        let ones = vec![1.0; self.base.rows()];
        self.scaled_adjoint(z, &ones)
    }

    /// `Aᵀ (z ⊙ w̃)` where `w̃` repeats each of the `L_R` entries of
    /// `inv_phi` `M_R` times. In the decoder `inv_phi` is `1/φ`.
    pub fn scaled_adjoint(&self, z: &[f64], inv_phi: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.params.total_cols()];
        self.scaled_adjoint_into(z, inv_phi, &mut out)?;
        Ok(out)
    }

    pub fn scaled_adjoint_into(&self, z: &[f64], inv_phi: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("z", self.params.code_len(), z.len())?;
        check_len("inverse phi profile", self.base.rows(), inv_phi.len())?;
        check_len("output", self.params.total_cols(), out.len())?;
        if inv_phi.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("phi profile entries must be positive"));
        }
        out.fill(0.0);
        let (l_r, l_c) = (self.base.rows(), self.base.cols());
        let (m_r, m_c) = (self.params.rows_per_block(), self.params.cols_per_block());
        match &self.blocks {
            Blocks::Gaussian { stored, regenerate } => {
                let mut scratch = if *regenerate { vec![0.0; m_r * m_c] } else { Vec::new() };
                for r in 0..l_r {
                    let zr = &z[r * m_r..(r + 1) * m_r];
                    for c in 0..l_c {
                        let b = r * l_c + c;
                        let Some(block) = self.gaussian_block(stored, *regenerate, b, &mut scratch)
                        else {
                            continue;
                        };
                        let o = &mut out[c * m_c..(c + 1) * m_c];
                        for (row, &zi) in block.chunks_exact(m_c).zip(zr) {
                            let a = zi * inv_phi[r];
                            for (oj, &aij) in o.iter_mut().zip(row) {
                                *oj += a * aij;
                            }
                        }
                    }
                }
            }
            Blocks::Hadamard { order, rows } => {
                let mut buf = vec![0.0; 1usize << order];
                for c in 0..l_c {
                    buf.fill(0.0);
                    let mut any = false;
                    for r in 0..l_r {
                        let b = r * l_c + c;
                        if let Some(sel) = &rows[b] {
                            any = true;
                            let s = self.scales[b] * inv_phi[r];
                            for (&i, &zi) in sel.iter().zip(&z[r * m_r..(r + 1) * m_r]) {
                                buf[i as usize] += s * zi;
                            }
                        }
                    }
                    if any {
                        fwht(&mut buf);
                        out[c * m_c..(c + 1) * m_c].copy_from_slice(&buf[1..=m_c]);
                    }
                }
            }
        }
        Ok(())
    }

    /// The full matrix, row-major `n × ML`. Intended for small instances.
    pub fn to_dense(&self) -> Vec<f64> {
        let n_cols = self.params.total_cols();
        let mut a = vec![0.0; self.params.code_len() * n_cols];
        let (l_r, l_c) = (self.base.rows(), self.base.cols());
        let (m_r, m_c) = (self.params.rows_per_block(), self.params.cols_per_block());
        let mut scratch = vec![0.0; m_r * m_c];
        for r in 0..l_r {
            for c in 0..l_c {
                let b = r * l_c + c;
                match &self.blocks {
                    Blocks::Gaussian { stored, regenerate } => {
                        if let Some(block) = self.gaussian_block(stored, *regenerate, b, &mut scratch) {
                            for i in 0..m_r {
                                let row = (r * m_r + i) * n_cols + c * m_c;
                                a[row..row + m_c].copy_from_slice(&block[i * m_c..(i + 1) * m_c]);
                            }
                        }
                    }
                    Blocks::Hadamard { rows, .. } => {
                        if let Some(sel) = &rows[b] {
                            for (i, &h) in sel.iter().enumerate() {
                                let row = (r * m_r + i) * n_cols + c * m_c;
                                for j in 0..m_c {
                                    a[row + j] = self.scales[b] * hadamard::entry(h as usize, j + 1);
                                }
                            }
                        }
                    }
                }
            }
        }
        a
    }

    fn gaussian_block<'a>(
        &'a self,
        stored: &'a [Option<Vec<f64>>],
        regenerate: bool,
        b: usize,
        scratch: &'a mut [f64],
    ) -> Option<&'a [f64]> {
        if self.scales[b] <= 0.0 {
            return None;
        }
        if regenerate {
            let l_c = self.base.cols();
            fill_gaussian_block(self.seed, b / l_c, b % l_c, self.scales[b], scratch);
            Some(scratch)
        } else {
            stored[b].as_deref()
        }
    }
}

fn fill_gaussian_block(seed: u64, r: usize, c: usize, scale: f64, buf: &mut [f64]) {
    let mut rng = rng::stream(seed, TAG_GAUSSIAN_BLOCK, &[r as u64, c as u64]);
    for v in buf.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *v = scale * g;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { what, expected, found })
    }
}

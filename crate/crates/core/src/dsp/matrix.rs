use ndarray::{Array1, Array2};

use super::FilterSpec;
use crate::{Error, Result};

/// Square banded matrix whose row `n` holds the convolution kernel centred on
/// column `n`, so that `matrix · x` filters a frame with zero padding outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterMatrix {
    rows: Array2<f64>,
    half_band: usize,
}

impl FilterMatrix {
    pub fn dim(&self) -> usize {
        self.rows.nrows()
    }

    /// Entries with `|n − m| > half_band` are zero.
    pub fn half_band(&self) -> usize {
        self.half_band
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn into_rows(self) -> Array2<f64> {
        self.rows
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self.rows.dot(&Array1::from(x.to_vec())).to_vec())
    }
}

impl FilterSpec {
    pub fn matrix(&self, dim: usize) -> Result<FilterMatrix> {
        kernel_to_matrix(&self.kernel, dim)
    }
}

/// Builds the `dim × dim` matrix realising `(h ∗ x)(n) = Σ_k h(k) x(n − k)` for
/// the centred odd-length `kernel`, with samples outside the frame taken as zero.
pub fn kernel_to_matrix(kernel: &[f64], dim: usize) -> Result<FilterMatrix> {
    if dim == 0 {
        return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
    }
    if kernel.is_empty() || kernel.len() % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "kernel length must be odd, got {}",
            kernel.len()
        )));
    }
    if kernel.len() > 2 * dim - 1 {
        return Err(Error::InvalidArgument(format!(
            "a {}-tap kernel does not fit a {dim}x{dim} matrix",
            kernel.len()
        )));
    }
    let half = kernel.len() / 2;
    let rows = Array2::from_shape_fn((dim, dim), |(n, m)| {
        // lag n - m indexes the centred kernel
        let idx = half as isize + n as isize - m as isize;
        if (0..kernel.len() as isize).contains(&idx) {
            kernel[idx as usize]
        } else {
            0.0
        }
    });
    Ok(FilterMatrix { rows, half_band: half })
}

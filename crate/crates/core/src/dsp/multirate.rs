use super::{design_butterworth, FilterSpec};
use crate::{Error, Result};

/// Integer-factor decimator / interpolator sharing one low-pass kernel.
///
/// Frame edges are extended by whole-sample mirror reflection, so constants
/// pass through unchanged over the full frame. Interpolation zero-stuffs and
/// filters polyphase-wise; each output phase is normalised by the DC gain of
/// its polyphase branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampler {
    factor: usize,
    spec: FilterSpec,
    branch_gain: Vec<f64>,
}

impl Resampler {
    pub fn new(spec: FilterSpec, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("resampling factor must be positive".into()));
        }
        if spec.kernel.len() % 2 == 0 {
            return Err(Error::InvalidArgument("resampling kernel must have odd length".into()));
        }
        let half = spec.kernel.len() / 2;
        let branch_gain = (0..factor)
            .map(|phase| {
                spec.kernel
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (phase + half + factor * spec.kernel.len() - j) % factor == 0)
                    .map(|(_, h)| h)
                    .sum()
            })
            .collect();
        Ok(Resampler {
            factor,
            spec,
            branch_gain,
        })
    }

    /// Anti-aliasing resampler with cutoff at the decimated Nyquist, `fs / (2·factor)`.
    pub fn anti_alias(fs: f64, factor: usize, order: u32, taps: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::InvalidArgument("decimation factor must be at least 2".into()));
        }
        Resampler::new(design_butterworth(order, fs / (2.0 * factor as f64), fs, taps)?, factor)
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn spec(&self) -> &FilterSpec {
        &self.spec
    }

    /// Low-pass filters `x` and keeps every `factor`-th sample.
    pub fn decimate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.is_empty() || x.len() % self.factor != 0 {
            return Err(Error::InvalidArgument(format!(
                "length {} is not a positive multiple of {}",
                x.len(),
                self.factor
            )));
        }
        let kernel = &self.spec.kernel;
        let half = (kernel.len() / 2) as isize;
        let n = x.len() as isize;
        Ok((0..x.len() / self.factor)
            .map(|m| {
                let centre = (m * self.factor) as isize;
                kernel
                    .iter()
                    .enumerate()
                    .map(|(j, h)| h * x[reflect(centre + half - j as isize, n)])
                    .sum()
            })
            .collect())
    }

    /// Upsamples `y` by `factor`: zero-stuffing followed by the low-pass kernel.
    pub fn interpolate(&self, y: &[f64]) -> Vec<f64> {
        let kernel = &self.spec.kernel;
        let half = (kernel.len() / 2) as isize;
        let f = self.factor as isize;
        let len = y.len() as isize;
        if len == 0 {
            return Vec::new();
        }
        (0..len * f)
            .map(|n| {
                let phase = (n % f) as usize;
                // taps j with (n + half - j) divisible by factor hit a stuffed sample
                let first = (n + half).rem_euclid(f);
                let acc: f64 = (first..kernel.len() as isize)
                    .step_by(self.factor)
                    .map(|j| kernel[j as usize] * y[reflect((n + half - j) / f, len)])
                    .sum();
                acc / self.branch_gain[phase]
            })
            .collect()
    }
}

/// Whole-sample symmetric reflection of `i` into `[0, n)`.
fn reflect(i: isize, n: isize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - k;
    }
    k as usize
}

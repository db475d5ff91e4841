use std::fmt::Write as _;

use crate::{Error, Result};

/// A linear-phase FIR kernel realising a Butterworth magnitude law.
///
/// `kernel` is centred: tap `kernel_len / 2` sits at lag zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub order: u32,
    pub cutoff_hz: f64,
    pub fs: f64,
    pub kernel: Vec<f64>,
}

impl FilterSpec {
    pub fn kernel_len(&self) -> usize {
        self.kernel.len()
    }

    pub fn dc_gain(&self) -> f64 {
        self.kernel.iter().sum()
    }

    /// Magnitude of the kernel's frequency response at `f_hz`.
    pub fn magnitude(&self, f_hz: f64) -> f64 {
        let half = (self.kernel.len() / 2) as f64;
        let w = std::f64::consts::TAU * f_hz / self.fs;
        let (re, im) = self.kernel.iter().enumerate().fold((0.0, 0.0), |(re, im), (j, h)| {
            let phase = w * (j as f64 - half);
            (re + h * phase.cos(), im - h * phase.sin())
        });
        re.hypot(im)
    }

    pub fn magnitude_db(&self, f_hz: f64) -> f64 {
        20.0 * self.magnitude(f_hz).log10()
    }

    /// Analytic Butterworth magnitude `1 / sqrt(1 + (f/fc)^(2·order))`.
    pub fn analytic_magnitude(&self, f_hz: f64) -> f64 {
        butterworth_magnitude(f_hz, self.cutoff_hz, self.order)
    }

    /// `tap,lag,value` rows for inspection.
    pub fn kernel_csv(&self) -> String {
        let half = self.kernel.len() as i64 / 2;
        let mut s = String::from("tap,lag,value\n");
        for (j, h) in self.kernel.iter().enumerate() {
            let _ = writeln!(s, "{j},{},{h}", j as i64 - half);
        }
        s
    }
}

fn butterworth_magnitude(f: f64, fc: f64, order: u32) -> f64 {
    1.0 / (1.0 + (f / fc).powi(2 * order as i32)).sqrt()
}

/// Designs a zero-phase FIR kernel of `kernel_len` taps whose magnitude follows
/// an `order`-th order Butterworth low-pass law with −3 dB point `cutoff_hz`.
///
/// The analytic magnitude is sampled on a dense frequency grid, inverse
/// transformed (real and even, so a cosine series), truncated to the centred
/// `kernel_len` taps and renormalised to unit DC gain.
pub fn design_butterworth(order: u32, cutoff_hz: f64, fs: f64, kernel_len: usize) -> Result<FilterSpec> {
    if order == 0 {
        return Err(Error::InvalidArgument("filter order must be at least 1".into()));
    }
    if !(fs > 0.0) || !fs.is_finite() {
        return Err(Error::InvalidArgument(format!("sampling frequency must be positive, got {fs}")));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
            fs / 2.0
        )));
    }
    if kernel_len == 0 || kernel_len % 2 == 0 {
        return Err(Error::InvalidArgument(format!("kernel length must be odd, got {kernel_len}")));
    }

    let grid = (8 * kernel_len).next_power_of_two().max(16_384);
    let bins = grid / 2;
    let mag: Vec<f64> = (0..=bins)
        .map(|k| butterworth_magnitude(k as f64 * fs / grid as f64, cutoff_hz, order))
        .collect();
    let cos_table: Vec<f64> = (0..grid)
        .map(|i| (std::f64::consts::TAU * i as f64 / grid as f64).cos())
        .collect();

    let half = kernel_len / 2;
    let mut kernel: Vec<f64> = (0..kernel_len)
        .map(|j| {
            let lag = j.abs_diff(half);
            let interior: f64 = (1..bins).map(|k| mag[k] * cos_table[(k * lag) % grid]).sum();
            let nyquist = if lag % 2 == 0 { mag[bins] } else { -mag[bins] };
            (mag[0] + 2.0 * interior + nyquist) / grid as f64
        })
        .collect();
    let dc: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|h| *h /= dc);

    Ok(FilterSpec {
        order,
        cutoff_hz,
        fs,
        kernel,
    })
}

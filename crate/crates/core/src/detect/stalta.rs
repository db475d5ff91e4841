use crate::{Error, Result};

/// Short-term over long-term RMS trigger settings (durations in seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaLtaConfig {
    pub sta_s: f64,
    pub lta_s: f64,
    /// Trigger when STA RMS exceeds this multiple of LTA RMS.
    pub threshold: f64,
    /// Hold-off after a trigger before the next one may fire.
    pub refractory_s: f64,
}

impl Default for StaLtaConfig {
    fn default() -> Self {
        StaLtaConfig {
            sta_s: 0.002,
            lta_s: 0.050,
            threshold: 4.0,
            refractory_s: 0.020,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// First sample of the triggering short window.
    pub onset_sample: usize,
    /// STA/LTA RMS ratio at the trigger (infinite over a silent background).
    pub score: f64,
}

/// Matching tolerance in samples: `fs / 100`, i.e. 10 ms of signal.
pub fn default_tolerance(fs: u32) -> usize {
    (fs as f64 / 100.0).round() as usize
}

/// STA/LTA detector.
///
/// At sample `i` the short window is `[i, i + sta)` and the long window is the
/// `lta` samples preceding it, clipped at the start of the signal (scanning
/// starts once one short window of history exists). A trigger fires when the
/// short-window RMS exceeds `threshold` times the long-window RMS; the next
/// `refractory` samples are then skipped.
pub fn detect_impulses(x: &[f64], fs: u32, config: &StaLtaConfig) -> Result<Vec<Detection>> {
    let to_samples = |s: f64| (s * fs as f64).round() as usize;
    let sta = to_samples(config.sta_s).max(1);
    let lta = to_samples(config.lta_s).max(1);
    let refractory = to_samples(config.refractory_s);
    if !(config.threshold > 0.0) {
        return Err(Error::InvalidArgument("STA/LTA threshold must be positive".into()));
    }
    if lta <= sta {
        return Err(Error::InvalidArgument("long window must be longer than the short window".into()));
    }
    if x.len() <= lta {
        return Err(Error::InvalidArgument(format!(
            "signal of {} samples is not longer than the {lta}-sample long window",
            x.len()
        )));
    }
    let mut energy = Vec::with_capacity(x.len() + 1);
    energy.push(0.0f64);
    let mut acc = 0.0;
    for v in x {
        acc += v * v;
        energy.push(acc);
    }
    let thr2 = config.threshold * config.threshold;
    let mut out = Vec::new();
    let mut i = sta;
    while i + sta <= x.len() {
        let short = (energy[i + sta] - energy[i]) / sta as f64;
        let start = i.saturating_sub(lta);
        let long = (energy[i] - energy[start]) / (i - start) as f64;
        if short > thr2 * long {
            let score = if long > 0.0 { (short / long).sqrt() } else { f64::INFINITY };
            out.push(Detection { onset_sample: i, score });
            i += refractory.max(1);
        } else {
            i += 1;
        }
    }
    Ok(out)
}

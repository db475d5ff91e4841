use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::waveform::{rms, NoiseRecord, Waveform};
use crate::{Error, Result};

/// Parameters of the synthetic vehicle-noise model.
///
/// The record is the sum of three components, each normalised to unit RMS
/// before weighting: pink (1/f) broadband noise, an engine tone with
/// harmonics whose fundamental wanders slowly, and short exponentially
/// decaying broadband bursts arriving as a Poisson process. Burst peaks are
/// expressed relative to the RMS of the continuous part.
///
/// The defaults model a vehicle whose energy sits in the engine harmonics
/// (fundamental wandering between roughly 19 and 45 Hz) over a weak 1/f
/// floor, with low-frequency body and road thumps as the impulsive part.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecipe {
    pub pink_weight: f64,
    pub engine_weight: f64,
    pub engine_f0_hz: f64,
    pub engine_harmonics: usize,
    /// Peak relative deviation of the engine fundamental.
    pub engine_wander: f64,
    /// Mean number of bursts per second.
    pub burst_rate_hz: f64,
    /// Burst peak range, in units of the continuous-part RMS.
    pub burst_peak: (f64, f64),
    /// Burst envelope decay time range (s).
    pub burst_decay_s: (f64, f64),
    /// One-pole smoothing coefficient applied to burst excitation, in [0, 1).
    pub burst_smoothing: f64,
}

impl Default for NoiseRecipe {
    fn default() -> Self {
        NoiseRecipe {
            pink_weight: 0.02,
            engine_weight: 1.0,
            engine_f0_hz: 32.0,
            engine_harmonics: 12,
            engine_wander: 0.4,
            burst_rate_hz: 2.0,
            burst_peak: (3.2, 6.0),
            burst_decay_s: (0.002, 0.008),
            burst_smoothing: 0.95,
        }
    }
}

/// Synthetic vehicle noise with the default [`NoiseRecipe`].
pub fn gen_vehicle_noise(seed: u64, duration: f64, fs: u32, rms_target: f64) -> Result<NoiseRecord> {
    gen_vehicle_noise_with(&NoiseRecipe::default(), seed, duration, fs, rms_target)
}

/// Synthetic vehicle noise scaled to `rms_target` Pa; bit-identical for a given seed.
pub fn gen_vehicle_noise_with(
    recipe: &NoiseRecipe,
    seed: u64,
    duration: f64,
    fs: u32,
    rms_target: f64,
) -> Result<NoiseRecord> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!("duration must be positive, got {duration}")));
    }
    if !(rms_target > 0.0) || !rms_target.is_finite() {
        return Err(Error::InvalidArgument(format!("target RMS must be positive, got {rms_target}")));
    }
    if fs == 0 {
        return Err(Error::InvalidArgument("sampling frequency must be positive".into()));
    }
    let n = (duration * fs as f64).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument("duration shorter than one sample".into()));
    }
    let fs_f = fs as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut pink = pink_noise(&mut rng, n);
    normalize(&mut pink);
    let mut engine = engine_tone(&mut rng, recipe, n, fs_f);
    normalize(&mut engine);

    let mut x: Vec<f64> = pink
        .iter()
        .zip(&engine)
        .map(|(p, e)| recipe.pink_weight * p + recipe.engine_weight * e)
        .collect();
    let base_rms = rms(&x).max(f64::MIN_POSITIVE);
    add_bursts(&mut rng, recipe, &mut x, fs_f, base_rms);

    let scale = rms_target / rms(&x);
    for v in &mut x {
        *v *= scale;
    }
    NoiseRecord::new(Waveform::new(x, fs)?, format!("vehicle-{seed}"))
}

fn normalize(x: &mut [f64]) {
    let r = rms(x);
    if r > 0.0 {
        x.iter_mut().for_each(|v| *v /= r);
    }
}

// Paul Kellet's refined pink filter over Gaussian white noise.
fn pink_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    (0..n)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let out = b.iter().sum::<f64>() + w * 0.5362;
            b[6] = w * 0.115926;
            out
        })
        .collect()
}

fn engine_tone(rng: &mut ChaCha8Rng, recipe: &NoiseRecipe, n: usize, fs: f64) -> Vec<f64> {
    let phases: Vec<f64> = (0..recipe.engine_harmonics)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    let wander_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let wander_hz = rng.random_range(0.1..0.4);
    let mut phase = 0.0f64;
    (0..n)
        .map(|k| {
            let t = k as f64 / fs;
            let f0 = recipe.engine_f0_hz
                * (1.0 + recipe.engine_wander * (std::f64::consts::TAU * wander_hz * t + wander_phase).sin());
            phase = (phase + std::f64::consts::TAU * f0 / fs) % std::f64::consts::TAU;
            phases
                .iter()
                .enumerate()
                .map(|(h, p)| {
                    let order = (h + 1) as f64;
                    (order * phase + p).sin() / order
                })
                .sum()
        })
        .collect()
}

fn add_bursts(rng: &mut ChaCha8Rng, recipe: &NoiseRecipe, x: &mut [f64], fs: f64, base_rms: f64) {
    if recipe.burst_rate_hz <= 0.0 {
        return;
    }
    let n = x.len();
    let mut t = 0.0f64;
    loop {
        // exponential inter-arrival time
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        t += -u.ln() / recipe.burst_rate_hz;
        let start = (t * fs) as usize;
        if start >= n {
            break;
        }
        let peak = rng.random_range(recipe.burst_peak.0..=recipe.burst_peak.1) * base_rms;
        let decay = rng.random_range(recipe.burst_decay_s.0..=recipe.burst_decay_s.1);
        let len = ((6.0 * decay * fs) as usize).max(1).min(n - start);
        let mut state = 0.0f64;
        let burst: Vec<f64> = (0..len)
            .map(|k| {
                let w: f64 = rng.sample(StandardNormal);
                state = recipe.burst_smoothing * state + (1.0 - recipe.burst_smoothing) * w;
                state * (-(k as f64) / (decay * fs)).exp()
            })
            .collect();
        let max = burst.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max > 0.0 {
            for (dst, b) in x[start..start + len].iter_mut().zip(&burst) {
                *dst += b * peak / max;
            }
        }
    }
}

//! Python bindings: signal synthesis, filter design, detection, the trained
//! denoiser and the pipeline jobs. Samples cross the boundary as lists of floats.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use mbdenoise::config::RunConfig as CoreConfig;
use mbdenoise::detect::{self, StaLtaConfig};
use mbdenoise::dsp;
use mbdenoise::net::{Checkpoint, Denoiser as CoreDenoiser};
use mbdenoise::pipeline::{self, Layout};
use mbdenoise::signals;
use mbdenoise::Error;

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        _ if matches!(e, Error::Io { .. }) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Run configuration; `text` uses the same `key = value` format as config files.
#[pyclass(module = "pymbdenoise")]
struct RunConfig {
    inner: CoreConfig,
}

#[pymethods]
impl RunConfig {
    #[new]
    #[pyo3(signature = (text = None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let inner = match text {
            Some(t) => CoreConfig::from_text(t).map_err(to_py)?,
            None => CoreConfig::default(),
        };
        Ok(RunConfig { inner })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(RunConfig {
            inner: CoreConfig::from_file(&path).map_err(to_py)?,
        })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    fn get(&self, key: &str) -> PyResult<String> {
        self.inner
            .entries()
            .into_iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| PyValueError::new_err(format!("unknown config key {key:?}")))
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn render(&self) -> String {
        self.inner.render()
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(seed={}, hidden={})", self.inner.seed, self.inner.hidden)
    }
}

/// A trained checkpoint wrapped as a full-rate frame-by-frame denoiser.
#[pyclass(module = "pymbdenoise")]
struct Denoiser {
    inner: CoreDenoiser,
}

#[pymethods]
impl Denoiser {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ck = Checkpoint::load(&path).map_err(to_py)?;
        Ok(Denoiser {
            inner: CoreDenoiser::from_checkpoint(&ck).map_err(to_py)?,
        })
    }

    #[getter]
    fn fs(&self) -> u32 {
        self.inner.fs()
    }

    #[getter]
    fn frame_len(&self) -> usize {
        self.inner.frame_len()
    }

    /// Returns the denoised signal and per-frame latencies in seconds.
    fn denoise(&self, py: Python<'_>, samples: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let (y, stats) = py.detach(|| self.inner.denoise(&samples)).map_err(to_py)?;
        Ok((y, stats.frame_latency_s))
    }
}

#[pyfunction]
fn friedlander(peak_pa: f64, t_plus_s: f64, fs: u32, n_samples: usize, onset: usize) -> PyResult<Vec<f64>> {
    let shot = signals::friedlander(peak_pa, t_plus_s, fs, n_samples, onset).map_err(to_py)?;
    Ok(shot.waveform.into_samples())
}

#[pyfunction]
fn vehicle_noise(seed: u64, duration_s: f64, fs: u32, rms_pa: f64) -> PyResult<Vec<f64>> {
    let noise = signals::gen_vehicle_noise(seed, duration_s, fs, rms_pa).map_err(to_py)?;
    Ok(noise.waveform.into_samples())
}

/// Symmetric FIR kernel following the Butterworth magnitude law.
#[pyfunction]
fn butterworth_kernel(order: u32, cutoff_hz: f64, fs: f64, taps: usize) -> PyResult<Vec<f64>> {
    Ok(dsp::design_butterworth(order, cutoff_hz, fs, taps).map_err(to_py)?.kernel)
}

/// Row-major banded convolution matrix of `kernel` at width `dim`.
#[pyfunction]
fn filter_matrix(kernel: Vec<f64>, dim: usize) -> PyResult<Vec<Vec<f64>>> {
    let m = dsp::kernel_to_matrix(&kernel, dim).map_err(to_py)?;
    Ok(m.rows().outer_iter().map(|r| r.to_vec()).collect())
}

/// Peak-over-RMS SNR in dB of a blast peak against a noise segment.
#[pyfunction]
fn snr_from_levels(peak_pa: f64, noise_rms_pa: f64) -> PyResult<f64> {
    dsp::snr_from_levels(peak_pa, noise_rms_pa).map_err(to_py)
}

/// STA/LTA detections as `(onset_sample, score)` pairs.
#[pyfunction]
#[pyo3(signature = (samples, fs, sta_s = 0.002, lta_s = 0.05, threshold = 4.0, refractory_s = 0.02))]
fn detect_impulses(
    samples: Vec<f64>,
    fs: u32,
    sta_s: f64,
    lta_s: f64,
    threshold: f64,
    refractory_s: f64,
) -> PyResult<Vec<(usize, f64)>> {
    let cfg = StaLtaConfig {
        sta_s,
        lta_s,
        threshold,
        refractory_s,
    };
    let dets = detect::detect_impulses(&samples, fs, &cfg).map_err(to_py)?;
    Ok(dets.into_iter().map(|d| (d.onset_sample, d.score)).collect())
}

#[pyfunction]
fn margin_of_error(p: f64, n: usize) -> f64 {
    detect::margin_of_error(p, n)
}

#[pyfunction]
fn gen_data(py: Python<'_>, config: &RunConfig, out: PathBuf) -> PyResult<usize> {
    let cfg = &config.inner;
    py.detach(|| pipeline::cmd_gen_data(cfg, &Layout::new(cfg, &out)))
        .map(|entries| entries.len())
        .map_err(to_py)
}

/// Trains the configured rotations; returns the checkpoint paths.
#[pyfunction]
fn train(py: Python<'_>, config: &RunConfig, out: PathBuf) -> PyResult<Vec<PathBuf>> {
    let cfg = &config.inner;
    py.detach(|| pipeline::cmd_train(cfg, &Layout::new(cfg, &out), |_| {}))
        .map_err(to_py)
}

/// Writes the score CSVs; returns `(validation, cross_caliber)` rows as
/// `(snr_db, condition, p, delta_p, n)` tuples.
#[pyfunction]
fn evaluate(py: Python<'_>, config: &RunConfig, out: PathBuf) -> PyResult<(Vec<ScoreRow>, Vec<ScoreRow>)> {
    let cfg = &config.inner;
    let eval = py.detach(|| pipeline::cmd_evaluate(cfg, &Layout::new(cfg, &out))).map_err(to_py)?;
    let rows = |t: &[pipeline::Trial]| -> PyResult<Vec<ScoreRow>> {
        Ok(pipeline::score_trials(t)
            .map_err(to_py)?
            .into_iter()
            .map(|(c, s)| (s.snr_db, c.to_string(), s.p, s.delta_p, s.n))
            .collect())
    };
    Ok((rows(&eval.validation)?, rows(&eval.cross_caliber)?))
}

type ScoreRow = (f64, String, f64, f64, usize);

#[pyfunction]
fn report(config: &RunConfig, out: PathBuf) -> PyResult<PathBuf> {
    let cfg = &config.inner;
    pipeline::cmd_report(cfg, &Layout::new(cfg, &out)).map_err(to_py)
}

/// Denoises a WAV file; returns per-frame latencies in seconds.
#[pyfunction]
fn denoise_file(py: Python<'_>, config: &RunConfig, checkpoint: PathBuf, input: PathBuf, output: PathBuf) -> PyResult<Vec<f64>> {
    let cfg = &config.inner;
    py.detach(|| pipeline::denoise_file(cfg, &checkpoint, &input, &output))
        .map(|s| s.frame_latency_s)
        .map_err(to_py)
}

#[pymodule]
fn pymbdenoise(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RunConfig>()?;
    m.add_class::<Denoiser>()?;
    m.add_function(wrap_pyfunction!(friedlander, m)?)?;
    m.add_function(wrap_pyfunction!(vehicle_noise, m)?)?;
    m.add_function(wrap_pyfunction!(butterworth_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(filter_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(snr_from_levels, m)?)?;
    m.add_function(wrap_pyfunction!(detect_impulses, m)?)?;
    m.add_function(wrap_pyfunction!(margin_of_error, m)?)?;
    m.add_function(wrap_pyfunction!(gen_data, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(denoise_file, m)?)?;
    Ok(())
}

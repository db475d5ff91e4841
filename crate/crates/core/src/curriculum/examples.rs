use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::derive_seed;
use super::split::{Combo, DatasetSplit};
use crate::dsp::{mix_at_snr, Resampler};
use crate::signals::{NoiseRecord, ShotRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MaterializeConfig {
    pub snr_grid_db: Vec<f64>,
    pub examples_per_cell: usize,
    pub seed: u64,
}

impl Default for MaterializeConfig {
    fn default() -> Self {
        MaterializeConfig {
            snr_grid_db: vec![10.0, 5.0, 0.0, -5.0, -10.0, -15.0, -20.0],
            examples_per_cell: 1,
            seed: 0,
        }
    }
}

/// One training/evaluation unit: a noisy frame, its clean target and where
/// both came from.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyExample {
    /// Stable across calls for the same split and config, whatever combos are
    /// requested.
    pub id: usize,
    pub combo: Combo,
    pub shot_id: String,
    pub caliber_class: String,
    pub noise_id: String,
    pub section: usize,
    pub noise_offset: usize,
    /// Grid value the example was mixed at; phase selection uses this.
    pub grid_snr_db: f64,
    /// SNR recomputed from the mixed signals.
    pub snr_db: f64,
    pub onset: usize,
    pub noisy: Vec<f64>,
    pub clean: Vec<f64>,
    pub noisy_dec: Vec<f64>,
    pub clean_dec: Vec<f64>,
}

/// Mixes every (shot, noise section, SNR) cell of the requested combos.
///
/// Noise offsets are drawn uniformly inside the section from a per-cell seed,
/// so each cell is reproducible on its own.
pub fn materialize_examples(
    split: &DatasetSplit,
    shots: &[ShotRecord],
    noises: &[NoiseRecord],
    combos: &[Combo],
    config: &MaterializeConfig,
    resampler: &Resampler,
) -> Result<Vec<NoisyExample>> {
    if let Some(bad) = config.snr_grid_db.iter().find(|s| !(-25.0..=15.0).contains(*s)) {
        return Err(Error::InvalidArgument(format!("SNR grid value {bad} dB outside [-25, 15]")));
    }
    if config.examples_per_cell == 0 {
        return Err(Error::InvalidArgument("examples_per_cell must be at least 1".into()));
    }
    let shot_by_id: HashMap<&str, &ShotRecord> = shots.iter().map(|s| (s.shot_id.as_str(), s)).collect();
    let noise_by_id: HashMap<&str, &NoiseRecord> = noises.iter().map(|n| (n.noise_id.as_str(), n)).collect();
    let mut out = Vec::new();
    let mut id = 0;
    for (ci, combo) in split.combos.iter().enumerate() {
        let shot_ids = &split.shot_subsets[combo.shot_subset];
        let subset = &split.noise_subsets[combo.noise_subset];
        let cells = shot_ids.len() * subset.sections.len() * config.snr_grid_db.len() * config.examples_per_cell;
        if !combos.contains(combo) {
            id += cells;
            continue;
        }
        let noise = *noise_by_id
            .get(subset.noise_id.as_str())
            .ok_or_else(|| Error::InvalidArgument(format!("noise {} not supplied", subset.noise_id)))?;
        for (si, shot_id) in shot_ids.iter().enumerate() {
            let shot = *shot_by_id
                .get(shot_id.as_str())
                .ok_or_else(|| Error::InvalidArgument(format!("shot {shot_id} not supplied")))?;
            let len = shot.waveform.len();
            let clean_dec = resampler.decimate(shot.waveform.samples())?;
            for (sec, range) in subset.sections.iter().enumerate() {
                if range.end > noise.waveform.len() || range.len() < len {
                    return Err(Error::InvalidArgument(format!(
                        "section {sec} of {} ({range:?}) cannot hold a {len}-sample frame",
                        subset.noise_id
                    )));
                }
                for (gi, &snr) in config.snr_grid_db.iter().enumerate() {
                    for rep in 0..config.examples_per_cell {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                            config.seed,
                            &[ci as u64, si as u64, sec as u64, gi as u64, rep as u64],
                        ));
                        let offset = rng.random_range(range.start..=range.end - len);
                        let mix = mix_at_snr(shot, noise, offset, snr)?;
                        let noisy = mix.noisy.into_samples();
                        out.push(NoisyExample {
                            id,
                            combo: *combo,
                            shot_id: shot.shot_id.clone(),
                            caliber_class: shot.caliber_class.clone(),
                            noise_id: noise.noise_id.clone(),
                            section: sec,
                            noise_offset: offset,
                            grid_snr_db: snr,
                            snr_db: mix.achieved_snr_db,
                            onset: shot.onset(),
                            noisy_dec: resampler.decimate(&noisy)?,
                            noisy,
                            clean: mix.clean.into_samples(),
                            clean_dec: clean_dec.clone(),
                        });
                        id += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

use std::fmt;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::signals::{NoiseRecord, ShotRecord};
use crate::{Error, Result};

/// One noise record cut into contiguous, non-overlapping sections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseSubset {
    pub noise_id: String,
    pub sections: Vec<Range<usize>>,
}

/// A noised shot subset: shot subset index × noise subset index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Combo {
    pub shot_subset: usize,
    pub noise_subset: usize,
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}N{}", self.shot_subset, self.noise_subset)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub shot_subsets: [Vec<String>; 2],
    pub noise_subsets: Vec<NoiseSubset>,
    /// All six combos, shot subset major.
    pub combos: Vec<Combo>,
    pub train_combos: Vec<Combo>,
    pub validation_combo: Combo,
}

impl DatasetSplit {
    /// The same split with `combos[k]` as validation combo. Training combos are
    /// the ones sharing neither its shot subset nor its noise subset.
    pub fn rotate(&self, k: usize) -> Result<DatasetSplit> {
        let v = *self
            .combos
            .get(k)
            .ok_or_else(|| Error::InvalidArgument(format!("rotation {k} out of range 0..{}", self.combos.len())))?;
        let train_combos = self
            .combos
            .iter()
            .copied()
            .filter(|c| c.shot_subset != v.shot_subset && c.noise_subset != v.noise_subset)
            .collect();
        Ok(DatasetSplit {
            train_combos,
            validation_combo: v,
            ..self.clone()
        })
    }

    /// One split per possible validation combo.
    pub fn rotations(&self) -> Vec<DatasetSplit> {
        (0..self.combos.len()).map(|k| self.rotate(k).expect("index in range")).collect()
    }

    pub fn rotation_index(&self) -> usize {
        self.combos.iter().position(|c| *c == self.validation_combo).unwrap_or(0)
    }
}

/// Splits shots into two random halves and each of the three noise records
/// into `sections_per_noise` equal sections.
pub fn build_split(
    shots: &[ShotRecord],
    noises: &[NoiseRecord],
    sections_per_noise: usize,
    seed: u64,
) -> Result<DatasetSplit> {
    if shots.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 shots, got {}", shots.len())));
    }
    if noises.len() != 3 {
        return Err(Error::InvalidArgument(format!("need exactly 3 noise records, got {}", noises.len())));
    }
    if sections_per_noise == 0 {
        return Err(Error::InvalidArgument("sections_per_noise must be at least 1".into()));
    }
    let mut ids: Vec<String> = shots.iter().map(|s| s.shot_id.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != ids.len() {
        return Err(Error::InvalidArgument("shot ids are not unique".into()));
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let second = ids.split_off(ids.len().div_ceil(2));
    let noise_subsets = noises
        .iter()
        .map(|n| {
            let len = n.waveform.len();
            let step = len / sections_per_noise;
            NoiseSubset {
                noise_id: n.noise_id.clone(),
                sections: (0..sections_per_noise).map(|k| k * step..(k + 1) * step).collect(),
            }
        })
        .collect();
    let combos: Vec<Combo> = (0..2)
        .flat_map(|s| {
            (0..3).map(move |n| Combo {
                shot_subset: s,
                noise_subset: n,
            })
        })
        .collect();
    let base = DatasetSplit {
        shot_subsets: [ids, second],
        noise_subsets,
        train_combos: Vec::new(),
        validation_combo: combos[0],
        combos,
    };
    base.rotate(0)
}

use super::stalta::{detect_impulses, StaLtaConfig};
use crate::{Error, Result};
use super::Detection;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    /// One flag per truth onset.
    pub matched: Vec<bool>,
    /// Detections not assigned to any truth onset.
    pub false_alarms: usize,
}

/// Greedy nearest-first assignment of detections to truth onsets.
///
/// Every (truth, detection) pair within `tolerance` samples is a candidate;
/// candidates are taken in order of increasing distance and each truth and
/// each detection is used at most once.
pub fn match_detections(detections: &[Detection], truth_onsets: &[usize], tolerance: usize) -> MatchResult {
    let mut pairs: Vec<(usize, usize, usize)> = truth_onsets
        .iter()
        .enumerate()
        .flat_map(|(t, &onset)| {
            detections.iter().enumerate().filter_map(move |(d, det)| {
                let dist = det.onset_sample.abs_diff(onset);
                (dist <= tolerance).then_some((dist, t, d))
            })
        })
        .collect();
    pairs.sort_unstable();
    let mut matched = vec![false; truth_onsets.len()];
    let mut used = vec![false; detections.len()];
    for (_, t, d) in pairs {
        if !matched[t] && !used[d] {
            matched[t] = true;
            used[d] = true;
        }
    }
    MatchResult {
        matched,
        false_alarms: used.iter().filter(|u| !**u).count(),
    }
}

/// Runs the detector on the noisy and the denoised signal in parallel; a truth
/// onset counts as detected if either branch matches it.
pub fn combined_detect(
    noisy: &[f64],
    denoised: &[f64],
    fs: u32,
    truth_onsets: &[usize],
    tolerance: usize,
    config: &StaLtaConfig,
) -> Result<Vec<bool>> {
    if noisy.len() != denoised.len() {
        return Err(Error::LengthMismatch {
            expected: noisy.len(),
            actual: denoised.len(),
        });
    }
    let a = match_detections(&detect_impulses(noisy, fs, config)?, truth_onsets, tolerance);
    let b = match_detections(&detect_impulses(denoised, fs, config)?, truth_onsets, tolerance);
    Ok(a.matched.iter().zip(&b.matched).map(|(x, y)| *x || *y).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::friedlander;

    fn det(onset: usize) -> Detection {
        Detection {
            onset_sample: onset,
            score: 5.0,
        }
    }

    #[test]
    fn exact_and_boundary() {
        assert_eq!(match_detections(&[det(500)], &[500], 328).matched, vec![true]);
        assert_eq!(match_detections(&[det(828)], &[500], 328).matched, vec![true]);
        let r = match_detections(&[det(829)], &[500], 328);
        assert_eq!(r.matched, vec![false]);
        assert_eq!(r.false_alarms, 1);
        assert_eq!(match_detections(&[det(171)], &[500], 328).matched, vec![false]);
    }

    #[test]
    fn one_truth_two_detections() {
        let r = match_detections(&[det(480), det(510)], &[500], 328);
        assert_eq!(r.matched, vec![true]);
        assert_eq!(r.false_alarms, 1);
    }

    #[test]
    fn nearest_first_assignment() {
        // detection 620 is within tolerance of both truths but closer to 600;
        // 300 can still take detection 400
        let r = match_detections(&[det(400), det(620)], &[300, 600], 328);
        assert_eq!(r.matched, vec![true, true]);
        assert_eq!(r.false_alarms, 0);
        // one detection, two truths: only the nearer one is matched
        let r = match_detections(&[det(580)], &[300, 600], 328);
        assert_eq!(r.matched, vec![false, true]);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(match_detections(&[], &[10], 5).matched, vec![false]);
        let r = match_detections(&[det(3)], &[], 5);
        assert!(r.matched.is_empty());
        assert_eq!(r.false_alarms, 1);
    }

    #[test]
    fn combined_is_or() {
        let fs = 32_768;
        let shot = friedlander(5.0, 0.002, fs, 4096, 2000).unwrap();
        let clean = shot.waveform.samples().to_vec();
        let silence = vec![0.0; 4096];
        let cfg = StaLtaConfig::default();
        assert_eq!(combined_detect(&silence, &clean, fs, &[2000], 328, &cfg).unwrap(), vec![true]);
        assert_eq!(combined_detect(&clean, &silence, fs, &[2000], 328, &cfg).unwrap(), vec![true]);
        assert_eq!(combined_detect(&silence, &silence, fs, &[2000], 328, &cfg).unwrap(), vec![false]);
        assert!(combined_detect(&silence, &clean[..4000], fs, &[2000], 328, &cfg).is_err());
    }
}

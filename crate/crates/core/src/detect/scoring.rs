use std::fmt::{self, Write as _};

use crate::{Error, Result};

/// Which signal the detector was run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Clean,
    Noisy,
    Denoised,
    /// Noisy OR denoised.
    Combined,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::Clean, Condition::Noisy, Condition::Denoised, Condition::Combined];
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Clean => "clean",
            Condition::Noisy => "noisy",
            Condition::Denoised => "denoised",
            Condition::Combined => "combined",
        })
    }
}

/// Detection outcomes of all trials at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrBin {
    pub snr_db: f64,
    pub matched: Vec<bool>,
}

impl SnrBin {
    /// Groups `(snr, matched)` trials into bins sorted by ascending SNR.
    pub fn group(trials: impl IntoIterator<Item = (f64, bool)>) -> Vec<SnrBin> {
        let mut bins: Vec<SnrBin> = Vec::new();
        for (snr, hit) in trials {
            match bins.iter_mut().find(|b| b.snr_db == snr) {
                Some(b) => b.matched.push(hit),
                None => bins.push(SnrBin {
                    snr_db: snr,
                    matched: vec![hit],
                }),
            }
        }
        bins.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        bins
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionScore {
    pub snr_db: f64,
    /// Detection rate in [0, 1].
    pub p: f64,
    pub n: usize,
    /// One-sigma binomial margin `sqrt(p(1 − p) / n)`.
    pub delta_p: f64,
}

/// Binomial standard error of a rate `p` estimated from `n` trials.
pub fn margin_of_error(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Detection rate and margin per bin, ordered by SNR.
pub fn score_rates(bins: &[SnrBin]) -> Result<Vec<DetectionScore>> {
    let mut out = bins
        .iter()
        .map(|b| {
            if b.matched.is_empty() {
                return Err(Error::EmptyBin(b.snr_db));
            }
            let n = b.matched.len();
            let p = b.matched.iter().filter(|m| **m).count() as f64 / n as f64;
            Ok(DetectionScore {
                snr_db: b.snr_db,
                p,
                n,
                delta_p: margin_of_error(p, n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    Ok(out)
}

/// CSV with columns `snr_db,condition,p,delta_p,n`.
pub fn scores_csv(rows: &[(Condition, DetectionScore)]) -> String {
    let mut s = String::from("snr_db,condition,p,delta_p,n\n");
    for (c, d) in rows {
        let _ = writeln!(s, "{},{c},{},{},{}", d.snr_db, d.p, d.delta_p, d.n);
    }
    s
}

use std::collections::BTreeSet;
use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::examples::NoisyExample;
use super::split::DatasetSplit;
use crate::net::{batch_mse, Adam, AdamConfig, Network};
use crate::{Error, Result};

/// SNR thresholds of the training phases and the per-phase iteration budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlan {
    pub thresholds_db: Vec<f64>,
    /// Iterations at the start of each phase during which `f` is frozen.
    pub freeze_iters: usize,
    pub total_iters: usize,
}

impl Default for PhasePlan {
    fn default() -> Self {
        PhasePlan {
            thresholds_db: vec![0.0, -5.0, -10.0, -15.0, -20.0],
            freeze_iters: 250,
            total_iters: 500,
        }
    }
}

impl PhasePlan {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds_db.is_empty() {
            return Err(Error::InvalidArgument("phase plan has no thresholds".into()));
        }
        if self.thresholds_db.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("phase thresholds must be finite".into()));
        }
        if self.thresholds_db.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "phase thresholds must be strictly decreasing: {:?}",
                self.thresholds_db
            )));
        }
        if self.freeze_iters >= self.total_iters {
            return Err(Error::InvalidArgument(format!(
                "freeze_iters {} must be below total_iters {}",
                self.freeze_iters, self.total_iters
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    /// Examples per step; 0 means the whole active set.
    pub batch_size: usize,
    /// Shuffles minibatches; unused for full-batch training.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub phase: usize,
    pub iter: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub f_frozen: bool,
    pub n_active: usize,
}

/// Per-iteration training record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceLog {
    records: Vec<LogRecord>,
}

impl ConvergenceLog {
    pub fn push(&mut self, r: LogRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if r.phase < last.phase || (r.phase == last.phase && r.iter <= last.iter) {
                return Err(Error::InvalidArgument(format!(
                    "log record ({}, {}) does not follow ({}, {})",
                    r.phase, r.iter, last.phase, last.iter
                )));
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn phase(&self, phase: usize) -> impl Iterator<Item = &LogRecord> {
        self.records.iter().filter(move |r| r.phase == phase)
    }

    /// CSV with columns `phase,iter,train_mse,val_mse,f_frozen,n_active`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("phase,iter,train_mse,val_mse,f_frozen,n_active\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{},{}",
                r.phase, r.iter, r.train_mse, r.val_mse, r.f_frozen as u8, r.n_active
            );
        }
        s
    }
}

/// What an observer sees after each optimizer step.
pub struct IterationState<'a> {
    pub record: &'a LogRecord,
    pub network: &'a Network,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    pub log: ConvergenceLog,
    /// Ids of every example that contributed to a gradient step.
    pub trained_ids: BTreeSet<usize>,
}

pub fn train_curriculum(
    net: Network,
    examples: &[NoisyExample],
    split: &DatasetSplit,
    plan: &PhasePlan,
    config: &TrainConfig,
    scale: f64,
) -> Result<TrainOutcome> {
    train_curriculum_with(net, examples, split, plan, config, scale, |_| {})
}

fn stack(rows: &[&NoisyExample], clean: bool, scale: f64, dim: usize) -> Result<Array2<f64>> {
    let mut m = Array2::zeros((rows.len(), dim));
    for (mut row, e) in m.axis_iter_mut(Axis(0)).zip(rows) {
        let src = if clean { &e.clean_dec } else { &e.noisy_dec };
        if src.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: src.len(),
            });
        }
        for (d, s) in row.iter_mut().zip(src) {
            *d = s / scale;
        }
    }
    Ok(m)
}

/// Phased training: phase `k` trains on the training-combo examples whose grid
/// SNR exceeds `thresholds_db[k]`, with `f` frozen for the first
/// `freeze_iters` steps. Validation MSE uses the validation combo under the
/// same threshold and never feeds a gradient.
pub fn train_curriculum_with(
    mut net: Network,
    examples: &[NoisyExample],
    split: &DatasetSplit,
    plan: &PhasePlan,
    config: &TrainConfig,
    scale: f64,
    mut observer: impl FnMut(&IterationState<'_>),
) -> Result<TrainOutcome> {
    plan.validate()?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let dim = net.dim();
    let mut adam = Adam::new(&net, config.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut log = ConvergenceLog::default();
    let mut trained_ids = BTreeSet::new();
    let val_combo = split.validation_combo;

    for (phase, &threshold) in plan.thresholds_db.iter().enumerate() {
        let active: Vec<&NoisyExample> = examples
            .iter()
            .filter(|e| split.train_combos.contains(&e.combo) && e.grid_snr_db > threshold)
            .collect();
        if active.is_empty() {
            return Err(Error::EmptyActiveSet {
                phase,
                threshold_db: threshold,
            });
        }
        let val: Vec<&NoisyExample> = examples
            .iter()
            .filter(|e| e.combo == val_combo && e.grid_snr_db > threshold)
            .collect();
        assert!(
            active.iter().all(|e| e.combo != val_combo),
            "validation example in training set"
        );
        let x = stack(&active, false, scale, dim)?;
        let t = stack(&active, true, scale, dim)?;
        let xv = stack(&val, false, scale, dim)?;
        let tv = stack(&val, true, scale, dim)?;
        let batch = if config.batch_size == 0 {
            active.len()
        } else {
            config.batch_size.min(active.len())
        };
        let mut order: Vec<usize> = (0..active.len()).collect();
        let mut cursor = active.len();

        for iter in 0..plan.total_iters {
            net.f_frozen = iter < plan.freeze_iters;
            let (train_mse, grads) = if batch == active.len() {
                let (y, cache) = net.forward_batch(x.view())?;
                let (loss, g) = batch_mse(&y, t.view())?;
                trained_ids.extend(active.iter().map(|e| e.id));
                (loss.mse, net.backward_for_step(&cache, g.view())?)
            } else {
                if cursor + batch > order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let idx = &order[cursor..cursor + batch];
                cursor += batch;
                let xb = x.select(Axis(0), idx);
                let tb = t.select(Axis(0), idx);
                let (y, cache) = net.forward_batch(xb.view())?;
                let (loss, g) = batch_mse(&y, tb.view())?;
                trained_ids.extend(idx.iter().map(|&i| active[i].id));
                (loss.mse, net.backward_for_step(&cache, g.view())?)
            };
            if !train_mse.is_finite() {
                return Err(Error::NonFinite(format!("training loss at phase {phase}, iteration {iter}")));
            }
            let val_mse = validation_mse(&net, xv.view(), tv.view())?;
            adam.step(&mut net, &grads).map_err(|e| match e {
                Error::NonFinite(what) => Error::NonFinite(format!("{what} at phase {phase}, iteration {iter}")),
                other => other,
            })?;
            let record = LogRecord {
                phase,
                iter,
                train_mse,
                val_mse,
                f_frozen: net.f_frozen,
                n_active: active.len(),
            };
            log.push(record)?;
            observer(&IterationState {
                record: &record,
                network: &net,
            });
        }
    }
    net.f_frozen = true;
    Ok(TrainOutcome {
        network: net,
        log,
        trained_ids,
    })
}

fn validation_mse(net: &Network, x: ArrayView2<f64>, t: ArrayView2<f64>) -> Result<f64> {
    if x.nrows() == 0 {
        return Ok(f64::NAN);
    }
    let y = net.predict_batch(x)?;
    Ok(batch_mse(&y, t)?.0.mse)
}

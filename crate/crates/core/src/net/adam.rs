use ndarray::{Array1, Array2};

use super::network::{Gradients, Network};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    /// Learning-rate multiplier for the filter layer once released.
    pub f_lr_scale: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            f_lr_scale: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of `params` in place; `step` counts from 1.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    debug_assert!(step >= 1);
    let c1 = 1.0 - beta1.powf(step as f64);
    let c2 = 1.0 - beta2.powf(step as f64);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Moments {
    fn new(n: usize) -> Self {
        Moments {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// Adam state for the five parameter groups of a [`Network`].
///
/// Each group keeps its own step count, so the filter layer's bias
/// correction starts fresh the first time it is released.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    groups: [Moments; 5],
}

impl Adam {
    pub fn new(net: &Network, config: AdamConfig) -> Self {
        Adam {
            config,
            groups: [
                Moments::new(net.w1.len()),
                Moments::new(net.b1.len()),
                Moments::new(net.w2.len()),
                Moments::new(net.b2.len()),
                Moments::new(net.f.len()),
            ],
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Applies one update to every unfrozen group. Non-finite gradients
    /// abort the step before any parameter changes.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        let named: [(&str, Option<&[f64]>); 5] = [
            ("w1", grads.w1.as_slice()),
            ("b1", grads.b1.as_slice()),
            ("w2", grads.w2.as_slice()),
            ("b2", grads.b2.as_slice()),
            ("f", grads.f.as_slice()),
        ];
        for (name, g) in &named {
            let g = g.ok_or_else(|| Error::InvalidArgument(format!("gradient {name} is not contiguous")))?;
            if *name == "f" && net.f_frozen {
                continue;
            }
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient {name}[{i}] = {}", g[i])));
            }
        }
        let c = self.config;
        let [g_w1, g_b1, g_w2, g_b2, g_f] = &mut self.groups;
        update2(&mut net.w1, &grads.w1, g_w1, c.lr, &c);
        update1(&mut net.b1, &grads.b1, g_b1, c.lr, &c);
        update2(&mut net.w2, &grads.w2, g_w2, c.lr, &c);
        update1(&mut net.b2, &grads.b2, g_b2, c.lr, &c);
        if !net.f_frozen {
            update2(&mut net.f, &grads.f, g_f, c.lr * c.f_lr_scale, &c);
        }
        if !net.all_finite() {
            return Err(Error::NonFinite("parameters after Adam step".into()));
        }
        Ok(())
    }
}

fn update2(p: &mut Array2<f64>, g: &Array2<f64>, s: &mut Moments, lr: f64, c: &AdamConfig) {
    s.step += 1;
    let p = p.as_slice_mut().expect("standard layout");
    adam_update(p, g.as_slice().expect("standard layout"), &mut s.m, &mut s.v, s.step, lr, c.beta1, c.beta2, c.eps);
}

fn update1(p: &mut Array1<f64>, g: &Array1<f64>, s: &mut Moments, lr: f64, c: &AdamConfig) {
    s.step += 1;
    let p = p.as_slice_mut().expect("standard layout");
    adam_update(p, g.as_slice().expect("standard layout"), &mut s.m, &mut s.v, s.step, lr, c.beta1, c.beta2, c.eps);
}

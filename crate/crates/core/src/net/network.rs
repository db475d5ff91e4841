use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::FilterSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("tanh")
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidArgument(format!("unknown activation {other:?}"))),
        }
    }
}

/// Autoencoder weights plus the filter layer `f`.
///
/// `w1` is `hidden × dim`, `w2` is `dim × hidden`, `f` is `dim × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub f: Array2<f64>,
    pub activation: Activation,
    pub f_frozen: bool,
    pub seed: u64,
}

/// Intermediates of a batched forward pass, one example per row.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    x: Array2<f64>,
    hidden: Array2<f64>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.x.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub f: Array2<f64>,
}

impl Gradients {
    pub fn all_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).chain(&self.f).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    /// Mean over examples of the per-example sum of squared errors.
    pub mse: f64,
    pub n_examples: usize,
}

/// Sum of squared errors between one output frame and its target.
pub fn mse_loss(y: &[f64], target: &[f64]) -> Result<LossReport> {
    if y.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            actual: y.len(),
        });
    }
    let mse = y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(LossReport { mse, n_examples: 1 })
}

/// Batch loss (mean of per-example sums) and its gradient w.r.t. `y`.
pub fn batch_mse(y: &Array2<f64>, target: ArrayView2<f64>) -> Result<(LossReport, Array2<f64>)> {
    if y.dim() != target.dim() {
        return Err(Error::InvalidArgument(format!(
            "output batch {:?} does not match target batch {:?}",
            y.dim(),
            target.dim()
        )));
    }
    let b = y.nrows().max(1) as f64;
    let diff = y - &target;
    let mse = diff.iter().map(|d| d * d).sum::<f64>() / b;
    let grad = diff * (2.0 / b);
    Ok((
        LossReport {
            mse,
            n_examples: y.nrows(),
        },
        grad,
    ))
}

impl Network {
    /// Glorot-uniform weights, zero biases, filter layer from `filter`, frozen.
    pub fn init(dim: usize, hidden: usize, seed: u64, filter: &FilterSpec) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidArgument("hidden size must be at least 1".into()));
        }
        let f = filter.matrix(dim)?.into_rows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limit = (6.0 / (dim + hidden) as f64).sqrt();
        let w1 = Array2::from_shape_simple_fn((hidden, dim), || rng.random_range(-limit..limit));
        let w2 = Array2::from_shape_simple_fn((dim, hidden), || rng.random_range(-limit..limit));
        Ok(Network {
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: Array1::zeros(dim),
            f,
            activation: Activation::Tanh,
            f_frozen: true,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len() + self.f.len()
    }

    pub fn all_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).chain(&self.f).all(|v| v.is_finite())
    }

    fn check_batch(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: x.ncols(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    /// Forward pass on one frame.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let batch = ArrayView2::from_shape((1, x.len()), x).expect("1 x n view");
        let (y, cache) = self.forward_batch(batch)?;
        Ok((y.into_raw_vec_and_offset().0, cache))
    }

    /// Forward pass on a batch (one frame per row).
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_batch(&x)?;
        let hidden = self.hidden_layer(x);
        let y = self.output_layer(&hidden);
        Ok((
            y,
            ForwardCache {
                x: x.to_owned(),
                hidden,
            },
        ))
    }

    /// Output only, without keeping intermediates.
    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_batch(&x)?;
        Ok(self.output_layer(&self.hidden_layer(x)))
    }

    fn hidden_layer(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut hidden = x.dot(&self.w1.t()) + &self.b1;
        match self.activation {
            Activation::Tanh => hidden.mapv_inplace(f64::tanh),
        }
        hidden
    }

    // f·(w2·h + b2). For batches wider than the hidden layer it is cheaper to
    // fold f into w2 once than to filter every row.
    fn output_layer(&self, hidden: &Array2<f64>) -> Array2<f64> {
        if hidden.nrows() > self.hidden() {
            hidden.dot(&self.f.dot(&self.w2).t()) + &self.f.dot(&self.b2)
        } else {
            (hidden.dot(&self.w2.t()) + &self.b2).dot(&self.f.t())
        }
    }

    /// Exact gradients of a loss whose derivative w.r.t. the output batch is `grad_out`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: ArrayView2<f64>) -> Result<Gradients> {
        self.backward_impl(cache, grad_out, true)
    }

    /// Like [`Network::backward`], but skips the filter-layer gradient (left as
    /// zeros) while the layer is frozen.
    pub fn backward_for_step(&self, cache: &ForwardCache, grad_out: ArrayView2<f64>) -> Result<Gradients> {
        self.backward_impl(cache, grad_out, !self.f_frozen)
    }

    fn backward_impl(&self, cache: &ForwardCache, grad_out: ArrayView2<f64>, with_filter: bool) -> Result<Gradients> {
        let (b, dim) = cache.x.dim();
        if dim != self.dim() || cache.hidden.ncols() != self.hidden() {
            return Err(Error::InvalidArgument("forward cache does not match this network".into()));
        }
        if grad_out.dim() != (b, dim) {
            return Err(Error::InvalidArgument(format!(
                "output gradient {:?} does not match cached batch {:?}",
                grad_out.dim(),
                (b, dim)
            )));
        }
        // With a = w2·h + b2 and y = f·a:
        //   df = dyᵀ·a = (dyᵀ·h)·w2ᵀ + Σdy ⊗ b2
        //   dw2 = fᵀ·(dyᵀ·h), db2 = fᵀ·Σdy, dh = dy·(f·w2)
        let dy_h = grad_out.t().dot(&cache.hidden);
        let dy_sum = grad_out.sum_axis(Axis(0));
        let f = if with_filter {
            let mut f = dy_h.dot(&self.w2.t());
            for (mut row, s) in f.axis_iter_mut(Axis(0)).zip(&dy_sum) {
                row.scaled_add(*s, &self.b2);
            }
            f
        } else {
            Array2::zeros(self.f.dim())
        };
        let w2 = self.f.t().dot(&dy_h);
        let b2 = self.f.t().dot(&dy_sum);
        let mut d_hidden = if b > self.hidden() {
            grad_out.dot(&self.f.dot(&self.w2))
        } else {
            grad_out.dot(&self.f).dot(&self.w2)
        };
        // tanh' = 1 - tanh²
        d_hidden.zip_mut_with(&cache.hidden, |d, h| *d *= 1.0 - h * h);
        let w1 = d_hidden.t().dot(&cache.x);
        let b1 = d_hidden.sum_axis(Axis(0));
        Ok(Gradients { w1, b1, w2, b2, f })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::design_butterworth;
    use ndarray::Array;

    fn filter() -> FilterSpec {
        design_butterworth(8, 32_768.0 / 41.0, 4096.0, 31).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Scalar re-implementation of the forward pass, loop by loop.
    fn straight_line_forward(net: &Network, x: &[f64]) -> Vec<f64> {
        let dim = net.dim();
        let hidden: Vec<f64> = (0..net.hidden())
            .map(|j| {
                let mut z = net.b1[j];
                for i in 0..dim {
                    z += net.w1[[j, i]] * x[i];
                }
                z.tanh()
            })
            .collect();
        let pre: Vec<f64> = (0..dim)
            .map(|i| {
                let mut a = net.b2[i];
                for (j, h) in hidden.iter().enumerate() {
                    a += net.w2[[i, j]] * h;
                }
                a
            })
            .collect();
        (0..dim)
            .map(|n| (0..dim).map(|m| net.f[[n, m]] * pre[m]).sum())
            .collect()
    }

    #[test]
    fn init_is_deterministic() {
        let a = Network::init(256, 64, 3, &filter()).unwrap();
        let b = Network::init(256, 64, 3, &filter()).unwrap();
        let c = Network::init(256, 64, 4, &filter()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.w1, c.w1);
        assert!(a.b1.iter().all(|&v| v == 0.0));
        assert!(a.b2.iter().all(|&v| v == 0.0));
        assert!(a.f_frozen);
        let limit = (6.0f64 / 320.0).sqrt();
        assert!(a.w1.iter().chain(&a.w2).all(|v| v.abs() <= limit));
        assert_eq!(a.f, filter().matrix(256).unwrap().into_rows());
        assert!(Network::init(256, 0, 3, &filter()).is_err());
    }

    #[test]
    fn filter_layer_passes_band_limited_input() {
        let net = Network::init(256, 8, 1, &filter()).unwrap();
        // 100 Hz at the 4096 Hz decimated rate, well inside the ~800 Hz passband
        let x: Vec<f64> = (0..256).map(|k| (std::f64::consts::TAU * 100.0 * k as f64 / 4096.0).sin()).collect();
        let y = net.f.dot(&Array::from(x.clone()));
        let err = (32..224).map(|k| (y[k] - x[k]).abs()).fold(0.0, f64::max);
        assert!(err < 0.01, "{err}");
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut net = Network::init(256, 16, 1, &filter()).unwrap();
        net.w1.fill(0.0);
        net.w2.fill(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (y, _) = net.forward(&random_vec(&mut rng, 256)).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bias_unit_selects_filter_column() {
        let mut net = Network::init(256, 16, 1, &filter()).unwrap();
        net.w1.fill(0.0);
        net.w2.fill(0.0);
        net.b2[40] = 1.0;
        let (y, _) = net.forward(&[0.3; 256]).unwrap();
        for n in 0..256 {
            assert_eq!(y[n], net.f[[n, 40]]);
        }
    }

    #[test]
    fn forward_matches_straight_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Network::init(256, 32, 9, &filter()).unwrap();
        net.b1.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        net.b2.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        net.f.mapv_inplace(|v| v + rng.random_range(-0.01..0.01));
        for _ in 0..5 {
            let x = random_vec(&mut rng, 256);
            let (y, _) = net.forward(&x).unwrap();
            let oracle = straight_line_forward(&net, &x);
            let err = y.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn loss_values() {
        let t: Vec<f64> = (0..256).map(|k| k as f64 * 0.1).collect();
        assert_eq!(mse_loss(&t, &t).unwrap().mse, 0.0);
        let mut y = t.clone();
        y[0] += 1.0;
        y[1] -= 1.0;
        assert!((mse_loss(&y, &t).unwrap().mse - 2.0).abs() < 1e-12);
        assert!(mse_loss(&y[..10], &t).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_vec(&mut rng, 256);
        let b = random_vec(&mut rng, 256);
        let mut oracle = 0.0;
        for i in 0..256 {
            oracle += (a[i] - b[i]).powi(2);
        }
        assert!((mse_loss(&a, &b).unwrap().mse - oracle).abs() < 1e-12);
    }

    #[test]
    fn zero_grad_out_gives_zero_gradients() {
        let net = Network::init(256, 16, 1, &filter()).unwrap();
        let (_, cache) = net.forward(&[0.2; 256]).unwrap();
        let g = net.backward(&cache, Array2::zeros((1, 256)).view()).unwrap();
        assert!(g.w1.iter().chain(&g.b1).chain(&g.w2).chain(&g.b2).chain(&g.f).all(|&v| v == 0.0));
    }

    #[test]
    fn linear_path_filter_gradient_is_outer_product() {
        // zero w1 and w2: the pre-filter output is b2, so dE/dF = g · b2ᵀ
        let mut net = Network::init(256, 8, 1, &filter()).unwrap();
        net.w1.fill(0.0);
        net.w2.fill(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xhat = random_vec(&mut rng, 256);
        net.b2 = Array1::from(xhat.clone());
        let g = random_vec(&mut rng, 256);
        let (_, cache) = net.forward(&[0.0; 256]).unwrap();
        let grads = net.backward(&cache, ArrayView2::from_shape((1, 256), &g).unwrap()).unwrap();
        for n in 0..256 {
            for m in 0..256 {
                assert!((grads.f[[n, m]] - g[n] * xhat[m]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn wide_batch_matches_row_by_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut net = Network::init(256, 4, 2, &filter()).unwrap();
        net.b2.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        let x = Array2::from_shape_fn((12, 256), |_| rng.random_range(-1.0..1.0));
        let dy = Array2::from_shape_fn((12, 256), |_| rng.random_range(-1.0..1.0));
        let (y, cache) = net.forward_batch(x.view()).unwrap();
        let g = net.backward(&cache, dy.view()).unwrap();
        let mut sum: Option<Gradients> = None;
        for r in 0..12 {
            let xr = x.slice(ndarray::s![r..r + 1, ..]);
            let (yr, cr) = net.forward_batch(xr).unwrap();
            for (a, b) in yr.iter().zip(y.row(r)) {
                assert!((a - b).abs() < 1e-12);
            }
            let gr = net.backward(&cr, dy.slice(ndarray::s![r..r + 1, ..])).unwrap();
            sum = Some(match sum {
                None => gr,
                Some(s) => Gradients {
                    w1: s.w1 + gr.w1,
                    b1: s.b1 + gr.b1,
                    w2: s.w2 + gr.w2,
                    b2: s.b2 + gr.b2,
                    f: s.f + gr.f,
                },
            });
        }
        let s = sum.unwrap();
        let close = |a: &Array2<f64>, b: &Array2<f64>| a.iter().zip(b).all(|(p, q)| (p - q).abs() < 1e-10);
        assert!(close(&g.w1, &s.w1) && close(&g.w2, &s.w2) && close(&g.f, &s.f));
        assert!(g.b1.iter().zip(&s.b1).all(|(p, q)| (p - q).abs() < 1e-10));
        assert!(g.b2.iter().zip(&s.b2).all(|(p, q)| (p - q).abs() < 1e-10));
    }

    #[test]
    fn finite_difference_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut net = Network::init(256, 16, 4, &filter()).unwrap();
        net.b1.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        net.b2.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        let x = Array2::from_shape_fn((3, 256), |_| rng.random_range(-1.0..1.0));
        let t = Array2::from_shape_fn((3, 256), |_| rng.random_range(-1.0..1.0));
        let loss = |n: &Network| batch_mse(&n.forward_batch(x.view()).unwrap().0, t.view()).unwrap().0.mse;
        let (y, cache) = net.forward_batch(x.view()).unwrap();
        let (_, dy) = batch_mse(&y, t.view()).unwrap();
        let g = net.backward(&cache, dy.view()).unwrap();
        let eps = 1e-5;
        let mut checked = 0;
        for _ in 0..60 {
            let group = rng.random_range(0..5);
            let (analytic, numeric) = {
                let mut plus = net.clone();
                let mut minus = net.clone();
                let a = match group {
                    0 => {
                        let (i, j) = (rng.random_range(0..16), rng.random_range(0..256));
                        plus.w1[[i, j]] += eps;
                        minus.w1[[i, j]] -= eps;
                        g.w1[[i, j]]
                    }
                    1 => {
                        let i = rng.random_range(0..16);
                        plus.b1[i] += eps;
                        minus.b1[i] -= eps;
                        g.b1[i]
                    }
                    2 => {
                        let (i, j) = (rng.random_range(0..256), rng.random_range(0..16));
                        plus.w2[[i, j]] += eps;
                        minus.w2[[i, j]] -= eps;
                        g.w2[[i, j]]
                    }
                    3 => {
                        let i = rng.random_range(0..256);
                        plus.b2[i] += eps;
                        minus.b2[i] -= eps;
                        g.b2[i]
                    }
                    _ => {
                        let i = rng.random_range(0usize..256);
                        let j = (i + rng.random_range(0..31)).saturating_sub(15).min(255);
                        plus.f[[i, j]] += eps;
                        minus.f[[i, j]] -= eps;
                        g.f[[i, j]]
                    }
                };
                (a, (loss(&plus) - loss(&minus)) / (2.0 * eps))
            };
            let denom = analytic.abs().max(numeric.abs());
            if denom < 1e-7 {
                continue;
            }
            checked += 1;
            assert!((analytic - numeric).abs() / denom < 1e-4, "group {group}: {analytic} vs {numeric}");
        }
        assert!(checked > 40);
    }

    #[test]
    fn cache_mismatch_rejected() {
        let a = Network::init(256, 16, 1, &filter()).unwrap();
        let b = Network::init(256, 8, 1, &filter()).unwrap();
        let (_, cache) = a.forward(&[0.1; 256]).unwrap();
        assert!(b.backward(&cache, Array2::zeros((1, 256)).view()).is_err());
        assert!(a.backward(&cache, Array2::zeros((2, 256)).view()).is_err());
    }

    #[test]
    fn rejects_non_finite_input() {
        let net = Network::init(256, 4, 1, &filter()).unwrap();
        let mut x = vec![0.0; 256];
        x[7] = f64::NAN;
        assert!(matches!(net.forward(&x), Err(Error::NonFinite(_))));
        assert!(net.forward(&[0.0; 255]).is_err());
    }
}

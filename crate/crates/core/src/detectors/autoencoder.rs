//! Windowed autoencoder detector: a single-hidden-layer network (tanh hidden,
//! affine output) trained by full-batch gradient descent on standardized
//! training windows; the reconstruction error is the anomaly score.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{uniform_range, StreamKey};
use crate::series::{CountSeries, ScoreSeries};

use super::window::{anomaly_prefix, window_is_clean, WindowSpec};

/// Floor applied to per-feature standard deviations when standardizing.
pub const STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderSpec {
    /// Hidden layer width; must be below the window width.
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "crate::forecast::default_train_fraction")]
    pub train_fraction: f64,
}

fn default_hidden() -> usize {
    4
}

fn default_epochs() -> usize {
    500
}

fn default_learning_rate() -> f64 {
    0.01
}

impl Default for AutoencoderSpec {
    fn default() -> Self {
        Self {
            hidden: default_hidden(),
            epochs: default_epochs(),
            learning_rate: default_learning_rate(),
            seed: 0,
            train_fraction: crate::forecast::default_train_fraction(),
        }
    }
}

/// The network `x -> tanh(W1 x + b1) -> W2 a + b2` with parameters stored
/// flat as `[W1, b1, W2, b2]` so gradients can be checked element-wise.
pub struct Autoencoder {
    pub input: usize,
    pub hidden: usize,
    params: Vec<f64>,
}

impl Autoencoder {
    pub fn init(input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = (6.0 / (input + hidden) as f64).sqrt();
        let n_weights = 2 * input * hidden;
        let mut params = Vec::with_capacity(n_weights + hidden + input);
        for _ in 0..input * hidden {
            params.push(uniform_range(rng, -scale, scale));
        }
        params.extend(std::iter::repeat_n(0.0, hidden)); // b1
        for _ in 0..input * hidden {
            params.push(uniform_range(rng, -scale, scale));
        }
        params.extend(std::iter::repeat_n(0.0, input)); // b2
        Self {
            input,
            hidden,
            params,
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn views(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let (w, h) = (self.input, self.hidden);
        let (w1, rest) = self.params.split_at(w * h);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(w * h);
        (w1, b1, w2, b2)
    }

    fn forward(&self, x: &[f64], act: &mut [f64], out: &mut [f64]) {
        let (w1, b1, w2, b2) = self.views();
        let (w, h) = (self.input, self.hidden);
        for j in 0..h {
            let mut z = b1[j];
            for f in 0..w {
                z += w1[j * w + f] * x[f];
            }
            act[j] = z.tanh();
        }
        for f in 0..w {
            let mut y = b2[f];
            for j in 0..h {
                y += w2[f * h + j] * act[j];
            }
            out[f] = y;
        }
    }

    /// Mean squared reconstruction error of one (standardized) window.
    pub fn reconstruction_error(&self, x: &[f64]) -> f64 {
        let mut act = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.input];
        self.forward(x, &mut act, &mut out);
        out.iter()
            .zip(x)
            .map(|(y, x)| (y - x) * (y - x))
            .sum::<f64>()
            / self.input as f64
    }

    /// Mean squared reconstruction error over a batch.
    pub fn loss(&self, data: &[Vec<f64>]) -> f64 {
        data.iter()
            .map(|x| self.reconstruction_error(x))
            .sum::<f64>()
            / data.len() as f64
    }

    /// Loss and its analytic gradient (flat layout matching `params`).
    pub fn loss_and_gradients(&self, data: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let (w1, b1, w2, b2) = self.views();
        let _ = (b1, b2);
        let (w, h) = (self.input, self.hidden);
        let m = data.len() as f64;
        let mut grads = vec![0.0; self.params.len()];
        let (g_w1, rest) = grads.split_at_mut(w * h);
        let (g_b1, rest) = rest.split_at_mut(h);
        let (g_w2, g_b2) = rest.split_at_mut(w * h);

        let mut act = vec![0.0; h];
        let mut out = vec![0.0; w];
        let mut loss = 0.0;
        for x in data {
            self.forward(x, &mut act, &mut out);
            // dL/dy with L = mean over samples and features of (y - x)^2
            let mut dy = vec![0.0; w];
            for f in 0..w {
                let diff = out[f] - x[f];
                loss += diff * diff / (m * w as f64);
                dy[f] = 2.0 * diff / (m * w as f64);
            }
            for j in 0..h {
                let mut da = 0.0;
                for f in 0..w {
                    g_w2[f * h + j] += dy[f] * act[j];
                    da += dy[f] * w2[f * h + j];
                }
                let dz = da * (1.0 - act[j] * act[j]);
                for f in 0..w {
                    g_w1[j * w + f] += dz * x[f];
                }
                g_b1[j] += dz;
            }
            for f in 0..w {
                g_b2[f] += dy[f];
            }
        }
        let _ = w1;
        (loss, grads)
    }

    /// Full-batch gradient descent; returns the loss before each update.
    pub fn train(&mut self, data: &[Vec<f64>], epochs: usize, learning_rate: f64) -> Vec<f64> {
        let mut losses = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            let (loss, grads) = self.loss_and_gradients(data);
            losses.push(loss);
            for (p, g) in self.params.iter_mut().zip(&grads) {
                *p -= learning_rate * g;
            }
        }
        losses
    }
}

/// Per-feature standardization fitted on training windows.
struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    fn fit(data: &[Vec<f64>]) -> Self {
        let w = data[0].len();
        let m = data.len() as f64;
        let mut means = vec![0.0; w];
        for x in data {
            for (acc, v) in means.iter_mut().zip(x) {
                *acc += v / m;
            }
        }
        let mut stds = vec![0.0; w];
        for x in data {
            for f in 0..w {
                stds[f] += (x[f] - means[f]).powi(2) / m;
            }
        }
        for s in &mut stds {
            *s = s.sqrt().max(STD_FLOOR);
        }
        Self { means, stds }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Trains on clean windows from the training prefix, then scores every
/// window of the series by reconstruction error. `valid_from` is `w - 1`.
pub fn autoencoder_score(
    series: &CountSeries,
    window: &WindowSpec,
    spec: &AutoencoderSpec,
) -> Result<ScoreSeries> {
    window.validate()?;
    let w = window.width;
    if spec.hidden >= w {
        return Err(Error::InvalidConfig(format!(
            "hidden width {} must be below window width {w}",
            spec.hidden
        )));
    }
    let n = series.len();
    let train_len = ((n as f64) * spec.train_fraction).floor() as usize;
    if train_len < 10 * w {
        return Err(Error::SeriesTooShort {
            need: 10 * w,
            got: train_len,
        });
    }
    let values = series.values();
    let prefix = anomaly_prefix(series.labels(), n);
    let raw_window = |end: usize| {
        values[end + 1 - w..=end]
            .iter()
            .map(|&v| v as f64)
            .collect::<Vec<f64>>()
    };

    let train: Vec<Vec<f64>> = (w - 1..train_len)
        .filter(|&end| window_is_clean(&prefix, w, end))
        .map(raw_window)
        .collect();
    if train.is_empty() {
        return Err(Error::InvalidConfig(
            "training prefix has no non-anomalous windows".into(),
        ));
    }
    let standardizer = Standardizer::fit(&train);
    let train: Vec<Vec<f64>> = train.iter().map(|x| standardizer.apply(x)).collect();

    let mut rng = StreamKey::new(spec.seed).with_str("auto-encoder").rng();
    let mut model = Autoencoder::init(w, spec.hidden, &mut rng);
    model.train(&train, spec.epochs, spec.learning_rate);

    let tail: Vec<f64> = (w - 1..n)
        .map(|end| model.reconstruction_error(&standardizer.apply(&raw_window(end))))
        .collect();
    ScoreSeries::from_tail(tail, w - 1, n)
}

//! Synthetic low-count series: seasonal Poisson counts with drop anomalies
//! injected by a two-state Markov chain.
//!
//! The per-step rate is `A * dt * (1 + cos(2*pi * f * t * dt)) / 2`. While the
//! hidden chain sits in the anomalous state the emission rate is multiplied
//! by `1 - r`, so `r = 1` forces zero counts and `r = 0` leaves the marginal
//! distribution unchanged (labels still follow the hidden state).

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::sample_poisson;
use crate::rng::{uniform_f64, StreamKey};
use crate::series::CountSeries;

pub const NORMAL: u8 = 0;
pub const ANOMALOUS: u8 = 1;

/// Everything that determines one generated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Peak amplitude of the seasonal wave.
    pub amplitude: f64,
    /// Seasonal frequency in cycles per time unit.
    #[serde(default = "default_frequency")]
    pub frequency: f64,
    /// Sampling interval.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Number of timesteps.
    #[serde(default = "default_len")]
    pub len: usize,
    /// Rate reduction applied in the anomalous state, in [0, 1].
    pub reduction_rate: f64,
    /// Row-stochastic transition matrix; row = from-state (0 normal, 1 anomalous).
    #[serde(default = "default_transition")]
    pub transition: [[f64; 2]; 2],
    pub seed: u64,
    #[serde(default)]
    pub initial_state: u8,
}

fn default_frequency() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    0.1
}

fn default_len() -> usize {
    2000
}

fn default_transition() -> [[f64; 2]; 2] {
    [[0.995, 0.005], [0.05, 0.95]]
}

impl GeneratorConfig {
    /// A config with the benchmark defaults; amplitude, reduction rate and
    /// seed are the quantities swept by the grid.
    pub fn new(amplitude: f64, reduction_rate: f64, seed: u64) -> Self {
        Self {
            amplitude,
            frequency: default_frequency(),
            dt: default_dt(),
            len: default_len(),
            reduction_rate,
            transition: default_transition(),
            seed,
            initial_state: NORMAL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(msg.to_string()))
            }
        };
        c(
            self.amplitude > 0.0 && self.amplitude.is_finite(),
            "amplitude must be positive",
        )?;
        c(
            self.frequency > 0.0 && self.frequency.is_finite(),
            "frequency must be positive",
        )?;
        c(self.dt > 0.0 && self.dt.is_finite(), "dt must be positive")?;
        c(self.len >= 1, "length must be at least 1")?;
        c(
            (0.0..=1.0).contains(&self.reduction_rate),
            "reduction rate must lie in [0, 1]",
        )?;
        for row in &self.transition {
            c(
                row.iter().all(|p| (0.0..=1.0).contains(p)),
                "transition entries must lie in [0, 1]",
            )?;
            c(
                ((row[0] + row[1]) - 1.0).abs() <= 1e-12,
                "transition rows must sum to 1",
            )?;
        }
        c(self.initial_state <= 1, "initial state must be 0 or 1")?;
        Ok(())
    }

    /// Seasonal emission rate at timestep `t` (the normal-state rate).
    pub fn seasonal_rate(&self, t: usize) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * self.frequency * t as f64 * self.dt;
        self.amplitude * self.dt * (1.0 + phase.cos()) / 2.0
    }

    /// Samples per seasonal period (rounded), at least 1.
    pub fn period(&self) -> usize {
        (1.0 / (self.frequency * self.dt)).round().max(1.0) as usize
    }

    /// Stationary probability of the anomalous state under the chain.
    pub fn stationary_anomalous(&self) -> f64 {
        let leave_normal = 1.0 - self.transition[0][0];
        let leave_anomalous = 1.0 - self.transition[1][1];
        let total = leave_normal + leave_anomalous;
        if total <= 0.0 {
            // Both states absorbing; fall back to the initial state.
            return if self.initial_state == ANOMALOUS {
                1.0
            } else {
                0.0
            };
        }
        leave_normal / total
    }

    /// The RNG stream for this series, keyed by (seed, amplitude, reduction
    /// rate) so grid cells are independent and order-insensitive.
    pub fn stream(&self) -> ChaCha8Rng {
        StreamKey::new(self.seed)
            .with_f64(self.amplitude)
            .with_f64(self.reduction_rate)
            .rng()
    }
}

/// The hidden state path and the effective emission rate actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenPath {
    pub states: Vec<u8>,
    pub rates: Vec<f64>,
}

/// Samples the hidden state path from the transition matrix.
pub fn sample_state_path<R: rand_core::RngCore>(cfg: &GeneratorConfig, rng: &mut R) -> Vec<u8> {
    let mut states = Vec::with_capacity(cfg.len);
    let mut state = cfg.initial_state;
    states.push(state);
    for _ in 1..cfg.len {
        let stay = cfg.transition[state as usize][state as usize];
        if uniform_f64(rng) >= stay {
            state ^= 1;
        }
        states.push(state);
    }
    states
}

/// Generates one labeled series together with its hidden path.
///
/// Pure in the config: the same config (including seed) reproduces the
/// output bit for bit.
pub fn generate(cfg: &GeneratorConfig) -> Result<(CountSeries, HiddenPath)> {
    cfg.validate()?;
    let mut rng = cfg.stream();
    let states = sample_state_path(cfg, &mut rng);
    let mut rates = Vec::with_capacity(cfg.len);
    let mut values = Vec::with_capacity(cfg.len);
    for (t, &state) in states.iter().enumerate() {
        let seasonal = cfg.seasonal_rate(t);
        let rate = if state == ANOMALOUS {
            seasonal * (1.0 - cfg.reduction_rate)
        } else {
            seasonal
        };
        rates.push(rate);
        values.push(sample_poisson(rate, &mut rng)?);
    }
    let labels: Vec<bool> = states.iter().map(|&s| s == ANOMALOUS).collect();
    let series = CountSeries::new(values, cfg.dt)?
        .with_labels(labels)?
        .with_meta("amplitude", &format!("{}", cfg.amplitude))
        .with_meta("reduction_rate", &format!("{}", cfg.reduction_rate))
        .with_meta("seed", &format!("{}", cfg.seed));
    Ok((series, HiddenPath { states, rates }))
}

/// One (amplitude, reduction rate, seed) coordinate of the benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub r: f64,
    pub seed: u64,
}

impl GridCell {
    /// Stable file-system-friendly identifier.
    pub fn id(&self) -> String {
        format!("A{}_r{}_s{}", self.amplitude, self.r, self.seed)
    }
}

/// The sweep: every (amplitude, reduction rate) pair crossed with every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub amplitudes: Vec<f64>,
    pub reduction_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "GridSpec::default_base")]
    pub base: GeneratorConfig,
}

impl GridSpec {
    fn default_base() -> GeneratorConfig {
        GeneratorConfig::new(1.0, 0.0, 0)
    }

    /// The benchmark defaults: A in {2^-2 .. 2^12}, r in {0.1, 0.5, 0.9, 1.0},
    /// five seeds.
    pub fn full_default() -> Self {
        Self {
            amplitudes: (-2..=12).map(|e| (e as f64).exp2()).collect(),
            reduction_rates: vec![0.1, 0.5, 0.9, 1.0],
            seeds: (0..5).collect(),
            base: Self::default_base(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitudes.is_empty() || self.reduction_rates.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidConfig(
                "grid needs at least one amplitude, reduction rate, and seed".into(),
            ));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for &amplitude in &self.amplitudes {
            for &r in &self.reduction_rates {
                for &seed in &self.seeds {
                    cells.push(GridCell { amplitude, r, seed });
                }
            }
        }
        cells
    }

    pub fn config_for(&self, cell: &GridCell) -> GeneratorConfig {
        GeneratorConfig {
            amplitude: cell.amplitude,
            reduction_rate: cell.r,
            seed: cell.seed,
            ..self.base.clone()
        }
    }
}

/// Sidecar document written next to each generated series CSV: the full
/// generator config plus the hidden-path summary (anomalous segments).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSidecar {
    pub cell: GridCell,
    pub config: GeneratorConfig,
    pub segments: Vec<crate::series::AnomalySegment>,
}

/// Generates the full grid; one series per (amplitude, r, seed) triple.
pub fn generate_grid(spec: &GridSpec) -> Result<Vec<(GridCell, CountSeries, HiddenPath)>> {
    spec.validate()?;
    spec.cells()
        .into_iter()
        .map(|cell| {
            let cfg = spec.config_for(&cell);
            generate(&cfg).map(|(series, path)| (cell, series, path))
        })
        .collect()
}

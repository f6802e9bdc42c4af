//! Isolation forest over raw window vectors.
//!
//! Trees are built on subsamples with uniformly random split features and
//! values; the anomaly score is `2^(-E[h] / c(psi))` with the standard
//! average-path-length normalizer.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{uniform_index, uniform_range, StreamKey};
use crate::series::{CountSeries, ScoreSeries};

use super::window::WindowSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoForestSpec {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    /// Subsample size per tree.
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_trees() -> usize {
    100
}

fn default_subsample() -> usize {
    256
}

impl Default for IsoForestSpec {
    fn default() -> Self {
        Self {
            n_trees: default_n_trees(),
            subsample: default_subsample(),
            seed: 0,
        }
    }
}

impl IsoForestSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidConfig("need at least one tree".into()));
        }
        if self.subsample < 2 {
            return Err(Error::InvalidConfig("subsample must be at least 2".into()));
        }
        Ok(())
    }
}

enum Node {
    Leaf {
        size: usize,
    },
    Split {
        feature: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

struct Tree {
    root: Node,
}

/// Average path length of an unsuccessful binary search among `n` points.
fn avg_path_length(n: usize) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

fn build_node(
    data: &[Vec<f64>],
    sample: &mut [usize],
    depth: usize,
    max_depth: usize,
    rng: &mut ChaCha8Rng,
) -> Node {
    if depth >= max_depth || sample.len() <= 1 {
        return Node::Leaf { size: sample.len() };
    }
    let dims = data[0].len();
    // features with any spread in this node's sample
    let ranges: Vec<(usize, f64, f64)> = (0..dims)
        .filter_map(|f| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &idx in sample.iter() {
                let v = data[idx][f];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (hi > lo).then_some((f, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return Node::Leaf { size: sample.len() };
    }
    let (feature, lo, hi) = ranges[uniform_index(rng, ranges.len())];
    let value = uniform_range(rng, lo, hi);
    let split = itertools_partition(sample, |&idx| data[idx][feature] < value);
    let (left_ids, right_ids) = sample.split_at_mut(split);
    Node::Split {
        feature,
        value,
        left: Box::new(build_node(data, left_ids, depth + 1, max_depth, rng)),
        right: Box::new(build_node(data, right_ids, depth + 1, max_depth, rng)),
    }
}

/// In-place stable-order partition; returns the index of the first element
/// for which the predicate is false.
fn itertools_partition<T, F: Fn(&T) -> bool>(slice: &mut [T], pred: F) -> usize {
    let mut first_false = 0;
    for i in 0..slice.len() {
        if pred(&slice[i]) {
            slice.swap(first_false, i);
            first_false += 1;
        }
    }
    first_false
}

impl Tree {
    fn path_length(&self, v: &[f64]) -> f64 {
        let mut node = &self.root;
        let mut depth = 0.0;
        loop {
            match node {
                Node::Leaf { size } => return depth + avg_path_length(*size),
                Node::Split {
                    feature,
                    value,
                    left,
                    right,
                } => {
                    depth += 1.0;
                    node = if v[*feature] < *value { left } else { right };
                }
            }
        }
    }
}

/// A fitted forest over fixed-dimension vectors.
pub struct Forest {
    trees: Vec<Tree>,
    normalizer: f64,
}

impl Forest {
    /// Fits `spec.n_trees` trees, each on a subsample of `spec.subsample`
    /// vectors drawn without replacement.
    pub fn fit(data: &[Vec<f64>], spec: &IsoForestSpec) -> Result<Self> {
        spec.validate()?;
        if data.len() < spec.subsample {
            return Err(Error::SeriesTooShort {
                need: spec.subsample,
                got: data.len(),
            });
        }
        let mut rng = StreamKey::new(spec.seed).with_str("isolation-forest").rng();
        let max_depth = (spec.subsample as f64).log2().ceil() as usize;
        let mut indices: Vec<usize> = (0..data.len()).collect();
        let trees = (0..spec.n_trees)
            .map(|_| {
                // partial Fisher-Yates: the first `subsample` entries become
                // a uniform draw without replacement
                for i in 0..spec.subsample {
                    let j = i + uniform_index(&mut rng, data.len() - i);
                    indices.swap(i, j);
                }
                let mut sample = indices[..spec.subsample].to_vec();
                Tree {
                    root: build_node(data, &mut sample, 0, max_depth, &mut rng),
                }
            })
            .collect();
        Ok(Self {
            trees,
            normalizer: avg_path_length(spec.subsample),
        })
    }

    /// Anomaly score in (0, 1]: higher means easier to isolate.
    pub fn score(&self, v: &[f64]) -> f64 {
        let mean_path: f64 =
            self.trees.iter().map(|t| t.path_length(v)).sum::<f64>() / self.trees.len() as f64;
        2f64.powf(-mean_path / self.normalizer)
    }
}

/// Scores every window of the series against a forest fitted on all windows.
pub fn isolation_forest_score(
    series: &CountSeries,
    window: &WindowSpec,
    spec: &IsoForestSpec,
) -> Result<ScoreSeries> {
    window.validate()?;
    let w = window.width;
    if series.len() < w {
        return Err(Error::SeriesTooShort {
            need: w,
            got: series.len(),
        });
    }
    let data: Vec<Vec<f64>> = series
        .values()
        .windows(w)
        .map(|win| win.iter().map(|&v| v as f64).collect())
        .collect();
    let forest = Forest::fit(&data, spec)?;
    let tail: Vec<f64> = data.iter().map(|v| forest.score(v)).collect();
    ScoreSeries::from_tail(tail, w - 1, series.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_outlier_scores_strictly_greatest() {
        let mut data = vec![vec![3.0, 3.0, 3.0]; 255];
        data.push(vec![40.0, 41.0, 39.0]);
        let spec = IsoForestSpec {
            n_trees: 50,
            subsample: 256,
            seed: 5,
        };
        let forest = Forest::fit(&data, &spec).unwrap();
        let outlier = forest.score(&data[255]);
        let inlier = forest.score(&data[0]);
        assert!(outlier > inlier, "outlier {outlier} vs inlier {inlier}");
        assert!(data[..255].iter().all(|v| forest.score(v) < outlier));
    }

    #[test]
    fn two_points_single_tree_are_equal() {
        let data = vec![vec![0.0], vec![1.0]];
        let spec = IsoForestSpec {
            n_trees: 1,
            subsample: 2,
            seed: 1,
        };
        let forest = Forest::fit(&data, &spec).unwrap();
        // both isolated at depth 1: score = 2^(-1/c(2)) = 0.5
        assert_eq!(forest.score(&data[0]), forest.score(&data[1]));
        assert!((forest.score(&data[0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scores_lie_in_unit_interval() {
        let series = CountSeries::new((0..200).map(|t| (t % 17) as u64).collect(), 1.0).unwrap();
        let spec = IsoForestSpec {
            n_trees: 25,
            subsample: 64,
            seed: 2,
        };
        let scores = isolation_forest_score(&series, &WindowSpec::new(5), &spec).unwrap();
        assert!(scores.evaluated().iter().all(|&s| s > 0.0 && s <= 1.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let series =
            CountSeries::new((0..300).map(|t| (t * t % 23) as u64).collect(), 1.0).unwrap();
        let spec = IsoForestSpec {
            n_trees: 10,
            subsample: 32,
            seed: 11,
        };
        let a = isolation_forest_score(&series, &WindowSpec::new(4), &spec).unwrap();
        let b = isolation_forest_score(&series, &WindowSpec::new(4), &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn insufficient_windows_are_rejected() {
        let series = CountSeries::new(vec![1; 100], 1.0).unwrap();
        let spec = IsoForestSpec::default(); // subsample 256 > 96 windows
        assert!(matches!(
            isolation_forest_score(&series, &WindowSpec::new(5), &spec),
            Err(Error::SeriesTooShort { .. })
        ));
    }
}

//! Random forest of fully grown Gini trees with out-of-bag scoring.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierSpec;
use crate::dataset::Dataset;
use crate::error::{CalibError, Result};
use crate::rng::{self, StreamRng};

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Node {
    /// Split feature, or `LEAF`.
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    /// Leaf vote: majority class, ties go to the negative class.
    positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> bool {
        let mut node = &self.nodes[0];
        while node.feature != LEAF {
            let next = if x[node.feature as usize] <= node.threshold {
                node.left
            } else {
                node.right
            };
            node = &self.nodes[next as usize];
        }
        node.positive
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }
}

struct TreeBuilder<'a> {
    ds: &'a Dataset,
    mtry: usize,
    min_node: usize,
    buf: Vec<(f64, u8)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    crit: f64,
}

impl TreeBuilder<'_> {
    fn leaf(n_pos: usize, n: usize) -> Node {
        Node {
            feature: LEAF,
            threshold: 0.0,
            left: 0,
            right: 0,
            positive: 2 * n_pos > n,
        }
    }

    /// Sum over children of (pos^2 + neg^2) / size; larger means purer.
    fn best_split(&mut self, idx: &[usize], n_pos: usize, rng: &mut StreamRng) -> Option<BestSplit> {
        let n = idx.len();
        let parent = ((n_pos * n_pos + (n - n_pos) * (n - n_pos)) as f64) / n as f64;
        let mut best: Option<BestSplit> = None;
        let p = self.ds.n_features();
        for feature in index::sample(rng, p, self.mtry).iter() {
            self.buf.clear();
            self.buf
                .extend(idx.iter().map(|&i| (self.ds.value(i, feature), self.ds.label(i))));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let (mut lp, mut ln) = (0usize, 0usize);
            for k in 0..n - 1 {
                if self.buf[k].1 == 1 {
                    lp += 1;
                } else {
                    ln += 1;
                }
                let (lo, hi) = (self.buf[k].0, self.buf[k + 1].0);
                if lo == hi {
                    continue;
                }
                let nl = k + 1;
                let (rp, rn) = (n_pos - lp, (n - n_pos) - ln);
                let crit = ((lp * lp + ln * ln) as f64) / nl as f64
                    + ((rp * rp + rn * rn) as f64) / (n - nl) as f64;
                if crit > parent + 1e-12 && best.as_ref().is_none_or(|b| crit > b.crit) {
                    let mid = 0.5 * (lo + hi);
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        crit,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, mut idx: Vec<usize>, rng: &mut StreamRng) -> DecisionTree {
        let mut nodes: Vec<Node> = Vec::new();
        // (node slot, range start, range end)
        let mut stack = vec![(0usize, 0usize, idx.len())];
        nodes.push(Self::leaf(0, 0));
        while let Some((slot, lo, hi)) = stack.pop() {
            let range = &idx[lo..hi];
            let n = range.len();
            let n_pos = range.iter().filter(|&&i| self.ds.label(i) == 1).count();
            if n_pos == 0 || n_pos == n || n <= self.min_node {
                nodes[slot] = Self::leaf(n_pos, n);
                continue;
            }
            let Some(split) = self.best_split(range, n_pos, rng) else {
                nodes[slot] = Self::leaf(n_pos, n);
                continue;
            };
            // Partition the range: rows going left first.
            let range = &mut idx[lo..hi];
            let mut mid = 0;
            for k in 0..range.len() {
                if self.ds.value(range[k], split.feature) <= split.threshold {
                    range.swap(k, mid);
                    mid += 1;
                }
            }
            let left = nodes.len();
            nodes.push(Self::leaf(0, 0));
            nodes.push(Self::leaf(0, 0));
            nodes[slot] = Node {
                feature: split.feature as u32,
                threshold: split.threshold,
                left: left as u32,
                right: left as u32 + 1,
                positive: false,
            };
            stack.push((left + 1, lo + mid, hi));
            stack.push((left, lo, lo + mid));
        }
        DecisionTree { nodes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    /// Per tree, how many times each training row was drawn.
    inbag: Vec<Vec<u32>>,
    mtry: usize,
    n_features: usize,
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn mtry(&self) -> usize {
        self.mtry
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn inbag_counts(&self, tree: usize) -> &[u32] {
        &self.inbag[tree]
    }

    /// Fraction of trees voting positive.
    pub fn score(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(x)).count();
        votes as f64 / self.trees.len() as f64
    }
}

/// Out-of-bag scores: for each training row, the positive vote fraction
/// among trees whose bootstrap excluded it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobScores {
    pub scores: Vec<Option<f64>>,
    pub oob_counts: Vec<u32>,
}

impl OobScores {
    pub fn n_undefined(&self) -> usize {
        self.scores.iter().filter(|s| s.is_none()).count()
    }
}

/// Misclassification rate of the out-of-bag majority vote over rows with a
/// defined score (score > 0.5 predicts positive).
pub fn oob_error(oob: &OobScores, labels: &[u8]) -> f64 {
    let (mut wrong, mut total) = (0usize, 0usize);
    for (s, &y) in oob.scores.iter().zip(labels) {
        if let Some(s) = s {
            total += 1;
            if (*s > 0.5) != (y == 1) {
                wrong += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        wrong as f64 / total as f64
    }
}

fn default_mtry(p: usize) -> usize {
    ((p as f64).sqrt().floor() as usize).max(1)
}

/// Grow `spec.rf_ntree` trees on bootstrap resamples. Tree `t` draws from
/// its own stream derived from `(spec.seed, t)`.
pub fn fit_random_forest(ds: &Dataset, spec: &ClassifierSpec) -> Result<(RandomForest, OobScores)> {
    if !ds.has_both_classes() {
        return Err(CalibError::SingleClass);
    }
    spec.validate(ds.n_features())?;
    let n = ds.n_samples();
    let mtry = spec.rf_mtry.unwrap_or_else(|| default_mtry(ds.n_features()));
    let grown: Vec<(DecisionTree, Vec<u32>)> = (0..spec.rf_ntree)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(spec.seed, &[t as u64]);
            let mut counts = vec![0u32; n];
            let sample: Vec<usize> = (0..n)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    counts[i] += 1;
                    i
                })
                .collect();
            let mut builder = TreeBuilder {
                ds,
                mtry,
                min_node: spec.rf_min_node.max(1),
                buf: Vec::with_capacity(n),
            };
            (builder.grow(sample, &mut rng), counts)
        })
        .collect();
    let (trees, inbag): (Vec<_>, Vec<_>) = grown.into_iter().unzip();

    let mut votes = vec![0u32; n];
    let mut oob_counts = vec![0u32; n];
    for (tree, counts) in trees.iter().zip(&inbag) {
        for i in (0..n).filter(|&i| counts[i] == 0) {
            oob_counts[i] += 1;
            votes[i] += u32::from(tree.predict(ds.row(i)));
        }
    }
    let scores = votes
        .iter()
        .zip(&oob_counts)
        .map(|(&v, &c)| (c > 0).then(|| f64::from(v) / f64::from(c)))
        .collect();
    let forest = RandomForest {
        trees,
        inbag,
        mtry,
        n_features: ds.n_features(),
    };
    Ok((forest, OobScores { scores, oob_counts }))
}

/// Hill-climb on mtry by steps of two, scored by out-of-bag error. Starts at
/// floor(sqrt(p)), looks one step down and up, then keeps stepping in the
/// improving direction while the error strictly decreases. Ties resolve to
/// the smaller mtry.
pub fn tune_mtry(ds: &Dataset, spec: &ClassifierSpec) -> Result<usize> {
    Ok(tune_mtry_with_forest(ds, spec)?.0)
}

pub(crate) fn tune_mtry_with_forest(
    ds: &Dataset,
    spec: &ClassifierSpec,
) -> Result<(usize, RandomForest, OobScores)> {
    let p = ds.n_features();
    let start = default_mtry(p);
    let fit = |m: usize| -> Result<(f64, RandomForest, OobScores)> {
        let (forest, oob) = fit_random_forest(
            ds,
            &ClassifierSpec {
                rf_mtry: Some(m),
                ..spec.clone()
            },
        )?;
        Ok((oob_error(&oob, ds.labels()), forest, oob))
    };

    let mut explored: Vec<(usize, f64)> = Vec::new();
    let mut best: Option<(usize, f64, RandomForest, OobScores)> = None;
    let visit = |m: usize,
                     explored: &mut Vec<(usize, f64)>,
                     best: &mut Option<(usize, f64, RandomForest, OobScores)>|
     -> Result<f64> {
        let (err, forest, oob) = fit(m)?;
        explored.push((m, err));
        let better = match best {
            None => true,
            Some((bm, be, _, _)) => err < *be || (err == *be && m < *bm),
        };
        if better {
            *best = Some((m, err, forest, oob));
        }
        Ok(err)
    };

    let start_err = visit(start, &mut explored, &mut best)?;
    if p >= 3 {
        let down = (start > 1).then(|| start.saturating_sub(2).max(1));
        let up = (start < p).then(|| (start + 2).min(p));
        let down_err = down.map(|m| visit(m, &mut explored, &mut best)).transpose()?;
        let up_err = up.map(|m| visit(m, &mut explored, &mut best)).transpose()?;

        // Direction of the best neighbour, if it beats (or ties below) start.
        let go_down = matches!(down_err, Some(e) if e <= start_err && up_err.is_none_or(|u| e <= u));
        let go_up = !go_down && matches!(up_err, Some(e) if e < start_err);
        if go_down || go_up {
            let (mut cur, mut cur_err) = if go_down {
                (down.unwrap(), down_err.unwrap())
            } else {
                (up.unwrap(), up_err.unwrap())
            };
            loop {
                let next = if go_down {
                    if cur == 1 {
                        break;
                    }
                    cur.saturating_sub(2).max(1)
                } else {
                    if cur == p {
                        break;
                    }
                    (cur + 2).min(p)
                };
                let e = visit(next, &mut explored, &mut best)?;
                if e < cur_err {
                    cur = next;
                    cur_err = e;
                } else {
                    break;
                }
            }
        }
    }
    let (m, _, forest, oob) = best.expect("start value always evaluated");
    Ok((m, forest, oob))
}

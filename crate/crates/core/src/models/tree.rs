use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Gini impurity of a node holding `pos` and `neg` (weighted) samples.
pub fn gini(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    let q = neg / total;
    1.0 - p * p - q * q
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    /// `None` grows until every leaf is pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        label: u8,
        positive_fraction: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Axis-aligned binary tree; a row goes left when `x[feature] <= threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    depth: usize,
}

/// `(value, row)` pairs of every column sorted by value, ties by row index.
#[derive(Clone, Debug)]
pub struct SortedColumns {
    orders: Vec<Vec<(f64, usize)>>,
}

impl SortedColumns {
    pub fn new(x: &Matrix) -> Self {
        let orders = (0..x.cols())
            .map(|f| {
                let mut col: Vec<(f64, usize)> = (0..x.rows()).map(|i| (x.get(i, f), i)).collect();
                col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                col
            })
            .collect();
        SortedColumns { orders }
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    w: &'a [f64],
    cfg: &'a TreeConfig,
    nodes: Vec<Node>,
    depth: usize,
    /// Column orders; a node owns the same index range in every column.
    orders: Vec<Vec<(f64, usize)>>,
    goes_left: Vec<bool>,
    scratch: Vec<(f64, usize)>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn class_weights(&self, idx: &[(f64, usize)]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(p, n), &(_, i)| {
            if self.y[i] == 1 {
                (p + self.w[i], n)
            } else {
                (p, n + self.w[i])
            }
        })
    }

    /// Split with the largest weighted Gini decrease. Zero-gain splits are
    /// accepted so impure nodes keep splitting (XOR needs this at the root).
    /// Ties go to the lower feature, then the lower threshold.
    ///
    /// Candidates are compared by `Σ_children (p² + n²) / (p + n)`, which
    /// orders splits exactly as the impurity decrease does.
    fn best_split(&self, range: (usize, usize), wp: f64, wn: f64) -> Option<SplitChoice> {
        let mut best: Option<(f64, SplitChoice)> = None;
        for (f, column) in self.orders.iter().enumerate().take(self.x.cols()) {
            let (mut lp, mut ln) = (0.0, 0.0);
            for pair in column[range.0..range.1].windows(2) {
                let ((lo, i), (hi, _)) = (pair[0], pair[1]);
                if self.y[i] == 1 {
                    lp += self.w[i];
                } else {
                    ln += self.w[i];
                }
                if lo == hi {
                    continue;
                }
                let (rp, rn) = (wp - lp, wn - ln);
                let purity = (lp * lp + ln * ln) / (lp + ln) + (rp * rp + rn * rn) / (rp + rn);
                if best.as_ref().is_none_or(|(d, _)| purity > *d) {
                    let mid = 0.5 * (lo + hi);
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((purity, SplitChoice { feature: f, threshold }));
                }
            }
        }
        best.map(|(_, s)| s)
    }

    /// Stable in-place partition of `range` in every column; returns the
    /// end of the left part.
    fn partition(&mut self, (start, end): (usize, usize)) -> usize {
        let mut mid = start;
        for column in &mut self.orders {
            self.scratch.clear();
            let mut write = start;
            for read in start..end {
                let item = column[read];
                if self.goes_left[item.1] {
                    column[write] = item;
                    write += 1;
                } else {
                    self.scratch.push(item);
                }
            }
            column[write..end].copy_from_slice(&self.scratch);
            mid = write;
        }
        mid
    }

    /// `orders[f][start..end]` holds this node's rows sorted by feature `f`.
    fn grow(&mut self, range: (usize, usize), depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let idx = &self.orders[0][range.0..range.1];
        let (wp, wn) = self.class_weights(idx);
        let first = self.y[idx[0].1];
        let pure = idx.iter().all(|&(_, i)| self.y[i] == first);
        let leaf = Node::Leaf {
            label: u8::from(wp > wn),
            positive_fraction: if wp + wn > 0.0 { wp / (wp + wn) } else { 0.0 },
        };
        let at_limit = self.cfg.max_depth.is_some_and(|d| depth >= d);
        let split = if pure || at_limit || idx.len() < self.cfg.min_samples_split {
            None
        } else {
            self.best_split(range, wp, wn)
        };
        let Some(split) = split else {
            self.nodes.push(leaf);
            return self.nodes.len() - 1;
        };
        let at = self.nodes.len();
        self.nodes.push(leaf);
        for k in range.0..range.1 {
            let i = self.orders[0][k].1;
            self.goes_left[i] = self.x.get(i, split.feature) <= split.threshold;
        }
        let mid = self.partition(range);
        let l = self.grow((range.0, mid), depth + 1);
        let r = self.grow((mid, range.1), depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        at
    }
}

impl TreeConfig {
    pub fn fit(&self, x: &Matrix, y: &[u8]) -> Result<DecisionTree> {
        let w = vec![1.0 / y.len().max(1) as f64; y.len()];
        self.fit_weighted(x, y, &w)
    }

    pub fn fit_weighted(&self, x: &Matrix, y: &[u8], w: &[f64]) -> Result<DecisionTree> {
        self.fit_presorted(x, y, w, &SortedColumns::new(x))
    }

    /// Like `fit_weighted`, reusing column orders computed for `x`.
    pub fn fit_presorted(&self, x: &Matrix, y: &[u8], w: &[f64], sorted: &SortedColumns) -> Result<DecisionTree> {
        if x.rows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if x.rows() != y.len() || y.len() != w.len() {
            return Err(Error::LengthMismatch {
                left: x.rows(),
                right: y.len().min(w.len()),
            });
        }
        if sorted.orders.len() != x.cols() || sorted.orders.iter().any(|o| o.len() != x.rows()) {
            return Err(Error::DimensionMismatch {
                expected: x.cols(),
                actual: sorted.orders.len(),
            });
        }
        let orders = if x.cols() == 0 {
            vec![(0..x.rows()).map(|i| (0.0, i)).collect()]
        } else {
            sorted.orders.clone()
        };
        let mut b = Builder {
            x,
            y,
            w,
            cfg: self,
            nodes: Vec::new(),
            depth: 0,
            orders,
            goes_left: vec![false; x.rows()],
            scratch: Vec::with_capacity(x.rows()),
        };
        b.grow((0, x.rows()), 0);
        Ok(DecisionTree {
            nodes: b.nodes,
            depth: b.depth,
        })
    }
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    fn leaf(&self, x: &[f64]) -> (u8, f64) {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf {
                    label,
                    positive_fraction,
                } => return (label, positive_fraction),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Weighted share of positives in the leaf reached by `x`.
    pub fn leaf_fraction(&self, x: &[f64]) -> f64 {
        self.leaf(x).1
    }
}

impl Classifier for DecisionTree {
    /// Hard label of the reached leaf.
    fn predict_proba(&self, x: &[f64]) -> f64 {
        f64::from(self.leaf(x).0)
    }
}

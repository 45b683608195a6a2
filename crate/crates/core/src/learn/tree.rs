//! Weighted CART for binary labels.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    /// Impurity of a node holding weights `w0` (human) and `w1` (bot).
    fn impurity(self, w0: f64, w1: f64) -> f64 {
        let total = w0 + w1;
        if total <= 0.0 {
            return 0.0;
        }
        let (p0, p1) = (w0 / total, w1 / total);
        match self {
            Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
            Criterion::Entropy => [p0, p1].iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features drawn per split; `None` considers all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        class: u8,
    },
    /// Rows with `x[feature] <= threshold` go left. The threshold is the
    /// largest training value on the left, so any strictly increasing
    /// transform of a column yields the same partition of new data.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    /// Unnormalized weighted impurity decrease per feature.
    decrease: Vec<f64>,
}

struct Builder<'a, R> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    w: &'a [f64],
    params: &'a TreeParams,
    n_features: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
    decrease: Vec<f64>,
}

fn class_weights(idx: &[usize], y: &[u8], w: &[f64]) -> (f64, f64) {
    idx.iter().fold((0.0, 0.0), |(a, b), &i| if y[i] == 1 { (a, b + w[i]) } else { (a + w[i], b) })
}

fn majority(w0: f64, w1: f64) -> u8 {
    u8::from(w1 > w0)
}

impl<R: Rng> Builder<'_, R> {
    fn leaf(&mut self, w0: f64, w1: f64) -> usize {
        self.nodes.push(Node::Leaf { class: majority(w0, w1) });
        self.nodes.len() - 1
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let (w0, w1) = class_weights(idx, self.y, self.w);
        let stop = w0 <= 0.0
            || w1 <= 0.0
            || idx.len() < self.params.min_samples_split.max(2)
            || self.params.max_depth.is_some_and(|d| depth >= d);
        if stop {
            return self.leaf(w0, w1);
        }
        let Some((feature, threshold, gain)) = self.best_split(idx, w0, w1) else {
            return self.leaf(w0, w1);
        };
        self.decrease[feature] += gain;
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { class: 0 });
        let x = self.x;
        let mid = partition(idx, |&i| x[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match self.params.max_features {
            Some(k) if k < self.n_features => {
                let mut f = sample(self.rng, self.n_features, k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.n_features).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], w0: f64, w1: f64) -> Option<(usize, f64, f64)> {
        let crit = self.params.criterion;
        let total = w0 + w1;
        let parent = total * crit.impurity(w0, w1);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for f in self.candidate_features() {
            let x = self.x;
            order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
            let (mut l0, mut l1) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                if self.y[i] == 1 {
                    l1 += self.w[i];
                } else {
                    l0 += self.w[i];
                }
                let (v, next) = (x[i][f], x[order[k + 1]][f]);
                if v == next {
                    continue;
                }
                let (r0, r1) = (w0 - l0, w1 - l1);
                let child = (l0 + l1) * crit.impurity(l0, l1) + (r0 + r1).max(0.0) * crit.impurity(r0.max(0.0), r1.max(0.0));
                let gain = parent - child;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((f, v, gain));
                }
            }
        }
        best
    }
}

fn partition<T, F: Fn(&T) -> bool>(v: &mut [T], pred: F) -> usize {
    let mut k = 0;
    for i in 0..v.len() {
        if pred(&v[i]) {
            v.swap(i, k);
            k += 1;
        }
    }
    k
}

impl DecisionTree {
    /// Fit on the rows listed in `rows` (repeats allowed) with per-row
    /// weights `w` indexed like `x`.
    pub fn fit<R: Rng>(x: &[Vec<f64>], y: &[u8], w: &[f64], rows: &[usize], params: &TreeParams, rng: &mut R) -> Self {
        let n_features = x.first().map_or(0, Vec::len);
        let mut b = Builder {
            x,
            y,
            w,
            params,
            n_features,
            rng,
            nodes: Vec::new(),
            decrease: vec![0.0; n_features],
        };
        let mut idx = rows.to_vec();
        if idx.is_empty() {
            b.leaf(1.0, 0.0);
        } else {
            b.grow(&mut idx, 0);
        }
        DecisionTree {
            nodes: b.nodes,
            decrease: b.decrease,
        }
    }

    pub fn predict_one(&self, row: &[f64]) -> u8 {
        let mut n = 0;
        loop {
            match &self.nodes[n] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => n = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<u8> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    /// Impurity decrease per feature, scaled to sum to 1 (all zero for a
    /// single leaf).
    pub fn importances(&self) -> Vec<f64> {
        super::normalize(self.decrease.clone())
    }

    /// Feature of the root split, if the tree split at all.
    pub fn root_feature(&self) -> Option<usize> {
        match self.nodes.first() {
            Some(Node::Split { feature, .. }) => Some(*feature),
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], n: usize) -> usize {
            match &nodes[n] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn fit(x: &[Vec<f64>], y: &[u8], params: &TreeParams) -> DecisionTree {
        let w = vec![1.0; y.len()];
        let rows: Vec<usize> = (0..y.len()).collect();
        DecisionTree::fit(x, y, &w, &rows, params, &mut seed::rng(0))
    }

    #[test]
    fn separable_single_feature() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 12)).collect();
        for c in [Criterion::Gini, Criterion::Entropy] {
            let t = fit(&x, &y, &TreeParams { criterion: c, ..TreeParams::default() });
            assert_eq!(t.predict(&x), y);
            assert_eq!(t.importances(), vec![1.0, 0.0]);
            assert_eq!(t.depth(), 1);
            // threshold is the largest left training value
            assert_eq!(t.predict_one(&[11.0, 0.0]), 0);
            assert_eq!(t.predict_one(&[11.5, 0.0]), 1);
        }
    }

    #[test]
    fn single_class_is_constant() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let t = fit(&x, &[1; 6], &TreeParams::default());
        assert_eq!(t.predict(&[vec![-100.0], vec![100.0]]), vec![1, 1]);
        assert_eq!(t.importances(), vec![0.0]);
    }

    #[test]
    fn depth_limit_and_weights() {
        // xor needs two levels
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 1, 1, 0];
        let shallow = fit(&x, &y, &TreeParams { max_depth: Some(1), ..TreeParams::default() });
        assert!(shallow.depth() <= 1);

        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![0, 1, 1];
        let w = vec![10.0, 1.0, 1.0];
        let t = DecisionTree::fit(&x, &y, &w, &[0, 1, 2], &TreeParams { max_depth: Some(0), ..TreeParams::default() }, &mut seed::rng(0));
        assert_eq!(t.predict_one(&[2.0]), 0);
    }

    #[test]
    fn impurity_values() {
        assert_eq!(Criterion::Gini.impurity(1.0, 1.0), 0.5);
        assert_eq!(Criterion::Entropy.impurity(1.0, 1.0), 1.0);
        assert_eq!(Criterion::Entropy.impurity(3.0, 0.0), 0.0);
    }
}

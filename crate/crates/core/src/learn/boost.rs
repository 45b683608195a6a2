//! Two-class SAMME boosting over depth-one trees.

use super::tree::{Criterion, DecisionTree, TreeParams};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoost {
    stumps: Vec<(DecisionTree, f64)>,
    n_features: usize,
}

impl AdaBoost {
    pub fn fit(x: &[Vec<f64>], y: &[u8], rounds: usize, seed: u64) -> Self {
        let n = y.len();
        let n_features = x.first().map_or(0, Vec::len);
        let params = TreeParams {
            criterion: Criterion::Gini,
            max_depth: Some(1),
            ..TreeParams::default()
        };
        let rows: Vec<usize> = (0..n).collect();
        let mut w = vec![1.0 / n.max(1) as f64; n];
        let mut rng = seed::rng(seed);
        let mut stumps = Vec::new();
        for _ in 0..rounds {
            let stump = DecisionTree::fit(x, y, &w, &rows, &params, &mut rng);
            let miss: Vec<bool> = x.iter().zip(y).map(|(r, &c)| stump.predict_one(r) != c).collect();
            let total: f64 = w.iter().sum();
            let err = w.iter().zip(&miss).filter(|(_, &m)| m).map(|(w, _)| w).sum::<f64>() / total;
            if err <= 0.0 {
                stumps.push((stump, 1.0));
                break;
            }
            if err >= 0.5 {
                if stumps.is_empty() {
                    stumps.push((stump, 1.0));
                }
                break;
            }
            let alpha = ((1.0 - err) / err).ln();
            for (wi, &m) in w.iter_mut().zip(&miss) {
                if m {
                    *wi *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= s);
            stumps.push((stump, alpha));
        }
        AdaBoost { stumps, n_features }
    }

    pub fn predict_one(&self, row: &[f64]) -> u8 {
        let score: f64 = self
            .stumps
            .iter()
            .map(|(s, a)| if s.predict_one(row) == 1 { *a } else { -*a })
            .sum();
        u8::from(score > 0.0)
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<u8> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    /// Stump weight mass per split feature, scaled to sum to 1.
    pub fn importances(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features];
        for (s, a) in &self.stumps {
            if let Some(f) = s.root_feature() {
                acc[f] += a;
            }
        }
        super::normalize(acc)
    }

    pub fn rounds(&self) -> usize {
        self.stumps.len()
    }
}

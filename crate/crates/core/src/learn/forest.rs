//! Bagged CART with per-split feature subsampling.

use rand::Rng;
use rayon::prelude::*;

use super::tree::{DecisionTree, TreeParams};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_features: usize,
}

impl RandomForest {
    /// `params.max_features` defaults to `floor(sqrt(p))` when unset.
    pub fn fit(x: &[Vec<f64>], y: &[u8], n_trees: usize, params: &TreeParams, seed: u64) -> Self {
        let n = y.len();
        let n_features = x.first().map_or(0, Vec::len);
        let mut params = params.clone();
        if params.max_features.is_none() {
            params.max_features = Some(((n_features as f64).sqrt() as usize).max(1));
        }
        let w = vec![1.0; n];
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive_index(seed, t as u64));
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::fit(x, y, &w, &rows, &params, &mut rng)
            })
            .collect();
        RandomForest { trees, n_features }
    }

    /// Majority vote; an even split goes to the human class.
    pub fn predict_one(&self, row: &[f64]) -> u8 {
        let bots = self.trees.iter().filter(|t| t.predict_one(row) == 1).count();
        u8::from(2 * bots > self.trees.len())
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<u8> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    /// Mean of the per-tree normalized importances, renormalized.
    pub fn importances(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(t.importances()) {
                *a += v;
            }
        }
        super::normalize(acc)
    }
}

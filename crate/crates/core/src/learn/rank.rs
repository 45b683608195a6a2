//! Dowdall (reciprocal-rank Borda) aggregation of importance vectors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DowdallRanking {
    /// Summed `1/rank` per feature.
    pub points: Vec<f64>,
    /// Final 1-based rank per feature.
    pub ranks: Vec<usize>,
    /// Feature indices from first to last.
    pub order: Vec<usize>,
}

/// Indices sorted by value descending, ties by index ascending.
fn order_desc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Each model ranks the features by importance (ties broken by lower index)
/// and gives `1/rank` points; features are ordered by total points.
pub fn dowdall_rank(importances: &[Vec<f64>]) -> DowdallRanking {
    let n = importances.first().map_or(0, Vec::len);
    let mut points = vec![0.0; n];
    if importances.is_empty() {
        return DowdallRanking {
            points,
            ranks: Vec::new(),
            order: Vec::new(),
        };
    }
    for v in importances {
        assert_eq!(v.len(), n, "importance vectors differ in length");
        for (r, &i) in order_desc(v).iter().enumerate() {
            points[i] += 1.0 / (r + 1) as f64;
        }
    }
    let order = order_desc(&points);
    let mut ranks = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    DowdallRanking { points, ranks, order }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dowdall_examples() {
        let r = dowdall_rank(&[vec![0.5, 0.3, 0.2]]);
        assert_eq!(r.points, vec![1.0, 0.5, 1.0 / 3.0]);
        assert_eq!(r.ranks, vec![1, 2, 3]);

        let r = dowdall_rank(&[vec![0.7, 0.3], vec![0.3, 0.7]]);
        assert_eq!(r.points, vec![1.5, 1.5]);
        assert_eq!(r.order, vec![0, 1]);

        let top = vec![vec![0.9, 0.1, 0.0]; 6];
        assert_eq!(dowdall_rank(&top).points[0], 6.0);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let r = dowdall_rank(&[vec![0.25; 4]]);
        assert_eq!(r.ranks, vec![1, 2, 3, 4]);
    }

    #[test]
    fn no_models_means_no_ranking() {
        let r = dowdall_rank(&[]);
        assert!(r.points.is_empty() && r.ranks.is_empty());
    }
}

//! Nested cross-validation: grid search on inner folds, scoring on outer
//! folds.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dowdall_rank, metrics, normalize, Estimator, FeatureMatrix, Metrics, Params};
use crate::{seed, Error, Result};

pub const FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_rows: usize,
    pub selected_params: Params,
    /// Mean inner-fold F1 of the selected cell.
    pub inner_f1: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    /// Means over the outer folds, in percent.
    pub metrics: Metrics,
    pub folds: Vec<FoldResult>,
    /// Mean of the outer-fold importance vectors, aligned with `features`.
    pub importances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub features: Vec<String>,
    pub seed: u64,
    pub models: Vec<ModelReport>,
    /// Dowdall points per feature, aligned with `features`.
    pub dowdall_points: Vec<f64>,
    /// Final 1-based rank per feature, aligned with `features`.
    pub ranks: Vec<usize>,
    /// Feature names from first to last rank.
    pub ranking: Vec<String>,
}

impl EvalReport {
    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.name == name)
    }
}

/// Shuffle once, then deal each class round-robin into `k` folds so every
/// fold gets a near-equal share of both labels. Returns the row indices of
/// each fold, sorted.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [1u8, 0] {
        for &i in order.iter().filter(|&&i| labels[i] == class) {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in fold {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

/// Index and mean inner F1 of the best grid cell over stratified folds of
/// `train`; the first cell wins ties.
fn select_cell<E: Estimator>(train: &FeatureMatrix, spec: &E, grid: &[Params], seed: u64, tag: &str) -> Result<(usize, f64)> {
    let inner = stratified_folds(&train.labels, FOLDS, seed::derive(seed, &format!("inner/{tag}")));
    let splits: Vec<(FeatureMatrix, FeatureMatrix)> = inner
        .iter()
        .map(|f| (train.select_rows(&complement(train.n_rows(), f)), train.select_rows(f)))
        .collect();

    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|c| (0..splits.len()).map(move |i| (c, i))).collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, i)| {
            let (tr, te) = &splits[i];
            let s = seed::derive(seed, &format!("{}/{tag}/{c}/{i}", spec.name()));
            let fit = spec.fit_predict(&grid[c], tr, te, s)?;
            Ok(metrics(&fit.predictions, &te.labels).f1)
        })
        .collect::<Result<_>>()?;

    let mut best = (0usize, f64::NEG_INFINITY);
    for c in 0..grid.len() {
        let f1 = scores[c * splits.len()..(c + 1) * splits.len()].iter().sum::<f64>() / splits.len() as f64;
        if f1 > best.1 {
            best = (c, f1);
        }
    }
    Ok(best)
}

/// Pick hyperparameters by five-fold grid search on the whole matrix.
/// Returns the chosen cell and its mean F1.
pub fn grid_search<E: Estimator>(matrix: &FeatureMatrix, spec: &E, seed: u64) -> Result<(Params, f64)> {
    let grid = spec.grid();
    if grid.is_empty() {
        return Err(Error::Config(format!("{} has an empty grid", spec.name())));
    }
    let (c, f1) = select_cell(matrix, spec, &grid, seed, "full")?;
    Ok((grid[c].clone(), f1))
}

struct OuterFit {
    result: FoldResult,
    importances: Vec<f64>,
}

fn run_outer<E: Estimator>(
    matrix: &FeatureMatrix,
    spec: &E,
    grid: &[Params],
    folds: &[Vec<usize>],
    outer: usize,
    seed: u64,
) -> Result<OuterFit> {
    let train_idx = complement(matrix.n_rows(), &folds[outer]);
    let train = matrix.select_rows(&train_idx);
    let test = matrix.select_rows(&folds[outer]);
    let best = select_cell(&train, spec, grid, seed, &format!("{outer}"))?;
    let params = &grid[best.0];
    let s = seed::derive(seed, &format!("{}/{outer}/refit", spec.name()));
    let fit = spec.fit_predict(params, &train, &test, s)?;
    if fit.predictions.len() != test.n_rows() || fit.importances.len() != matrix.n_features() {
        return Err(Error::Contract(format!("{} returned mis-sized output", spec.name())));
    }
    Ok(OuterFit {
        result: FoldResult {
            fold: outer,
            test_rows: test.n_rows(),
            selected_params: params.clone(),
            inner_f1: best.1,
            metrics: metrics(&fit.predictions, &test.labels),
        },
        importances: fit.importances,
    })
}

/// Five outer folds; within each, every grid cell is scored by mean F1 over
/// five inner folds of the training part (first cell wins ties), refit on
/// the full training part and scored on the held-out fold.
pub fn nested_cv<E: Estimator>(matrix: &FeatureMatrix, specs: &[E], seed: u64) -> Result<EvalReport> {
    let n_features = matrix.n_features();
    let mut report = EvalReport {
        features: matrix.names.clone(),
        seed,
        models: Vec::new(),
        dowdall_points: Vec::new(),
        ranks: Vec::new(),
        ranking: Vec::new(),
    };
    if specs.is_empty() {
        return Ok(report);
    }
    let bots = matrix.labels.iter().filter(|&&l| l == 1).count();
    let humans = matrix.n_rows() - bots;
    if matrix.n_rows() < 2 * FOLDS || bots < FOLDS || humans < FOLDS {
        return Err(Error::Validation(format!(
            "nested cross-validation needs at least {FOLDS} rows of each class, got {bots} bot and {humans} human"
        )));
    }
    let folds = stratified_folds(&matrix.labels, FOLDS, seed::derive(seed, "outer"));

    for spec in specs {
        let grid = spec.grid();
        if grid.is_empty() {
            return Err(Error::Config(format!("{} has an empty grid", spec.name())));
        }
        let fits: Vec<OuterFit> = (0..FOLDS)
            .into_par_iter()
            .map(|outer| run_outer(matrix, spec, &grid, &folds, outer, seed))
            .collect::<Result<_>>()?;
        let mut imp = vec![0.0; n_features];
        for f in &fits {
            for (a, v) in imp.iter_mut().zip(&f.importances) {
                *a += v;
            }
        }
        let all: Vec<Metrics> = fits.iter().map(|f| f.result.metrics).collect();
        report.models.push(ModelReport {
            name: spec.name().to_string(),
            metrics: Metrics::mean(&all),
            folds: fits.into_iter().map(|f| f.result).collect(),
            importances: normalize(imp),
        });
    }

    let vectors: Vec<Vec<f64>> = report.models.iter().map(|m| m.importances.clone()).collect();
    let ranking = dowdall_rank(&vectors);
    report.ranking = ranking.order.iter().map(|&i| report.features[i].clone()).collect();
    report.dowdall_points = ranking.points;
    report.ranks = ranking.ranks;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified_and_partition() {
        let labels: Vec<u8> = (0..53).map(|i| u8::from(i % 4 == 0)).collect();
        let folds = stratified_folds(&labels, 5, 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
        for f in &folds {
            assert!((10..=11).contains(&f.len()));
            let bots = f.iter().filter(|&&i| labels[i] == 1).count();
            assert!((2..=3).contains(&bots));
        }
        assert_eq!(folds, stratified_folds(&labels, 5, 1));
    }
}

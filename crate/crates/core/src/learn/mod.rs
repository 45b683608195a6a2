//! Feature matrices, classifiers, nested cross-validation and feature
//! ranking.

mod boost;
mod cv;
mod forest;
mod rank;
mod tree;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

pub use boost::AdaBoost;
pub use cv::{grid_search, nested_cv, stratified_folds, EvalReport, FoldResult, ModelReport};
pub use forest::RandomForest;
pub use rank::{dowdall_rank, DowdallRanking};
pub use tree::{Criterion, DecisionTree, TreeParams};

/// Name of the trailing label column in feature CSVs.
pub const LABEL_COLUMN: &str = "label";

pub(crate) fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

/// Accounts by features, with bot = 1 and human = 0 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Validation(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != names.len() {
                return Err(Error::Validation(format!("row {i} has {} values, expected {}", r.len(), names.len())));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("row {i} column {:?} is not finite", names[j])));
            }
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Validation(format!("label {l} is not 0 or 1")));
        }
        Ok(FeatureMatrix { names, rows, labels })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Keep the named columns, in the order given.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|c| c == n.as_ref())
                    .ok_or_else(|| Error::Config(format!("no feature column named {:?}", n.as_ref())))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
            labels: self.labels.clone(),
        })
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[j])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.names.iter().map(String::as_str).chain([LABEL_COLUMN]))?;
        for (r, l) in self.rows.iter().zip(&self.labels) {
            out.write_record(r.iter().map(|v| v.to_string()).chain([l.to_string()]))?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let n = header.len();
        if n == 0 || &header[n - 1] != LABEL_COLUMN {
            return Err(Error::Validation(format!("last column must be {LABEL_COLUMN:?}")));
        }
        let names: Vec<String> = header.iter().take(n - 1).map(String::from).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: line + 2,
                    message: format!("{s:?}: {e}"),
                })
            };
            let vals: Vec<f64> = rec.iter().take(n - 1).map(parse).collect::<Result<_>>()?;
            let label = match &rec[n - 1] {
                "1" => 1,
                "0" => 0,
                other => {
                    return Err(Error::Parse {
                        line: line + 2,
                        message: format!("label {other:?} is not 0 or 1"),
                    })
                }
            };
            rows.push(vals);
            labels.push(label);
        }
        FeatureMatrix::new(names, rows, labels)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Accuracy, precision, recall and F1 in percent, bot as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn mean(all: &[Metrics]) -> Metrics {
        if all.is_empty() {
            return Metrics::default();
        }
        let n = all.len() as f64;
        let sum = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        Metrics {
            accuracy: sum(|m| m.accuracy),
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            f1: sum(|m| m.f1),
        }
    }
}

pub fn metrics(predictions: &[u8], labels: &[u8]) -> Metrics {
    assert_eq!(predictions.len(), labels.len(), "prediction and label lengths differ");
    let (mut tp, mut fp, mut fnn, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p == 1, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fnn += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fnn);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        accuracy: 100.0 * ratio(tp + tn, tp + fp + fnn + tn),
        precision: 100.0 * precision,
        recall: 100.0 * recall,
        f1: 100.0 * f1,
    }
}

/// Cohen's kappa in percent for a 2x2 agreement table
/// `[[both yes, a yes b no], [a no b yes, both no]]`.
pub fn cohens_kappa(table: [[u64; 2]; 2]) -> f64 {
    let n = table.iter().flatten().sum::<u64>() as f64;
    assert!(n > 0.0, "empty contingency table");
    let po = (table[0][0] + table[1][1]) as f64 / n;
    let row = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let col = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let pe = (row[0] * col[0] + row[1] * col[1]) as f64 / (n * n);
    if pe >= 1.0 {
        return if po >= 1.0 { 100.0 } else { 0.0 };
    }
    100.0 * (po - pe) / (1.0 - pe)
}

/// One grid cell. `None` means "unbounded" for depth-like settings.
pub type Params = BTreeMap<String, Option<u64>>;

/// Every combination of a grid, keys in sorted order and values in the
/// order listed.
pub fn expand_grid(grid: &BTreeMap<String, Vec<Option<u64>>>) -> Vec<Params> {
    let mut cells = vec![Params::new()];
    for (k, values) in grid {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.insert(k.clone(), *v);
                    c
                })
            })
            .collect();
    }
    cells
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub predictions: Vec<u8>,
    pub importances: Vec<f64>,
}

/// A classifier that nested cross-validation can tune and score.
pub trait Estimator: Sync {
    fn name(&self) -> &str;
    fn grid(&self) -> Vec<Params>;
    fn fit_predict(&self, params: &Params, train: &FeatureMatrix, test: &FeatureMatrix, seed: u64) -> Result<Fitted>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForestGini,
    RandomForestEntropy,
    Adaboost,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::DecisionTree,
        ModelKind::RandomForestGini,
        ModelKind::RandomForestEntropy,
        ModelKind::Adaboost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForestGini => "random_forest_gini",
            ModelKind::RandomForestEntropy => "random_forest_entropy",
            ModelKind::Adaboost => "adaboost",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
    }

    pub fn default_grid(self) -> BTreeMap<String, Vec<Option<u64>>> {
        let depth = ("max_depth".to_string(), vec![None, Some(8), Some(16)]);
        match self {
            ModelKind::DecisionTree => BTreeMap::from([depth]),
            ModelKind::RandomForestGini | ModelKind::RandomForestEntropy => {
                BTreeMap::from([depth, ("n_estimators".to_string(), vec![Some(100), Some(200)])])
            }
            ModelKind::Adaboost => BTreeMap::from([("n_estimators".to_string(), vec![Some(50), Some(100), Some(200)])]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub grid: BTreeMap<String, Vec<Option<u64>>>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        ModelSpec {
            kind,
            grid: kind.default_grid(),
            seed,
        }
    }
}

fn count_param(params: &Params, key: &str, default: u64) -> Result<usize> {
    match params.get(key) {
        None => Ok(default as usize),
        Some(Some(v)) if *v > 0 => Ok(*v as usize),
        Some(v) => Err(Error::Config(format!("{key} must be a positive integer, got {v:?}"))),
    }
}

impl Estimator for ModelSpec {
    fn name(&self) -> &str {
        self.kind.as_str()
    }

    fn grid(&self) -> Vec<Params> {
        expand_grid(&self.grid)
    }

    fn fit_predict(&self, params: &Params, train: &FeatureMatrix, test: &FeatureMatrix, seed: u64) -> Result<Fitted> {
        if train.n_features() != test.n_features() {
            return Err(Error::Contract("train and test columns differ".into()));
        }
        let seed = seed::derive_index(seed, self.seed);
        let max_depth = params.get("max_depth").copied().flatten().map(|d| d as usize);
        let tree_params = |criterion| TreeParams {
            criterion,
            max_depth,
            ..TreeParams::default()
        };
        let (predictions, importances) = match self.kind {
            ModelKind::DecisionTree => {
                let w = vec![1.0; train.n_rows()];
                let rows: Vec<usize> = (0..train.n_rows()).collect();
                let t = DecisionTree::fit(
                    &train.rows,
                    &train.labels,
                    &w,
                    &rows,
                    &tree_params(Criterion::Gini),
                    &mut seed::rng(seed),
                );
                (t.predict(&test.rows), t.importances())
            }
            ModelKind::RandomForestGini | ModelKind::RandomForestEntropy => {
                let c = if self.kind == ModelKind::RandomForestGini {
                    Criterion::Gini
                } else {
                    Criterion::Entropy
                };
                let n = count_param(params, "n_estimators", 100)?;
                let f = RandomForest::fit(&train.rows, &train.labels, n, &tree_params(c), seed);
                (f.predict(&test.rows), f.importances())
            }
            ModelKind::Adaboost => {
                let n = count_param(params, "n_estimators", 50)?;
                let b = AdaBoost::fit(&train.rows, &train.labels, n, seed);
                (b.predict(&test.rows), b.importances())
            }
        };
        Ok(Fitted {
            predictions,
            importances,
        })
    }
}

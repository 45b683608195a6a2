//! Batch workflow: corpus to feature matrix, feature matrix to evaluation
//! report and histogram files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{behavior_features, BehaviorFeatures, InnovationConfig, ThreadIndex};
use crate::cdfa::{cdfa_features, ArticleSet, CdfaFeatures, DpgmmConfig, Source, MIN_ARTICLES};
use crate::chain::{chain_features, ChainConfig, ChainFeatures};
use crate::corpus::{self, filter_active, LabeledCorpus};
use crate::learn::{grid_search, metrics, nested_cv, Estimator, EvalReport, FeatureMatrix, Metrics, ModelKind, ModelSpec, Params};
use crate::temporal::{temporal_features, TemporalFeatures, DEFAULT_MAX_ORDER};
use crate::textbase::{frequent_word_count, levenshtein_regularity, BaselineConfig, TfidfTable};
use crate::{seed, Error, Result};

pub const BASELINE_PREFIX: &str = "baseline:";

const FREQWORD_COLUMNS: [&str; 1] = ["baseline:Frequent word counting"];
const TFIDF_COLUMNS: [&str; 2] = ["baseline:TF-IDF mean", "baseline:TF-IDF max"];
const LEVENSHTEIN_COLUMNS: [&str; 3] = [
    "baseline:Levenshtein edit distance (title)",
    "baseline:Levenshtein edit distance (content)",
    "baseline:Levenshtein edit distance (reply)",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Cdfa,
    Santia,
    Chu,
    Chain,
    Baselines,
}

impl Group {
    /// The four groups that make up the full 33-column matrix.
    pub const MAIN: [Group; 4] = [Group::Cdfa, Group::Santia, Group::Chu, Group::Chain];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Cdfa => "cdfa",
            Group::Santia => "santia",
            Group::Chu => "chu",
            Group::Chain => "chain",
            Group::Baselines => "baselines",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "cdfa" => Ok(Group::Cdfa),
            "santia" => Ok(Group::Santia),
            "chu" => Ok(Group::Chu),
            "chain" => Ok(Group::Chain),
            "baselines" | "baseline" => Ok(Group::Baselines),
            other => Err(Error::Config(format!("unknown feature group {other:?}"))),
        }
    }

    pub fn columns(self) -> Vec<&'static str> {
        match self {
            Group::Cdfa => CdfaFeatures::NAMES.to_vec(),
            Group::Santia => BehaviorFeatures::NAMES.to_vec(),
            Group::Chu => TemporalFeatures::NAMES.to_vec(),
            Group::Chain => ChainFeatures::NAMES.to_vec(),
            Group::Baselines => FREQWORD_COLUMNS
                .iter()
                .chain(&TFIDF_COLUMNS)
                .chain(&LEVENSHTEIN_COLUMNS)
                .copied()
                .collect(),
        }
    }
}

/// Column names for a set of groups, in table order whatever order the
/// groups were given in.
pub fn feature_names(groups: &[Group]) -> Vec<String> {
    let mut g = groups.to_vec();
    g.sort();
    g.dedup();
    g.iter().flat_map(|g| g.columns()).map(String::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub groups: Vec<Group>,
    pub seed: u64,
    pub dpgmm: DpgmmConfig,
    pub innovation: InnovationConfig,
    pub cce_max_order: usize,
    pub chain: ChainConfig,
    pub baselines: BaselineConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            groups: Group::MAIN.to_vec(),
            seed: 0,
            dpgmm: DpgmmConfig::default(),
            innovation: InnovationConfig::default(),
            cce_max_order: DEFAULT_MAX_ORDER,
            chain: ChainConfig::default(),
            baselines: BaselineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionDiagnostics {
    pub accounts: usize,
    pub bots: usize,
    pub humans: usize,
    /// Replies skipped by response-time features because their parent is
    /// missing from the corpus.
    pub orphan_replies: usize,
    /// Accounts with fewer than five articles, per CDFA source (T, C, R).
    pub cdfa_zero_sources: [usize; 3],
    /// Accounts too active for pairwise edit distances (features left 0).
    pub levenshtein_unsampled: usize,
    pub accounts_without_transfers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub accounts: Vec<String>,
    pub matrix: FeatureMatrix,
    pub diagnostics: ExtractionDiagnostics,
}

/// Build the feature matrix for every labeled account, rows in corpus order.
pub fn extract_features(corpus: &LabeledCorpus, cfg: &FeatureConfig) -> Result<Extraction> {
    if cfg.groups.is_empty() {
        return Err(Error::Config("no feature group enabled".into()));
    }
    let names = feature_names(&cfg.groups);
    let enabled = |g: Group| cfg.groups.contains(&g);
    let mut labels = Vec::with_capacity(corpus.accounts.len());
    for a in &corpus.accounts {
        let l = corpus
            .label(&a.name)
            .ok_or_else(|| Error::Validation(format!("account {} has no label", a.name)))?;
        labels.push(u8::from(l.is_bot()));
    }
    let threads = (enabled(Group::Santia)).then(|| ThreadIndex::build(corpus));
    let tfidf = enabled(Group::Baselines).then(|| TfidfTable::from_corpus(corpus, cfg.baselines.tfidf_min_count));

    let rows: Vec<(Vec<f64>, bool)> = corpus
        .accounts
        .par_iter()
        .map(|a| {
            let s = seed::derive(cfg.seed, &a.name);
            let mut row = Vec::with_capacity(names.len());
            let mut unsampled = false;
            if enabled(Group::Cdfa) {
                row.extend(cdfa_features(a, &cfg.dpgmm, seed::derive(s, "cdfa")).to_array());
            }
            if let Some(idx) = &threads {
                row.extend(behavior_features(idx, a, &cfg.innovation, seed::derive(s, "innovation")).to_array());
            }
            if enabled(Group::Chu) {
                row.extend(temporal_features(a, corpus.dataset_end, cfg.cce_max_order)?.to_array());
            }
            if enabled(Group::Chain) {
                row.extend(chain_features(a, &cfg.chain).to_array());
            }
            if let Some(t) = &tfidf {
                let summary = t.summary(a);
                let lev = levenshtein_regularity(a, &cfg.baselines);
                unsampled = !lev.sampled;
                row.extend([
                    frequent_word_count(a) as f64,
                    summary.mean,
                    summary.max,
                    lev.mean_title,
                    lev.mean_content,
                    lev.mean_reply,
                ]);
            }
            Ok((row, unsampled))
        })
        .collect::<Result<_>>()?;

    let mut diagnostics = ExtractionDiagnostics {
        accounts: corpus.accounts.len(),
        bots: labels.iter().filter(|&&l| l == 1).count(),
        orphan_replies: threads.as_ref().map_or(0, ThreadIndex::orphans),
        levenshtein_unsampled: rows.iter().filter(|r| r.1).count(),
        accounts_without_transfers: corpus.accounts.iter().filter(|a| a.transfers().next().is_none()).count(),
        ..ExtractionDiagnostics::default()
    };
    diagnostics.humans = diagnostics.accounts - diagnostics.bots;
    for (k, src) in Source::ALL.into_iter().enumerate() {
        diagnostics.cdfa_zero_sources[k] = corpus
            .accounts
            .iter()
            .filter(|a| ArticleSet::from_account(a, src).m() < MIN_ARTICLES)
            .count();
    }

    let matrix = FeatureMatrix::new(names, rows.into_iter().map(|r| r.0).collect(), labels)?;
    Ok(Extraction {
        accounts: corpus.accounts.iter().map(|a| a.name.clone()).collect(),
        matrix,
        diagnostics,
    })
}

/// Sidecar written next to a feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesMeta {
    pub input: PathBuf,
    pub dataset_end: String,
    pub min_activity: usize,
    pub config: FeatureConfig,
    pub columns: Vec<String>,
    pub accounts: Vec<String>,
    pub diagnostics: ExtractionDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesRun {
    pub input: PathBuf,
    pub out: PathBuf,
    /// Overrides the dataset end stored in the corpus file.
    pub dataset_end: Option<i64>,
    pub min_activity: usize,
    pub features: FeatureConfig,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn read_corpus(path: &Path, dataset_end: Option<i64>) -> Result<LabeledCorpus> {
    match dataset_end {
        Some(end) => corpus::ingest(path, end),
        None => corpus::load(path),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}

/// Load, filter, extract; write the CSV and its sidecar.
pub fn run_features(run: &FeaturesRun) -> Result<Extraction> {
    if run.features.groups.is_empty() {
        return Err(Error::Config("no feature group enabled".into()));
    }
    let corpus = filter_active(&read_corpus(&run.input, run.dataset_end)?, run.min_activity);
    if corpus.accounts.is_empty() {
        return Err(Error::Validation(format!(
            "no account reaches {} blogs and replies",
            run.min_activity
        )));
    }
    let ex = extract_features(&corpus, &run.features)?;
    create_parent(&run.out)?;
    ex.matrix.save(&run.out)?;
    write_json(
        &sidecar_path(&run.out),
        &FeaturesMeta {
            input: run.input.clone(),
            dataset_end: corpus::format_timestamp(corpus.dataset_end),
            min_activity: run.min_activity,
            config: run.features.clone(),
            columns: ex.matrix.names.clone(),
            accounts: ex.accounts.clone(),
            diagnostics: ex.diagnostics.clone(),
        },
    )?;
    Ok(ex)
}

/// Columns selected by a combination such as `cdfa`, `cdfa+santia+chu`,
/// `all` (the four main groups) or a baseline subgroup (`freqword`,
/// `tfidf`, `levenshtein`, `baselines`).
pub fn combo_columns(combo: &str) -> Result<Vec<String>> {
    let mut cols: Vec<String> = Vec::new();
    for part in combo.split('+').map(str::trim) {
        let add: Vec<String> = match part {
            "all" => feature_names(&Group::MAIN),
            "freqword" => FREQWORD_COLUMNS.map(String::from).to_vec(),
            "tfidf" => TFIDF_COLUMNS.map(String::from).to_vec(),
            "levenshtein" => LEVENSHTEIN_COLUMNS.map(String::from).to_vec(),
            other => feature_names(&[Group::parse(other)?]),
        };
        for c in add {
            if !cols.contains(&c) {
                cols.push(c);
            }
        }
    }
    Ok(cols)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub combos: Vec<String>,
    pub models: Vec<ModelKind>,
    /// Fold shuffling seed.
    pub seed: u64,
    /// Per-model fitting seed.
    pub model_seed: u64,
    /// Grid overrides keyed by model name.
    pub grids: BTreeMap<String, BTreeMap<String, Vec<Option<u64>>>>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            combos: ["cdfa", "santia", "chu", "chain", "cdfa+santia+chu", "all"]
                .map(String::from)
                .to_vec(),
            models: ModelKind::ALL.to_vec(),
            seed: 0,
            model_seed: 0,
            grids: BTreeMap::new(),
        }
    }
}

impl EvalConfig {
    pub fn specs(&self) -> Result<Vec<ModelSpec>> {
        for k in self.grids.keys() {
            ModelKind::parse(k)?;
        }
        Ok(self
            .models
            .iter()
            .map(|&kind| {
                let mut spec = ModelSpec::new(kind, self.model_seed);
                if let Some(g) = self.grids.get(kind.as_str()) {
                    spec.grid = g.clone();
                }
                spec
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboReport {
    pub combo: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSuite {
    pub config: EvalConfig,
    pub sections: Vec<ComboReport>,
}

impl EvalSuite {
    pub fn section(&self, combo: &str) -> Option<&EvalReport> {
        self.sections.iter().find(|s| s.combo == combo).map(|s| &s.report)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Nested cross-validation for every requested column combination.
pub fn evaluate(matrix: &FeatureMatrix, cfg: &EvalConfig) -> Result<EvalSuite> {
    if cfg.combos.is_empty() {
        return Err(Error::Config("no feature combination requested".into()));
    }
    let specs = cfg.specs()?;
    let mut sections = Vec::with_capacity(cfg.combos.len());
    for combo in &cfg.combos {
        let sub = matrix.select_columns(&combo_columns(combo)?)?;
        sections.push(ComboReport {
            combo: combo.clone(),
            report: nested_cv(&sub, &specs, cfg.seed)?,
        });
    }
    Ok(EvalSuite {
        config: cfg.clone(),
        sections,
    })
}

/// File-name form of a column name: lowercase ASCII alphanumerics joined by
/// single dashes.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

/// One `value,label` CSV per column under `dir`, one row per account.
pub fn write_histograms(matrix: &FeatureMatrix, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(matrix.n_features());
    for (j, name) in matrix.names.iter().enumerate() {
        let path = dir.join(format!("{}.csv", slug(name)));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["value", "label"])?;
        for (v, &l) in matrix.column(j).zip(&matrix.labels) {
            w.write_record([v.to_string().as_str(), if l == 1 { "bot" } else { "human" }])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub features: PathBuf,
    pub out: PathBuf,
    /// Histogram directory; defaults to `hist/` next to the report.
    pub hist_dir: Option<PathBuf>,
    pub eval: EvalConfig,
}

/// Evaluate a saved feature matrix and write the report and histograms.
pub fn run_eval(run: &EvalRun) -> Result<EvalSuite> {
    let matrix = FeatureMatrix::load(&run.features)?;
    let suite = evaluate(&matrix, &run.eval)?;
    create_parent(&run.out)?;
    write_json(&run.out, &suite)?;
    let hist = run
        .hist_dir
        .clone()
        .unwrap_or_else(|| run.out.parent().unwrap_or(Path::new(".")).join("hist"));
    write_histograms(&matrix, &hist)?;
    Ok(suite)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: String,
    pub combo: String,
    pub seed: u64,
    pub model_seed: u64,
    pub features: Vec<String>,
    pub selected_params: Params,
    /// Mean F1 of the selected cell over five folds.
    pub cv_f1: f64,
    /// Fit on every row and scored on the same rows.
    pub training_metrics: Metrics,
    pub importances: Vec<f64>,
}

/// Grid-search one model on a column combination, then refit on all rows.
pub fn train(matrix: &FeatureMatrix, combo: &str, kind: ModelKind, seed: u64, model_seed: u64) -> Result<TrainReport> {
    let sub = matrix.select_columns(&combo_columns(combo)?)?;
    let spec = ModelSpec::new(kind, model_seed);
    let (selected_params, cv_f1) = grid_search(&sub, &spec, seed)?;
    let fit = spec.fit_predict(&selected_params, &sub, &sub, seed::derive(seed, "train/refit"))?;
    Ok(TrainReport {
        model: kind.as_str().to_string(),
        combo: combo.to_string(),
        seed,
        model_seed,
        training_metrics: metrics(&fit.predictions, &sub.labels),
        features: sub.names,
        selected_params,
        cv_f1,
        importances: fit.importances,
    })
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    write_json(path, value)
}

/// Markdown table of mean metrics, one row per model and combination.
pub fn metrics_table(suite: &EvalSuite) -> String {
    let mut out = String::from("| features | model | accuracy | precision | recall | f1 |\n|---|---|---|---|---|---|\n");
    for s in &suite.sections {
        for m in &s.report.models {
            out.push_str(&format!(
                "| {} | {} | {:.2} | {:.2} | {:.2} | {:.2} |\n",
                s.combo, m.name, m.metrics.accuracy, m.metrics.precision, m.metrics.recall, m.metrics.f1
            ));
        }
    }
    out
}

/// Markdown table of the top `n` features by Dowdall points.
pub fn ranking_table(report: &EvalReport, n: usize) -> String {
    let mut out = String::from("| rank | feature | points |\n|---|---|---|\n");
    for (r, name) in report.ranking.iter().take(n).enumerate() {
        let j = report.features.iter().position(|f| f == name).unwrap_or(0);
        out.push_str(&format!("| {} | {} | {:.4} |\n", r + 1, name, report.dowdall_points[j]));
    }
    out
}

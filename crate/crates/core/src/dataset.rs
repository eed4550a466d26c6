//! Dataset ingestion and construction.
//!
//! CSV loading with a declarative column schema, status-string label
//! derivation, one-hot encoding of categorical columns, class-balanced
//! sampling, stratified train/holdout splits, and a synthetic generator
//! whose ground-truth coefficients back the explainer test oracles.
//!
//! Datasets are immutable after construction. Rows with unparseable
//! numerics, unknown categorical levels, or unmapped statuses are
//! dropped and tallied, never imputed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// What a single encoded column represents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Continuous,
    /// One binary column of a one-hot categorical group.
    CategoricalLevel { group: String, level: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
}

/// The encoded feature layout shared by every matrix in a run.
///
/// Column order is fixed at construction and identical across all
/// datasets, models, attributions, and perturbations derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<Feature>,
    pub label_column: String,
    pub positive_label: String,
}

/// A perturbable unit: a continuous feature (one column) or a whole
/// one-hot group (its level columns). Shapley, permutation, and
/// perturbation all operate at this granularity so one-hot rows stay
/// exactly-one-hot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Player {
    pub name: String,
    pub columns: Vec<usize>,
}

impl FeatureSchema {
    pub fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::Config(format!("duplicate feature name {:?}", f.name)));
            }
        }
        for g in self.group_names() {
            let n = self
                .features
                .iter()
                .filter(|f| matches!(&f.kind, FeatureKind::CategoricalLevel { group, .. } if *group == g))
                .count();
            if n < 2 {
                return Err(Error::Config(format!("group {:?} has {} level(s), need >= 2", g, n)));
            }
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    fn group_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in &self.features {
            if let FeatureKind::CategoricalLevel { group, .. } = &f.kind {
                if !out.contains(group) {
                    out.push(group.clone());
                }
            }
        }
        out
    }

    /// Column indices of a one-hot group, in schema order.
    pub fn group_columns(&self, group: &str) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(&f.kind, FeatureKind::CategoricalLevel { group: g, .. } if g == group))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn continuous_columns(&self) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FeatureKind::Continuous)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Perturbable units in schema order: continuous columns first as
    /// they appear, then each group at the position of its first level.
    pub fn players(&self) -> Vec<Player> {
        let mut out = Vec::new();
        let mut seen_groups: BTreeSet<&str> = BTreeSet::new();
        for (i, f) in self.features.iter().enumerate() {
            match &f.kind {
                FeatureKind::Continuous => out.push(Player {
                    name: f.name.clone(),
                    columns: vec![i],
                }),
                FeatureKind::CategoricalLevel { group, .. } => {
                    if seen_groups.insert(group.as_str()) {
                        out.push(Player {
                            name: group.clone(),
                            columns: self.group_columns(group),
                        });
                    }
                }
            }
        }
        out
    }
}

/// Maps raw status strings to the binary label. Rows whose status is
/// in neither set are dropped and tallied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRule {
    pub good_statuses: BTreeSet<String>,
    pub bad_statuses: BTreeSet<String>,
}

impl LabelRule {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.good_statuses.intersection(&self.bad_statuses).next() {
            return Err(Error::Config(format!("status {:?} is both good and bad", s)));
        }
        if self.good_statuses.is_empty() || self.bad_statuses.is_empty() {
            return Err(Error::Config("label rule needs at least one status per class".into()));
        }
        Ok(())
    }

    pub fn label_for(&self, status: &str) -> Option<u8> {
        if self.good_statuses.contains(status) {
            Some(1)
        } else if self.bad_statuses.contains(status) {
            Some(0)
        } else {
            None
        }
    }
}

impl Default for LabelRule {
    /// Default mapping for the public Lending Club status vocabulary.
    fn default() -> Self {
        let good = ["Fully Paid", "Current"];
        let bad = ["Charged Off", "Default", "Late (16-30 days)", "Late (31-120 days)"];
        LabelRule {
            good_statuses: good.iter().map(|s| s.to_string()).collect(),
            bad_statuses: bad.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Declarative description of the raw CSV columns to ingest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub continuous: Vec<String>,
    pub categorical: Vec<CategoricalColumn>,
    pub label_column: String,
    #[serde(default = "default_positive_label")]
    pub positive_label: String,
}

fn default_positive_label() -> String {
    "good".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub column: String,
    pub levels: Vec<String>,
}

impl CsvSchema {
    /// Expand raw columns into the encoded feature layout: continuous
    /// columns in order, then one column per categorical level named
    /// `group=level`.
    pub fn expand(&self) -> Result<FeatureSchema> {
        let mut features = Vec::new();
        for c in &self.continuous {
            features.push(Feature {
                name: c.clone(),
                kind: FeatureKind::Continuous,
            });
        }
        for cat in &self.categorical {
            if cat.levels.len() < 2 {
                return Err(Error::Config(format!(
                    "categorical column {:?} needs >= 2 levels",
                    cat.column
                )));
            }
            for level in &cat.levels {
                features.push(Feature {
                    name: format!("{}={}", cat.column, level),
                    kind: FeatureKind::CategoricalLevel {
                        group: cat.column.clone(),
                        level: level.clone(),
                    },
                });
            }
        }
        let schema = FeatureSchema {
            features,
            label_column: self.label_column.clone(),
            positive_label: self.positive_label.clone(),
        };
        schema.validate()?;
        Ok(schema)
    }
}

/// Immutable encoded dataset. Within every one-hot group each row has
/// exactly one column equal to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub row_ids: Vec<u64>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.labels.len() != self.rows.len() || self.row_ids.len() != self.rows.len() {
            return Err(Error::Data("rows / labels / row_ids length mismatch".into()));
        }
        if self.labels.iter().any(|&l| l > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        let groups: Vec<Vec<usize>> = self
            .schema
            .players()
            .into_iter()
            .filter(|p| p.columns.len() > 1)
            .map(|p| p.columns)
            .collect();
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.schema.n_features() {
                return Err(Error::Data(format!("row {i} has wrong width")));
            }
            for cols in &groups {
                let sum: f64 = cols.iter().map(|&c| row[c]).sum();
                if sum != 1.0 {
                    return Err(Error::Data(format!("row {i} one-hot group sums to {sum}")));
                }
            }
        }
        Ok(())
    }

    fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let good = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - good, good)
    }
}

/// Row accounting from a CSV load: `kept + dropped_* = raw row count`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub kept: usize,
    pub dropped_parse: usize,
    pub dropped_label: usize,
    pub dropped_level: usize,
}

impl DropReport {
    pub fn total(&self) -> usize {
        self.kept + self.dropped_parse + self.dropped_label + self.dropped_level
    }
}

/// One-hot encode a raw string column against a known level vocabulary.
/// Returns `None` for values outside the vocabulary.
pub fn encode_one_hot(value: &str, levels: &[String]) -> Option<Vec<f64>> {
    let pos = levels.iter().position(|l| l == value)?;
    let mut row = vec![0.0; levels.len()];
    row[pos] = 1.0;
    Some(row)
}

/// Invert [`encode_one_hot`]: recover the level from a one-hot slice.
pub fn decode_one_hot<'a>(slice: &[f64], levels: &'a [String]) -> Option<&'a str> {
    let pos = slice.iter().position(|&v| v == 1.0)?;
    if slice.iter().map(|&v| v as usize).sum::<usize>() != 1 {
        return None;
    }
    levels.get(pos).map(|s| s.as_str())
}

/// Load an RFC-4180 CSV with header row, deriving labels via `rule`
/// and one-hot encoding categorical columns per `csv_schema`.
pub fn load_csv(
    path: &Path,
    csv_schema: &CsvSchema,
    rule: &LabelRule,
) -> Result<(Dataset, DropReport)> {
    rule.validate()?;
    let schema = csv_schema.expand()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad header: {e}")))?
        .clone();
    let col_idx = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("missing column {name:?}")))
    };
    let cont_idx: Vec<usize> = csv_schema
        .continuous
        .iter()
        .map(|c| col_idx(c))
        .collect::<Result<_>>()?;
    let cat_idx: Vec<usize> = csv_schema
        .categorical
        .iter()
        .map(|c| col_idx(&c.column))
        .collect::<Result<_>>()?;
    let label_idx = col_idx(&csv_schema.label_column)?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut row_ids = Vec::new();
    let mut report = DropReport::default();

    'records: for (rec_no, record) in reader.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                report.dropped_parse += 1;
                continue;
            }
        };
        let status = record.get(label_idx).unwrap_or("");
        let label = match rule.label_for(status) {
            Some(l) => l,
            None => {
                report.dropped_label += 1;
                continue;
            }
        };
        let mut row = Vec::with_capacity(schema.n_features());
        for &ci in &cont_idx {
            let raw = record.get(ci).unwrap_or("").trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    report.dropped_parse += 1;
                    continue 'records;
                }
            }
        }
        for (cat, &ci) in csv_schema.categorical.iter().zip(&cat_idx) {
            let raw = record.get(ci).unwrap_or("");
            match encode_one_hot(raw, &cat.levels) {
                Some(hot) => row.extend(hot),
                None => {
                    report.dropped_level += 1;
                    continue 'records;
                }
            }
        }
        rows.push(row);
        labels.push(label);
        row_ids.push(rec_no as u64);
        report.kept += 1;
    }

    if rows.is_empty() {
        return Err(Error::Data("no rows survived filtering".into()));
    }
    let ds = Dataset {
        schema,
        rows,
        labels,
        row_ids,
    };
    ds.check_invariants()?;
    Ok((ds, report))
}

/// Write a dataset back to CSV in raw (decoded) form, using the first
/// good / bad status of `rule` for the label column. Floats are written
/// with the shortest representation that round-trips.
pub fn write_csv(ds: &Dataset, rule: &LabelRule, csv_schema: &CsvSchema, path: &Path) -> Result<()> {
    let good = rule
        .good_statuses
        .iter()
        .next()
        .ok_or_else(|| Error::Config("empty good status set".into()))?;
    let bad = rule
        .bad_statuses
        .iter()
        .next()
        .ok_or_else(|| Error::Config("empty bad status set".into()))?;
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    let mut header: Vec<&str> = csv_schema.continuous.iter().map(|s| s.as_str()).collect();
    header.extend(csv_schema.categorical.iter().map(|c| c.column.as_str()));
    header.push(&csv_schema.label_column);
    w.write_record(&header).map_err(|e| Error::Data(e.to_string()))?;

    let cont_cols: Vec<usize> = csv_schema
        .continuous
        .iter()
        .map(|c| ds.schema.column_index(c).expect("schema mismatch"))
        .collect();
    for (row, &label) in ds.rows.iter().zip(&ds.labels) {
        let mut rec: Vec<String> = Vec::new();
        for &c in &cont_cols {
            let mut s = String::new();
            write!(s, "{}", row[c]).unwrap();
            rec.push(s);
        }
        for cat in &csv_schema.categorical {
            let cols = ds.schema.group_columns(&cat.column);
            let slice: Vec<f64> = cols.iter().map(|&c| row[c]).collect();
            let level = decode_one_hot(&slice, &cat.levels)
                .ok_or_else(|| Error::Data(format!("row violates one-hot in {}", cat.column)))?;
            rec.push(level.to_string());
        }
        rec.push(if label == 1 { good.clone() } else { bad.clone() });
        w.write_record(&rec).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))?;
    Ok(())
}

/// Sample exactly `n/2` rows of each class without replacement.
pub fn balanced_sample(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n % 2 != 0 {
        return Err(Error::Config(format!("sample size {n} must be even")));
    }
    let per_class = n / 2;
    let mut good: Vec<usize> = Vec::new();
    let mut bad: Vec<usize> = Vec::new();
    for (i, &l) in ds.labels.iter().enumerate() {
        if l == 1 {
            good.push(i)
        } else {
            bad.push(i)
        }
    }
    for (name, pool) in [("bad", &bad), ("good", &good)] {
        if pool.len() < per_class {
            return Err(Error::Data(format!(
                "class {name} has {} < {per_class}",
                pool.len()
            )));
        }
    }
    let mut rng = rng_from_seed(derive_seed(seed, "balanced_sample"));
    let mut pick = |pool: &mut Vec<usize>| -> Vec<usize> {
        pool.shuffle(&mut rng);
        let mut chosen = pool[..per_class].to_vec();
        chosen.sort_unstable();
        chosen
    };
    let mut idx = pick(&mut bad);
    idx.extend(pick(&mut good));
    idx.sort_unstable();
    Ok(ds.select(&idx))
}

/// Stratified disjoint train/holdout partition.
pub fn train_holdout_split(ds: &Dataset, holdout_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::Config(format!(
            "holdout fraction {holdout_fraction} must be in (0, 1)"
        )));
    }
    let mut rng = rng_from_seed(derive_seed(seed, "train_holdout_split"));
    let mut train_idx = Vec::new();
    let mut hold_idx = Vec::new();
    for class in [0u8, 1u8] {
        let mut pool: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.labels[i] == class).collect();
        pool.shuffle(&mut rng);
        let n_hold = ((pool.len() as f64) * holdout_fraction).round() as usize;
        hold_idx.extend_from_slice(&pool[..n_hold]);
        train_idx.extend_from_slice(&pool[n_hold..]);
    }
    train_idx.sort_unstable();
    hold_idx.sort_unstable();
    Ok((ds.select(&train_idx), ds.select(&hold_idx)))
}

/// A continuous feature's sampling distribution. Supports are
/// nonnegative so multiplicative perturbation semantics stay clean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Distribution {
    Uniform { low: f64, high: f64 },
    Exponential { mean: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuousSpec {
    pub name: String,
    pub dist: Distribution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    /// (level, probability); probabilities must sum to 1.
    pub levels: Vec<(String, f64)>,
}

/// Generator spec with analytic ground truth: labels are
/// Bernoulli(sigmoid(true_weights · x + intercept)), then flipped with
/// probability `noise_rate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub continuous: Vec<ContinuousSpec>,
    pub groups: Vec<GroupSpec>,
    /// One weight per encoded feature, in schema order.
    pub true_weights: Vec<f64>,
    pub intercept: f64,
    pub noise_rate: f64,
    #[serde(default = "default_label_column")]
    pub label_column: String,
}

fn default_label_column() -> String {
    "status".into()
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.noise_rate) {
            return Err(Error::Config(format!(
                "noise rate {} must be in [0, 0.5)",
                self.noise_rate
            )));
        }
        for c in &self.continuous {
            match c.dist {
                Distribution::Uniform { low, high } => {
                    if low < 0.0 || high <= low {
                        return Err(Error::Config(format!(
                            "feature {:?}: uniform support must be nonnegative and non-degenerate",
                            c.name
                        )));
                    }
                }
                Distribution::Exponential { mean } => {
                    if mean <= 0.0 {
                        return Err(Error::Config(format!(
                            "feature {:?}: exponential mean must be positive",
                            c.name
                        )));
                    }
                }
            }
        }
        for g in &self.groups {
            if g.levels.len() < 2 {
                return Err(Error::Config(format!("group {:?} needs >= 2 levels", g.name)));
            }
            let total: f64 = g.levels.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "group {:?} level probabilities sum to {total}, need 1"
                , g.name)));
            }
        }
        let width = self.continuous.len()
            + self.groups.iter().map(|g| g.levels.len()).sum::<usize>();
        if self.true_weights.len() != width {
            return Err(Error::Config(format!(
                "true_weights has {} entries, schema has {width} features",
                self.true_weights.len()
            )));
        }
        Ok(())
    }

    /// Raw-column schema matching the generated data, usable with
    /// [`load_csv`] / [`write_csv`].
    pub fn csv_schema(&self) -> CsvSchema {
        CsvSchema {
            continuous: self.continuous.iter().map(|c| c.name.clone()).collect(),
            categorical: self
                .groups
                .iter()
                .map(|g| CategoricalColumn {
                    column: g.name.clone(),
                    levels: g.levels.iter().map(|(l, _)| l.clone()).collect(),
                })
                .collect(),
            label_column: self.label_column.clone(),
            positive_label: "good".into(),
        }
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        self.csv_schema().expand()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Generate a dataset from `spec`. Deterministic given `seed`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let schema = spec.schema()?;
    let mut rng = rng_from_seed(derive_seed(seed, "generate_synthetic"));
    let mut rows = Vec::with_capacity(spec.n_rows);
    let mut labels = Vec::with_capacity(spec.n_rows);
    for _ in 0..spec.n_rows {
        let mut row = Vec::with_capacity(schema.n_features());
        for c in &spec.continuous {
            let v = match c.dist {
                Distribution::Uniform { low, high } => rng.gen_range(low..high),
                Distribution::Exponential { mean } => {
                    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    -mean * u.ln()
                }
            };
            row.push(v);
        }
        for g in &spec.groups {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = g.levels.len() - 1;
            for (i, (_, p)) in g.levels.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            for i in 0..g.levels.len() {
                row.push(if i == chosen { 1.0 } else { 0.0 });
            }
        }
        let z = crate::linalg::dot(&spec.true_weights, &row) + spec.intercept;
        let mut y: u8 = if rng.gen::<f64>() < sigmoid(z) { 1 } else { 0 };
        if spec.noise_rate > 0.0 && rng.gen::<f64>() < spec.noise_rate {
            y = 1 - y;
        }
        rows.push(row);
        labels.push(y);
    }
    let ds = Dataset {
        schema,
        row_ids: (0..spec.n_rows as u64).collect(),
        rows,
        labels,
    };
    ds.check_invariants()?;
    Ok(ds)
}

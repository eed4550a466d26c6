//! Output writers. Every artifact carries the config hash and master
//! seed: JSON files wrap their payload in a small envelope, CSV files
//! start with a `#`-prefixed comment line.

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use fiaudit::consistency::ConsistencyReport;
use fiaudit::explainers::{Attribution, ImportanceRanking};
use fiaudit::perturbation::PerturbationCurve;
use fiaudit::{Error, Result};

use crate::pipeline::AccuracyRow;

#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub config_hash: String,
    pub master_seed: u64,
    pub payload: T,
}

pub struct OutputWriter {
    dir: PathBuf,
    config_hash: String,
    master_seed: u64,
}

impl OutputWriter {
    pub fn new(dir: &Path, config_hash: &str, master_seed: u64) -> Result<OutputWriter> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            config_hash: config_hash.to_string(),
            master_seed,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, payload: &T) -> Result<()> {
        let envelope = Envelope {
            config_hash: self.config_hash.clone(),
            master_seed: self.master_seed,
            payload,
        };
        let mut bytes = serde_json::to_vec_pretty(&envelope)
            .map_err(|e| Error::Config(format!("cannot serialize {name}: {e}")))?;
        bytes.push(b'\n');
        std::fs::write(self.path(name), bytes)
            .map_err(|e| Error::Config(format!("cannot write {name}: {e}")))
    }

    fn csv_file(&self, name: &str) -> Result<File> {
        let mut f = File::create(self.path(name))
            .map_err(|e| Error::Config(format!("cannot create {name}: {e}")))?;
        writeln!(
            f,
            "# config_hash={} master_seed={}",
            self.config_hash, self.master_seed
        )
        .map_err(|e| Error::Config(format!("cannot write {name}: {e}")))?;
        Ok(f)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let stamped = format!(
            "<!-- config_hash={} master_seed={} -->\n\n{text}",
            self.config_hash, self.master_seed
        );
        std::fs::write(self.path(name), stamped)
            .map_err(|e| Error::Config(format!("cannot write {name}: {e}")))
    }

    pub fn write_accuracy_csv(&self, name: &str, rows: &[AccuracyRow]) -> Result<()> {
        let f = self.csv_file(name)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record([
            "model",
            "accuracy",
            "true_positive",
            "true_negative",
            "false_positive",
            "false_negative",
        ])
        .map_err(csv_err(name))?;
        for r in rows {
            w.write_record([
                r.model.clone(),
                r.accuracy.to_string(),
                r.confusion.true_positive.to_string(),
                r.confusion.true_negative.to_string(),
                r.confusion.false_positive.to_string(),
                r.confusion.false_negative.to_string(),
            ])
            .map_err(csv_err(name))?;
        }
        w.flush().map_err(|e| Error::Config(format!("{name}: {e}")))
    }

    /// Long-form ranking table: one row per (model, technique, feature).
    pub fn write_rankings_csv(&self, name: &str, rankings: &[ImportanceRanking]) -> Result<()> {
        let f = self.csv_file(name)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["model", "technique", "rank", "feature", "score"])
            .map_err(csv_err(name))?;
        for r in rankings {
            for (i, e) in r.entries.iter().enumerate() {
                w.write_record([
                    r.model_kind.clone(),
                    r.technique.clone(),
                    (i + 1).to_string(),
                    e.feature.clone(),
                    e.score.to_string(),
                ])
                .map_err(csv_err(name))?;
            }
        }
        w.flush().map_err(|e| Error::Config(format!("{name}: {e}")))
    }

    /// Long-form attribution table: one row per (model, technique,
    /// instance, feature).
    pub fn write_attributions_csv(
        &self,
        name: &str,
        groups: &[(&str, &[Attribution])],
    ) -> Result<()> {
        let f = self.csv_file(name)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record([
            "model",
            "technique",
            "instance_id",
            "feature",
            "value",
            "base_value",
        ])
        .map_err(csv_err(name))?;
        for (model, attributions) in groups {
            for a in *attributions {
                for (feature, value) in a.names.iter().zip(&a.values) {
                    w.write_record([
                        model.to_string(),
                        a.technique.clone(),
                        a.instance_id.to_string(),
                        feature.clone(),
                        value.to_string(),
                        a.base_value.to_string(),
                    ])
                    .map_err(csv_err(name))?;
                }
            }
        }
        w.flush().map_err(|e| Error::Config(format!("{name}: {e}")))
    }

    /// Long-form curve table: one row per (model, target, grid point).
    pub fn write_curves_csv(
        &self,
        name: &str,
        groups: &[(&str, &[PerturbationCurve])],
    ) -> Result<()> {
        let f = self.csv_file(name)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["model", "target", "grid", "value", "base_value"])
            .map_err(csv_err(name))?;
        for (model, curves) in groups {
            for c in *curves {
                for (g, v) in c.grid.iter().zip(&c.values) {
                    w.write_record([
                        model.to_string(),
                        c.target.clone(),
                        g.to_string(),
                        v.to_string(),
                        c.base_value.to_string(),
                    ])
                    .map_err(csv_err(name))?;
                }
            }
        }
        w.flush().map_err(|e| Error::Config(format!("{name}: {e}")))
    }
}

fn csv_err(name: &str) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Config(format!("{name}: {e}"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Envelope<T>> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::Config(format!("invalid {}: {e}", path.display())))
}

pub fn consistency_markdown(report: &ConsistencyReport) -> String {
    report.to_markdown()
}

//! Run configuration files: one JSON document per run, tagged by `kind`.

use daqc::circuit::DaqcConfig;
use daqc::dataset::SubsetRule;
use daqc::diagnostics::{BpSweepConfig, ExpressibilityConfig};
use daqc::training::TrainConfig;
use daqc::{DaqcError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunConfig {
    Train(TrainRun),
    Eval(EvalRun),
    Expressibility(DiagRun),
    Entangling(DiagRun),
    BpSweep(BpRun),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Train,
    Eval,
    Expressibility,
    Entangling,
    BpSweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Train => "train",
            Kind::Eval => "eval",
            Kind::Expressibility => "expressibility",
            Kind::Entangling => "entangling",
            Kind::BpSweep => "bp_sweep",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Kind::Train, Kind::Eval, Kind::Expressibility, Kind::Entangling, Kind::BpSweep]
            .into_iter()
            .find(|k| k.name() == name)
    }

    pub fn defaults(self) -> RunConfig {
        match self {
            Kind::Train => RunConfig::Train(TrainRun::default()),
            Kind::Eval => RunConfig::Eval(EvalRun::default()),
            Kind::Expressibility => RunConfig::Expressibility(DiagRun::default()),
            Kind::Entangling => RunConfig::Entangling(DiagRun::default()),
            Kind::BpSweep => RunConfig::BpSweep(BpRun::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRun {
    /// Feeds parameter initialization, shuffling, subsampling and the split.
    pub seed: u64,
    pub circuit: DaqcConfig,
    pub train: TrainConfig,
    pub data: TrainData,
    pub out_dir: Option<PathBuf>,
}

impl Default for TrainRun {
    fn default() -> Self {
        Self {
            seed: 0,
            circuit: DaqcConfig::default(),
            train: TrainConfig::default(),
            data: TrainData::default(),
            out_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainData {
    /// Named class subset such as `mnist-2`; `None` keeps every class.
    pub subset: Option<String>,
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    /// A published validation split; when absent the training pool is split.
    pub val_images: Option<PathBuf>,
    pub val_labels: Option<PathBuf>,
    pub val_fraction: f64,
    /// Seeded subsample of the training pool, taken before the split.
    pub train_limit: Option<usize>,
    /// Seeded subsample of the test set.
    pub test_limit: Option<usize>,
}

impl Default for TrainData {
    fn default() -> Self {
        Self {
            subset: Some("mnist-2".into()),
            train_images: "data/mnist/train-images-idx3-ubyte".into(),
            train_labels: "data/mnist/train-labels-idx1-ubyte".into(),
            test_images: "data/mnist/t10k-images-idx3-ubyte".into(),
            test_labels: "data/mnist/t10k-labels-idx1-ubyte".into(),
            val_images: None,
            val_labels: None,
            val_fraction: 0.2,
            train_limit: None,
            test_limit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalRun {
    /// Seeds the `limit` subsample.
    pub seed: u64,
    pub checkpoint: PathBuf,
    pub subset: Option<String>,
    pub images: PathBuf,
    pub labels: PathBuf,
    pub limit: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Default for EvalRun {
    fn default() -> Self {
        Self {
            seed: 0,
            checkpoint: "runs/train/checkpoint.json".into(),
            subset: Some("mnist-2".into()),
            images: "data/mnist/t10k-images-idx3-ubyte".into(),
            labels: "data/mnist/t10k-labels-idx1-ubyte".into(),
            limit: None,
            out_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagRun {
    /// Overrides `expressibility.seed`.
    pub seed: u64,
    pub circuit: DaqcConfig,
    pub expressibility: ExpressibilityConfig,
    pub out_dir: Option<PathBuf>,
}

impl Default for DiagRun {
    fn default() -> Self {
        Self {
            seed: 0,
            circuit: DaqcConfig::default(),
            expressibility: ExpressibilityConfig::default(),
            out_dir: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpRun {
    /// Overrides `bp_sweep.seed`.
    pub seed: u64,
    pub bp_sweep: BpSweepConfig,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn kind(&self) -> Kind {
        match self {
            RunConfig::Train(_) => Kind::Train,
            RunConfig::Eval(_) => Kind::Eval,
            RunConfig::Expressibility(_) => Kind::Expressibility,
            RunConfig::Entangling(_) => Kind::Entangling,
            RunConfig::BpSweep(_) => Kind::BpSweep,
        }
    }

    /// Parse a config file. The `kind` tag is dispatched by hand because serde's
    /// internally tagged enums buffer their content and lose error paths.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let fail = |path: &str, msg: &dyn std::fmt::Display| {
            DaqcError::Config(format!("{}: at `{path}`: {msg}", origin.display()))
        };
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| fail(".", &e))?;
        let kind = match value.as_object_mut().map(|m| m.remove("kind")) {
            Some(Some(serde_json::Value::String(k))) => k,
            Some(_) => return Err(fail("kind", &"missing or non-string `kind`")),
            None => return Err(fail(".", &"config must be a JSON object")),
        };
        let kind = Kind::from_name(&kind).ok_or_else(|| fail("kind", &format!("unknown kind `{kind}`")))?;
        fn typed<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> std::result::Result<T, (String, String)> {
            serde_path_to_error::deserialize(v).map_err(|e| (e.path().to_string(), e.inner().to_string()))
        }
        let parsed = match kind {
            Kind::Train => typed(value).map(RunConfig::Train),
            Kind::Eval => typed(value).map(RunConfig::Eval),
            Kind::Expressibility => typed(value).map(RunConfig::Expressibility),
            Kind::Entangling => typed(value).map(RunConfig::Entangling),
            Kind::BpSweep => typed(value).map(RunConfig::BpSweep),
        };
        parsed.map_err(|(path, msg)| fail(&path, &msg))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DaqcError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Apply a seed override and push the run seed into the sub-configs, so the
    /// echoed config is the one that actually ran.
    pub fn resolve(&mut self, seed: Option<u64>) {
        match self {
            RunConfig::Train(r) => {
                r.seed = seed.unwrap_or(r.seed);
                r.train.init_seed = r.seed;
            }
            RunConfig::Eval(r) => r.seed = seed.unwrap_or(r.seed),
            RunConfig::Expressibility(r) | RunConfig::Entangling(r) => {
                r.seed = seed.unwrap_or(r.seed);
                r.expressibility.seed = r.seed;
            }
            RunConfig::BpSweep(r) => {
                r.seed = seed.unwrap_or(r.seed);
                r.bp_sweep.seed = r.seed;
            }
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            RunConfig::Train(r) => r.seed,
            RunConfig::Eval(r) => r.seed,
            RunConfig::Expressibility(r) | RunConfig::Entangling(r) => r.seed,
            RunConfig::BpSweep(r) => r.seed,
        }
    }

    pub fn out_dir(&self) -> Option<&Path> {
        match self {
            RunConfig::Train(r) => r.out_dir.as_deref(),
            RunConfig::Eval(r) => r.out_dir.as_deref(),
            RunConfig::Expressibility(r) | RunConfig::Entangling(r) => r.out_dir.as_deref(),
            RunConfig::BpSweep(r) => r.out_dir.as_deref(),
        }
    }

    /// Every check that can fail before compute starts: sub-config validation,
    /// subset names, and the existence of every input file.
    pub fn validate(&self) -> Result<()> {
        match self {
            RunConfig::Train(r) => {
                r.circuit.validate()?;
                r.train.validate()?;
                check_subset(&r.data.subset)?;
                let d = &r.data;
                if !(d.val_fraction > 0.0 && d.val_fraction < 1.0) {
                    return Err(DaqcError::Config(format!(
                        "data.val_fraction {} outside (0, 1)",
                        d.val_fraction
                    )));
                }
                if d.val_images.is_some() != d.val_labels.is_some() {
                    return Err(DaqcError::Config(
                        "data.val_images and data.val_labels must be given together".into(),
                    ));
                }
                for (field, p) in [
                    ("data.train_images", Some(&d.train_images)),
                    ("data.train_labels", Some(&d.train_labels)),
                    ("data.test_images", Some(&d.test_images)),
                    ("data.test_labels", Some(&d.test_labels)),
                    ("data.val_images", d.val_images.as_ref()),
                    ("data.val_labels", d.val_labels.as_ref()),
                ] {
                    if let Some(p) = p {
                        check_file(field, p)?;
                    }
                }
                Ok(())
            }
            RunConfig::Eval(r) => {
                check_subset(&r.subset)?;
                check_file("checkpoint", &r.checkpoint)?;
                check_file("images", &r.images)?;
                check_file("labels", &r.labels)
            }
            RunConfig::Expressibility(r) | RunConfig::Entangling(r) => {
                r.circuit.validate()?;
                r.expressibility.validate()
            }
            RunConfig::BpSweep(r) => r.bp_sweep.validate(),
        }
    }
}

fn check_subset(name: &Option<String>) -> Result<()> {
    if let Some(name) = name {
        SubsetRule::named(name)?;
    }
    Ok(())
}

fn check_file(field: &str, path: &Path) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(DaqcError::Config(format!("{field} is not set")));
    }
    if !path.is_file() {
        return Err(DaqcError::Config(format!(
            "{field}: {} does not exist",
            path.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for kind in [Kind::Train, Kind::Eval, Kind::Expressibility, Kind::Entangling, Kind::BpSweep] {
            let cfg = kind.defaults();
            let text = serde_json::to_string_pretty(&cfg).unwrap();
            assert!(text.contains(&format!("\"kind\": \"{}\"", kind.name())));
            assert_eq!(RunConfig::parse(&text, Path::new("x")).unwrap(), cfg);
        }
    }

    #[test]
    fn unknown_field_names_its_path() {
        let err = RunConfig::parse(
            r#"{"kind": "train", "train": {"learning_rte": 0.1}}"#,
            Path::new("run.json"),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("run.json") && msg.contains("`train.learning_rte`"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn seed_flows_into_sub_configs() {
        let mut cfg = Kind::BpSweep.defaults();
        cfg.resolve(Some(9));
        let RunConfig::BpSweep(r) = &cfg else { unreachable!() };
        assert_eq!((r.seed, r.bp_sweep.seed), (9, 9));
        let mut cfg = Kind::Train.defaults();
        cfg.resolve(None);
        let RunConfig::Train(r) = &cfg else { unreachable!() };
        assert_eq!(r.train.init_seed, 0);
    }
}

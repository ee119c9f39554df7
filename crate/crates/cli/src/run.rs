//! Command implementations and the per-run output directory.

use crate::config::{BpRun, DiagRun, EvalRun, Kind, RunConfig, TrainRun};
use crate::Common;
use daqc::circuit::build_circuit;
use daqc::dataset::{load_idx, stratified_split, subset, Dataset, SubsetRule};
use daqc::diagnostics::{bp_sweep_with, expressibility, haar_mean_q, mean_q_ensemble};
use daqc::training::{evaluate, trace_csv, train_from, Checkpoint, ModelParams};
use daqc::{DaqcError, Result};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Output directory of one run: `config.json` (the resolved config),
/// `run.json` (seed, git describe, version), `timestamp` (kept apart so every
/// other file is a pure function of config and seed), plus the reports.
struct RunDir {
    path: PathBuf,
}

impl RunDir {
    fn create(path: PathBuf, config: &serde_json::Value, seed: u64, command: &str) -> Result<Self> {
        std::fs::create_dir_all(&path).map_err(|e| DaqcError::io(&path, e))?;
        let dir = Self { path };
        dir.write("config.json", &pretty(config))?;
        dir.write(
            "run.json",
            &pretty(&json!({
                "command": command,
                "seed": seed,
                "git_describe": env!("DAQC_GIT_DESCRIBE"),
                "version": env!("CARGO_PKG_VERSION"),
            })),
        )?;
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        dir.write("timestamp", &format!("{now}\n"))?;
        Ok(dir)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let p = self.path.join(name);
        std::fs::write(&p, contents).map_err(|e| DaqcError::io(&p, e))
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn setup_threads(common: &Common) -> Result<()> {
    let threads = if common.deterministic { Some(1) } else { common.threads };
    if let Some(n) = threads {
        if n == 0 {
            return Err(DaqcError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| DaqcError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Every config-driven command: load or default, resolve, validate, run.
pub fn configured(kind: Kind, common: &Common) -> Result<()> {
    if common.print_defaults {
        print!("{}", pretty(&kind.defaults()));
        return Ok(());
    }
    let mut config = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => kind.defaults(),
    };
    if config.kind() != kind {
        return Err(DaqcError::Config(format!(
            "config kind `{}` does not match command `{}`",
            config.kind().name(),
            kind.name()
        )));
    }
    config.resolve(common.seed);
    if let Some(limit) = common.limit {
        match &mut config {
            RunConfig::Train(r) => r.data.train_limit = Some(limit),
            RunConfig::Eval(r) => r.limit = Some(limit),
            _ => return Err(DaqcError::Config(format!("--limit does not apply to {}", kind.name()))),
        }
    }
    config.validate()?;
    setup_threads(common)?;

    let out = common
        .out
        .clone()
        .or_else(|| config.out_dir().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("runs").join(kind.name()));
    let echo = serde_json::to_value(&config).expect("config serializes");
    let dir = RunDir::create(out, &echo, config.seed(), kind.name())?;
    match &config {
        RunConfig::Train(r) => train(r, &dir),
        RunConfig::Eval(r) => eval(r, &dir),
        RunConfig::Expressibility(r) => diag_expressibility(r, &dir),
        RunConfig::Entangling(r) => diag_entangling(r, &dir),
        RunConfig::BpSweep(r) => diag_bp(r, &dir),
    }
}

fn load_subset(images: &Path, labels: &Path, rule: Option<&SubsetRule>) -> Result<Dataset> {
    let d = load_idx(images, labels)?;
    Ok(match rule {
        Some(rule) => subset(&d, rule),
        None => d,
    })
}

fn train(r: &TrainRun, dir: &RunDir) -> Result<()> {
    let rule = r.data.subset.as_deref().map(SubsetRule::named).transpose()?;
    let d = &r.data;
    let mut pool = load_subset(&d.train_images, &d.train_labels, rule.as_ref())?;
    if let Some(limit) = d.train_limit {
        pool = pool.subsample(limit, r.seed);
    }
    let (train_set, val_set) = match (&d.val_images, &d.val_labels) {
        (Some(vi), Some(vl)) => (pool, load_subset(vi, vl, rule.as_ref())?),
        _ => stratified_split(&pool, d.val_fraction, r.seed)?,
    };
    let mut test_set = load_subset(&d.test_images, &d.test_labels, rule.as_ref())?;
    if let Some(limit) = d.test_limit {
        test_set = test_set.subsample(limit, r.seed);
    }
    let n_classes = train_set.n_classes();
    for (name, set) in [("validation", &val_set), ("test", &test_set)] {
        if set.n_classes() != n_classes {
            return Err(DaqcError::Config(format!(
                "{name} set has {} classes, training set {n_classes}",
                set.n_classes()
            )));
        }
    }
    let spec = build_circuit(&r.circuit)?;
    let (train_enc, val_enc, test_enc) = (
        train_set.encode(&r.circuit)?,
        val_set.encode(&r.circuit)?,
        test_set.encode(&r.circuit)?,
    );
    eprintln!(
        "train {} / val {} / test {} samples, {} classes, {} circuit parameters",
        train_enc.len(),
        val_enc.len(),
        test_enc.len(),
        n_classes,
        spec.n_params()
    );
    let init = ModelParams::init(&spec, n_classes, r.train.init_seed)?;
    let outcome = train_from(&spec, &train_enc, &val_enc, init, &r.train, |e| {
        eprintln!(
            "epoch {:>3}  loss {:.4}  val_loss {:.4}  val_auc {:.4}  val_acc {:.4}  |g| {:.3e}",
            e.epoch, e.train_loss, e.val_loss, e.val_auc, e.val_acc, e.grad_l2
        );
    })?;
    let checkpoint = Checkpoint::new(&spec, &r.train, &outcome);
    dir.write("checkpoint.json", &checkpoint.to_json())?;
    dir.write("trace.csv", &trace_csv(&outcome.trace))?;
    let metrics = json!({
        "test": evaluate(&spec, &outcome.params, &test_enc)?,
        "validation": evaluate(&spec, &outcome.params, &val_enc)?,
        "best_epoch": outcome.best_epoch,
        "best_val_auc": outcome.best_val_auc,
        "epochs_run": outcome.trace.len(),
        "stopped_early": outcome.stopped_early,
        "n_train": train_enc.len(),
        "n_val": val_enc.len(),
        "n_test": test_enc.len(),
    });
    dir.write("metrics.json", &pretty(&metrics))?;
    print!("{}", pretty(&metrics));
    Ok(())
}

fn eval(r: &EvalRun, dir: &RunDir) -> Result<()> {
    let checkpoint = Checkpoint::load(&r.checkpoint)?;
    let rule = r.subset.as_deref().map(SubsetRule::named).transpose()?;
    let mut data = load_subset(&r.images, &r.labels, rule.as_ref())?;
    if data.n_classes() != checkpoint.params.n_classes {
        return Err(DaqcError::Config(format!(
            "checkpoint has {} classes, dataset {}",
            checkpoint.params.n_classes,
            data.n_classes()
        )));
    }
    if let Some(limit) = r.limit {
        data = data.subsample(limit, r.seed);
    }
    let enc = data.encode(checkpoint.circuit.config())?;
    let metrics = evaluate(&checkpoint.circuit, &checkpoint.params, &enc)?;
    dir.write("metrics.json", &pretty(&metrics))?;
    print!("{}", pretty(&metrics));
    Ok(())
}

fn diag_expressibility(r: &DiagRun, dir: &RunDir) -> Result<()> {
    let report = expressibility(&r.circuit, &r.expressibility)?;
    dir.write("histogram.csv", &report.histogram_csv())?;
    let mut summary = report.summary_json();
    summary.push('\n');
    dir.write("summary.json", &summary)?;
    print!("{summary}");
    Ok(())
}

fn diag_entangling(r: &DiagRun, dir: &RunDir) -> Result<()> {
    let mean_q = mean_q_ensemble(&r.circuit, &r.expressibility)?;
    let summary = pretty(&json!({
        "mean_q": mean_q,
        "haar_mean_q": haar_mean_q(r.circuit.n_qubits)?,
        "n_qubits": r.circuit.n_qubits,
        "n_ecr": r.circuit.n_ecr_gates(),
        "n_states": r.expressibility.n_states,
        "seed": r.seed,
    }));
    dir.write("summary.json", &summary)?;
    print!("{summary}");
    Ok(())
}

fn diag_bp(r: &BpRun, dir: &RunDir) -> Result<()> {
    let report = bp_sweep_with(&r.bp_sweep, |p| {
        eprintln!(
            "n {:>2}  {:<6}  mean Var {:.3e}",
            p.n_qubits,
            p.cost.name(),
            p.mean_variance
        );
    })?;
    dir.write("bp.csv", &report.to_csv())?;
    dir.write("report.json", &pretty(&report))?;
    let mut summary = report.summary_json();
    summary.push('\n');
    dir.write("summary.json", &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn trace(checkpoint: &Path, out: Option<&Path>) -> Result<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("runs/trace"));
    let echo = json!({ "kind": "trace", "checkpoint": checkpoint });
    let dir = RunDir::create(out, &echo, ck.train_config.init_seed, "trace")?;
    dir.write("trace.csv", &trace_csv(&ck.trace))?;
    eprintln!("{} epochs -> {}", ck.trace.len(), dir.path.join("trace.csv").display());
    Ok(())
}

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pcsm_core::experiments::{
    parameter_study, robustness_curve, shift_drop_consistency, transfer, write_consistency_csv,
    write_curves_csv, write_study_csv, write_transfer_csv, ExperimentConfig, IterationRule, Study,
};
use pcsm_core::io::{
    self, load_cloud, read_bundle, write_bundle, write_drop_csv, write_ply_colored,
    write_saliency_csv,
};
use pcsm_core::{
    evaluate_dataset, generate_shapes, load_checkpoint, run_drop, saliency_scores, save_checkpoint,
    DropConfig, Error, LabeledCloud, ModelParams, Optimizer, PointCloud, SaliencyConfig, Scheme,
    ShapeSpec, TrainConfig,
};

use crate::{
    CloudArgs, ConsistencyArgs, CurveArgs, DataArgs, DropArgs, GeneralizeArgs, ParamStudyArgs,
    SaliencyArgs, TrainArgs,
};

pub const THREADS_VAR: &str = "PCSM_THREADS";

/// A bad flag value or flag combination.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

/// 2 usage, 3 data or format, 4 numeric, 1 anything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Structural(_) => 2,
                Error::Format(_) | Error::Parse { .. } | Error::Io { .. } => 3,
                Error::Numeric(_) => 4,
                Error::State(_) => 1,
            };
        }
    }
    1
}

pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        usage(format!(
            "{THREADS_VAR} must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| anyhow!("cannot configure worker threads: {e}"))
}

fn preset(name: &str, seed: u64) -> Result<ShapeSpec> {
    let spec = match name {
        "default" => ShapeSpec::default(),
        "tiny" => ShapeSpec::tiny(),
        other => {
            return Err(usage(format!(
                "unknown synthetic preset '{other}' (expected default or tiny)"
            )))
        }
    };
    Ok(ShapeSpec { seed, ..spec })
}

fn parse_scheme(s: &str) -> Result<Scheme> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

fn parse_rule(s: &str) -> Result<IterationRule> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

fn ensure_labels(model: &ModelParams, data: &[LabeledCloud]) -> Result<()> {
    if let Some(bad) = data.iter().find(|s| s.label >= model.classes()) {
        return Err(Error::Format(format!(
            "label {} of {} is out of range for a checkpoint with k = {}",
            bad.label,
            bad.source,
            model.classes()
        ))
        .into());
    }
    Ok(())
}

fn load_data(args: &DataArgs) -> Result<Vec<LabeledCloud>> {
    match (&args.dataset, &args.synthetic) {
        (Some(dir), None) => Ok(read_bundle(dir)?),
        (None, Some(name)) => Ok(generate_shapes(&preset(name, args.data_seed)?)?.test),
        _ => Err(usage("pass exactly one of --dataset or --synthetic")),
    }
}

fn checkpoint(path: &Path) -> Result<ModelParams> {
    load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

/// The cloud and optional label selected by `--cloud` or `--dataset/--synthetic --index`.
fn load_one(args: &CloudArgs, model: &ModelParams) -> Result<(PointCloud, Option<usize>)> {
    let (cloud, label) = if let Some(path) = &args.cloud {
        (load_cloud(path, args.samples, 0)?, args.label)
    } else {
        let data = load_data(&args.data)?;
        ensure_labels(model, &data)?;
        let s = data.into_iter().nth(args.index).ok_or_else(|| {
            usage(format!(
                "--index {} is past the end of the dataset",
                args.index
            ))
        })?;
        (s.cloud, Some(args.label.unwrap_or(s.label)))
    };
    if let Some(l) = label {
        if l >= model.classes() {
            return Err(Error::Format(format!(
                "label {l} is out of range for a checkpoint with k = {}",
                model.classes()
            ))
            .into());
        }
    }
    Ok((cloud, label))
}

pub fn generate(spec: &str, seed: u64, out: &Path) -> Result<()> {
    let data = generate_shapes(&preset(spec, seed)?)?;
    write_bundle(out.join("train"), &data.train)?;
    write_bundle(out.join("test"), &data.test)?;
    println!(
        "wrote {} training and {} test clouds to {}",
        data.train.len(),
        data.test.len(),
        out.display()
    );
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let (train_set, test_set) = match (&a.synthetic, &a.train) {
        (Some(name), None) => {
            let d = generate_shapes(&preset(name, 0)?)?;
            (d.train, Some(d.test))
        }
        (None, Some(dir)) => (
            read_bundle(dir)?,
            a.test.as_deref().map(read_bundle).transpose()?,
        ),
        _ => return Err(usage("pass exactly one of --synthetic or --train")),
    };
    let defaults = TrainConfig::default();
    let optimizer = match a.optimizer.as_str() {
        "sgd" => Optimizer::Sgd,
        "momentum" => Optimizer::Momentum(a.momentum),
        other => {
            return Err(usage(format!(
                "unknown optimizer '{other}' (expected sgd or momentum)"
            )))
        }
    };
    let classes = train_set
        .iter()
        .chain(test_set.iter().flatten())
        .map(|s| s.label)
        .max()
        .map(|m| m + 1);
    let cfg = TrainConfig {
        epochs: a.epochs.unwrap_or(defaults.epochs),
        batch_size: a.batch_size.unwrap_or(defaults.batch_size),
        learning_rate: a.lr.unwrap_or(defaults.learning_rate),
        optimizer,
        seed: a.seed,
        classes,
        ..defaults
    };
    let report = pcsm_core::train(&train_set, &cfg)?;
    save_checkpoint(&report.params, &a.out)?;
    println!("train accuracy {:.4}", report.train_accuracy);
    if let Some(test) = &test_set {
        let e = evaluate_dataset(&report.params, test)?;
        println!(
            "test accuracy {:.4} mean loss {:.6}",
            e.accuracy(),
            e.mean_loss
        );
    }
    println!("checkpoint written to {}", a.out.display());
    Ok(())
}

pub fn saliency(a: &SaliencyArgs) -> Result<()> {
    let model = checkpoint(&a.checkpoint)?;
    let (cloud, label) = load_one(&a.input, &model)?;
    let map = saliency_scores(&model, &cloud, label, &SaliencyConfig::with_alpha(a.alpha))?;
    write_saliency_csv(&cloud, &map, &a.out_csv)?;
    if let Some(ply) = &a.out_ply {
        write_ply_colored(&cloud, &map.scores, ply)?;
    }
    println!(
        "predicted class {} loss {:.6} (label {}, {:?})",
        map.predicted_class, map.loss, map.label, map.label_source
    );
    Ok(())
}

pub fn drop(a: &DropArgs) -> Result<()> {
    let model = checkpoint(&a.checkpoint)?;
    let (cloud, label) = load_one(&a.input, &model)?;
    let label = match label {
        Some(l) => l,
        None => model.forward(&cloud)?.predicted_class,
    };
    let scheme = parse_scheme(&a.scheme)?;
    let t = match a.iterations {
        Some(t) => t,
        None => parse_rule(&a.t_rule)?.iterations(scheme, a.n),
    };
    let cfg = DropConfig::new(scheme, a.n, t)
        .with_alpha(a.alpha)
        .with_seed(a.seed);
    let result = run_drop(&model, &cloud, label, &cfg)?;
    write_drop_csv(&result, &a.out_csv)?;
    if let Some(path) = &a.out_xyz {
        io::write_xyz(&result.remaining, path)?;
    }
    println!(
        "dropped {} points in {} rounds: loss {:.6}, predicted class {} (label {label})",
        result.dropped.len(),
        t,
        result.final_loss(),
        result.final_prediction()
    );
    Ok(())
}

fn experiment_config(rule: &str, alpha: f64, seed: u64) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        rule: parse_rule(rule)?,
        alpha,
        seed,
    })
}

pub fn curve(a: &CurveArgs) -> Result<()> {
    let model = checkpoint(&a.checkpoint)?;
    let data = load_data(&a.data)?;
    ensure_labels(&model, &data)?;
    let cfg = experiment_config(&a.t_rule, a.alpha, a.seed)?;
    let curves = a
        .schemes
        .iter()
        .map(|s| {
            Ok(robustness_curve(
                &model,
                &data,
                parse_scheme(s)?,
                &a.grid,
                &cfg,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    write_curves_csv(&curves, &a.out)?;
    for c in &curves {
        for r in &c.rows {
            println!(
                "{:<9} dropped {:>4} T {:>3}: accuracy {:.4} mean loss {:.6}",
                c.scheme, r.dropped, r.iterations, r.accuracy, r.mean_loss
            );
        }
    }
    Ok(())
}

pub fn consistency(a: &ConsistencyArgs) -> Result<()> {
    let model = checkpoint(&a.checkpoint)?;
    let data = load_data(&a.data)?;
    ensure_labels(&model, &data)?;
    let schemes = a
        .schemes
        .iter()
        .map(|s| parse_scheme(s))
        .collect::<Result<Vec<_>>>()?;
    let cfg = experiment_config("default", a.alpha, a.seed)?;
    let report = shift_drop_consistency(&model, &data, &schemes, a.n, &cfg)?;
    write_consistency_csv(&report, &a.out)?;
    for r in &report.rows {
        println!(
            "{:<9} n {:>4}: {}/{} pairs agree ({:.4})",
            r.scheme,
            r.n,
            r.agreements,
            r.pairs,
            r.agreement()
        );
    }
    Ok(())
}

pub fn paramstudy(a: &ParamStudyArgs) -> Result<()> {
    let model = checkpoint(&a.checkpoint)?;
    let data = load_data(&a.data)?;
    ensure_labels(&model, &data)?;
    let study: Study = a.study.parse().map_err(|e: Error| usage(e.to_string()))?;
    let cfg = experiment_config(&a.t_rule, 1.0, a.seed)?;
    let rows = parameter_study(&model, &data, study, a.n, &cfg)?;
    write_study_csv(&rows, &a.out)?;
    for r in &rows {
        println!(
            "{} = {:<6} {:<8} dropped {:>4} T {:>3}: accuracy {:.4} mean loss {:.6}",
            r.study.name(),
            r.value,
            r.scheme,
            r.result.dropped,
            r.result.iterations,
            r.result.accuracy,
            r.result.mean_loss
        );
    }
    Ok(())
}

pub fn generalize(a: &GeneralizeArgs) -> Result<()> {
    let source = checkpoint(&a.checkpoint_a)?;
    let target = checkpoint(&a.checkpoint_b)?;
    if source.classes() != target.classes() {
        bail!(Error::Format(format!(
            "checkpoints disagree on the class count: {} vs {}",
            source.classes(),
            target.classes()
        )));
    }
    let data = load_data(&a.data)?;
    ensure_labels(&target, &data)?;
    let cfg = experiment_config(&a.t_rule, a.alpha, a.seed)?;
    let report = transfer(&source, &target, &data, a.n, &cfg)?;
    write_transfer_csv(&report, &a.out)?;
    for (name, r) in [
        ("clean", &report.clean),
        ("high-transfer", &report.transferred_high),
        ("random", &report.random),
    ] {
        println!(
            "{name:<13} dropped {:>4}: accuracy {:.4} mean loss {:.6}",
            r.dropped, r.accuracy, r.mean_loss
        );
    }
    Ok(())
}

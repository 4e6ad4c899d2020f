use std::fmt::Write as _;
use std::fs;
use std::io::ErrorKind;
use std::path::Path;
use std::time::Instant;

use madlab::data::{assign_labels, generate_synthetic, read_csv_file, write_csv_file, Split, Splits};
use madlab::eval::{replicate_ci, significance_code, welch_t_test};
use madlab::trainer::{
    evaluate_split, run_experiment, Checkpoint, EmbeddingSpace, ExperimentConfig, Metrics, MetricsRecord,
};
use serde_json::json;

use crate::exit::{Context, Failure, CHECKPOINT, GENERIC, NUMERIC, TOO_FEW_REPLICATES};
use crate::ConfigArgs;

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).context(path.display())?;
    ExperimentConfig::parse(&text).context(path.display())
}

fn build_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    for kv in &args.overrides {
        cfg.apply_override(kv).context("--set")?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).context(path.display())
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).context(path.display())
}

fn read_splits(dir: &Path) -> Result<Splits, Failure> {
    let read = |split: Split| {
        let path = dir.join(format!("{}.csv", split.file_stem()));
        read_csv_file(&path, split).context(path.display())
    };
    Ok(Splits {
        train: read(Split::Train)?,
        val: read(Split::Validation)?,
        test: read(Split::Test)?,
    })
}

pub fn generate(args: &ConfigArgs, out: &Path) -> Result<(), Failure> {
    let cfg = build_config(args)?;
    cfg.validate()?;
    let splits = generate_synthetic(&cfg.data, cfg.seed)?;
    create_dir(out)?;
    for split in Split::ALL {
        let path = out.join(format!("{}.csv", split.file_stem()));
        write_csv_file(splits.get(split), &path).context(path.display())?;
        let ds = splits.get(split);
        println!(
            "{}: {} rows, {} abnormal",
            path.display(),
            ds.len(),
            ds.abnormal_count()
        );
    }
    Ok(())
}

pub fn train(
    args: &ConfigArgs,
    replicates: Option<usize>,
    data: Option<&Path>,
    labeled_ratios: &[f64],
    out: &Path,
) -> Result<(), Failure> {
    let mut cfg = build_config(args)?;
    if let Some(n) = replicates {
        cfg.replicates = n;
    }
    let splits = data.map(read_splits).transpose()?;
    if let Some(s) = &splits {
        if s.train.dim != cfg.data.dim {
            return Err(Failure::new(
                GENERIC,
                format!(
                    "data has {} features but data.dim is {}; pass --set data.dim={}",
                    s.train.dim, cfg.data.dim, s.train.dim
                ),
            ));
        }
    }
    cfg.validate()?;

    if labeled_ratios.is_empty() {
        return train_one(&cfg, splits.as_ref(), out);
    }
    let mut worst = Ok(());
    for &ratio in labeled_ratios {
        let mut c = cfg.clone();
        c.data.labeled_ratio = ratio;
        c.validate()?;
        let relabeled = match &splits {
            Some(s) => {
                let mut s = s.clone();
                assign_labels(&mut s.train, ratio, c.data.labeled_abnormal_fraction, c.seed)?;
                Some(s)
            }
            None => None,
        };
        println!("labeled ratio {ratio}");
        if let Err(e) = train_one(&c, relabeled.as_ref(), &out.join(format!("labeled_{ratio}"))) {
            eprintln!("error: labeled ratio {ratio}: {e}");
            worst = Err(e);
        }
    }
    worst
}

fn train_one(cfg: &ExperimentConfig, splits: Option<&Splits>, out: &Path) -> Result<(), Failure> {
    create_dir(&out.join("checkpoints"))?;
    write(&out.join("config.txt"), cfg.serialize())?;

    let start = Instant::now();
    let result = run_experiment(cfg, splits)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut trajectory = String::new();
    for o in &result.outcomes {
        let path = out.join("checkpoints").join(format!("replicate_{}.json", o.replicate));
        Checkpoint::new(cfg, o.replicate, o.state.clone())
            .save(&path)
            .context(path.display())?;
        for t in &o.state.history.trajectory {
            let line = json!({
                "replicate": o.replicate,
                "epoch": t.epoch,
                "live": t.live,
                "counts": t.counts,
            });
            writeln!(trajectory, "{line}").unwrap();
        }
    }
    write(&out.join("centers.jsonl"), trajectory)?;
    write(&out.join("metrics.json"), result.metrics.to_json()? + "\n")?;
    let timing = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": cfg.hash(),
        "replicates": cfg.replicates,
        "wall_clock_seconds": elapsed,
    });
    write(&out.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;

    for r in &result.metrics.records {
        println!(
            "replicate {} {:<4} auc {:.4}  knn {:.4}  live {}",
            r.replicate,
            r.split,
            r.auc,
            r.auc_knn,
            r.live_centers.last().copied().unwrap_or(0)
        );
    }
    if let Some(agg) = &result.metrics.aggregate {
        println!(
            "test auc {:.4} ± {:.4} over {} replicates{}",
            agg.test_auc.mean,
            agg.test_auc.half_width,
            agg.completed,
            if agg.test_auc.single_replicate { " (single replicate, no interval)" } else { "" }
        );
    }
    println!("wrote {} in {elapsed:.1} s", out.display());

    let failures = &result.metrics.failures;
    if failures.is_empty() {
        return Ok(());
    }
    let code = if failures.iter().any(|f| f.numeric) { NUMERIC } else { GENERIC };
    let detail: Vec<String> = failures
        .iter()
        .map(|f| format!("replicate {}: {}", f.replicate, f.error))
        .collect();
    Err(Failure::new(code, detail.join("; ")))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, Failure> {
    match Checkpoint::load(path) {
        Err(madlab::Error::Io(e)) if e.kind() == ErrorKind::NotFound => Err(Failure::new(
            CHECKPOINT,
            format!("{}: checkpoint not found", path.display()),
        )),
        other => other.context(path.display()),
    }
}

pub fn eval(
    checkpoint: &Path,
    data: Option<&Path>,
    config: Option<&Path>,
    split: &str,
    embedding: EmbeddingSpace,
    out: &Path,
) -> Result<(), Failure> {
    let ckpt = load_checkpoint(checkpoint)?;
    let cfg = ckpt.config().context(checkpoint.display())?;
    ckpt.verify(&cfg).context(checkpoint.display())?;
    if let Some(p) = config {
        ckpt.verify(&load_config(p)?).context(checkpoint.display())?;
    }
    let splits = match data {
        Some(dir) => read_splits(dir)?,
        None => generate_synthetic(&cfg.data, ckpt.state.seed)?,
    };
    let ds = if split == "val" { &splits.val } else { &splits.test };
    let train = splits.train.training_view();
    let ev = evaluate_split(&ckpt.state, &cfg, &train, ds, embedding)?;

    create_dir(out)?;
    let mut csv = String::from("id,score,score_knn,ground_truth\n");
    for (i, s) in ds.samples.iter().enumerate() {
        writeln!(csv, "{i},{:e},{:e},{}", ev.scores[i], ev.knn_scores[i], s.ground_truth.as_str()).unwrap();
    }
    write(&out.join("scores.csv"), csv)?;
    let metrics = json!({
        "config_hash": ckpt.config_hash,
        "replicate": ckpt.replicate,
        "split": split,
        "embedding": embedding.to_string(),
        "samples": ds.len(),
        "auc": ev.auc,
        "auc_knn": ev.auc_knn,
    });
    write(&out.join("eval.json"), serde_json::to_string_pretty(&metrics)? + "\n")?;
    println!(
        "{split}: auc {:.4}  knn ({embedding}) {:.4}  over {} samples",
        ev.auc,
        ev.auc_knn,
        ds.len()
    );
    Ok(())
}

fn field_of(name: &str) -> fn(&MetricsRecord) -> f64 {
    match name {
        "auc_knn" => |r| r.auc_knn,
        "auc_knn_pretext" => |r| r.auc_knn_pretext,
        "auc_untrained" => |r| r.auc_untrained,
        _ => |r| r.auc,
    }
}

pub fn compare(a: &Path, b: &Path, split: &str, field: &str) -> Result<(), Failure> {
    let load = |p: &Path| -> Result<Vec<f64>, Failure> {
        let text = fs::read_to_string(p).context(p.display())?;
        let m = Metrics::from_json(&text).context(p.display())?;
        let v = m.values(split, field_of(field));
        if v.len() < 2 {
            return Err(Failure::new(
                TOO_FEW_REPLICATES,
                format!("{}: {} replicate(s) on {split}, need at least 2", p.display(), v.len()),
            ));
        }
        Ok(v)
    };
    let (va, vb) = (load(a)?, load(b)?);
    for (p, v) in [(a, &va), (b, &vb)] {
        let s = replicate_ci(v)?;
        println!("{}: {field} {:.4} ± {:.4} (n = {})", p.display(), s.mean, s.half_width, v.len());
    }
    let w = welch_t_test(&va, &vb)?;
    println!(
        "welch t = {:.4}, df = {:.2}, p = {:.4e}  {}",
        w.t,
        w.df,
        w.p,
        significance_code(w.p)
    );
    println!("codes: *** p ≤ 0.01, ** p ≤ 0.05, * p ≤ 0.1, . p < 1, ns p = 1");
    Ok(())
}

//! Runs the desk benchmark and prints the headline numbers.
//!
//! ```text
//! cargo run --release -p madlab --example benchmark -- [KEY=VALUE ...]
//! ```

use std::time::Instant;

use madlab::trainer::{run_experiment, ExperimentConfig};

fn main() -> Result<(), madlab::Error> {
    let mut cfg = ExperimentConfig::default();
    for kv in std::env::args().skip(1) {
        cfg.apply_override(&kv)?;
    }
    cfg.validate()?;
    let start = Instant::now();
    let res = run_experiment(&cfg, None)?;
    let secs = start.elapsed().as_secs_f64();
    for r in &res.metrics.records {
        println!(
            "replicate {} {:>4}: auc {:.4}  knn {:.4}  knn_pretext {:.4}  untrained {:.4}  first-epoch {:.4}  live {:?}",
            r.replicate,
            r.split,
            r.auc,
            r.auc_knn,
            r.auc_knn_pretext,
            r.auc_untrained,
            r.epoch_auc.first().copied().unwrap_or(f64::NAN),
            r.live_centers.last()
        );
    }
    if let Some(a) = &res.metrics.aggregate {
        println!(
            "test auc {:.4} ± {:.4}, untrained {:.4}, live {:?}",
            a.test_auc.mean, a.test_auc.half_width, a.test_auc_untrained.mean, a.final_live_centers
        );
    }
    for f in &res.metrics.failures {
        println!("replicate {} failed: {}", f.replicate, f.error);
    }
    println!("{secs:.1}s wall clock for {} replicates", cfg.replicates);
    Ok(())
}

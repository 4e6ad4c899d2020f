//! Prints the per-epoch validation AUC and live-center count of one run.
//!
//! ```text
//! cargo run --release -p madlab --example trajectory -- [KEY=VALUE ...]
//! ```

use madlab::trainer::{run_replicate, ExperimentConfig};

fn main() -> Result<(), madlab::Error> {
    let mut cfg = ExperimentConfig::default();
    for kv in std::env::args().skip(1) {
        cfg.apply_override(&kv)?;
    }
    cfg.validate()?;
    let out = run_replicate(&cfg, 0, None)?;
    let h = &out.state.history;
    println!("initial: auc {:?}, objective {:.5}", h.initial_auc, h.objective[0]);
    for (e, auc) in h.epoch_auc.iter().enumerate() {
        println!(
            "epoch {:>3}: auc {auc:.4}  live {:>3}  objective {:.5}",
            e + 1,
            h.live_centers[e],
            h.objective[e + 1]
        );
    }
    Ok(())
}

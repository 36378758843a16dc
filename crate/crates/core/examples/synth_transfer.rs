//! Three shifted synthetic subjects, all six ordered pairs, with baselines.
//!
//! `cargo run --release --example synth_transfer [epochs]`

use std::time::Instant;

use stc_core::data::{shifted_subjects, synth_generate, SubjectSpread};
use stc_core::evaluate::{pairwise_benchmark, BenchmarkConfig, ProbeMode};

fn main() -> stc_core::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let started = Instant::now();
    let specs = shifted_subjects(3, &SubjectSpread::default(), 7);
    let samples = synth_generate(&specs, 60, 128, 3)?;
    let mut cfg = BenchmarkConfig::default();
    cfg.train.epochs = epochs;
    cfg.train.batch_size = 32;
    cfg.train.arch.hidden = vec![64];
    cfg.train.arch.h_dim = 32;
    cfg.train.arch.z_dim = 16;
    cfg.train.arch.proj_hidden = vec![32];
    cfg.modes = vec![ProbeMode::ZtOnly, ProbeMode::ZtPlusZs];
    cfg.baselines = true;
    let ids: Vec<u32> = specs.iter().map(|s| s.subject).collect();
    let m = pairwise_benchmark(&samples, &ids, &cfg)?;
    print!("{}", m.to_table());
    println!("{:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}

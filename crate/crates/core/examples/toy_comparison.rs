//! Uniform, TDS and TSS sampling on the analytic toy process.
//!
//! cargo run --release --example toy_comparison -- [config.json]

use tss::experiment::{run_experiment, ExperimentConfig};

fn main() -> tss::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig {
            size: 64,
            ..Default::default()
        },
    };
    let outcome = run_experiment(&cfg, 0)?;
    println!("T={} T'={} preset={} blur={}", cfg.T, cfg.T_prime, cfg.preset, cfg.blur);
    for s in &outcome.strategies {
        println!("{:<8} timesteps {:?}", s.name, s.trajectory.timesteps());
    }
    outcome.write_comparison_csv(std::io::stdout().lock(), cfg.T_prime)
}

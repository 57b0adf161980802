//! Global schedules for every resampling curve and backbone preset.
//!
//! cargo run --example schedule_presets -- [T] [T']

use tss::{build_tds_schedule, uniform_schedule, Preset, ResampleKind, SamplerParams};

fn main() -> tss::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u32>().expect("integer argument"));
    let total = args.next().unwrap_or(1000);
    let steps = args.next().unwrap_or(20);
    let (lo, hi) = (0.2, 0.8);

    let uniform = uniform_schedule(total, steps)?;
    println!("{:<16} {:>5}  steps", "schedule", "edges");
    println!(
        "{:<16} {:>5.2}  {:?}",
        "uniform",
        uniform.extreme_fraction(lo, hi),
        uniform.quantized
    );

    for kind in [
        ResampleKind::Polynomial,
        ResampleKind::Trigonometric,
        ResampleKind::Exponential,
    ] {
        let params = SamplerParams::new(total, steps, kind)
            .with_power(2.0)
            .with_transition(0.5);
        let s = build_tds_schedule(&params)?;
        println!(
            "{:<16} {:>5.2}  {:?}",
            kind.as_str(),
            s.extreme_fraction(lo, hi),
            s.quantized
        );
    }
    for preset in Preset::ALL {
        let s = build_tds_schedule(&SamplerParams::from_preset(&preset, total, steps))?;
        let (n, a) = preset.midpoint();
        let label = format!("{} n={n:.2}", preset.name);
        println!(
            "{:<16} {:>5.2}  {:?}  (a={a:.3})",
            label,
            s.extreme_fraction(lo, hi),
            s.quantized
        );
    }
    println!("edges: share of steps within {lo}T of either end");
    Ok(())
}

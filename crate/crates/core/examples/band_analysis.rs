//! Band SNR along a synthetic trajectory whose residual noise dips, rises
//! again mid-way, then decays.
//!
//! cargo run --example band_analysis

use tss::freq::{analyze_trajectory, band_masks, noise_delta_series, Band, BandPartition, Trajectory};
use tss::toy::gaussian_noise;
use tss::Raster;

fn main() -> tss::Result<()> {
    let clean = gaussian_noise(64, 64, 1);
    let noise = gaussian_noise(64, 64, 2);
    let scales = [1.0, 0.7, 0.5, 0.8, 0.4, 0.2, 0.05];
    let mut frames: Vec<Raster> = scales
        .iter()
        .map(|&s| clean.zip_map(&noise, |a, b| a + s * b))
        .collect::<tss::Result<_>>()?;
    frames.push(clean);
    let timesteps: Vec<u32> = (0..frames.len() as u32).rev().map(|i| i * 125).collect();
    let traj = Trajectory::new(frames, timesteps)?;

    let masks = band_masks(64, 64, &BandPartition::default());
    let report = analyze_trajectory(&traj, &masks)?;
    println!("{:>5} {:>9} {:>9} {:>9}", "t", "low dB", "mid dB", "high dB");
    for i in 0..report.steps() {
        let r = |b| report.row(i, b).snr_db;
        println!(
            "{:>5} {:>9.2} {:>9.2} {:>9.2}",
            report.row(i, Band::Low).step,
            r(Band::Low),
            r(Band::Medium),
            r(Band::High)
        );
    }
    for (i, d) in noise_delta_series(&traj, &masks)?.iter().enumerate() {
        if d[2] > 0.0 {
            println!("high-band noise rises after t={}", traj.timesteps()[i]);
        }
    }
    report.write_csv(std::io::stdout().lock())
}

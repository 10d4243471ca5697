//! Fidelity and success probability against the relative timing of the Ω41 pulse.

use atomnet::fwm::{choose_operating_point, sweep_timing, write_sweep_csv, DriveSchedule, LevelScheme, SimOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scheme = LevelScheme::default();
    let drives = DriveSchedule::resonant(&scheme);
    let deltas: Vec<f64> = (-30..=10).map(|i| i as f64 / 100.0).collect();
    let curve = sweep_timing(&scheme, &drives, &deltas, &SimOptions::default())?;
    write_sweep_csv(std::io::stdout().lock(), &curve)?;
    if let Some(p) = choose_operating_point(&curve, 0.975) {
        eprintln!(
            "operating point: delta = {:.2}, F = {:.4}, S = {:.4}",
            p.delta,
            p.fidelity.unwrap_or(0.0),
            p.success
        );
    }
    Ok(())
}

//! Detuned Raman scheme: optimized fidelity and success against the |4⟩ detuning.

use atomnet::fwm::{detuned_scan, DetunedSearch, LevelScheme, SimOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scheme = LevelScheme::default();
    let ratios = [2.0, 4.0, 8.0, 16.0, 32.0];
    let detunings: Vec<f64> = ratios.iter().map(|r| r * scheme.g34).collect();
    let points = detuned_scan(&scheme, &detunings, &DetunedSearch::default(), &SimOptions::default())?;
    println!("delta/g34  transfer  fidelity  success");
    for (r, p) in ratios.iter().zip(&points) {
        println!("{:>9}  {:.4}    {:.4}    {:.4}", r, p.transfer, p.fidelity.unwrap_or(f64::NAN), p.success);
    }
    Ok(())
}

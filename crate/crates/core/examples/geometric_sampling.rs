//! Attempts-to-success draws from the two geometric samplers against 1/P.

use atomnet::link::{mux_probability, LinkConfig};
use atomnet::netsim::{sample_attempt_counts, GeometricMethod, McSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = LinkConfig::default().with_atoms(10);
    let expected = 1.0 / mux_probability(&cfg);
    for sampler in [GeometricMethod::InverseTransform, GeometricMethod::BernoulliCounting] {
        let mc = McSettings { sampler, ..McSettings::new(5000, 3) };
        let draws = sample_attempt_counts(&cfg, &mc)?;
        let mean = draws.iter().sum::<u64>() as f64 / draws.len() as f64;
        println!("{sampler:?}: mean {mean:.2}, expected {expected:.2}");
    }
    Ok(())
}

//! Multiple Bell pairs per link: analytic and simulated ladder rates against B.

use atomnet::link::{LinkConfig, StepRates};
use atomnet::netsim::{coherence_threshold, ladder_rate, simulate_single_link, McSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rates = StepRates::default();
    let cfg = LinkConfig::default().with_length(50.0).with_atoms(200);
    println!("B   analytic_Hz  MC_Hz     threshold_Hz");
    for b in [1, 2, 5, 10, 20, 30, 40] {
        let c = cfg.with_bell_pairs(b);
        let mc = simulate_single_link(&c, &rates, &McSettings::new(1000, b as u64))?;
        println!(
            "{:<3} {:>10.3}  {:>8.3}  {:.3}",
            b,
            ladder_rate(&c, &rates)?,
            mc.rate,
            coherence_threshold(0, b, 1.0)
        );
    }
    Ok(())
}

//! Single-link attempt rate, multiplexed success probability and entanglement
//! rate against length, checked against Monte Carlo.

use atomnet::link::{summarize, LinkConfig, StepRates};
use atomnet::netsim::{simulate_single_link, McSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rates = StepRates::default();
    let base = LinkConfig::default();
    println!("L_km  N    attempt_Hz  P_mux      rate_Hz    MC_rate_Hz");
    for n in [1, 10, 100, 200] {
        for l in [10.0, 50.0, 100.0, 200.0] {
            let cfg = base.with_length(l).with_atoms(n);
            let s = summarize(&cfg, &rates)?;
            let mc = simulate_single_link(&cfg, &rates, &McSettings::new(2000, n as u64 * 1000 + l as u64))?;
            println!(
                "{:>4}  {:<4} {:>10.1}  {:.3e}  {:>9.3}  {:>9.3} ± {:.3}",
                l,
                n,
                s.attempt_rate,
                s.mux_probability,
                s.rate,
                mc.rate,
                mc.rate_standard_error()
            );
        }
    }
    Ok(())
}

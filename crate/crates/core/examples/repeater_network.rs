//! Nested repeater chain: rate against total length and nesting level, and
//! the longest distance whose rate stays above the coherence threshold.

use atomnet::netsim::{coherence_threshold, max_network_distance, simulate_network, McSettings, NetworkConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = NetworkConfig { mc: McSettings::new(1000, 11), ..Default::default() };
    println!("L_km  m  rate_Hz    threshold_Hz");
    for m in [2, 3, 4] {
        for l in [250.0, 500.0, 1000.0, 2000.0] {
            let cfg = NetworkConfig { total_length_km: l, nesting: m, ..base };
            let e = simulate_network(&cfg)?;
            println!("{:>5} {}  {:>9.3}  {:.3}", l, m, e.rate, coherence_threshold(m, 1, cfg.t2));
        }
    }
    let reach = max_network_distance(&base, 100.0, 5000.0, 10.0)?;
    println!("max distance (m = {}, N = {}): {:.0} km", base.nesting, base.atoms, reach);
    Ok(())
}

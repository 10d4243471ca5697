//! Phase mismatch of the four beams and the resulting ΔkL over the array.

use atomnet::fwm::{default_beams, phase_mismatch};

fn main() {
    let beams = default_beams();
    println!("length_um  delta_k_per_um  xi");
    for l in [0.05e-6, 1e-6, 10e-6, 50e-6] {
        let m = phase_mismatch(beams, l);
        println!("{:>9.2}  {:>14.4}  {:.3}", l * 1e6, m.delta_k * 1e-6, m.xi);
    }
}

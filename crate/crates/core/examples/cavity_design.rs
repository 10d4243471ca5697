//! Cavity mode, linewidths and atom-cavity coupling for the default design.

use atomnet::cavity::{analyze, CavityGeometry, TransitionSpec};
use atomnet::constants::TWO_PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geometry = CavityGeometry::default();
    let transition = TransitionSpec::default();
    let r = analyze(&geometry, &transition)?;

    println!("stability g1*g2      {:.3}", r.stability);
    println!("waist                {:.2} um", r.mode.waist * 1e6);
    println!("mode volume          {:.3e} m^3", r.mode.mode_volume);
    println!("FSR                  {:.3} GHz", r.mode.fsr / 1e9);
    println!("kappa_int / 2pi      {:.2} kHz", r.mode.kappa_int / TWO_PI / 1e3);
    println!("kappa_ext / 2pi      {:.2} kHz", r.mode.kappa_ext / TWO_PI / 1e3);
    println!("dipole               {:.3e} C m", r.dipole);
    println!("g / 2pi              {:.3} MHz", r.coupling.g / TWO_PI / 1e6);
    println!("cooperativity        {:.2}", r.coupling.cooperativity);
    println!("P(cavity)            {:.4}", r.coupling.p_cavity);
    println!("extraction           {:.4}", r.coupling.eta_extract);

    // Extraction efficiency against the output-mirror finesse (must stay below the loss finesse).
    println!("\nfinesse_ext  eta_extract");
    for f_ext in [1e4, 2e4, 5e4, 8e4] {
        let g = CavityGeometry { finesse_extrinsic: f_ext, ..geometry };
        println!("{:>11.0}  {:.4}", f_ext, analyze(&g, &transition)?.coupling.eta_extract);
    }
    Ok(())
}

//! Exact Wigner 6-j symbols from the Racah formula.

use atomnet::angular::{wigner6j, HalfInt, RacahTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // {J J' 1; F' F I} for the 1480 nm line.
    let j = [1.0, 2.0, 1.0, 1.5, 0.5, 0.5];
    println!("{{1 2 1; 3/2 1/2 1/2}} = {:.6}", wigner6j(j)?);

    let table = RacahTable::new(HalfInt::from_f64(4.0)?);
    let h = |x: f64| HalfInt::from_f64(x).expect("half-integer");
    let exact = table.wigner_6j_exact(h(1.0), h(2.0), h(1.0), h(1.5), h(0.5), h(0.5))?;
    println!("squared, exact       = {}", exact.square());

    // Triangle violation gives zero.
    println!("{{1 1 3; 1 1 1}}     = {}", wigner6j([1.0, 1.0, 3.0, 1.0, 1.0, 1.0])?);
    Ok(())
}

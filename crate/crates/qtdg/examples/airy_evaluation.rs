//! Airy function evaluation across the series/asymptotic switchover: spot
//! values against published constants, and the defining equation
//! Ai'' = z Ai verified non-circularly by central differences.

use qtdg::airy::{airy_ai, airy_ai_prime, airy_ai_with_prime};

fn main() -> qtdg::error::Result<()> {
    let (a0, a1) = airy_ai_with_prime(0.0)?;
    println!("Ai (0) = {a0:.16}  (published  0.3550280538878172)");
    println!("Ai'(0) = {a1:.16}  (published -0.2588194037928068)");
    assert!((a0 - 0.3550280538878172).abs() < 1e-12);
    assert!((a1 + 0.2588194037928068).abs() < 1e-12);

    println!("\nz      Ai(z)          Ai'(z)         |dAi - Ai'|  |dAi' - z Ai|");
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..=12 {
        let z = -11.0 + i as f64;
        let (a, ap) = airy_ai_with_prime(z)?;
        let d1 = (airy_ai(z + h)? - airy_ai(z - h)?) / (2.0 * h);
        let d2 = (airy_ai_prime(z + h)? - airy_ai_prime(z - h)?) / (2.0 * h);
        let r1 = (d1 - ap).abs();
        let r2 = (d2 - z * a).abs();
        worst = worst.max(r1.max(r2));
        println!("{z:>5.1}  {a:+.6e}  {ap:+.6e}  {r1:.2e}     {r2:.2e}");
    }
    println!("\nworst first-order-system residual: {worst:.3e}");
    assert!(worst < 1e-8);
    Ok(())
}

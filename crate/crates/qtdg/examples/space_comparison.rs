//! Error versus degrees of freedom for three discrete spaces on the same
//! prism meshes: the wave-adapted quasi-Trefftz space QW matches the full
//! polynomial space Y at a fraction of the size, while the frozen-coefficient
//! Trefftz space W stalls near second order on a varying medium.

use qtdg::driver::{compare, compare_csv, RunConfig};

fn main() -> qtdg::error::Result<()> {
    let config = RunConfig::parse(
        "
        problem = power2d
        spaces = QW, Y, W
        p = 2
        mesh = prism
        h = 0.5, 0.25, 0.125
        params = default
        ",
    )?;
    let outcome = compare(&config)?;
    print!("{}", compare_csv(&outcome));

    let last = |s| {
        outcome
            .rows
            .iter()
            .rev()
            .find(|r| format!("{:?}", r.space) == s)
            .unwrap()
    };
    let qw = last("QW");
    let y = last("Y");
    let w = last("W");
    println!();
    println!(
        "finest mesh: QW reaches {:.3e} with {} dofs, Y {:.3e} with {} dofs",
        qw.dg_error.unwrap(),
        qw.ndof,
        y.dg_error.unwrap(),
        y.ndof
    );
    println!(
        "W observed rate {:.2} (stalls), QW {:.2}, Y {:.2}",
        w.dg_rate.unwrap(),
        qw.dg_rate.unwrap(),
        y.dg_rate.unwrap()
    );
    assert!(qw.ndof < y.ndof);
    assert!(w.dg_rate.unwrap() < qw.dg_rate.unwrap());
    Ok(())
}

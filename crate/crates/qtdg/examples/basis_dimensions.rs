//! Sizes of the discrete spaces and the moment conditions that define the
//! wave-adapted quasi-Trefftz bases on a variable-coefficient element.

use qtdg::basis::{
    build_qu_basis, build_vector_space, first_order_residuals, qt_space_dim, qu_space_dim,
    quasi_trefftz_residuals, vector_space_dim, SpaceKind,
};
use qtdg::problems::benchmark;

fn main() -> qtdg::error::Result<()> {
    println!("per-element dimensions of the scalar space QU, the first-order");
    println!("space QT, and the vector spaces QW (wave-adapted), Y (full");
    println!("polynomial), W (frozen-coefficient Trefftz):");
    println!("n  p    QU    QT    QW     Y     W   QW/Y");
    for n in [1usize, 2] {
        for p in 0..=6u32 {
            let qw = vector_space_dim(SpaceKind::QW, n, p);
            let y = vector_space_dim(SpaceKind::Y, n, p);
            println!(
                "{n}  {p} {:>5} {:>5} {:>5} {:>5} {:>5}  {:.3}",
                qu_space_dim(n, p),
                qt_space_dim(n, p),
                qw,
                y,
                vector_space_dim(SpaceKind::W, n, p),
                qw as f64 / y as f64
            );
        }
        println!();
    }

    // The quasi-Trefftz property on a genuinely varying medium: every basis
    // member annihilates all derivatives of the second-order wave operator
    // at the element center through order p - 2.
    let problem = benchmark("airy1d")?;
    let center = [2.3, 0.0];
    let p = 5u32;
    let taylor = problem.coeff.taylor_data(&center[..1], p - 1)?;
    let basis = build_qu_basis(1, p, &taylor, center, 1.7, 0.5)?;
    let mut worst = 0.0f64;
    for f in &basis {
        for (_, r) in quasi_trefftz_residuals(f, &taylor, p - 2) {
            worst = worst.max(r.abs());
        }
    }
    println!("scalar basis, degree {p}: {} members,", basis.len());
    println!("largest wave-operator derivative at the center = {worst:.3e}");
    assert!(worst < 1e-10);

    // The first-order analogue annihilates both equation residuals, the
    // momentum balance and the continuity balance, through order p - 1.
    let p = 3u32;
    let qt = build_vector_space(SpaceKind::QT, 1, p, &problem.coeff, center, 1.7, 0.5)?;
    let taylor = problem.coeff.taylor_data(&center[..1], p)?;
    let mut worst = 0.0f64;
    for el in &qt {
        for r in first_order_residuals(&el.w, &el.tau, &taylor, p - 1) {
            worst = worst.max(r.max_abs(1));
        }
    }
    println!("\nfirst-order basis, degree {p}: {} members,", qt.len());
    println!("largest first-order residual derivative = {worst:.3e}");
    assert!(worst < 1e-10);
    Ok(())
}

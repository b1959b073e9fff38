//! Effect of the numerical flux coefficients at high order: the mesh-skeleton
//! penalties (alpha, beta) and the volume stabilization (mu1, mu2) can each
//! be switched off without losing convergence, and the plain L2 error at the
//! final time barely notices either choice.

use qtdg::analysis::{dg_norm_error, final_time_error};
use qtdg::assembly::{DgParameters, ParameterPolicy};
use qtdg::basis::SpaceKind;
use qtdg::mesh::build_cartesian_1d;
use qtdg::problems::benchmark;
use qtdg::solver::{solve, SolverOptions};

fn main() -> qtdg::error::Result<()> {
    let problem = benchmark("airy1d")?;
    let exact = problem.exact.clone().unwrap();
    let options = SolverOptions::default();
    let p = 4;

    println!("degree {p}, meshes h = 1/4 and 1/8; every parameter choice keeps");
    println!("convergence at order p + 1/2, measured in its own DG norm:");
    println!("alpha,beta\tmu\th\tdg_error\trate\tft_error");
    for (label_ab, ab) in [("impedance", true), ("zero\t", false)] {
        for (label_mu, mu) in [("on", true), ("off", false)] {
            let params = DgParameters {
                policy: ParameterPolicy::Selective {
                    alpha: ab,
                    beta: ab,
                    mu1: mu,
                    mu2: mu,
                },
                theta: None,
                delta: None,
            };
            let mut prev: Option<f64> = None;
            for nx in [20usize, 40] {
                let mesh = build_cartesian_1d(
                    problem.domain_lo[0],
                    problem.domain_hi[0],
                    nx,
                    problem.t_final,
                    nx,
                    &problem.coeff,
                    problem.bc,
                )?;
                let (sol, _) = solve(
                    &mesh,
                    &problem.coeff,
                    SpaceKind::QW,
                    p,
                    params.clone(),
                    problem.data.as_ref(),
                    &options,
                )?;
                let dg = dg_norm_error(
                    &mesh,
                    &problem.coeff,
                    params.clone(),
                    &sol,
                    exact.as_ref(),
                    None,
                )?;
                let ft =
                    final_time_error(&mesh, &problem.coeff, &sol, exact.as_ref(), None)?;
                let rate = prev
                    .map(|e: f64| format!("{:.2}", (e / dg).ln() / 2f64.ln()))
                    .unwrap_or_default();
                println!("{label_ab}\t{label_mu}\t1/{}\t{dg:.4e}\t{rate}\t{ft:.4e}", nx / 5);
                prev = Some(dg);
            }
        }
    }
    println!("\nzeroed parameters drop terms from the norm, so their DG errors");
    println!("sit below the impedance ones; the final-time column is the");
    println!("parameter-independent yardstick.");
    Ok(())
}

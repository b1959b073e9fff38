//! h-convergence on a smoothly stratified 1d medium with an exact Airy
//! solution: the mesh-dependent DG error converges at order p + 1/2 and the
//! final-time error at order p + 1.

use qtdg::analysis::{dg_norm_error, eoc, final_time_error};
use qtdg::assembly::DgParameters;
use qtdg::basis::SpaceKind;
use qtdg::mesh::build_cartesian_1d;
use qtdg::problems::benchmark;
use qtdg::solver::{solve, SolverOptions};

fn main() -> qtdg::error::Result<()> {
    let problem = benchmark("airy1d")?;
    let exact = problem.exact.clone().unwrap();
    let params = DgParameters::impedance();
    let options = SolverOptions::default();

    for p in 1..=3u32 {
        let mut hs = Vec::new();
        let mut dg = Vec::new();
        let mut ft = Vec::new();
        for k in 1..=4u32 {
            let nx = 5 * 2usize.pow(k);
            let mesh = build_cartesian_1d(
                problem.domain_lo[0],
                problem.domain_hi[0],
                nx,
                problem.t_final,
                nx,
                &problem.coeff,
                problem.bc,
            )?;
            let (sol, report) = solve(
                &mesh,
                &problem.coeff,
                SpaceKind::QW,
                p,
                params.clone(),
                problem.data.as_ref(),
                &options,
            )?;
            assert!(!report.flagged());
            hs.push(5.0 / nx as f64);
            dg.push(dg_norm_error(
                &mesh,
                &problem.coeff,
                params.clone(),
                &sol,
                exact.as_ref(),
                None,
            )?);
            ft.push(final_time_error(
                &mesh,
                &problem.coeff,
                &sol,
                exact.as_ref(),
                None,
            )?);
        }
        let dg_rates = eoc(&dg, &hs)?;
        let ft_rates = eoc(&ft, &hs)?;
        println!("p = {p}  (expected DG rate {}.5, final-time rate {})", p, p + 1);
        println!("h\t\tdg_error\trate\tft_error\trate");
        for i in 0..hs.len() {
            let rates = if i == 0 {
                "\t".to_string()
            } else {
                format!("{:.2}", dg_rates[i - 1])
            };
            let ft_rate = if i == 0 {
                String::new()
            } else {
                format!("{:.2}", ft_rates[i - 1])
            };
            println!(
                "{:.6}\t{:.6e}\t{rates}\t{:.6e}\t{ft_rate}",
                hs[i], dg[i], ft[i]
            );
        }
        println!();
    }
    Ok(())
}

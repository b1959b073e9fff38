//! Driving a study from a configuration string: the same key=value format
//! the command-line binary reads from a file, parsed and executed in
//! process, with the CSV table and a mesh digest printed.
//!
//! The equivalent shell invocation is
//!     qtdg run --config study.conf

use qtdg::driver::{mesh_dump, run, run_csv, RunConfig};

fn main() -> qtdg::error::Result<()> {
    let config = RunConfig::parse(
        "
        # two degrees on a 2d medium varying in both directions
        problem = airy2d
        space = QW
        p = 1, 2
        mesh = prism
        h = 0.5, 0.25, 0.125
        params = default
        ",
    )?;
    let outcome = run(&config)?;
    assert!(!outcome.any_flagged);
    print!("{}", run_csv(&outcome));

    for rows in outcome.rows.chunks(config.hs.len()) {
        let last = rows.last().unwrap();
        println!(
            "p = {}: finest dg rate {:.2}, final-time rate {:.2}",
            last.degree,
            last.dg_rate.unwrap(),
            last.ft_rate.unwrap()
        );
    }

    let dump = mesh_dump(&config)?;
    println!("\ncoarsest mesh, first lines of the dump:");
    for line in dump.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}

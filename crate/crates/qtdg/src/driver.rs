//! Experiment driver: parse a line-oriented key=value run configuration,
//! build meshes and parameters, solve over a refinement sequence, measure
//! errors and energies, and emit convergence tables as CSV.
//!
//! Configuration keys (unknown keys are rejected):
//!
//! | key            | value                                                |
//! |----------------|------------------------------------------------------|
//! | problem        | airy1d, airy2d, power2d, bessel1d, gaussian-pulse, hat |
//! | space / spaces | QW, QT, Y, W (comma list for comparisons)            |
//! | p              | comma list of nonnegative integers                   |
//! | mesh           | cartesian, prism, tent                               |
//! | h              | comma list of mesh sizes, strictly decreasing        |
//! | params         | default, zero, custom, select:alpha+beta+mu1+mu2     |
//! | alpha, beta, mu1, mu2 | constants for params = custom                 |
//! | delta          | optional Robin flux weight override                  |
//! | theta          | optional Robin impedance                             |
//! | workers        | solver worker threads (tent meshes)                  |
//! | quad_order     | quadrature point override per direction              |
//! | tent_safety    | causality safety factor in (0, 1], default 1         |
//! | reference_refine | build a reference solution at h_min/this and measure final-time errors against it (for problems without closed forms) |
//! | out            | output directory for CSV files                       |
//!
//! `# comments`, blank lines, and `[section]` headers are allowed and
//! ignored. The run CSV schema is fixed: h, p, ndof, dg_error, dg_rate,
//! ft_error, ft_rate, solve_seconds, cond_estimate, energy_loss_fraction.
//! All numeric columns except the timing reproduce bit-for-bit across
//! reruns of the same configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use crate::analysis::{
    dg_norm_error, final_time_error, final_time_error_vs_reference,
};
use crate::assembly::{DgParameters, ParameterPolicy};
use crate::basis::{vector_space_dim, SpaceKind};
use crate::error::{Error, Result};
use crate::mesh::{
    build_cartesian_1d, build_prism_2d, pitch_tents_1d, SpaceTimeMesh,
};
use crate::problems::{benchmark, BenchmarkProblem};
use crate::solver::{solve, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKindSpec {
    Cartesian,
    Prism,
    Tent,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: String,
    pub spaces: Vec<SpaceKind>,
    pub degrees: Vec<u32>,
    pub mesh: MeshKindSpec,
    pub hs: Vec<f64>,
    pub params: DgParameters,
    pub workers: usize,
    pub quad_order: Option<usize>,
    pub tent_safety: f64,
    pub reference_refine: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

fn config_err(msg: String) -> Error {
    Error::Config(msg)
}

fn parse_space(tok: &str) -> Result<SpaceKind> {
    match tok.trim().to_ascii_uppercase().as_str() {
        "QW" => Ok(SpaceKind::QW),
        "QT" => Ok(SpaceKind::QT),
        "Y" => Ok(SpaceKind::Y),
        "W" => Ok(SpaceKind::W),
        other => Err(config_err(format!(
            "unknown space '{other}' (expected QW, QT, Y, or W)"
        ))),
    }
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(value: &str, f: F) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|tok| f(tok.trim()))
        .collect::<Result<Vec<T>>>()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut problem = None;
        let mut spaces = None;
        let mut degrees = None;
        let mut mesh = None;
        let mut hs: Option<Vec<f64>> = None;
        let mut params_kind: Option<String> = None;
        let mut custom = [None::<f64>; 4];
        let mut theta = None;
        let mut delta = None;
        let mut workers = 1usize;
        let mut quad_order = None;
        let mut tent_safety = 1.0f64;
        let mut reference_refine = None;
        let mut out_dir = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(format!(
                    "line {}: expected key = value, got '{line}'",
                    lineno + 1
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            let float = |what: &str| -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|_| config_err(format!("{what} must be a number, got '{value}'")))
            };
            match key {
                "problem" => problem = Some(value.to_string()),
                "space" | "spaces" => spaces = Some(parse_list(value, parse_space)?),
                "p" => {
                    degrees = Some(parse_list(value, |tok| {
                        tok.parse::<u32>().map_err(|_| {
                            config_err(format!("p must be a nonnegative integer, got '{tok}'"))
                        })
                    })?)
                }
                "mesh" => {
                    mesh = Some(match value {
                        "cartesian" => MeshKindSpec::Cartesian,
                        "prism" => MeshKindSpec::Prism,
                        "tent" => MeshKindSpec::Tent,
                        other => {
                            return Err(config_err(format!(
                                "unknown mesh kind '{other}' (expected cartesian, prism, or tent)"
                            )))
                        }
                    })
                }
                "h" => {
                    hs = Some(parse_list(value, |tok| {
                        tok.parse::<f64>()
                            .map_err(|_| config_err(format!("h must be numbers, got '{tok}'")))
                    })?)
                }
                "params" => params_kind = Some(value.to_string()),
                "alpha" => custom[0] = Some(float("alpha")?),
                "beta" => custom[1] = Some(float("beta")?),
                "mu1" => custom[2] = Some(float("mu1")?),
                "mu2" => custom[3] = Some(float("mu2")?),
                "theta" => theta = Some(float("theta")?),
                "delta" => delta = Some(float("delta")?),
                "workers" => {
                    workers = value.parse::<usize>().map_err(|_| {
                        config_err(format!("workers must be a positive integer, got '{value}'"))
                    })?
                }
                "quad_order" => {
                    quad_order = Some(value.parse::<usize>().map_err(|_| {
                        config_err(format!(
                            "quad_order must be a positive integer, got '{value}'"
                        ))
                    })?)
                }
                "tent_safety" => tent_safety = float("tent_safety")?,
                "reference_refine" => {
                    reference_refine = Some(value.parse::<usize>().map_err(|_| {
                        config_err(format!(
                            "reference_refine must be an integer >= 2, got '{value}'"
                        ))
                    })?)
                }
                "out" => out_dir = Some(PathBuf::from(value)),
                other => {
                    return Err(config_err(format!("unknown configuration key '{other}'")))
                }
            }
        }

        let problem = problem.ok_or_else(|| config_err("missing key 'problem'".into()))?;
        let spaces = spaces.ok_or_else(|| config_err("missing key 'space'".into()))?;
        let degrees = degrees.ok_or_else(|| config_err("missing key 'p'".into()))?;
        let mesh = mesh.ok_or_else(|| config_err("missing key 'mesh'".into()))?;
        let hs = hs.ok_or_else(|| config_err("missing key 'h'".into()))?;
        if hs.is_empty() || degrees.is_empty() || spaces.is_empty() {
            return Err(config_err("space, p, and h lists must be nonempty".into()));
        }
        for h in &hs {
            if !(*h > 0.0) {
                return Err(config_err(format!("mesh sizes must be positive, got {h}")));
            }
        }
        for pair in hs.windows(2) {
            if !(pair[1] < pair[0]) {
                return Err(config_err(
                    "mesh sizes must be strictly decreasing".into(),
                ));
            }
        }
        if !(tent_safety > 0.0 && tent_safety <= 1.0) {
            return Err(config_err(format!(
                "tent_safety must lie in (0, 1], got {tent_safety}"
            )));
        }
        if workers == 0 {
            return Err(config_err("workers must be at least 1".into()));
        }
        if let Some(r) = reference_refine {
            if r < 2 {
                return Err(config_err(format!(
                    "reference_refine must be at least 2, got {r}"
                )));
            }
        }

        let policy = match params_kind.as_deref().unwrap_or("default") {
            "default" | "paper-default" => ParameterPolicy::Impedance,
            "zero" => ParameterPolicy::Zero,
            "custom" => ParameterPolicy::Custom {
                alpha: custom[0]
                    .ok_or_else(|| config_err("params = custom needs key 'alpha'".into()))?,
                beta: custom[1]
                    .ok_or_else(|| config_err("params = custom needs key 'beta'".into()))?,
                mu1: custom[2]
                    .ok_or_else(|| config_err("params = custom needs key 'mu1'".into()))?,
                mu2: custom[3]
                    .ok_or_else(|| config_err("params = custom needs key 'mu2'".into()))?,
            },
            other => {
                if let Some(list) = other.strip_prefix("select:") {
                    let mut on = [false; 4];
                    for tok in list.split('+').filter(|t| !t.trim().is_empty()) {
                        match tok.trim() {
                            "alpha" => on[0] = true,
                            "beta" => on[1] = true,
                            "mu1" => on[2] = true,
                            "mu2" => on[3] = true,
                            bad => {
                                return Err(config_err(format!(
                                    "unknown select token '{bad}' (expected alpha, beta, mu1, mu2)"
                                )))
                            }
                        }
                    }
                    ParameterPolicy::Selective {
                        alpha: on[0],
                        beta: on[1],
                        mu1: on[2],
                        mu2: on[3],
                    }
                } else {
                    return Err(config_err(format!(
                        "unknown params policy '{other}' (expected default, zero, custom, or select:...)"
                    )));
                }
            }
        };

        Ok(RunConfig {
            problem,
            spaces,
            degrees,
            mesh,
            hs,
            params: DgParameters {
                policy,
                theta,
                delta,
            },
            workers,
            quad_order,
            tent_safety,
            reference_refine,
            out_dir,
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<RunConfig> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }
}

/// Build the mesh of one refinement level for a benchmark problem. The mesh
/// size h is the spatial cell size; time steps are h (rounded to tile the
/// cylinder), or bounded by causality on tent meshes.
pub fn build_mesh(
    problem: &BenchmarkProblem,
    kind: MeshKindSpec,
    h: f64,
    tent_safety: f64,
) -> Result<SpaceTimeMesh> {
    let lx = problem.domain_hi[0] - problem.domain_lo[0];
    let t_final = problem.t_final;
    let steps = |len: f64| ((len / h - 1e-9).ceil() as usize).max(1);
    match (kind, problem.n) {
        (MeshKindSpec::Cartesian, 1) => build_cartesian_1d(
            problem.domain_lo[0],
            problem.domain_hi[0],
            steps(lx),
            t_final,
            steps(t_final),
            &problem.coeff,
            problem.bc,
        ),
        (MeshKindSpec::Prism, 2) => {
            let ly = problem.domain_hi[1] - problem.domain_lo[1];
            build_prism_2d(
                problem.domain_lo,
                problem.domain_hi,
                steps(lx),
                steps(ly),
                steps(t_final),
                t_final,
                &problem.coeff,
                problem.bc,
            )
        }
        (MeshKindSpec::Tent, 1) => {
            let nx = steps(lx);
            let grid: Vec<f64> = (0..=nx)
                .map(|i| problem.domain_lo[0] + lx * i as f64 / nx as f64)
                .collect();
            pitch_tents_1d(&grid, t_final, &problem.coeff, tent_safety, problem.bc)
        }
        (MeshKindSpec::Cartesian, n) | (MeshKindSpec::Tent, n) => Err(config_err(format!(
            "{} meshes need a 1-dimensional problem, but '{}' has n = {n} (use mesh = prism)",
            if kind == MeshKindSpec::Tent { "tent" } else { "cartesian" },
            problem.name
        ))),
        (MeshKindSpec::Prism, n) => Err(config_err(format!(
            "prism meshes need a 2-dimensional problem, but '{}' has n = {n} (use mesh = cartesian or tent)",
            problem.name
        ))),
    }
}

/// One measured refinement level.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub space: SpaceKind,
    pub h: f64,
    pub degree: u32,
    pub ndof: usize,
    pub dg_error: Option<f64>,
    pub dg_rate: Option<f64>,
    pub ft_error: Option<f64>,
    pub ft_rate: Option<f64>,
    pub solve_seconds: f64,
    pub cond_estimate: Option<f64>,
    pub energy_loss_fraction: Option<f64>,
    pub flagged: bool,
    /// Human-readable failure note for flagged rows.
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub rows: Vec<RunRow>,
    pub any_flagged: bool,
}

fn pair_rate(prev: Option<(f64, f64)>, err: f64, h: f64) -> Option<f64> {
    let (e0, h0) = prev?;
    if e0 > 0.0 && err > 0.0 && h < h0 {
        Some((e0 / err).ln() / (h0 / h).ln())
    } else {
        None
    }
}

/// Solve and measure every (space, degree, h) combination of a
/// configuration. `run` requires a single space; `compare` accepts several.
fn sweep(config: &RunConfig, spaces: &[SpaceKind]) -> Result<RunOutcome> {
    let problem = benchmark(&config.problem)?;
    let mut outcome = RunOutcome::default();
    for &space in spaces {
        for &degree in &config.degrees {
            // Reference solution on a finer mesh for problems without a
            // closed-form solution, one per (space, degree) series.
            let reference = match (problem.exact.as_ref(), config.reference_refine) {
                (None, Some(refine)) => {
                    let h_ref = config.hs.last().unwrap() / refine as f64;
                    let mesh = build_mesh(&problem, config.mesh, h_ref, config.tent_safety)?;
                    let options = SolverOptions {
                        quad_override: config.quad_order,
                        workers: config.workers,
                        ..Default::default()
                    };
                    let (sol, _) = solve(
                        &mesh,
                        &problem.coeff,
                        space,
                        degree,
                        config.params.clone(),
                        problem.data.as_ref(),
                        &options,
                    )?;
                    Some((mesh, sol))
                }
                _ => None,
            };

            let mut prev_dg: Option<(f64, f64)> = None;
            let mut prev_ft: Option<(f64, f64)> = None;
            for &h in &config.hs {
                let mesh = build_mesh(&problem, config.mesh, h, config.tent_safety)?;
                let ndof =
                    mesh.elements.len() * vector_space_dim(space, problem.n, degree);
                let options = SolverOptions {
                    quad_override: config.quad_order,
                    workers: config.workers,
                    ..Default::default()
                };
                let started = Instant::now();
                let solved = solve(
                    &mesh,
                    &problem.coeff,
                    space,
                    degree,
                    config.params.clone(),
                    problem.data.as_ref(),
                    &options,
                );
                let solve_seconds = started.elapsed().as_secs_f64();
                let mut row = RunRow {
                    space,
                    h,
                    degree,
                    ndof,
                    dg_error: None,
                    dg_rate: None,
                    ft_error: None,
                    ft_rate: None,
                    solve_seconds,
                    cond_estimate: None,
                    energy_loss_fraction: None,
                    flagged: false,
                    note: None,
                };
                match solved {
                    Err(e) => {
                        row.flagged = true;
                        row.note = Some(e.to_string());
                        prev_dg = None;
                        prev_ft = None;
                    }
                    Ok((sol, report)) => {
                        row.flagged = report.flagged();
                        if row.flagged {
                            row.note = Some(format!(
                                "layer residuals above tolerance in layers {:?}",
                                report.flagged_layers
                            ));
                        }
                        row.cond_estimate = Some(report.condition_estimate);
                        row.energy_loss_fraction = Some(report.energy_loss_fraction());
                        if let Some(exact) = problem.exact.as_ref() {
                            let dg = dg_norm_error(
                                &mesh,
                                &problem.coeff,
                                config.params.clone(),
                                &sol,
                                exact.as_ref(),
                                config.quad_order,
                            )?;
                            let ft = final_time_error(
                                &mesh,
                                &problem.coeff,
                                &sol,
                                exact.as_ref(),
                                config.quad_order,
                            )?;
                            row.dg_error = Some(dg);
                            row.dg_rate = pair_rate(prev_dg, dg, h);
                            row.ft_error = Some(ft);
                            row.ft_rate = pair_rate(prev_ft, ft, h);
                            prev_dg = Some((dg, h));
                            prev_ft = Some((ft, h));
                        } else if let Some((ref_mesh, ref_sol)) = reference.as_ref() {
                            let ft = final_time_error_vs_reference(
                                &mesh,
                                &problem.coeff,
                                &sol,
                                ref_mesh,
                                ref_sol,
                                config.quad_order,
                            )?;
                            row.ft_error = Some(ft);
                            row.ft_rate = pair_rate(prev_ft, ft, h);
                            prev_ft = Some((ft, h));
                        }
                    }
                }
                outcome.any_flagged |= row.flagged;
                outcome.rows.push(row);
            }
        }
    }
    Ok(outcome)
}

/// Run a single-space configuration.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    if config.spaces.len() != 1 {
        return Err(config_err(format!(
            "run expects exactly one space, got {} (use compare for space lists)",
            config.spaces.len()
        )));
    }
    sweep(config, &config.spaces)
}

/// Run every space of the configuration on the same meshes and merge the
/// rows for side-by-side comparison.
pub fn compare(config: &RunConfig) -> Result<RunOutcome> {
    sweep(config, &config.spaces)
}

fn push_cell(out: &mut String, value: Option<f64>, precision: usize) {
    if let Some(v) = value {
        let _ = write!(out, "{v:.precision$e}");
    }
}

fn format_rows(rows: &[RunRow], with_space: bool) -> String {
    let mut out = String::new();
    if with_space {
        out.push_str("space,");
    }
    out.push_str(
        "h,p,ndof,dg_error,dg_rate,ft_error,ft_rate,solve_seconds,cond_estimate,energy_loss_fraction\n",
    );
    for row in rows {
        if with_space {
            let _ = write!(out, "{:?},", row.space);
        }
        let _ = write!(out, "{},{},{},", row.h, row.degree, row.ndof);
        push_cell(&mut out, row.dg_error, 12);
        out.push(',');
        if let Some(r) = row.dg_rate {
            let _ = write!(out, "{r:.6}");
        }
        out.push(',');
        push_cell(&mut out, row.ft_error, 12);
        out.push(',');
        if let Some(r) = row.ft_rate {
            let _ = write!(out, "{r:.6}");
        }
        let _ = write!(out, ",{:.3}", row.solve_seconds);
        out.push(',');
        push_cell(&mut out, row.cond_estimate, 6);
        out.push(',');
        push_cell(&mut out, row.energy_loss_fraction, 6);
        out.push('\n');
    }
    out
}

/// The fixed-schema CSV of a `run` outcome.
pub fn run_csv(outcome: &RunOutcome) -> String {
    format_rows(&outcome.rows, false)
}

/// The comparison CSV: the same schema with a leading `space` column.
pub fn compare_csv(outcome: &RunOutcome) -> String {
    format_rows(&outcome.rows, true)
}

/// Text dump of the coarsest configured mesh.
pub fn mesh_dump(config: &RunConfig) -> Result<String> {
    let problem = benchmark(&config.problem)?;
    let mesh = build_mesh(&problem, config.mesh, config.hs[0], config.tent_safety)?;
    Ok(mesh.dump())
}

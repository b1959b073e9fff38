//! Acceptance suite: one test per shipping criterion, each printing a
//! single PASS/FAIL line (visible with --nocapture) and failing the target
//! when its checks do not hold.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qtdg::airy::{airy_ai, airy_ai_prime, airy_ai_with_prime};
use qtdg::analysis::{dg_norm_error, energy_trace};
use qtdg::assembly::{assemble_global, DgAssembly, DgParameters, ParameterPolicy};
use qtdg::basis::{
    build_qu_basis, qt_space_dim, qu_space_dim, quasi_trefftz_residuals, vector_space_dim,
    SpaceKind,
};
use qtdg::coefficients::{CoefficientField, TaylorData};
use qtdg::driver::{compare, run, RunConfig};
use qtdg::mesh::{build_cartesian_1d, build_prism_2d, pitch_tents_1d, BoundaryKind};
use qtdg::multiindex::MultiIndex;
use qtdg::polynomial::SpaceTimePolynomial;
use qtdg::problems::{benchmark, ExactData, ExactSolution};
use qtdg::solver::{solve, solve_tents_parallel, SolverOptions};

fn criterion(label: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("criterion {label}: PASS"),
        Err(msg) => {
            println!("criterion {label}: FAIL ({msg})");
            panic!("criterion {label} failed: {msg}");
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Monomial coefficient vector of a center-(0,0), scale-1 polynomial over
/// all space-time indices of total order <= deg (1d).
fn monomial_vector(f: &SpaceTimePolynomial, deg: u32) -> Vec<f64> {
    let mut out = Vec::new();
    for ix in 0..=deg {
        for it in 0..=(deg - ix) {
            out.push(f.coefficient(&MultiIndex::new([ix, 0], it)));
        }
    }
    out
}

fn rank_of(rows: &[Vec<f64>]) -> usize {
    let cols = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    DMatrix::from_row_slice(rows.len(), cols, &flat).rank(1e-12)
}

#[test]
fn criterion_01_low_order_basis_spans() {
    criterion("01 low-order basis spans", || {
        let coeff = CoefficientField::AffineG {
            rho: 1.0,
            g0: 1.0,
            grad: [1.0, 0.0],
        };
        // Reference spans for the medium G = 1 + x at center (0,0): the
        // degree-2 and degree-3 wave-adapted scalar spaces.
        let poly = |terms: &[(u32, u32, f64)], deg: u32| -> Vec<f64> {
            let mut f = SpaceTimePolynomial::zero(1, [0.0, 0.0], 0.0, 1.0);
            for &(ix, it, c) in terms {
                f.set_coefficient(MultiIndex::new([ix, 0], it), c);
            }
            monomial_vector(&f, deg)
        };
        for (p, refs) in [
            (
                2u32,
                vec![
                    poly(&[(0, 0, 1.0)], 2),
                    poly(&[(1, 0, 1.0)], 2),
                    poly(&[(0, 1, 1.0)], 2),
                    poly(&[(1, 1, 1.0)], 2),
                    poly(&[(2, 0, 1.0), (0, 2, 1.0)], 2),
                ],
            ),
            (
                3u32,
                vec![
                    poly(&[(0, 0, 1.0)], 3),
                    poly(&[(1, 0, 1.0)], 3),
                    poly(&[(0, 1, 1.0)], 3),
                    poly(&[(1, 1, 1.0)], 3),
                    poly(&[(2, 0, 1.0), (1, 2, -1.0), (0, 2, 1.0)], 3),
                    poly(&[(1, 2, 3.0), (3, 0, 1.0)], 3),
                    poly(&[(0, 3, 1.0), (2, 1, 3.0)], 3),
                ],
            ),
        ] {
            let taylor = coeff.taylor_data(&[0.0], p - 1).map_err(fail)?;
            let basis = build_qu_basis(1, p, &taylor, [0.0, 0.0], 0.0, 1.0).map_err(fail)?;
            ensure!(
                basis.len() == refs.len(),
                "degree {p}: computed {} functions, reference lists {}",
                basis.len(),
                refs.len()
            );
            let computed: Vec<Vec<f64>> =
                basis.iter().map(|f| monomial_vector(f, p)).collect();
            let mut stacked = computed.clone();
            stacked.extend(refs.iter().cloned());
            let (rc, rr, rs) = (rank_of(&computed), rank_of(&refs), rank_of(&stacked));
            ensure!(
                rc == refs.len() && rr == refs.len() && rs == refs.len(),
                "degree {p}: ranks computed {rc}, reference {rr}, stacked {rs}, want {}",
                refs.len()
            );
        }
        Ok(())
    });
}

fn binom(a: u32, b: u32) -> usize {
    let mut out = 1usize;
    for i in 0..b {
        out = out * (a - i) as usize / (i + 1) as usize;
    }
    out
}

#[test]
fn criterion_02_space_dimensions() {
    criterion("02 space dimensions", || {
        for p in 0..=6u32 {
            ensure!(
                qu_space_dim(1, p) == (2 * p + 1) as usize,
                "scalar dim in 1d at degree {p}"
            );
            ensure!(
                qu_space_dim(2, p) == ((p + 1) * (p + 1)) as usize,
                "scalar dim in 2d at degree {p}"
            );
            for n in [1usize, 2] {
                ensure!(
                    qt_space_dim(n, p) == (n + 1) * binom(p + n as u32, n as u32),
                    "first-order dim at n = {n}, degree {p}"
                );
                ensure!(
                    vector_space_dim(SpaceKind::QW, n, p) == qu_space_dim(n, p + 1) - 1,
                    "vector dim at n = {n}, degree {p}"
                );
            }
        }
        Ok(())
    });
}

fn random_taylor(n: usize, order: u32, rng: &mut ChaCha8Rng) -> TaylorData {
    let mut td = TaylorData {
        n,
        order,
        zeta: Default::default(),
        g: Default::default(),
    };
    for i in 0..=order {
        for j in 0..=if n == 2 { order - i } else { 0 } {
            let m = [i, j];
            if i == 0 && j == 0 {
                td.zeta.insert(m, rng.gen_range(0.5..2.0));
                td.g.insert(m, rng.gen_range(0.5..2.0));
            } else {
                let damp = 2f64.powi((i + j) as i32);
                td.zeta.insert(m, rng.gen_range(-0.5..0.5) / damp);
                td.g.insert(m, rng.gen_range(-0.5..0.5) / damp);
            }
        }
    }
    td
}

fn max_coefficient(f: &SpaceTimePolynomial) -> f64 {
    f.coefficients()
        .values()
        .fold(0.0f64, |m, c| m.max(c.abs()))
}

#[test]
fn criterion_03_residual_annihilation() {
    criterion("03 residual annihilation", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2026);
        for draw in 0..200 {
            let n = 1 + draw % 2;
            let p = (draw % 6) as u32;
            let td = random_taylor(n, 5, &mut rng);
            let basis = build_qu_basis(n, p, &td, [0.0, 0.0], 0.0, 1.0).map_err(fail)?;
            ensure!(
                basis.len() == qu_space_dim(n, p),
                "draw {draw}: wrong basis count"
            );
            if p >= 2 {
                for f in &basis {
                    let scale = 1.0 + max_coefficient(f);
                    for (idx, r) in quasi_trefftz_residuals(f, &td, p - 2) {
                        ensure!(
                            r.abs() <= 1e-12 * scale,
                            "draw {draw} (n={n}, p={p}): residual {r:e} at {idx:?}"
                        );
                    }
                }
            }
            // Truncating the material data to its value at the center must
            // produce a fully Trefftz basis: the residual vanishes as a
            // polynomial, not only in its low-order derivatives.
            let mut frozen = td.truncated(0);
            frozen.order = 5;
            let basis = build_qu_basis(n, p, &frozen, [0.0, 0.0], 0.0, 1.0).map_err(fail)?;
            for f in &basis {
                let scale = 1.0 + max_coefficient(f);
                for (idx, r) in quasi_trefftz_residuals(f, &frozen, p) {
                    ensure!(
                        r.abs() <= 1e-12 * scale,
                        "draw {draw} frozen (n={n}, p={p}): residual {r:e} at {idx:?}"
                    );
                }
            }
        }
        Ok(())
    });
}

/// u = 3t: a constant state (v = 3, sigma = 0) solving the system for any
/// material.
struct ConstantState;

impl ExactSolution for ConstantState {
    fn n(&self) -> usize {
        1
    }
    fn u_derivative(&self, k: &MultiIndex, _x: &[f64], t: f64) -> f64 {
        match (k.ix[0], k.it) {
            (0, 0) => 3.0 * t,
            (0, 1) => 3.0,
            _ => 0.0,
        }
    }
}

/// u = 1 + 2x + 3t + xt + (x^2 + t^2)/2 on a unit-coefficient medium.
struct Quadratic1d;

impl ExactSolution for Quadratic1d {
    fn n(&self) -> usize {
        1
    }
    fn u_derivative(&self, k: &MultiIndex, x: &[f64], t: f64) -> f64 {
        match (k.ix[0], k.it) {
            (0, 0) => 1.0 + 2.0 * x[0] + 3.0 * t + x[0] * t + 0.5 * (x[0] * x[0] + t * t),
            (1, 0) => 2.0 + t + x[0],
            (0, 1) => 3.0 + x[0] + t,
            (1, 1) | (2, 0) | (0, 2) => 1.0,
            _ => 0.0,
        }
    }
}

/// u = 1 + x + y + 2t + xt + yt + (x^2 + y^2 + 2 t^2)/2, unit coefficients.
struct Quadratic2d;

impl ExactSolution for Quadratic2d {
    fn n(&self) -> usize {
        2
    }
    fn u_derivative(&self, k: &MultiIndex, x: &[f64], t: f64) -> f64 {
        match (k.ix[0], k.ix[1], k.it) {
            (0, 0, 0) => {
                1.0 + x[0]
                    + x[1]
                    + 2.0 * t
                    + (x[0] + x[1]) * t
                    + 0.5 * (x[0] * x[0] + x[1] * x[1])
                    + t * t
            }
            (1, 0, 0) => 1.0 + t + x[0],
            (0, 1, 0) => 1.0 + t + x[1],
            (0, 0, 1) => 2.0 + x[0] + x[1] + 2.0 * t,
            (1, 0, 1) | (0, 1, 1) | (2, 0, 0) | (0, 2, 0) => 1.0,
            (0, 0, 2) => 2.0,
            _ => 0.0,
        }
    }
}

#[test]
fn criterion_04_polynomial_reproduction() {
    criterion("04 polynomial reproduction", || {
        let policies = [
            DgParameters::impedance(),
            DgParameters {
                policy: ParameterPolicy::Custom {
                    alpha: 0.7,
                    beta: 1.3,
                    mu1: 0.2,
                    mu2: 0.4,
                },
                theta: None,
                delta: None,
            },
        ];
        let options = SolverOptions::default();
        let unit = CoefficientField::Constant { rho: 1.0, g: 1.0 };
        let airy = benchmark("airy1d").map_err(fail)?;

        let mut cases: Vec<(&str, _, Arc<dyn ExactSolution>)> = Vec::new();
        cases.push((
            "constant state, varying medium",
            build_cartesian_1d(0.0, 5.0, 4, 5.0, 4, &airy.coeff, BoundaryKind::Dirichlet)
                .map_err(fail)?,
            Arc::new(ConstantState),
        ));
        cases.push((
            "quadratic, 1+1d slabs",
            build_cartesian_1d(0.0, 1.0, 4, 1.0, 4, &unit, BoundaryKind::Dirichlet)
                .map_err(fail)?,
            Arc::new(Quadratic1d),
        ));
        let grid: Vec<f64> = (0..=4).map(|i| i as f64 / 4.0).collect();
        cases.push((
            "quadratic, 1+1d tents",
            pitch_tents_1d(&grid, 0.5, &unit, 1.0, BoundaryKind::Dirichlet).map_err(fail)?,
            Arc::new(Quadratic1d),
        ));
        cases.push((
            "quadratic, 2+1d prisms",
            build_prism_2d(
                [0.0, 0.0],
                [1.0, 1.0],
                2,
                2,
                2,
                1.0,
                &unit,
                BoundaryKind::Dirichlet,
            )
            .map_err(fail)?,
            Arc::new(Quadratic2d),
        ));

        for (what, mesh, exact) in &cases {
            let coeff = if *what == "constant state, varying medium" {
                airy.coeff.clone()
            } else {
                unit.clone()
            };
            for params in &policies {
                let data = ExactData {
                    exact: exact.clone(),
                    coeff: coeff.clone(),
                };
                let (sol, _) = solve(
                    mesh,
                    &coeff,
                    SpaceKind::QW,
                    2,
                    params.clone(),
                    &data,
                    &options,
                )
                .map_err(fail)?;
                let err = dg_norm_error(mesh, &coeff, params.clone(), &sol, exact.as_ref(), None)
                    .map_err(fail)?;
                ensure!(err < 1e-9, "{what}: error {err:e} with {:?}", params.policy);
            }
        }
        Ok(())
    });
}

/// u = 0.
struct Silence;

impl ExactSolution for Silence {
    fn n(&self) -> usize {
        1
    }
    fn u_derivative(&self, _k: &MultiIndex, _x: &[f64], _t: f64) -> f64 {
        0.0
    }
}

#[test]
fn criterion_05_quadratic_form_equals_norm() {
    criterion("05 quadratic form equals its norm", || {
        let airy = benchmark("airy1d").map_err(fail)?;
        let params = DgParameters::impedance();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let zero: Arc<dyn ExactSolution> = Arc::new(Silence);

        let mut cases = Vec::new();
        for bc in [BoundaryKind::Dirichlet, BoundaryKind::Neumann] {
            cases.push((
                build_cartesian_1d(0.0, 5.0, 4, 5.0, 4, &airy.coeff, bc).map_err(fail)?,
                25usize,
                true,
            ));
        }
        let grid: Vec<f64> = (0..=8).map(|i| 5.0 * i as f64 / 8.0).collect();
        cases.push((
            pitch_tents_1d(&grid, 1.0, &airy.coeff, 1.0, BoundaryKind::Dirichlet)
                .map_err(fail)?,
            20usize,
            false,
        ));

        for (mesh, fields, exact_equality) in &cases {
            let degree = 2;
            let asm = DgAssembly::new(mesh, &airy.coeff, SpaceKind::QW, degree, params.clone(), None);
            let data = ExactData {
                exact: zero.clone(),
                coeff: airy.coeff.clone(),
            };
            let global = assemble_global(&asm, &data).map_err(fail)?;
            let dim = asm.dofs_per_element();
            for field in 0..*fields {
                let coefficients: Vec<Vec<f64>> = (0..mesh.elements.len())
                    .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect();
                let flat: Vec<f64> = coefficients.iter().flatten().copied().collect();
                let quad_form: f64 = global
                    .apply(&flat)
                    .iter()
                    .zip(&flat)
                    .map(|(y, c)| y * c)
                    .sum();
                let sol = qtdg::solver::DiscreteSolution {
                    space: SpaceKind::QW,
                    degree,
                    coefficients,
                };
                let norm = dg_norm_error(
                    mesh,
                    &airy.coeff,
                    params.clone(),
                    &sol,
                    zero.as_ref(),
                    None,
                )
                .map_err(fail)?;
                let norm2 = norm * norm;
                if *exact_equality {
                    ensure!(
                        (quad_form - norm2).abs() <= 1e-8 * norm2,
                        "field {field}: quadratic form {quad_form:e} vs norm squared {norm2:e}"
                    );
                } else {
                    // Causal slanted faces only strengthen the form.
                    ensure!(
                        quad_form >= norm2 * (1.0 - 1e-8),
                        "field {field} on tents: {quad_form:e} below {norm2:e}"
                    );
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_06_smooth_1d_convergence() {
    criterion("06 smooth 1d convergence", || {
        let config = RunConfig::parse(
            "problem=airy1d\nspace=QW\np=1,2,3\nmesh=cartesian\nh=0.5,0.25,0.125,0.0625,0.03125\nparams=default",
        )
        .map_err(fail)?;
        let outcome = run(&config).map_err(fail)?;
        ensure!(!outcome.any_flagged, "a solver level was flagged");
        for rows in outcome.rows.chunks(config.hs.len()) {
            let p = rows[0].degree as f64;
            let last = rows.last().unwrap();
            let dg = last.dg_rate.unwrap();
            let ft = last.ft_rate.unwrap();
            ensure!(
                (dg - (p + 0.5)).abs() <= 0.2,
                "p = {p}: mesh-norm rate {dg:.3} outside {:.1} +- 0.2",
                p + 0.5
            );
            ensure!(
                (ft - (p + 1.0)).abs() <= 0.2,
                "p = {p}: final-time rate {ft:.3} outside {:.0} +- 0.2",
                p + 1.0
            );
        }
        Ok(())
    });
}

#[test]
fn criterion_07_parameter_robustness() {
    criterion("07 parameter robustness", || {
        let mut zero_error = None;
        let mut default_error = None;
        for ab in [true, false] {
            for mu in [true, false] {
                let select = format!(
                    "select:{}{}{}",
                    if ab { "alpha+beta" } else { "" },
                    if ab && mu { "+" } else { "" },
                    if mu { "mu1+mu2" } else { "" }
                );
                let config = RunConfig::parse(&format!(
                    "problem=airy1d\nspace=QW\np=4\nmesh=cartesian\nh=0.5,0.25,0.125,0.0625\nparams={select}",
                ))
                .map_err(fail)?;
                let outcome = run(&config).map_err(fail)?;
                let last = outcome.rows.last().unwrap();
                let rate = last.dg_rate.unwrap();
                ensure!(
                    (rate - 4.5).abs() <= 0.3,
                    "combo {select}: rate {rate:.3} outside 4.5 +- 0.3"
                );
                if ab && mu {
                    default_error = last.dg_error;
                }
                if !ab && !mu {
                    zero_error = last.dg_error;
                }
            }
        }
        let (zero, default) = (zero_error.unwrap(), default_error.unwrap());
        ensure!(
            zero < default,
            "zero-parameter error {zero:e} not below default {default:e}"
        );
        Ok(())
    });
}

#[test]
fn criterion_08_space_comparison_2d() {
    criterion("08 space comparison in 2d", || {
        let config = RunConfig::parse(
            "problem=power2d\nspaces=QW,Y,W\np=1,2,3\nmesh=prism\nh=0.25,0.125,0.0625\nparams=default",
        )
        .map_err(fail)?;
        let outcome = compare(&config).map_err(fail)?;
        ensure!(!outcome.any_flagged, "a solver level was flagged");
        for rows in outcome.rows.chunks(config.hs.len()) {
            let (space, p) = (rows[0].space, rows[0].degree as f64);
            let rate = rows.last().unwrap().dg_rate.unwrap();
            match space {
                SpaceKind::QW | SpaceKind::Y => ensure!(
                    (rate - (p + 0.5)).abs() <= 0.3,
                    "{space:?} p = {p}: rate {rate:.3} outside {:.1} +- 0.3",
                    p + 0.5
                ),
                SpaceKind::W => ensure!(
                    rate <= 2.3,
                    "W p = {p}: rate {rate:.3} above the stall bound 2.3"
                ),
                SpaceKind::QT => unreachable!(),
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_09_tent_solver_equivalence() {
    criterion("09 tent solver equivalence", || {
        let airy = benchmark("airy1d").map_err(fail)?;
        let params = DgParameters::impedance();
        let options = SolverOptions::default();

        // Causal element-by-element elimination reproduces the one-shot
        // solution of the full coupled system.
        let grid: Vec<f64> = (0..=5).map(|i| i as f64).collect();
        let mesh = pitch_tents_1d(&grid, 1.0, &airy.coeff, 1.0, BoundaryKind::Dirichlet)
            .map_err(fail)?;
        let (sol, _) = solve(
            &mesh,
            &airy.coeff,
            SpaceKind::QW,
            2,
            params.clone(),
            airy.data.as_ref(),
            &options,
        )
        .map_err(fail)?;
        let asm = DgAssembly::new(&mesh, &airy.coeff, SpaceKind::QW, 2, params.clone(), None);
        let global = assemble_global(&asm, airy.data.as_ref()).map_err(fail)?;
        let mut dense = DMatrix::zeros(global.ndof, global.ndof);
        for ((i, j), block) in &global.blocks {
            for (r, row) in block.outer_iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    dense[(global.offsets[*i] + r, global.offsets[*j] + c)] = *v;
                }
            }
        }
        let reference = dense
            .lu()
            .solve(&DVector::from_vec(global.rhs.clone()))
            .ok_or_else(|| "dense reference solve failed".to_string())?;
        let flat: Vec<f64> = sol.coefficients.iter().flatten().copied().collect();
        let scale = 1.0 + flat.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for (i, (a, b)) in flat.iter().zip(reference.iter()).enumerate() {
            ensure!(
                (a - b).abs() <= 1e-10 * scale,
                "dof {i}: causal {a:e} vs one-shot {b:e}"
            );
        }

        // An unforced wave in a closed domain dissipates. On slab meshes
        // every constant-time cross section is a complete mesh interface,
        // so the upwind energy identity holds slice to slice.
        let pulse = benchmark("gaussian-pulse").map_err(fail)?;
        let prisms = build_prism_2d(
            pulse.domain_lo,
            pulse.domain_hi,
            8,
            8,
            4,
            pulse.t_final,
            &pulse.coeff,
            pulse.bc,
        )
        .map_err(fail)?;
        let (on_prisms, _) = solve(
            &prisms,
            &pulse.coeff,
            SpaceKind::QW,
            1,
            params.clone(),
            pulse.data.as_ref(),
            &options,
        )
        .map_err(fail)?;
        let trace = energy_trace(&prisms, &pulse.coeff, &on_prisms, None).map_err(fail)?;
        ensure!(trace.len() >= 2, "energy trace too short");
        for pair in trace.windows(2) {
            ensure!(
                pair[1].1 <= pair[0].1 * (1.0 + 1e-10),
                "energy grew from {:e} at t = {} to {:e} at t = {}",
                pair[0].1,
                pair[0].0,
                pair[1].1,
                pair[1].0
            );
        }

        // Tent interiors are cut by constant-time slices, so only the
        // bottom and top of the cylinder are complete interfaces there;
        // dissipation holds between them.
        let hat = benchmark("hat").map_err(fail)?;
        let nx = 32;
        let grid: Vec<f64> = (0..=nx).map(|i| -0.5 + i as f64 / nx as f64).collect();
        let mesh = pitch_tents_1d(&grid, hat.t_final, &hat.coeff, 1.0, hat.bc).map_err(fail)?;
        let (sequential, _) = solve(
            &mesh,
            &hat.coeff,
            SpaceKind::QW,
            1,
            params.clone(),
            hat.data.as_ref(),
            &options,
        )
        .map_err(fail)?;
        let trace = energy_trace(&mesh, &hat.coeff, &sequential, None).map_err(fail)?;
        ensure!(trace.len() >= 2, "energy trace too short");
        let (first, last) = (trace.first().unwrap(), trace.last().unwrap());
        ensure!(
            last.1 <= first.1 * (1.0 + 1e-10),
            "tent energy grew from {:e} at t = {} to {:e} at t = {}",
            first.1,
            first.0,
            last.1,
            last.0
        );

        // Four workers race over the causal graph and land on the same
        // coefficients.
        let (parallel, _) = solve_tents_parallel(
            &mesh,
            &hat.coeff,
            SpaceKind::QW,
            1,
            params.clone(),
            hat.data.as_ref(),
            &options,
            4,
        )
        .map_err(fail)?;
        for (e, (a, b)) in sequential
            .coefficients
            .iter()
            .zip(&parallel.coefficients)
            .enumerate()
        {
            for (x, y) in a.iter().zip(b) {
                ensure!(
                    (x - y).abs() <= 1e-10,
                    "element {e}: sequential {x:e} vs parallel {y:e}"
                );
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_10_nonsmooth_reference_convergence() {
    criterion("10 non-smooth reference convergence", || {
        let config = RunConfig::parse(
            "problem=hat\nspace=QW\np=0\nmesh=cartesian\nh=0.0625,0.03125,0.015625,0.0078125,0.00390625\nparams=default\nreference_refine=8",
        )
        .map_err(fail)?;
        let outcome = run(&config).map_err(fail)?;
        let rate = outcome.rows.last().unwrap().ft_rate.unwrap();
        ensure!(
            (0.8..=1.2).contains(&rate),
            "kinked datum final-time rate {rate:.3} outside [0.8, 1.2]"
        );
        Ok(())
    });
}

#[test]
fn criterion_11_variable_density_convergence() {
    criterion("11 variable-density convergence", || {
        let config = RunConfig::parse(
            "problem=bessel1d\nspace=QW\np=2,3\nmesh=cartesian\nh=0.25,0.125,0.0625,0.03125\nparams=zero",
        )
        .map_err(fail)?;
        let outcome = run(&config).map_err(fail)?;
        for rows in outcome.rows.chunks(config.hs.len()) {
            let p = rows[0].degree as f64;
            let rate = rows.last().unwrap().dg_rate.unwrap();
            ensure!(
                (rate - (p + 0.5)).abs() <= 0.3,
                "p = {p}: rate {rate:.3} outside {:.1} +- 0.3",
                p + 0.5
            );
        }

        // Condition growth under p-refinement on a fixed mesh.
        let bessel = benchmark("bessel1d").map_err(fail)?;
        let mesh = build_cartesian_1d(2.0, 3.0, 4, 1.0, 4, &bessel.coeff, bessel.bc)
            .map_err(fail)?;
        let mut previous = 0.0;
        for p in [5u32, 10, 15] {
            let (_, report) = solve(
                &mesh,
                &bessel.coeff,
                SpaceKind::QW,
                p,
                DgParameters::zero(),
                bessel.data.as_ref(),
                &SolverOptions::default(),
            )
            .map_err(fail)?;
            ensure!(
                report.condition_estimate > previous,
                "condition estimate fell to {:e} at p = {p}",
                report.condition_estimate
            );
            previous = report.condition_estimate;
        }
        Ok(())
    });
}

#[test]
fn criterion_12_airy_evaluator() {
    criterion("12 airy evaluator", || {
        let a0 = airy_ai(0.0).map_err(fail)?;
        ensure!(
            (a0 - 0.3550280538878172).abs() < 1e-12,
            "Ai(0) = {a0:.16}"
        );
        // The defining equation as a first-order system, checked with
        // central differences so the evaluator cannot certify itself.
        let h = 1e-5;
        let mut z = -11.0;
        while z <= 1.0 {
            let (a, ap) = airy_ai_with_prime(z).map_err(fail)?;
            let d1 = (airy_ai(z + h).map_err(fail)? - airy_ai(z - h).map_err(fail)?) / (2.0 * h);
            let d2 = (airy_ai_prime(z + h).map_err(fail)?
                - airy_ai_prime(z - h).map_err(fail)?)
                / (2.0 * h);
            ensure!(
                (d1 - ap).abs() < 1e-8,
                "first derivative residual {:e} at z = {z}",
                (d1 - ap).abs()
            );
            ensure!(
                (d2 - z * a).abs() < 1e-8,
                "second derivative residual {:e} at z = {z}",
                (d2 - z * a).abs()
            );
            z += 0.05;
        }
        Ok(())
    });
}

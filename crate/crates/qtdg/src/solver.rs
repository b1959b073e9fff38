//! Causal direct solvers for the assembled DG system.
//!
//! Slab meshes march layer by layer: the within-layer matrix is identical
//! across slabs (coefficients do not depend on time), so it is assembled and
//! factored once as a block-tridiagonal system and reused; only the data
//! terms and the upwind coupling to the previous slab change per layer.
//! Tent meshes solve one small dense system per element, either sequentially
//! in causal order or through a work queue over the causal DAG in which a
//! tent becomes runnable when all of its space-like predecessors are done.
//! Each tent's system is assembled from its own quadrature and completed
//! predecessor coefficients only, so results do not depend on scheduling.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use std::time::Instant;

use ndarray::Array2;

use crate::assembly::{DgAssembly, DgParameters, PreparedBasis};
use crate::basis::SpaceKind;
use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::linalg::{add_block, dense_condition_estimate, dense_norm_1, BlockTridiagonal, DenseLu};
use crate::mesh::{FaceKind, MeshKind, SpaceTimeMesh};
use crate::problems::ProblemData;

/// Residual tolerance (relative to the layer right-hand side) above which a
/// layer is flagged in the report.
pub const LAYER_RESIDUAL_RTOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Gauss points per direction; None takes the assembly default.
    pub quad_override: Option<usize>,
    /// Worker threads for tent meshes; slab marching is single-threaded.
    pub workers: usize,
    /// Number of test elements sampled for the final Galerkin residual.
    pub residual_sample: usize,
}

impl Default for SolverOptions {
    fn default() -> SolverOptions {
        SolverOptions {
            quad_override: None,
            workers: 1,
            residual_sample: 16,
        }
    }
}

/// Per-element coefficient vectors over one discrete space.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub space: SpaceKind,
    pub degree: u32,
    pub coefficients: Vec<Vec<f64>>,
}

impl DiscreteSolution {
    /// Rebuild the local basis of one element (bases are not stored; the
    /// construction is cheap and deterministic).
    pub fn element_basis(
        &self,
        mesh: &SpaceTimeMesh,
        coeff: &CoefficientField,
        element: usize,
    ) -> Result<PreparedBasis> {
        let asm = DgAssembly::new(
            mesh,
            coeff,
            self.space,
            self.degree,
            DgParameters::zero(),
            None,
        );
        asm.prepare_basis(element)
    }

    /// (v, sigma) at a point using a prepared basis of the owning element.
    pub fn eval_with(
        &self,
        basis: &PreparedBasis,
        coeff: &CoefficientField,
        x: &[f64],
        t: f64,
    ) -> (f64, [f64; 2]) {
        crate::assembly::combine_traces(
            &basis.traces_at(coeff, x, t),
            &self.coefficients[basis.element],
        )
    }

    /// (v, sigma) at an arbitrary space-time point.
    pub fn eval(
        &self,
        mesh: &SpaceTimeMesh,
        coeff: &CoefficientField,
        x: &[f64],
        t: f64,
    ) -> Result<(f64, [f64; 2])> {
        let e = mesh.locate(x, t).ok_or(Error::OutOfRange {
            what: "evaluation point time",
            value: t,
            range: "the meshed space-time cylinder",
        })?;
        let basis = self.element_basis(mesh, coeff, e)?;
        Ok(self.eval_with(&basis, coeff, x, t))
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    /// Unknowns per causal layer.
    pub layer_sizes: Vec<usize>,
    /// Elements per causal layer: the available parallelism on tent meshes.
    pub layer_occupancy: Vec<usize>,
    /// Relative residual per layer (max over the layer's element systems).
    pub layer_residuals: Vec<f64>,
    /// Layers whose residual exceeded the tolerance.
    pub flagged_layers: Vec<usize>,
    pub assemble_seconds: f64,
    pub factor_seconds: f64,
    /// Total wall time of the solve call.
    pub solve_seconds: f64,
    /// Hager 1-norm condition estimate of the first-layer system (max over
    /// first-layer tents on tent meshes).
    pub condition_estimate: f64,
    /// Relative residual of sampled rows of the full Galerkin system.
    pub galerkin_residual: f64,
    /// Discrete energy on the initial and final boundaries.
    pub energy_initial: f64,
    pub energy_final: f64,
    pub workers: usize,
}

impl SolveReport {
    pub fn flagged(&self) -> bool {
        !self.flagged_layers.is_empty()
    }

    /// (E(0) - E(T)) / E(0), zero when the initial energy vanishes.
    pub fn energy_loss_fraction(&self) -> f64 {
        if self.energy_initial > 0.0 {
            (self.energy_initial - self.energy_final) / self.energy_initial
        } else {
            0.0
        }
    }
}

/// Solve the DG system by causal sweeps: slab marching on time-uniform
/// meshes, sequential tent-by-tent elimination on tent meshes.
pub fn solve(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    space: SpaceKind,
    degree: u32,
    params: DgParameters,
    data: &dyn ProblemData,
    options: &SolverOptions,
) -> Result<(DiscreteSolution, SolveReport)> {
    match mesh.kind {
        MeshKind::Tent1d => {
            solve_tents(mesh, coeff, space, degree, params, data, options, options.workers.max(1))
        }
        _ => solve_slabs(mesh, coeff, space, degree, params, data, options),
    }
}

/// Solve a tent mesh with a parallel work queue over the causal DAG. The
/// result matches the sequential solve exactly: every tent's system depends
/// only on its own quadrature and completed predecessors.
pub fn solve_tents_parallel(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    space: SpaceKind,
    degree: u32,
    params: DgParameters,
    data: &dyn ProblemData,
    options: &SolverOptions,
    workers: usize,
) -> Result<(DiscreteSolution, SolveReport)> {
    if !matches!(mesh.kind, MeshKind::Tent1d) {
        return Err(Error::Mesh(
            "the parallel tent solver requires a tent mesh".to_string(),
        ));
    }
    solve_tents(
        mesh,
        coeff,
        space,
        degree,
        params,
        data,
        options,
        workers.max(1),
    )
}

/// y += block * x.
fn accumulate(block: &Array2<f64>, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(block.ncols(), x.len());
    debug_assert_eq!(block.nrows(), y.len());
    for i in 0..block.nrows() {
        let mut acc = 0.0;
        for j in 0..block.ncols() {
            acc += block[[i, j]] * x[j];
        }
        y[i] += acc;
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Slab marching
// ---------------------------------------------------------------------------

fn solve_slabs(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    space: SpaceKind,
    degree: u32,
    params: DgParameters,
    data: &dyn ProblemData,
    options: &SolverOptions,
) -> Result<(DiscreteSolution, SolveReport)> {
    let t_total = Instant::now();
    let asm = DgAssembly::new(mesh, coeff, space, degree, params, options.quad_override);
    let layers = &mesh.layers;
    let nlayers = layers.len();
    let m = layers[0].len();
    for lay in layers {
        if lay.len() != m {
            return Err(Error::Mesh(
                "slab marching requires equally sized layers".to_string(),
            ));
        }
    }
    let nd = asm.dofs_per_element();

    // Position of each element within its layer.
    let mut pos = vec![0usize; mesh.elements.len()];
    for lay in layers {
        for (k, &e) in lay.iter().enumerate() {
            pos[e] = k;
        }
    }

    // All within-layer blocks except the stabilization are invariant under
    // the time translation that maps one slab onto the next (the basis
    // construction and the face integrands depend on time only through the
    // element-local offset). The stabilization weights follow the weighted
    // element radius, which grows with the wavespeed spread across absolute
    // time, so the unit-weight stabilization blocks are kept separate and
    // re-weighted per slab.
    let t_asm = Instant::now();
    let bases0: Vec<PreparedBasis> = layers[0]
        .iter()
        .map(|&e| asm.prepare_basis(e))
        .collect::<Result<_>>()?;
    let bases1: Vec<PreparedBasis> = if nlayers > 1 {
        layers[1]
            .iter()
            .map(|&e| asm.prepare_basis(e))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut shared: Vec<(usize, usize, Array2<f64>)> = Vec::new();
    let mut gls: Vec<(Array2<f64>, Array2<f64>)> = Vec::with_capacity(m);
    let mut coupling: Vec<(usize, usize, Array2<f64>)> = Vec::new();
    for (k, b) in bases0.iter().enumerate() {
        let (core, gls1, gls2) = asm.element_blocks(b);
        shared.push((k, k, core));
        gls.push((gls1, gls2));
    }
    // Lateral boundary faces per layer, for the per-slab data terms.
    let mut lateral_by_layer: Vec<Vec<usize>> = vec![Vec::new(); nlayers];
    let mut initial_faces: Vec<usize> = Vec::new();
    for face in &mesh.faces {
        match face.kind {
            FaceKind::SpaceLikeInterior => {
                let b = face.before.expect("interior face has a past element");
                let a = face.after.expect("interior face has a future element");
                if mesh.elements[b].layer != 0 {
                    continue;
                }
                let (own, cpl) = asm.spacelike_blocks(face, &bases0[pos[b]], Some(&bases1[pos[a]]));
                shared.push((pos[b], pos[b], own));
                coupling.push((pos[a], pos[b], cpl.expect("future side was supplied")));
            }
            FaceKind::Final => {
                let b = face.before.expect("final face has a past element");
                if mesh.elements[b].layer != 0 {
                    continue;
                }
                // Only single-slab meshes have final faces on layer 0; on
                // deeper meshes the reused top-face block comes from the
                // layer 0/1 interface, which has identical values.
                let (own, _) = asm.spacelike_blocks(face, &bases0[pos[b]], None);
                shared.push((pos[b], pos[b], own));
            }
            FaceKind::TimeLikeInterior => {
                let bm = face.before.expect("time-like face has a normal owner");
                let bp = face.after.expect("time-like face has two sides");
                if mesh.elements[bm].layer == 0 {
                    let blocks = asm.timelike_blocks(face, &bases0[pos[bm]], &bases0[pos[bp]]);
                    shared.push((pos[bm], pos[bm], blocks.minus_minus));
                    shared.push((pos[bm], pos[bp], blocks.minus_plus));
                    shared.push((pos[bp], pos[bm], blocks.plus_minus));
                    shared.push((pos[bp], pos[bp], blocks.plus_plus));
                }
            }
            FaceKind::Dirichlet | FaceKind::Neumann | FaceKind::Robin => {
                let b = face.before.expect("boundary face has an inner element");
                let layer = mesh.elements[b].layer;
                lateral_by_layer[layer].push(face.id);
                if layer == 0 {
                    shared.push((pos[b], pos[b], asm.boundary_matrix(face, &bases0[pos[b]])));
                }
            }
            FaceKind::Initial => initial_faces.push(face.id),
        }
    }

    // Stabilization weights of the elements of one slab.
    let mus = |s: usize| -> Vec<(f64, f64)> {
        layers[s]
            .iter()
            .map(|&e| {
                let el = &mesh.elements[e];
                asm.params.mu(el.r_kc, el.c_sup)
            })
            .collect()
    };
    // y = A_s x for the slab whose weights are `w`.
    let matvec = |w: &[(f64, f64)], x: &[f64], y: &mut [f64]| {
        y.fill(0.0);
        for (i, j, block) in &shared {
            let mut seg = vec![0.0; nd];
            accumulate(block, &x[j * nd..(j + 1) * nd], &mut seg);
            for (k, v) in seg.iter().enumerate() {
                y[i * nd + k] += v;
            }
        }
        for (k, (gls1, gls2)) in gls.iter().enumerate() {
            let (mu1, mu2) = w[k];
            let xk = &x[k * nd..(k + 1) * nd];
            let yk = &mut y[k * nd..(k + 1) * nd];
            if mu1 != 0.0 {
                let mut seg = vec![0.0; nd];
                accumulate(gls1, xk, &mut seg);
                for (i, v) in seg.iter().enumerate() {
                    yk[i] += mu1 * v;
                }
            }
            if mu2 != 0.0 {
                let mut seg = vec![0.0; nd];
                accumulate(gls2, xk, &mut seg);
                for (i, v) in seg.iter().enumerate() {
                    yk[i] += mu2 * v;
                }
            }
        }
    };

    // Row-block partition: any block size at least the coupling bandwidth
    // keeps interactions within adjacent blocks.
    let mut bandwidth = 1usize;
    for &(i, j, _) in &shared {
        bandwidth = bandwidth.max(i.abs_diff(j));
    }
    let bsize = bandwidth.min(m);
    let nblocks = m.div_ceil(bsize);
    let build_tridiagonal = |w: &[(f64, f64)]| -> BlockTridiagonal {
        let rows = |r: usize| (((r + 1) * bsize).min(m) - r * bsize) * nd;
        let mut diag: Vec<Array2<f64>> =
            (0..nblocks).map(|r| Array2::zeros((rows(r), rows(r)))).collect();
        let mut lower: Vec<Array2<f64>> = (1..nblocks)
            .map(|r| Array2::zeros((rows(r), rows(r - 1))))
            .collect();
        let mut upper: Vec<Array2<f64>> = (1..nblocks)
            .map(|r| Array2::zeros((rows(r - 1), rows(r))))
            .collect();
        let mut place = |i: usize, j: usize, block: &Array2<f64>| {
            let (ri, rj) = (i / bsize, j / bsize);
            let oi = (i - ri * bsize) * nd;
            let oj = (j - rj * bsize) * nd;
            if ri == rj {
                add_block(&mut diag[ri].view_mut(), oi, oj, &block.view());
            } else if ri == rj + 1 {
                add_block(&mut lower[rj].view_mut(), oi, oj, &block.view());
            } else if rj == ri + 1 {
                add_block(&mut upper[ri].view_mut(), oi, oj, &block.view());
            } else {
                unreachable!("within-layer coupling exceeds the block bandwidth");
            }
        };
        for (i, j, block) in &shared {
            place(*i, *j, block);
        }
        for (k, (gls1, gls2)) in gls.iter().enumerate() {
            let (mu1, mu2) = w[k];
            if mu1 != 0.0 {
                place(k, k, &(gls1 * mu1));
            }
            if mu2 != 0.0 {
                place(k, k, &(gls2 * mu2));
            }
        }
        BlockTridiagonal::new(diag, lower, upper)
    };
    let assemble_seconds = t_asm.elapsed().as_secs_f64();

    let t_factor = Instant::now();
    let mut lu = build_tridiagonal(&mus(0)).factor(0)?;
    let condition_estimate = lu.condition_estimate();
    let mut factor_seconds = t_factor.elapsed().as_secs_f64();

    // March. Each slab is solved with the factored matrix as preconditioner
    // and refined against its own blocks; if the stabilization weights have
    // drifted too far for the refinement to contract, the slab is refactored
    // exactly and the fresh factorization carried forward.
    let mut coefficients: Vec<Vec<f64>> = vec![Vec::new(); mesh.elements.len()];
    let mut layer_residuals = Vec::with_capacity(nlayers);
    let mut flagged_layers = Vec::new();
    let mut prev = vec![0.0; m * nd];
    for s in 0..nlayers {
        let w = mus(s);
        let mut rhs = vec![0.0; m * nd];
        if s == 0 {
            for &fid in &initial_faces {
                let face = &mesh.faces[fid];
                let a = face.after.expect("initial face has a future element");
                let r = asm.initial_rhs(face, &bases0[pos[a]], data);
                let off = pos[a] * nd;
                for (i, ri) in r.iter().enumerate() {
                    rhs[off + i] += ri;
                }
            }
        } else {
            for (i, j, c) in &coupling {
                let (ri, rj) = (i * nd, j * nd);
                let mut seg = vec![0.0; nd];
                accumulate(c, &prev[rj..rj + nd], &mut seg);
                for (k, v) in seg.iter().enumerate() {
                    rhs[ri + k] -= v;
                }
            }
        }
        // Boundary data of this slab, with bases rebuilt at the slab's
        // actual time offset.
        let mut slab_bases: HashMap<usize, PreparedBasis> = HashMap::new();
        for &fid in &lateral_by_layer[s] {
            let face = &mesh.faces[fid];
            let b = face.before.expect("boundary face has an inner element");
            let basis = if s == 0 {
                &bases0[pos[b]]
            } else {
                if !slab_bases.contains_key(&b) {
                    slab_bases.insert(b, asm.prepare_basis(b)?);
                }
                &slab_bases[&b]
            };
            let r = asm.boundary_rhs(face, basis, data);
            let off = pos[b] * nd;
            for (i, ri) in r.iter().enumerate() {
                rhs[off + i] += ri;
            }
        }

        let bnorm = l2(&rhs).max(f64::MIN_POSITIVE);
        let residual = |c: &[f64], scratch: &mut Vec<f64>| -> f64 {
            matvec(&w, c, scratch);
            for (a, b) in scratch.iter_mut().zip(&rhs) {
                *a = b - *a;
            }
            l2(scratch) / bnorm
        };
        let mut c = rhs.clone();
        lu.solve_in_place(&mut c);
        let mut r = vec![0.0; m * nd];
        let mut rel = residual(&c, &mut r);
        let mut iters = 0;
        while rel > 5e-14 && iters < 40 {
            let last = rel;
            let mut d = r.clone();
            lu.solve_in_place(&mut d);
            for (a, b) in c.iter_mut().zip(&d) {
                *a += b;
            }
            rel = residual(&c, &mut r);
            iters += 1;
            if !(rel < 0.5 * last) && rel > 5e-14 {
                // Stalled: the weights drifted too far. Refactor here.
                let t = Instant::now();
                lu = build_tridiagonal(&w).factor(s)?;
                factor_seconds += t.elapsed().as_secs_f64();
                c = rhs.clone();
                lu.solve_in_place(&mut c);
                rel = residual(&c, &mut r);
                break;
            }
        }
        layer_residuals.push(rel);
        if !(rel <= LAYER_RESIDUAL_RTOL) {
            flagged_layers.push(s);
        }

        for (k, &e) in layers[s].iter().enumerate() {
            coefficients[e] = c[k * nd..(k + 1) * nd].to_vec();
        }
        prev = c;
    }

    let solution = DiscreteSolution {
        space,
        degree,
        coefficients,
    };
    let galerkin_residual =
        sampled_galerkin_residual(&asm, data, &solution, options.residual_sample)?;
    let (energy_initial, energy_final) = boundary_energies(mesh, coeff, &solution, asm.quad_pts)?;
    let report = SolveReport {
        layer_sizes: vec![m * nd; nlayers],
        layer_occupancy: layers.iter().map(|l| l.len()).collect(),
        layer_residuals,
        flagged_layers,
        assemble_seconds,
        factor_seconds,
        solve_seconds: t_total.elapsed().as_secs_f64(),
        condition_estimate,
        galerkin_residual,
        energy_initial,
        energy_final,
        workers: 1,
    };
    Ok((solution, report))
}

// ---------------------------------------------------------------------------
// Tent solves
// ---------------------------------------------------------------------------

/// Assemble and solve the local system of one tent. Predecessor bases and
/// coefficients are read through the provided lookups.
fn solve_one_tent(
    asm: &DgAssembly,
    data: &dyn ProblemData,
    element: usize,
    basis: &PreparedBasis,
    pred_basis: &dyn Fn(usize) -> Arc<PreparedBasis>,
    pred_coeff: &dyn Fn(usize) -> Arc<Vec<f64>>,
) -> Result<(Vec<f64>, f64, f64)> {
    let nd = basis.dim();
    let mut matrix = asm.element_matrix(basis);
    let mut rhs = vec![0.0; nd];
    for &fid in &asm.mesh.elements[element].faces {
        let face = &asm.mesh.faces[fid];
        match face.kind {
            FaceKind::SpaceLikeInterior => {
                if face.before == Some(element) {
                    let (own, _) = asm.spacelike_blocks(face, basis, None);
                    matrix += &own;
                } else {
                    let b = face.before.expect("interior face has a past element");
                    let pb = pred_basis(b);
                    let (_, cpl) = asm.spacelike_blocks(face, &pb, Some(basis));
                    let cpl = cpl.expect("future side was supplied");
                    let c = pred_coeff(b);
                    let mut seg = vec![0.0; nd];
                    accumulate(&cpl, &c, &mut seg);
                    for (k, v) in seg.iter().enumerate() {
                        rhs[k] -= v;
                    }
                }
            }
            FaceKind::Final => {
                let (own, _) = asm.spacelike_blocks(face, basis, None);
                matrix += &own;
            }
            FaceKind::Initial => {
                let r = asm.initial_rhs(face, basis, data);
                for (k, v) in r.iter().enumerate() {
                    rhs[k] += v;
                }
            }
            FaceKind::Dirichlet | FaceKind::Neumann | FaceKind::Robin => {
                matrix += &asm.boundary_matrix(face, basis);
                let r = asm.boundary_rhs(face, basis, data);
                for (k, v) in r.iter().enumerate() {
                    rhs[k] += v;
                }
            }
            FaceKind::TimeLikeInterior => {
                return Err(Error::Mesh(
                    "tent meshes must not contain time-like interior faces".to_string(),
                ));
            }
        }
    }
    let layer = asm.mesh.elements[element].layer;
    let norm1 = dense_norm_1(&matrix.view());
    let lu = DenseLu::factor(matrix.clone(), layer)?;
    let mut c = rhs.clone();
    lu.solve_in_place(&mut c);
    let cond = dense_condition_estimate(&lu, norm1);
    let mut ax = vec![0.0; nd];
    accumulate(&matrix, &c, &mut ax);
    for (a, b) in ax.iter_mut().zip(&rhs) {
        *a -= b;
    }
    let rel = l2(&ax) / l2(&rhs).max(f64::MIN_POSITIVE);
    Ok((c, rel, cond))
}

#[allow(clippy::too_many_arguments)]
fn solve_tents(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    space: SpaceKind,
    degree: u32,
    params: DgParameters,
    data: &dyn ProblemData,
    options: &SolverOptions,
    workers: usize,
) -> Result<(DiscreteSolution, SolveReport)> {
    let t_total = Instant::now();
    let asm = DgAssembly::new(mesh, coeff, space, degree, params, options.quad_override);
    let nelem = mesh.elements.len();
    let nlayers = mesh.layers.len();

    let bases: Vec<OnceLock<Arc<PreparedBasis>>> = (0..nelem).map(|_| OnceLock::new()).collect();
    let results: Vec<OnceLock<Arc<Vec<f64>>>> = (0..nelem).map(|_| OnceLock::new()).collect();
    let residuals: Mutex<Vec<(usize, f64)>> = Mutex::new(Vec::with_capacity(nelem));
    let first_layer_conds: Mutex<Vec<f64>> = Mutex::new(Vec::new());

    let process = |e: usize| -> Result<()> {
        let basis = Arc::new(asm.prepare_basis(e)?);
        let (c, rel, cond) = solve_one_tent(
            &asm,
            data,
            e,
            &basis,
            &|b| bases[b].get().expect("predecessor basis complete").clone(),
            &|b| {
                results[b]
                    .get()
                    .expect("predecessor solved before successor")
                    .clone()
            },
        )?;
        let layer = mesh.elements[e].layer;
        residuals.lock().unwrap().push((layer, rel));
        if layer == 0 {
            first_layer_conds.lock().unwrap().push(cond);
        }
        bases[e].set(basis).ok();
        results[e]
            .set(Arc::new(c))
            .expect("each element is solved exactly once");
        Ok(())
    };

    if workers <= 1 {
        for layer in &mesh.layers {
            for &e in layer {
                process(e)?;
            }
        }
    } else {
        // Predecessor counts and successor lists over space-like faces.
        let mut indegree_init = vec![0usize; nelem];
        let mut successors: Vec<Vec<usize>> = vec![Vec::new(); nelem];
        for face in &mesh.faces {
            if face.kind == FaceKind::SpaceLikeInterior {
                let b = face.before.expect("interior face has a past element");
                let a = face.after.expect("interior face has a future element");
                indegree_init[a] += 1;
                successors[b].push(a);
            }
        }
        let indegree: Vec<AtomicUsize> =
            indegree_init.iter().map(|&d| AtomicUsize::new(d)).collect();
        let queue: Mutex<Vec<usize>> = Mutex::new(
            (0..nelem)
                .filter(|&e| indegree[e].load(Ordering::Relaxed) == 0)
                .collect(),
        );
        let ready = Condvar::new();
        let remaining = AtomicUsize::new(nelem);
        let stop = AtomicBool::new(false);
        let first_error: Mutex<Option<Error>> = Mutex::new(None);

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let e = {
                        let mut q = queue.lock().unwrap();
                        loop {
                            if stop.load(Ordering::Acquire) {
                                return;
                            }
                            if let Some(e) = q.pop() {
                                break e;
                            }
                            q = ready.wait(q).unwrap();
                        }
                    };
                    match process(e) {
                        Ok(()) => {
                            for &f in &successors[e] {
                                if indegree[f].fetch_sub(1, Ordering::AcqRel) == 1 {
                                    queue.lock().unwrap().push(f);
                                    ready.notify_one();
                                }
                            }
                            if remaining.fetch_sub(1, Ordering::AcqRel) == 1 {
                                stop.store(true, Ordering::Release);
                                ready.notify_all();
                            }
                        }
                        Err(err) => {
                            let mut slot = first_error.lock().unwrap();
                            if slot.is_none() {
                                *slot = Some(err);
                            }
                            stop.store(true, Ordering::Release);
                            ready.notify_all();
                            return;
                        }
                    }
                });
            }
        });

        if let Some(err) = first_error.lock().unwrap().take() {
            return Err(err);
        }
        if remaining.load(Ordering::Acquire) != 0 {
            return Err(Error::Mesh(
                "tent scheduling stalled before all elements were solved".to_string(),
            ));
        }
    }

    let coefficients: Vec<Vec<f64>> = results
        .iter()
        .map(|slot| {
            slot.get()
                .map(|c| c.as_ref().clone())
                .expect("all elements solved")
        })
        .collect();

    // Aggregate residuals per layer.
    let mut layer_residuals = vec![0.0f64; nlayers];
    for (layer, rel) in residuals.into_inner().unwrap() {
        layer_residuals[layer] = layer_residuals[layer].max(rel);
    }
    let flagged_layers: Vec<usize> = layer_residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| !(**r <= LAYER_RESIDUAL_RTOL))
        .map(|(i, _)| i)
        .collect();
    let condition_estimate = first_layer_conds
        .into_inner()
        .unwrap()
        .into_iter()
        .fold(0.0f64, f64::max);

    let nd = asm.dofs_per_element();
    let solution = DiscreteSolution {
        space,
        degree,
        coefficients,
    };
    let galerkin_residual =
        sampled_galerkin_residual(&asm, data, &solution, options.residual_sample)?;
    let (energy_initial, energy_final) = boundary_energies(mesh, coeff, &solution, asm.quad_pts)?;
    let report = SolveReport {
        layer_sizes: mesh.layers.iter().map(|l| l.len() * nd).collect(),
        layer_occupancy: mesh.layers.iter().map(|l| l.len()).collect(),
        layer_residuals,
        flagged_layers,
        assemble_seconds: 0.0,
        factor_seconds: 0.0,
        solve_seconds: t_total.elapsed().as_secs_f64(),
        condition_estimate,
        galerkin_residual,
        energy_initial,
        energy_final,
        workers,
    };
    Ok((solution, report))
}

// ---------------------------------------------------------------------------
// Verification helpers
// ---------------------------------------------------------------------------

/// Relative residual of sampled test rows of the full Galerkin system,
/// assembled on demand. Deterministic: the sample comes from a fixed-seed
/// SplitMix64 stream.
pub fn sampled_galerkin_residual(
    asm: &DgAssembly,
    data: &dyn ProblemData,
    solution: &DiscreteSolution,
    sample: usize,
) -> Result<f64> {
    let nelem = asm.mesh.elements.len();
    let mut selected: Vec<usize> = if sample >= nelem {
        (0..nelem).collect()
    } else {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        };
        let mut set = std::collections::BTreeSet::new();
        while set.len() < sample {
            set.insert((next() % nelem as u64) as usize);
        }
        set.into_iter().collect()
    };
    // Always include the first and last element so every march end is seen.
    if !selected.contains(&0) {
        selected.push(0);
    }
    if !selected.contains(&(nelem - 1)) {
        selected.push(nelem - 1);
    }

    let mut cache: HashMap<usize, PreparedBasis> = HashMap::new();
    let mut res_sq = 0.0;
    let mut scale_sq = 0.0;
    for e in selected {
        if !cache.contains_key(&e) {
            cache.insert(e, asm.prepare_basis(e)?);
        }
        let nd = cache[&e].dim();
        let mut row = vec![0.0; nd];
        let mut ell = vec![0.0; nd];
        {
            let basis = &cache[&e];
            accumulate(
                &asm.element_matrix(basis),
                &solution.coefficients[e],
                &mut row,
            );
        }
        for fid in asm.mesh.elements[e].faces.clone() {
            let face = &asm.mesh.faces[fid];
            match face.kind {
                FaceKind::SpaceLikeInterior => {
                    if face.before == Some(e) {
                        let (own, _) = asm.spacelike_blocks(face, &cache[&e], None);
                        accumulate(&own, &solution.coefficients[e], &mut row);
                    } else {
                        let b = face.before.expect("interior face has a past element");
                        if !cache.contains_key(&b) {
                            cache.insert(b, asm.prepare_basis(b)?);
                        }
                        let (_, cpl) = asm.spacelike_blocks(face, &cache[&b], Some(&cache[&e]));
                        accumulate(
                            &cpl.expect("future side was supplied"),
                            &solution.coefficients[b],
                            &mut row,
                        );
                    }
                }
                FaceKind::Final => {
                    let (own, _) = asm.spacelike_blocks(face, &cache[&e], None);
                    accumulate(&own, &solution.coefficients[e], &mut row);
                }
                FaceKind::Initial => {
                    let r = asm.initial_rhs(face, &cache[&e], data);
                    for (k, v) in r.iter().enumerate() {
                        ell[k] += v;
                    }
                }
                FaceKind::TimeLikeInterior => {
                    let bm = face.before.expect("time-like face has a normal owner");
                    let bp = face.after.expect("time-like face has two sides");
                    let other = if bm == e { bp } else { bm };
                    if !cache.contains_key(&other) {
                        cache.insert(other, asm.prepare_basis(other)?);
                    }
                    let blocks = asm.timelike_blocks(face, &cache[&bm], &cache[&bp]);
                    if bm == e {
                        accumulate(&blocks.minus_minus, &solution.coefficients[bm], &mut row);
                        accumulate(&blocks.minus_plus, &solution.coefficients[bp], &mut row);
                    } else {
                        accumulate(&blocks.plus_minus, &solution.coefficients[bm], &mut row);
                        accumulate(&blocks.plus_plus, &solution.coefficients[bp], &mut row);
                    }
                }
                FaceKind::Dirichlet | FaceKind::Neumann | FaceKind::Robin => {
                    accumulate(
                        &asm.boundary_matrix(face, &cache[&e]),
                        &solution.coefficients[e],
                        &mut row,
                    );
                    let r = asm.boundary_rhs(face, &cache[&e], data);
                    for (k, v) in r.iter().enumerate() {
                        ell[k] += v;
                    }
                }
            }
        }
        for (a, b) in row.iter().zip(&ell) {
            res_sq += (a - b) * (a - b);
            scale_sq += a * a + b * b;
        }
    }
    Ok(res_sq.sqrt() / scale_sq.sqrt().max(f64::MIN_POSITIVE))
}

/// Discrete energy 1/2 int (G v^2 + rho |sigma|^2) over the initial and
/// final boundaries, with traces taken from the adjacent elements.
pub fn boundary_energies(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    solution: &DiscreteSolution,
    quad_pts: usize,
) -> Result<(f64, f64)> {
    let mut cache: HashMap<usize, PreparedBasis> = HashMap::new();
    let mut e0 = 0.0;
    let mut et = 0.0;
    for face in &mesh.faces {
        let (element, acc) = match face.kind {
            FaceKind::Initial => (face.after.expect("initial face has a future element"), 0),
            FaceKind::Final => (face.before.expect("final face has a past element"), 1),
            _ => continue,
        };
        if !cache.contains_key(&element) {
            cache.insert(element, solution.element_basis(mesh, coeff, element)?);
        }
        let basis = &cache[&element];
        let n = basis.n();
        let mut sum = 0.0;
        for q in face.geometry.quadrature(quad_pts) {
            let x = &q.x[..n];
            let (v, s) = solution.eval_with(basis, coeff, x, q.t);
            let g = coeff.g_value(x);
            let rho = coeff.rho(x);
            sum += q.w * 0.5 * (g * v * v + rho * (s[0] * s[0] + s[1] * s[1]));
        }
        if acc == 0 {
            e0 += sum;
        } else {
            et += sum;
        }
    }
    Ok((e0, et))
}

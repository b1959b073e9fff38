//! Error measures, energies, convergence rates, and mesh quality.
//!
//! The mesh- and flux-dependent DG norm of the Galerkin error collects the
//! weighted time-jumps on space-like faces, the initial/final traces, the
//! normal jumps and boundary traces on time-like faces, and the two
//! stabilization-weighted volume residuals. The augmented DG+ norm adds the
//! upwind traces, averages, complementary boundary traces, and the
//! inverse-weighted volume terms; it bounds the Galerkin error through
//! quasi-optimality. Energies are evaluated on constant-time slices.

use std::collections::HashMap;
use std::sync::Arc;

use crate::assembly::{combine_traces, DgAssembly, DgParameters, FieldValues, PreparedBasis};
use crate::basis::{qu_seed_indices, SpaceKind};
use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::mesh::{ElementShape, FaceGeometry, FaceKind, SpaceTimeMesh};
use crate::problems::ExactSolution;
use crate::quadrature::QuadPoint;
use crate::solver::DiscreteSolution;

/// Term-by-term breakdown of the squared DG error norm, plus the additional
/// squared terms of the DG+ norm. With all flux parameters zero only the
/// four trace terms on space-like and initial/final faces survive:
///
/// | term                | weight          | vanishes when |
/// |---------------------|-----------------|---------------|
/// | time_jump_w/tau     | (1-gamma)/n^t   | never         |
/// | cap_w/tau           | G, rho          | never         |
/// | normal_jump_w       | alpha           | alpha = 0     |
/// | normal_jump_tau     | beta            | beta = 0      |
/// | dirichlet_w         | alpha           | alpha = 0     |
/// | neumann_tau         | beta            | beta = 0      |
/// | robin_w/tau         | (1-d)theta, d/theta | no Robin faces |
/// | volume_rc/rm        | mu1, mu2        | mu = 0        |
#[derive(Clone, Copy, Debug, Default)]
pub struct DgErrorBreakdown {
    pub time_jump_w: f64,
    pub time_jump_tau: f64,
    pub cap_w: f64,
    pub cap_tau: f64,
    pub normal_jump_w: f64,
    pub normal_jump_tau: f64,
    pub dirichlet_w: f64,
    pub neumann_tau: f64,
    pub robin_w: f64,
    pub robin_tau: f64,
    pub volume_rc: f64,
    pub volume_rm: f64,
    pub plus_upwind_w: f64,
    pub plus_upwind_tau: f64,
    pub plus_mean_w: f64,
    pub plus_mean_tau: f64,
    pub plus_dirichlet_tau: f64,
    pub plus_neumann_w: f64,
    pub plus_volume_w: f64,
    pub plus_volume_tau: f64,
}

impl DgErrorBreakdown {
    pub fn dg_squared(&self) -> f64 {
        self.time_jump_w
            + self.time_jump_tau
            + self.cap_w
            + self.cap_tau
            + self.normal_jump_w
            + self.normal_jump_tau
            + self.dirichlet_w
            + self.neumann_tau
            + self.robin_w
            + self.robin_tau
            + self.volume_rc
            + self.volume_rm
    }

    pub fn dg(&self) -> f64 {
        self.dg_squared().sqrt()
    }

    pub fn dg_plus(&self) -> f64 {
        (self.dg_squared()
            + self.plus_upwind_w
            + self.plus_upwind_tau
            + self.plus_mean_w
            + self.plus_mean_tau
            + self.plus_dirichlet_tau
            + self.plus_neumann_w
            + self.plus_volume_w
            + self.plus_volume_tau)
            .sqrt()
    }
}

/// Bounded per-element basis cache: local bases are deterministic rebuilds,
/// so the cache may drop entries freely to bound memory on large meshes.
struct BasisCache<'a> {
    asm: DgAssembly<'a>,
    map: HashMap<usize, Arc<PreparedBasis>>,
    cap: usize,
}

impl<'a> BasisCache<'a> {
    fn new(asm: DgAssembly<'a>) -> BasisCache<'a> {
        BasisCache {
            asm,
            map: HashMap::new(),
            cap: 512,
        }
    }

    fn get(&mut self, element: usize) -> Result<Arc<PreparedBasis>> {
        if let Some(b) = self.map.get(&element) {
            return Ok(b.clone());
        }
        if self.map.len() >= self.cap {
            self.map.clear();
        }
        let b = Arc::new(self.asm.prepare_basis(element)?);
        self.map.insert(element, b.clone());
        Ok(b)
    }
}

fn combine_fields(vals: &[FieldValues], c: &[f64]) -> FieldValues {
    let mut out = FieldValues {
        w: 0.0,
        tau: [0.0; 2],
        rc: 0.0,
        rm: [0.0; 2],
    };
    for (v, ci) in vals.iter().zip(c) {
        out.w += ci * v.w;
        out.tau[0] += ci * v.tau[0];
        out.tau[1] += ci * v.tau[1];
        out.rc += ci * v.rc;
        out.rm[0] += ci * v.rm[0];
        out.rm[1] += ci * v.rm[1];
    }
    out
}

/// (exact - discrete) trace at a face quadrature point.
fn diff_trace(
    basis: &PreparedBasis,
    sol: &DiscreteSolution,
    exact: &dyn ExactSolution,
    coeff: &CoefficientField,
    x: &[f64],
    t: f64,
) -> (f64, [f64; 2]) {
    let (vh, sh) = combine_traces(
        &basis.traces_at(coeff, x, t),
        &sol.coefficients[basis.element],
    );
    let ve = exact.v(x, t);
    let se = exact.sigma(coeff, x, t);
    (ve - vh, [se[0] - sh[0], se[1] - sh[1]])
}

/// Term-by-term squared DG and DG+ norms of (exact - solution).
///
/// The volume residual terms use that the exact solution satisfies the
/// first-order system, so the residuals of the difference are those of the
/// discrete field negated. With zero stabilization weights the DG+ volume
/// terms are unbounded; they are reported as infinity in that case.
pub fn dg_error_breakdown(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    params: DgParameters,
    solution: &DiscreteSolution,
    exact: &dyn ExactSolution,
    quad_override: Option<usize>,
) -> Result<DgErrorBreakdown> {
    let asm = DgAssembly::new(
        mesh,
        coeff,
        solution.space,
        solution.degree,
        params,
        quad_override,
    );
    let quad_pts = asm.quad_pts;
    let mut cache = BasisCache::new(asm);
    let mut out = DgErrorBreakdown::default();

    for face in &mesh.faces {
        let quad = face.geometry.quadrature(quad_pts);
        match face.kind {
            FaceKind::SpaceLikeInterior => {
                let bb = cache.get(face.before.expect("interior face has a past element"))?;
                let ba = cache.get(face.after.expect("interior face has a future element"))?;
                let nt = face.normal[2];
                let jump_weight = (1.0 - face.gamma) / nt;
                let upwind_weight = nt / (1.0 - face.gamma);
                for q in &quad {
                    let x = &q.x[..mesh.dim];
                    let g = coeff.g_value(x);
                    let rho = coeff.rho(x);
                    let (wm, tm) = diff_trace(&bb, solution, exact, coeff, x, q.t);
                    let (wp, tp) = diff_trace(&ba, solution, exact, coeff, x, q.t);
                    let (jw, jt) = (wm - wp, [tm[0] - tp[0], tm[1] - tp[1]]);
                    out.time_jump_w += q.w * 0.5 * jump_weight * g * jw * jw;
                    out.time_jump_tau +=
                        q.w * 0.5 * jump_weight * rho * (jt[0] * jt[0] + jt[1] * jt[1]);
                    out.plus_upwind_w += q.w * 2.0 * upwind_weight * g * wm * wm;
                    out.plus_upwind_tau +=
                        q.w * 2.0 * upwind_weight * rho * (tm[0] * tm[0] + tm[1] * tm[1]);
                }
            }
            FaceKind::Initial | FaceKind::Final => {
                let e = if face.kind == FaceKind::Initial {
                    face.after.expect("initial face has a future element")
                } else {
                    face.before.expect("final face has a past element")
                };
                let basis = cache.get(e)?;
                for q in &quad {
                    let x = &q.x[..mesh.dim];
                    let g = coeff.g_value(x);
                    let rho = coeff.rho(x);
                    let (w, tau) = diff_trace(&basis, solution, exact, coeff, x, q.t);
                    out.cap_w += q.w * 0.5 * g * w * w;
                    out.cap_tau += q.w * 0.5 * rho * (tau[0] * tau[0] + tau[1] * tau[1]);
                }
            }
            FaceKind::TimeLikeInterior => {
                let bm = cache.get(face.before.expect("time-like face has a normal owner"))?;
                let bp = cache.get(face.after.expect("time-like face has two sides"))?;
                let n = [face.normal[0], face.normal[1]];
                for q in &quad {
                    let x = &q.x[..mesh.dim];
                    let alpha = cache.asm.params.alpha(coeff, x);
                    let beta = cache.asm.params.beta(coeff, x);
                    let (wm, tm) = diff_trace(&bm, solution, exact, coeff, x, q.t);
                    let (wp, tp) = diff_trace(&bp, solution, exact, coeff, x, q.t);
                    let jw = wm - wp;
                    let jtn = (tm[0] - tp[0]) * n[0] + (tm[1] - tp[1]) * n[1];
                    let mw = 0.5 * (wm + wp);
                    let mt = [0.5 * (tm[0] + tp[0]), 0.5 * (tm[1] + tp[1])];
                    out.normal_jump_w += q.w * alpha * jw * jw * (n[0] * n[0] + n[1] * n[1]);
                    out.normal_jump_tau += q.w * beta * jtn * jtn;
                    out.plus_mean_w += q.w / beta * mw * mw;
                    out.plus_mean_tau += q.w / alpha * (mt[0] * mt[0] + mt[1] * mt[1]);
                }
            }
            FaceKind::Dirichlet | FaceKind::Neumann | FaceKind::Robin => {
                let basis = cache.get(face.before.expect("boundary face has an inner element"))?;
                let n = [face.normal[0], face.normal[1]];
                for q in &quad {
                    let x = &q.x[..mesh.dim];
                    let (w, tau) = diff_trace(&basis, solution, exact, coeff, x, q.t);
                    let tn = tau[0] * n[0] + tau[1] * n[1];
                    match face.kind {
                        FaceKind::Dirichlet => {
                            let alpha = cache.asm.params.alpha(coeff, x);
                            out.dirichlet_w += q.w * alpha * w * w;
                            out.plus_dirichlet_tau += q.w / alpha * tn * tn;
                        }
                        FaceKind::Neumann => {
                            let beta = cache.asm.params.beta(coeff, x);
                            out.neumann_tau += q.w * beta * tn * tn;
                            out.plus_neumann_w += q.w / beta * w * w;
                        }
                        _ => {
                            let theta = cache.asm.params.theta(coeff, x);
                            let delta = cache.asm.params.delta(coeff, x);
                            out.robin_w += q.w * (1.0 - delta) * theta * w * w;
                            out.robin_tau += q.w * delta / theta * tn * tn;
                        }
                    }
                }
            }
        }
    }

    for (e, elem) in mesh.elements.iter().enumerate() {
        let basis = cache.get(e)?;
        let (mu1, mu2) = cache.asm.params.mu(elem.r_kc, elem.c_sup);
        for q in elem.shape.quadrature(quad_pts) {
            let x = &q.x[..mesh.dim];
            let g = coeff.g_value(x);
            let rho = coeff.rho(x);
            let fields = combine_fields(
                &basis.fields_at(coeff, x, q.t),
                &solution.coefficients[e],
            );
            // Residuals of the exact solution vanish by the PDE.
            out.volume_rc += q.w * mu1 / g * fields.rc * fields.rc;
            out.volume_rm +=
                q.w * mu2 / rho * (fields.rm[0] * fields.rm[0] + fields.rm[1] * fields.rm[1]);
            let we = exact.v(x, q.t) - fields.w;
            let se = exact.sigma(coeff, x, q.t);
            let te = [se[0] - fields.tau[0], se[1] - fields.tau[1]];
            out.plus_volume_w += q.w / mu1 * g * we * we;
            out.plus_volume_tau += q.w / mu2 * rho * (te[0] * te[0] + te[1] * te[1]);
        }
    }
    Ok(out)
}

/// DG-norm error of a discrete solution against an exact one.
pub fn dg_norm_error(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    params: DgParameters,
    solution: &DiscreteSolution,
    exact: &dyn ExactSolution,
    quad_override: Option<usize>,
) -> Result<f64> {
    Ok(dg_error_breakdown(mesh, coeff, params, solution, exact, quad_override)?.dg())
}

/// Weighted L2 error on the final-time slice:
/// (||G^(1/2)(v - v_h)||^2 + ||rho^(1/2)(sigma - sigma_h)||^2)^(1/2).
pub fn final_time_error(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    solution: &DiscreteSolution,
    exact: &dyn ExactSolution,
    quad_override: Option<usize>,
) -> Result<f64> {
    let asm = DgAssembly::new(
        mesh,
        coeff,
        solution.space,
        solution.degree,
        DgParameters::zero(),
        quad_override,
    );
    let quad_pts = asm.quad_pts;
    let mut cache = BasisCache::new(asm);
    let mut sum = 0.0;
    for face in &mesh.faces {
        if face.kind != FaceKind::Final {
            continue;
        }
        let basis = cache.get(face.before.expect("final face has a past element"))?;
        for q in face.geometry.quadrature(quad_pts) {
            let x = &q.x[..mesh.dim];
            let (w, tau) = diff_trace(&basis, solution, exact, coeff, x, q.t);
            sum += q.w
                * (coeff.g_value(x) * w * w
                    + coeff.rho(x) * (tau[0] * tau[0] + tau[1] * tau[1]));
        }
    }
    Ok(sum.sqrt())
}

/// Evaluates the final-time trace of a (reference) solution at arbitrary
/// spatial points, searching only the last causal layer.
pub struct FinalTraceEvaluator<'a> {
    mesh: &'a SpaceTimeMesh,
    coeff: &'a CoefficientField,
    solution: &'a DiscreteSolution,
    cache: HashMap<usize, PreparedBasis>,
    hint: usize,
}

impl<'a> FinalTraceEvaluator<'a> {
    pub fn new(
        mesh: &'a SpaceTimeMesh,
        coeff: &'a CoefficientField,
        solution: &'a DiscreteSolution,
    ) -> FinalTraceEvaluator<'a> {
        FinalTraceEvaluator {
            mesh,
            coeff,
            solution,
            cache: HashMap::new(),
            hint: 0,
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> Result<(f64, [f64; 2])> {
        let t = self.mesh.t_final;
        let last = self
            .mesh
            .layers
            .last()
            .ok_or_else(|| Error::Mesh("empty mesh".to_string()))?;
        let found = last[self.hint..]
            .iter()
            .chain(last[..self.hint].iter())
            .position(|&e| self.mesh.elements[e].contains(x, t));
        let Some(offset) = found else {
            return Err(Error::OutOfRange {
                what: "final-slice evaluation point",
                value: x[0],
                range: "the meshed spatial domain",
            });
        };
        self.hint = (self.hint + offset) % last.len();
        let e = last[self.hint];
        if !self.cache.contains_key(&e) {
            self.cache
                .insert(e, self.solution.element_basis(self.mesh, self.coeff, e)?);
        }
        let basis = &self.cache[&e];
        Ok(combine_traces(
            &basis.traces_at(self.coeff, x, t),
            &self.solution.coefficients[e],
        ))
    }
}

/// Final-time error measured against a reference discrete solution on a
/// finer mesh of the same domain, for problems without a closed form.
pub fn final_time_error_vs_reference(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    solution: &DiscreteSolution,
    ref_mesh: &SpaceTimeMesh,
    ref_solution: &DiscreteSolution,
    quad_override: Option<usize>,
) -> Result<f64> {
    if (mesh.t_final - ref_mesh.t_final).abs() > 1e-12 * mesh.t_final.max(1.0) {
        return Err(Error::Mesh(
            "reference solution ends at a different final time".to_string(),
        ));
    }
    let asm = DgAssembly::new(
        mesh,
        coeff,
        solution.space,
        solution.degree,
        DgParameters::zero(),
        quad_override,
    );
    let quad_pts = asm.quad_pts;
    let mut cache = BasisCache::new(asm);
    let mut reference = FinalTraceEvaluator::new(ref_mesh, coeff, ref_solution);
    let mut sum = 0.0;
    for face in &mesh.faces {
        if face.kind != FaceKind::Final {
            continue;
        }
        let basis = cache.get(face.before.expect("final face has a past element"))?;
        for q in face.geometry.quadrature(quad_pts) {
            let x = &q.x[..mesh.dim];
            let (vh, sh) = combine_traces(
                &basis.traces_at(coeff, x, q.t),
                &solution.coefficients[basis.element],
            );
            let (vr, sr) = reference.eval(x)?;
            let (w, tau) = (vr - vh, [sr[0] - sh[0], sr[1] - sh[1]]);
            sum += q.w
                * (coeff.g_value(x) * w * w
                    + coeff.rho(x) * (tau[0] * tau[0] + tau[1] * tau[1]));
        }
    }
    Ok(sum.sqrt())
}

fn shape_time_range(shape: &ElementShape) -> (f64, f64) {
    match shape {
        ElementShape::Rect { t0, t1, .. } | ElementShape::Prism { t0, t1, .. } => (*t0, *t1),
        ElementShape::TentPolygon { vertices } => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for v in vertices {
                lo = lo.min(v[1]);
                hi = hi.max(v[1]);
            }
            (lo, hi)
        }
    }
}

/// Quadrature over the spatial cross-section of an element at time t, empty
/// when the slice is degenerate.
fn cross_section_quadrature(shape: &ElementShape, t: f64, nq: usize) -> Vec<QuadPoint> {
    match shape {
        ElementShape::Rect { x0, x1, .. } => FaceGeometry::Segment {
            a: [*x0, t],
            b: [*x1, t],
        }
        .quadrature(nq),
        ElementShape::Prism { tri, .. } => {
            FaceGeometry::SpatialTriangle { tri: *tri, t }.quadrature(nq)
        }
        ElementShape::TentPolygon { vertices } => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let m = vertices.len();
            for i in 0..m {
                let a = vertices[i];
                let b = vertices[(i + 1) % m];
                if (a[1] - t).abs() <= 1e-14 {
                    lo = lo.min(a[0]);
                    hi = hi.max(a[0]);
                }
                if (a[1] - t) * (b[1] - t) < 0.0 {
                    let x = a[0] + (t - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
            }
            if !(hi - lo > 1e-14) {
                return Vec::new();
            }
            FaceGeometry::Segment {
                a: [lo, t],
                b: [hi, t],
            }
            .quadrature(nq)
        }
    }
}

/// Energy of the discrete solution on the constant-time slice at t:
/// 1/2 int_Omega (G w^2 + rho |tau|^2) dx. At times shared by two layers the
/// trace is taken from below (the upwind side); at t = 0 from the first
/// layer.
pub fn energy_slice(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    solution: &DiscreteSolution,
    t: f64,
    quad_override: Option<usize>,
) -> Result<f64> {
    let nq = quad_override.unwrap_or(solution.degree as usize + 3);
    let eps = 1e-12 * mesh.t_final.max(1.0);
    let mut sum = 0.0;
    for (e, elem) in mesh.elements.iter().enumerate() {
        let (lo, hi) = shape_time_range(&elem.shape);
        let included = if t <= eps {
            lo.abs() <= eps
        } else {
            t > lo + eps && t <= hi + eps
        };
        if !included {
            continue;
        }
        let quad = cross_section_quadrature(&elem.shape, t, nq);
        if quad.is_empty() {
            continue;
        }
        let basis = solution.element_basis(mesh, coeff, e)?;
        for q in quad {
            let x = &q.x[..mesh.dim];
            let (w, tau) = solution.eval_with(&basis, coeff, x, q.t);
            sum += q.w
                * 0.5
                * (coeff.g_value(x) * w * w
                    + coeff.rho(x) * (tau[0] * tau[0] + tau[1] * tau[1]));
        }
    }
    Ok(sum)
}

/// The distinct times of horizontal mesh interfaces, including 0 and T.
pub fn interface_times(mesh: &SpaceTimeMesh) -> Vec<f64> {
    let eps = 1e-12 * mesh.t_final.max(1.0);
    let mut times: Vec<f64> = Vec::new();
    for face in &mesh.faces {
        if !face.kind.is_space_like() {
            continue;
        }
        let t = match &face.geometry {
            FaceGeometry::Segment { a, b } => {
                if (a[1] - b[1]).abs() > eps {
                    continue;
                }
                a[1]
            }
            FaceGeometry::SpatialTriangle { t, .. } => *t,
            FaceGeometry::VerticalQuad { .. } => continue,
        };
        if !times.iter().any(|&s| (s - t).abs() <= eps) {
            times.push(t);
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times
}

/// Energies at every horizontal interface time, in time order.
pub fn energy_trace(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    solution: &DiscreteSolution,
    quad_override: Option<usize>,
) -> Result<Vec<(f64, f64)>> {
    interface_times(mesh)
        .into_iter()
        .map(|t| Ok((t, energy_slice(mesh, coeff, solution, t, quad_override)?)))
        .collect()
}

/// Empirical orders of convergence: rate_k = log(e_{k-1}/e_k) /
/// log(h_{k-1}/h_k) for k = 1..len.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::Config(
            "rate computation needs equally many errors and mesh sizes, at least two".to_string(),
        ));
    }
    for pair in hs.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::Config(
                "mesh sizes must be strictly decreasing".to_string(),
            ));
        }
    }
    for &e in errors {
        if !(e > 0.0) {
            return Err(Error::OutOfRange {
                what: "error value",
                value: e,
                range: "(0, inf) for rate computation",
            });
        }
    }
    Ok((1..errors.len())
        .map(|k| (errors[k - 1] / errors[k]).ln() / (hs[k - 1] / hs[k]).ln())
        .collect())
}

/// Per-element flux/shape quality coefficients and the shape-regularity
/// candidate. With the impedance parameter choice the flux coefficient is 3
/// on meshes whose faces are aligned with or perpendicular to the time axis.
/// Zero flux parameters give unbounded coefficients (reported as infinity).
#[derive(Clone, Copy, Debug)]
pub struct ElementQuality {
    pub xi_time: f64,
    pub xi_space: f64,
    pub xi: f64,
    pub eta: f64,
}

pub fn mesh_quality(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    params: DgParameters,
) -> Vec<ElementQuality> {
    let geometry_samples = |geom: &FaceGeometry| -> Vec<[f64; 2]> {
        let mut pts: Vec<[f64; 2]> = geom
            .quadrature(3)
            .into_iter()
            .map(|q| q.x)
            .collect();
        match geom {
            FaceGeometry::Segment { a, b } => {
                pts.push([a[0], 0.0]);
                pts.push([b[0], 0.0]);
            }
            FaceGeometry::SpatialTriangle { tri, .. } => pts.extend(tri.iter().copied()),
            FaceGeometry::VerticalQuad { a, b, .. } => {
                pts.push(*a);
                pts.push(*b);
            }
        }
        pts
    };

    mesh.elements
        .iter()
        .map(|elem| {
            // Suprema over the face families adjacent to this element; empty
            // families contribute zero.
            let mut d_alpha: f64 = 0.0; // 2 c rho alpha on time-like + Dirichlet
            let mut d_inv: f64 = 0.0; // 1/(c rho alpha) on time-like + Dirichlet
            let mut n_beta: f64 = 0.0; // c rho / beta on time-like + Neumann
            let mut n_inv: f64 = 0.0; // 2 beta/(c rho) on time-like + Neumann
            let mut r_w: f64 = 0.0;
            let mut r_tau: f64 = 0.0;
            let mut xi_space: f64 = 0.0;
            let mut area_space = 0.0;
            let mut area_time = 0.0;
            for &fid in &elem.faces {
                let face = &mesh.faces[fid];
                let space_side = face.kind.is_space_like();
                if space_side {
                    area_space += face.area;
                    let nt = face.normal[2];
                    xi_space = xi_space.max(nt * (2.0 / (1.0 - face.gamma) + 1.0));
                    continue;
                }
                area_time += face.area;
                for x in geometry_samples(&face.geometry) {
                    let x = &x[..mesh.dim];
                    let c = coeff.wavespeed(x);
                    let rho = coeff.rho(x);
                    let alpha = params.alpha(coeff, x);
                    let beta = params.beta(coeff, x);
                    match face.kind {
                        FaceKind::TimeLikeInterior => {
                            d_alpha = d_alpha.max(2.0 * c * rho * alpha);
                            d_inv = d_inv.max(1.0 / (c * rho * alpha));
                            n_beta = n_beta.max(c * rho / beta);
                            n_inv = n_inv.max(2.0 * beta / (c * rho));
                        }
                        FaceKind::Dirichlet => {
                            d_alpha = d_alpha.max(2.0 * c * rho * alpha);
                            d_inv = d_inv.max(1.0 / (c * rho * alpha));
                        }
                        FaceKind::Neumann => {
                            n_beta = n_beta.max(c * rho / beta);
                            n_inv = n_inv.max(2.0 * beta / (c * rho));
                        }
                        FaceKind::Robin => {
                            let theta = params.theta(coeff, x);
                            let delta = params.delta(coeff, x);
                            r_w = r_w.max((1.0 - delta) * c * theta);
                            r_tau = r_tau.max(delta / (c * theta));
                        }
                        _ => unreachable!("space-like kinds handled above"),
                    }
                }
            }
            let xi_time = (d_alpha + n_beta).max(n_inv + d_inv).max(r_w).max(r_tau);
            let eta = elem.r_kc * (area_space / elem.c_sup + area_time) / elem.volume;
            ElementQuality {
                xi_time,
                xi_space,
                xi: xi_time.max(xi_space),
                eta,
            }
        })
        .collect()
}

/// The wave-adapted interpolant of a smooth potential-form solution: the
/// member of the degree-(p+1) adapted scalar space whose seed Taylor
/// coefficients match the exact potential, mapped to the field pair. This is
/// the approximant behind the convergence bounds, and the natural candidate
/// for quasi-optimality checks.
pub fn quasi_trefftz_interpolant(
    mesh: &SpaceTimeMesh,
    degree: u32,
    exact: &dyn ExactSolution,
) -> Result<DiscreteSolution> {
    let seeds = qu_seed_indices(mesh.dim, degree + 1);
    let mut coefficients = Vec::with_capacity(mesh.elements.len());
    for elem in &mesh.elements {
        let mut c = Vec::with_capacity(seeds.len() - 1);
        for k in &seeds {
            if k.order() == 0 {
                continue;
            }
            let d = exact.u_derivative(k, &elem.center_x[..mesh.dim], elem.center_t);
            c.push(d * elem.r_k.powi(k.order() as i32) / k.factorial());
        }
        coefficients.push(c);
    }
    Ok(DiscreteSolution {
        space: SpaceKind::QW,
        degree,
        coefficients,
    })
}

/// Convenience bundle of the standard error measures of one run.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub dg_error: f64,
    pub breakdown: DgErrorBreakdown,
    pub final_time_error: f64,
    pub energy_trace: Vec<(f64, f64)>,
}

pub fn error_report(
    mesh: &SpaceTimeMesh,
    coeff: &CoefficientField,
    params: DgParameters,
    solution: &DiscreteSolution,
    exact: &dyn ExactSolution,
    quad_override: Option<usize>,
) -> Result<ErrorReport> {
    let breakdown = dg_error_breakdown(mesh, coeff, params, solution, exact, quad_override)?;
    Ok(ErrorReport {
        dg_error: breakdown.dg(),
        breakdown,
        final_time_error: final_time_error(mesh, coeff, solution, exact, quad_override)?,
        energy_trace: energy_trace(mesh, coeff, solution, quad_override)?,
    })
}

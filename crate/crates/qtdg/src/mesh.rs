//! Space-time meshes on Q = Omega x (0, T).
//!
//! Three generators are provided: Cartesian slab meshes in 1+1d, triangular
//! prism slab meshes in 2+1d (split-square triangulation, uniform time
//! slabs), and 1+1d tent-pitched meshes built by an advancing front. Faces
//! are classified as space-like (the wavespeed cone opens through them in
//! time) or time-like (vertical); the causal ordering groups elements into
//! layers so that each layer only depends on earlier ones through space-like
//! faces.

use std::collections::{HashMap, VecDeque};

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadPoint};

/// Boundary condition attached to the lateral boundary of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Robin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    SpaceLikeInterior,
    TimeLikeInterior,
    Initial,
    Final,
    Dirichlet,
    Neumann,
    Robin,
}

impl FaceKind {
    pub fn is_space_like(self) -> bool {
        matches!(
            self,
            FaceKind::SpaceLikeInterior | FaceKind::Initial | FaceKind::Final
        )
    }

    pub fn is_lateral_boundary(self) -> bool {
        matches!(
            self,
            FaceKind::Dirichlet | FaceKind::Neumann | FaceKind::Robin
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            FaceKind::SpaceLikeInterior => "space-like",
            FaceKind::TimeLikeInterior => "time-like",
            FaceKind::Initial => "initial",
            FaceKind::Final => "final",
            FaceKind::Dirichlet => "dirichlet",
            FaceKind::Neumann => "neumann",
            FaceKind::Robin => "robin",
        }
    }

    fn from_bc(bc: BoundaryKind) -> FaceKind {
        match bc {
            BoundaryKind::Dirichlet => FaceKind::Dirichlet,
            BoundaryKind::Neumann => FaceKind::Neumann,
            BoundaryKind::Robin => FaceKind::Robin,
        }
    }
}

/// Geometric support of a face, in global coordinates.
#[derive(Clone, Debug)]
pub enum FaceGeometry {
    /// 1+1d: straight segment between two (x, t) points.
    Segment { a: [f64; 2], b: [f64; 2] },
    /// 2+1d: spatial triangle at a fixed time.
    SpatialTriangle { tri: [[f64; 2]; 3], t: f64 },
    /// 2+1d: vertical quadrilateral over a spatial edge.
    VerticalQuad {
        a: [f64; 2],
        b: [f64; 2],
        t0: f64,
        t1: f64,
    },
}

impl FaceGeometry {
    pub fn quadrature(&self, nq: usize) -> Vec<QuadPoint> {
        match self {
            FaceGeometry::Segment { a, b } => quadrature::segment_rule(*a, *b, nq),
            FaceGeometry::SpatialTriangle { tri, t } => {
                quadrature::triangle_rule_at_time(*tri, *t, nq)
            }
            FaceGeometry::VerticalQuad { a, b, t0, t1 } => {
                quadrature::vertical_quad_rule(*a, *b, *t0, *t1, nq)
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            FaceGeometry::Segment { a, b } => {
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            }
            FaceGeometry::SpatialTriangle { tri, .. } => {
                let cross = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
                    - (tri[1][1] - tri[0][1]) * (tri[2][0] - tri[0][0]);
                0.5 * cross.abs()
            }
            FaceGeometry::VerticalQuad { a, b, t0, t1 } => {
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                len * (t1 - t0)
            }
        }
    }

    /// Vertices as (x, t) pairs; spatial part padded to two entries.
    pub fn vertices(&self) -> Vec<([f64; 2], f64)> {
        match self {
            FaceGeometry::Segment { a, b } => {
                vec![([a[0], 0.0], a[1]), ([b[0], 0.0], b[1])]
            }
            FaceGeometry::SpatialTriangle { tri, t } => {
                tri.iter().map(|v| (*v, *t)).collect()
            }
            FaceGeometry::VerticalQuad { a, b, t0, t1 } => vec![
                (*a, *t0),
                (*b, *t0),
                (*b, *t1),
                (*a, *t1),
            ],
        }
    }

}

#[derive(Clone, Debug)]
pub struct Face {
    pub id: usize,
    pub kind: FaceKind,
    pub geometry: FaceGeometry,
    /// Unit space-time normal (n_x, n_y, n_t) with n_t >= 0. It points out
    /// of `before` on interior and lateral-boundary faces, out of the domain
    /// on final faces, and into the adjacent element on initial faces.
    pub normal: [f64; 3],
    /// Cone-proximity measure sup_F(c) |n_x| / n_t on space-like interior
    /// faces; zero on initial, final, and time-like faces.
    pub gamma: f64,
    /// Element the data flows out of: the past-side element on space-like
    /// faces, the normal-owning element on time-like and boundary faces.
    /// None on initial faces (data comes from the initial condition).
    pub before: Option<usize>,
    /// Element the data flows into; None on final and boundary faces.
    pub after: Option<usize>,
    pub area: f64,
}

/// Shape of a space-time element.
#[derive(Clone, Debug)]
pub enum ElementShape {
    /// 1+1d axis-aligned rectangle.
    Rect { x0: f64, x1: f64, t0: f64, t1: f64 },
    /// 1+1d tent: convex-in-x polygon with 3 or 4 vertices, counterclockwise
    /// [left, bottom, right, top] (boundary tents drop one side vertex).
    TentPolygon { vertices: Vec<[f64; 2]> },
    /// 2+1d right prism over a spatial triangle.
    Prism {
        tri: [[f64; 2]; 3],
        t0: f64,
        t1: f64,
    },
}

impl ElementShape {
    pub fn dim(&self) -> usize {
        match self {
            ElementShape::Prism { .. } => 2,
            _ => 1,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            ElementShape::Rect { x0, x1, t0, t1 } => (x1 - x0) * (t1 - t0),
            ElementShape::TentPolygon { vertices } => shoelace_area(vertices),
            ElementShape::Prism { tri, t0, t1 } => {
                let area = FaceGeometry::SpatialTriangle { tri: *tri, t: 0.0 }.area();
                area * (t1 - t0)
            }
        }
    }

    pub fn barycenter(&self) -> ([f64; 2], f64) {
        match self {
            ElementShape::Rect { x0, x1, t0, t1 } => {
                ([0.5 * (x0 + x1), 0.0], 0.5 * (t0 + t1))
            }
            ElementShape::TentPolygon { vertices } => {
                let (cx, ct) = polygon_centroid(vertices);
                ([cx, 0.0], ct)
            }
            ElementShape::Prism { tri, t0, t1 } => {
                let cx = (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0;
                let cy = (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0;
                ([cx, cy], 0.5 * (t0 + t1))
            }
        }
    }

    /// Corner vertices as (x, t) pairs.
    pub fn vertices(&self) -> Vec<([f64; 2], f64)> {
        match self {
            ElementShape::Rect { x0, x1, t0, t1 } => vec![
                ([*x0, 0.0], *t0),
                ([*x1, 0.0], *t0),
                ([*x1, 0.0], *t1),
                ([*x0, 0.0], *t1),
            ],
            ElementShape::TentPolygon { vertices } => {
                vertices.iter().map(|v| ([v[0], 0.0], v[1])).collect()
            }
            ElementShape::Prism { tri, t0, t1 } => {
                let mut out = Vec::with_capacity(6);
                for &t in &[*t0, *t1] {
                    for v in tri {
                        out.push((*v, t));
                    }
                }
                out
            }
        }
    }

    fn edge_midpoints(&self) -> Vec<([f64; 2], f64)> {
        match self {
            ElementShape::Prism { tri, t0, t1 } => {
                let mut out = Vec::with_capacity(9);
                for &t in &[*t0, *t1] {
                    for i in 0..3 {
                        let a = tri[i];
                        let b = tri[(i + 1) % 3];
                        out.push(([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])], t));
                    }
                }
                for v in tri {
                    out.push((*v, 0.5 * (t0 + t1)));
                }
                out
            }
            _ => {
                let verts = self.vertices();
                let mut out = Vec::with_capacity(verts.len());
                for i in 0..verts.len() {
                    let (x0, t0) = verts[i];
                    let (x1, t1) = verts[(i + 1) % verts.len()];
                    out.push(([0.5 * (x0[0] + x1[0]), 0.0], 0.5 * (t0 + t1)));
                }
                out
            }
        }
    }

    /// Triangulation of a tent polygon: split along the vertical diagonal
    /// from the bottom vertex to the top vertex. The split is valid even
    /// when the quad is non-convex at the top (a tent pole clamped at the
    /// final time can dip below its neighbors).
    fn tent_triangles(vertices: &[[f64; 2]]) -> Vec<[[f64; 2]; 3]> {
        match vertices.len() {
            3 => vec![[vertices[0], vertices[1], vertices[2]]],
            4 => vec![
                [vertices[0], vertices[1], vertices[3]],
                [vertices[1], vertices[2], vertices[3]],
            ],
            k => panic!("tent polygon with {k} vertices"),
        }
    }

    pub fn quadrature(&self, nq: usize) -> Vec<QuadPoint> {
        match self {
            ElementShape::Rect { x0, x1, t0, t1 } => {
                quadrature::rect_rule(*x0, *x1, *t0, *t1, nq)
            }
            ElementShape::TentPolygon { vertices } => {
                let mut out = Vec::new();
                for tri in Self::tent_triangles(vertices) {
                    out.extend(quadrature::spacetime_triangle_rule(tri, nq));
                }
                out
            }
            ElementShape::Prism { tri, t0, t1 } => {
                quadrature::prism_rule(*tri, *t0, *t1, nq)
            }
        }
    }

    /// Time extent [t_min, t_max] of the element.
    pub fn time_extent(&self) -> (f64, f64) {
        match self {
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

    pub fn contains(&self, x: &[f64], t: f64, tol: f64) -> bool {
        match self {
            ElementShape::Rect { x0, x1, t0, t1 } => {
                x[0] >= x0 - tol && x[0] <= x1 + tol && t >= t0 - tol && t <= t1 + tol
            }
            ElementShape::TentPolygon { vertices } => {
                Self::tent_triangles(vertices)
                    .iter()
                    .any(|tri| point_in_triangle(tri, [x[0], t], tol))
            }
            ElementShape::Prism { tri, t0, t1 } => {
                t >= t0 - tol && t <= t1 + tol && point_in_triangle(tri, [x[0], x[1]], tol)
            }
        }
    }
}

fn shoelace_area(vertices: &[[f64; 2]]) -> f64 {
    let mut twice = 0.0;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * twice
}

fn polygon_centroid(vertices: &[[f64; 2]]) -> (f64, f64) {
    let area = shoelace_area(vertices);
    let mut cx = 0.0;
    let mut ct = 0.0;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        let w = a[0] * b[1] - b[0] * a[1];
        cx += (a[0] + b[0]) * w;
        ct += (a[1] + b[1]) * w;
    }
    (cx / (6.0 * area), ct / (6.0 * area))
}

fn point_in_triangle(tri: &[[f64; 2]; 3], p: [f64; 2], tol: f64) -> bool {
    // Signed-area sign tests against each edge, tolerant at the boundary.
    let mut pos = true;
    let mut neg = true;
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        pos &= cross >= -tol;
        neg &= cross <= tol;
    }
    pos || neg
}

#[derive(Clone, Debug)]
pub struct Element {
    pub id: usize,
    pub shape: ElementShape,
    /// Barycenter, the expansion point of the local polynomial basis.
    pub center_x: [f64; 2],
    pub center_t: f64,
    /// Circumscribed radius sup_K |(x,t) - (x_K,t_K)| (attained at a vertex).
    pub r_k: f64,
    /// Wavespeed-weighted radius sup_K |(x, c(x)t) - (x_K, c(x_K)t_K)|,
    /// sampled at vertices and edge midpoints.
    pub r_kc: f64,
    /// sup of the wavespeed over the element (vertex/midpoint samples).
    pub c_sup: f64,
    pub volume: f64,
    pub layer: usize,
    pub faces: Vec<usize>,
}

impl Element {
    pub fn new(id: usize, shape: ElementShape, coeff: &CoefficientField) -> Result<Element> {
        let volume = shape.volume();
        if !(volume > 0.0) {
            return Err(Error::Mesh(format!(
                "element {id} has nonpositive volume {volume}"
            )));
        }
        let (center_x, center_t) = shape.barycenter();
        let n = shape.dim();
        let mut samples = shape.vertices();
        samples.extend(shape.edge_midpoints());

        let mut r_k: f64 = 0.0;
        for (x, t) in &shape.vertices() {
            let d2 = (x[0] - center_x[0]).powi(2)
                + (x[1] - center_x[1]).powi(2)
                + (t - center_t).powi(2);
            r_k = r_k.max(d2.sqrt());
        }

        let c_center = coeff.wavespeed(&center_x[..n]);
        let mut r_kc: f64 = 0.0;
        for (x, t) in &samples {
            let c = coeff.wavespeed(&x[..n]);
            let d2 = (x[0] - center_x[0]).powi(2)
                + (x[1] - center_x[1]).powi(2)
                + (c * t - c_center * center_t).powi(2);
            r_kc = r_kc.max(d2.sqrt());
        }

        let mut spatial: Vec<[f64; 2]> = samples.iter().map(|(x, _)| *x).collect();
        spatial.push(center_x);
        let c_sup = coeff.wavespeed_sup(&spatial, n);

        Ok(Element {
            id,
            shape,
            center_x,
            center_t,
            r_k,
            r_kc,
            c_sup,
            volume,
            layer: 0,
            faces: Vec::new(),
        })
    }

    pub fn contains(&self, x: &[f64], t: f64) -> bool {
        self.shape.contains(x, t, 1e-10 * self.r_k.max(1.0))
    }
}

/// Structured identity of a mesh, used by the solver to pick a strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    /// 1+1d rectangles; element id = slab * nx + ix.
    CartesianSlabs { nx: usize, nt: usize },
    /// 2+1d prisms; element id = ((slab * ny + iy) * nx + ix) * 2 + tri.
    PrismSlabs { nx: usize, ny: usize, nt: usize },
    /// 1+1d tents; element ids in pitching order.
    Tent1d,
}

impl MeshKind {
    pub fn label(self) -> &'static str {
        match self {
            MeshKind::CartesianSlabs { .. } => "cartesian",
            MeshKind::PrismSlabs { .. } => "prism",
            MeshKind::Tent1d => "tent",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpaceTimeMesh {
    pub dim: usize,
    pub kind: MeshKind,
    pub t_final: f64,
    pub domain_lo: [f64; 2],
    pub domain_hi: [f64; 2],
    pub elements: Vec<Element>,
    pub faces: Vec<Face>,
    /// Causal layers: every space-like predecessor of an element lies in an
    /// earlier layer; elements within a layer couple only via time-like faces.
    pub layers: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceClass {
    SpaceLike,
    TimeLike,
}

/// Classify a planar face from its vertices: unit normal with n_t >= 0,
/// space-like or time-like class, and the cone-proximity value gamma.
/// Errors if the face is neither (it cuts the wavespeed cone).
pub fn classify_face(
    dim: usize,
    vertices: &[([f64; 2], f64)],
    coeff: &CoefficientField,
) -> Result<([f64; 3], FaceClass, f64)> {
    let mut normal = if dim == 1 {
        assert!(vertices.len() >= 2);
        let (a, ta) = vertices[0];
        let (b, tb) = vertices[1];
        let d = [b[0] - a[0], tb - ta];
        [d[1], 0.0, -d[0]]
    } else {
        assert!(vertices.len() >= 3);
        let (p0, t0) = vertices[0];
        let (p1, t1) = vertices[1];
        let (p2, t2) = vertices[2];
        let u = [p1[0] - p0[0], p1[1] - p0[1], t1 - t0];
        let v = [p2[0] - p0[0], p2[1] - p0[1], t2 - t0];
        [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ]
    };
    let len = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
    if !(len > 0.0) {
        return Err(Error::Mesh("degenerate face".into()));
    }
    for c in &mut normal {
        *c /= len;
    }
    if normal[2] < 0.0 {
        for c in &mut normal {
            *c = -*c;
        }
    }

    let nx = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
    if normal[2] < 1e-13 {
        normal[2] = 0.0;
        // Deterministic sign for exactly vertical faces.
        if normal[0] < 0.0 || (normal[0] == 0.0 && normal[1] < 0.0) {
            normal[0] = -normal[0];
            normal[1] = -normal[1];
        }
        return Ok((normal, FaceClass::TimeLike, 0.0));
    }

    let mut spatial: Vec<[f64; 2]> = Vec::new();
    let mut sample_face = FaceSamples::new(vertices);
    while let Some(x) = sample_face.next() {
        spatial.push(x);
    }
    let c_sup = coeff.wavespeed_sup(&spatial, dim);
    let gamma = c_sup * nx / normal[2];
    // Headroom covers the tent pitcher's final-time snap.
    if gamma > 1.0 + 1e-8 {
        return Err(Error::Mesh(format!(
            "illegal face: gamma = {gamma:.6} exceeds 1 (n_t = {:.6}, |n_x| = {nx:.6}, sup c = {c_sup:.6})",
            normal[2]
        )));
    }
    Ok((normal, FaceClass::SpaceLike, gamma.min(1.0)))
}

/// Vertex and edge-midpoint spatial samples of a face.
struct FaceSamples<'a> {
    vertices: &'a [([f64; 2], f64)],
    i: usize,
}

impl<'a> FaceSamples<'a> {
    fn new(vertices: &'a [([f64; 2], f64)]) -> Self {
        FaceSamples { vertices, i: 0 }
    }

    fn next(&mut self) -> Option<[f64; 2]> {
        let n = self.vertices.len();
        if self.i < n {
            let x = self.vertices[self.i].0;
            self.i += 1;
            Some(x)
        } else if self.i < 2 * n {
            let j = self.i - n;
            let a = self.vertices[j].0;
            let b = self.vertices[(j + 1) % n].0;
            self.i += 1;
            Some([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
        } else {
            None
        }
    }
}

/// Longest-path layering of the space-like dependency DAG: an element's
/// layer is one more than the maximum layer of the elements feeding it
/// through space-like interior faces.
pub fn causal_layers(n_elements: usize, faces: &[Face]) -> Result<Vec<Vec<usize>>> {
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n_elements];
    let mut indeg = vec![0usize; n_elements];
    for f in faces {
        if f.kind == FaceKind::SpaceLikeInterior {
            let (b, a) = (
                f.before.expect("space-like interior face without before"),
                f.after.expect("space-like interior face without after"),
            );
            succ[b].push(a);
            indeg[a] += 1;
        }
    }
    let mut layer = vec![0usize; n_elements];
    let mut queue: VecDeque<usize> = (0..n_elements).filter(|&e| indeg[e] == 0).collect();
    let mut seen = 0usize;
    while let Some(e) = queue.pop_front() {
        seen += 1;
        for &s in &succ[e] {
            layer[s] = layer[s].max(layer[e] + 1);
            indeg[s] -= 1;
            if indeg[s] == 0 {
                queue.push_back(s);
            }
        }
    }
    if seen != n_elements {
        return Err(Error::Mesh(
            "cycle in the space-like dependency graph".into(),
        ));
    }
    let n_layers = layer.iter().copied().max().map_or(0, |m| m + 1);
    let mut layers = vec![Vec::new(); n_layers];
    for (e, &l) in layer.iter().enumerate() {
        layers[l].push(e);
    }
    for l in &mut layers {
        l.sort_unstable();
    }
    Ok(layers)
}

/// Validate faces against the classifier, attach faces to elements, compute
/// causal layers, and check that the elements tile the domain exactly.
fn finalize(
    dim: usize,
    kind: MeshKind,
    t_final: f64,
    domain_lo: [f64; 2],
    domain_hi: [f64; 2],
    mut elements: Vec<Element>,
    mut faces: Vec<Face>,
    coeff: &CoefficientField,
) -> Result<SpaceTimeMesh> {
    for f in &mut faces {
        let verts = f.geometry.vertices();
        let (normal, class, gamma) = classify_face(dim, &verts, coeff)?;
        let expect = if f.kind.is_space_like() {
            FaceClass::SpaceLike
        } else {
            FaceClass::TimeLike
        };
        if class != expect {
            return Err(Error::Mesh(format!(
                "face {} built as {} but classified as {class:?}",
                f.id,
                f.kind.label()
            )));
        }
        let dot = normal[0] * f.normal[0] + normal[1] * f.normal[1] + normal[2] * f.normal[2];
        debug_assert!(
            (dot.abs() - 1.0).abs() < 1e-12,
            "face {}: stored normal disagrees with geometry",
            f.id
        );
        f.gamma = match f.kind {
            FaceKind::SpaceLikeInterior => gamma,
            _ => 0.0,
        };
        f.area = f.geometry.area();
        for e in [f.before, f.after].into_iter().flatten() {
            elements[e].faces.push(f.id);
        }
    }

    let layers = causal_layers(elements.len(), &faces)?;
    for (l, members) in layers.iter().enumerate() {
        for &e in members {
            elements[e].layer = l;
        }
    }

    let vol: f64 = elements.iter().map(|e| e.volume).sum();
    let domain_vol = if dim == 1 {
        (domain_hi[0] - domain_lo[0]) * t_final
    } else {
        (domain_hi[0] - domain_lo[0]) * (domain_hi[1] - domain_lo[1]) * t_final
    };
    if ((vol - domain_vol) / domain_vol).abs() > 1e-10 {
        return Err(Error::Mesh(format!(
            "elements cover volume {vol} but the domain has volume {domain_vol}"
        )));
    }

    Ok(SpaceTimeMesh {
        dim,
        kind,
        t_final,
        domain_lo,
        domain_hi,
        elements,
        faces,
        layers,
    })
}

fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    let mut g: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
    g[n] = b;
    g
}

/// Cartesian slab mesh on (x0, x1) x (0, t_final): nx by nt rectangles.
pub fn build_cartesian_1d(
    x0: f64,
    x1: f64,
    nx: usize,
    t_final: f64,
    nt: usize,
    coeff: &CoefficientField,
    bc: BoundaryKind,
) -> Result<SpaceTimeMesh> {
    assert!(nx >= 1 && nt >= 1 && x1 > x0 && t_final > 0.0);
    let xs = uniform_grid(x0, x1, nx);
    let ts = uniform_grid(0.0, t_final, nt);
    let elt = |k: usize, i: usize| k * nx + i;

    let mut elements = Vec::with_capacity(nx * nt);
    for k in 0..nt {
        for i in 0..nx {
            elements.push(Element::new(
                elt(k, i),
                ElementShape::Rect {
                    x0: xs[i],
                    x1: xs[i + 1],
                    t0: ts[k],
                    t1: ts[k + 1],
                },
                coeff,
            )?);
        }
    }

    let mut faces = Vec::new();
    // Horizontal faces, bottom to top.
    for k in 0..=nt {
        for i in 0..nx {
            let (kind, before, after) = if k == 0 {
                (FaceKind::Initial, None, Some(elt(0, i)))
            } else if k == nt {
                (FaceKind::Final, Some(elt(nt - 1, i)), None)
            } else {
                (
                    FaceKind::SpaceLikeInterior,
                    Some(elt(k - 1, i)),
                    Some(elt(k, i)),
                )
            };
            faces.push(Face {
                id: faces.len(),
                kind,
                geometry: FaceGeometry::Segment {
                    a: [xs[i], ts[k]],
                    b: [xs[i + 1], ts[k]],
                },
                normal: [0.0, 0.0, 1.0],
                gamma: 0.0,
                before,
                after,
                area: 0.0,
            });
        }
    }
    // Vertical faces.
    for k in 0..nt {
        for i in 0..=nx {
            let (kind, normal, before, after) = if i == 0 {
                (FaceKind::from_bc(bc), [-1.0, 0.0, 0.0], Some(elt(k, 0)), None)
            } else if i == nx {
                (
                    FaceKind::from_bc(bc),
                    [1.0, 0.0, 0.0],
                    Some(elt(k, nx - 1)),
                    None,
                )
            } else {
                (
                    FaceKind::TimeLikeInterior,
                    [1.0, 0.0, 0.0],
                    Some(elt(k, i - 1)),
                    Some(elt(k, i)),
                )
            };
            faces.push(Face {
                id: faces.len(),
                kind,
                geometry: FaceGeometry::Segment {
                    a: [xs[i], ts[k]],
                    b: [xs[i], ts[k + 1]],
                },
                normal,
                gamma: 0.0,
                before,
                after,
                area: 0.0,
            });
        }
    }

    finalize(
        1,
        MeshKind::CartesianSlabs { nx, nt },
        t_final,
        [x0, 0.0],
        [x1, 0.0],
        elements,
        faces,
        coeff,
    )
}

/// Prism slab mesh on a box: split-square triangulation (diagonal from the
/// lower-left to the upper-right corner of each cell) times uniform slabs.
pub fn build_prism_2d(
    lo: [f64; 2],
    hi: [f64; 2],
    nx: usize,
    ny: usize,
    nt: usize,
    t_final: f64,
    coeff: &CoefficientField,
    bc: BoundaryKind,
) -> Result<SpaceTimeMesh> {
    assert!(nx >= 1 && ny >= 1 && nt >= 1);
    assert!(hi[0] > lo[0] && hi[1] > lo[1] && t_final > 0.0);
    let xs = uniform_grid(lo[0], hi[0], nx);
    let ys = uniform_grid(lo[1], hi[1], ny);
    let ts = uniform_grid(0.0, t_final, nt);
    let elt = |k: usize, j: usize, i: usize, tri: usize| ((k * ny + j) * nx + i) * 2 + tri;
    let cell_tri = |j: usize, i: usize, tri: usize| -> [[f64; 2]; 3] {
        let ll = [xs[i], ys[j]];
        let lr = [xs[i + 1], ys[j]];
        let ur = [xs[i + 1], ys[j + 1]];
        let ul = [xs[i], ys[j + 1]];
        if tri == 0 {
            [ll, lr, ur]
        } else {
            [ll, ur, ul]
        }
    };

    let mut elements = Vec::with_capacity(2 * nx * ny * nt);
    for k in 0..nt {
        for j in 0..ny {
            for i in 0..nx {
                for tri in 0..2 {
                    elements.push(Element::new(
                        elt(k, j, i, tri),
                        ElementShape::Prism {
                            tri: cell_tri(j, i, tri),
                            t0: ts[k],
                            t1: ts[k + 1],
                        },
                        coeff,
                    )?);
                }
            }
        }
    }

    let mut faces = Vec::new();
    // Horizontal triangle faces.
    for k in 0..=nt {
        for j in 0..ny {
            for i in 0..nx {
                for tri in 0..2 {
                    let (kind, before, after) = if k == 0 {
                        (FaceKind::Initial, None, Some(elt(0, j, i, tri)))
                    } else if k == nt {
                        (FaceKind::Final, Some(elt(nt - 1, j, i, tri)), None)
                    } else {
                        (
                            FaceKind::SpaceLikeInterior,
                            Some(elt(k - 1, j, i, tri)),
                            Some(elt(k, j, i, tri)),
                        )
                    };
                    faces.push(Face {
                        id: faces.len(),
                        kind,
                        geometry: FaceGeometry::SpatialTriangle {
                            tri: cell_tri(j, i, tri),
                            t: ts[k],
                        },
                        normal: [0.0, 0.0, 1.0],
                        gamma: 0.0,
                        before,
                        after,
                        area: 0.0,
                    });
                }
            }
        }
    }
    // Vertical faces: cell diagonals, then constant-x and constant-y edges.
    for k in 0..nt {
        let (t0, t1) = (ts[k], ts[k + 1]);
        for j in 0..ny {
            for i in 0..nx {
                let ll = [xs[i], ys[j]];
                let ur = [xs[i + 1], ys[j + 1]];
                let d = [ur[0] - ll[0], ur[1] - ll[1]];
                let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
                faces.push(Face {
                    id: faces.len(),
                    kind: FaceKind::TimeLikeInterior,
                    geometry: FaceGeometry::VerticalQuad { a: ll, b: ur, t0, t1 },
                    // Out of the lower-right triangle, toward the upper-left.
                    normal: [-d[1] / len, d[0] / len, 0.0],
                    gamma: 0.0,
                    before: Some(elt(k, j, i, 0)),
                    after: Some(elt(k, j, i, 1)),
                    area: 0.0,
                });
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                let a = [xs[i], ys[j]];
                let b = [xs[i], ys[j + 1]];
                let (kind, normal, before, after) = if i == 0 {
                    (
                        FaceKind::from_bc(bc),
                        [-1.0, 0.0, 0.0],
                        Some(elt(k, j, 0, 1)),
                        None,
                    )
                } else if i == nx {
                    (
                        FaceKind::from_bc(bc),
                        [1.0, 0.0, 0.0],
                        Some(elt(k, j, nx - 1, 0)),
                        None,
                    )
                } else {
                    (
                        FaceKind::TimeLikeInterior,
                        [1.0, 0.0, 0.0],
                        Some(elt(k, j, i - 1, 0)),
                        Some(elt(k, j, i, 1)),
                    )
                };
                faces.push(Face {
                    id: faces.len(),
                    kind,
                    geometry: FaceGeometry::VerticalQuad { a, b, t0, t1 },
                    normal,
                    gamma: 0.0,
                    before,
                    after,
                    area: 0.0,
                });
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let a = [xs[i], ys[j]];
                let b = [xs[i + 1], ys[j]];
                let (kind, normal, before, after) = if j == 0 {
                    (
                        FaceKind::from_bc(bc),
                        [0.0, -1.0, 0.0],
                        Some(elt(k, 0, i, 0)),
                        None,
                    )
                } else if j == ny {
                    (
                        FaceKind::from_bc(bc),
                        [0.0, 1.0, 0.0],
                        Some(elt(k, ny - 1, i, 1)),
                        None,
                    )
                } else {
                    (
                        FaceKind::TimeLikeInterior,
                        [0.0, 1.0, 0.0],
                        Some(elt(k, j - 1, i, 1)),
                        Some(elt(k, j, i, 0)),
                    )
                };
                faces.push(Face {
                    id: faces.len(),
                    kind,
                    geometry: FaceGeometry::VerticalQuad { a, b, t0, t1 },
                    normal,
                    gamma: 0.0,
                    before,
                    after,
                    area: 0.0,
                });
            }
        }
    }

    finalize(
        2,
        MeshKind::PrismSlabs { nx, ny, nt },
        t_final,
        lo,
        hi,
        elements,
        faces,
        coeff,
    )
}

/// Advancing-front tent mesh over a 1d spatial grid. Repeatedly picks the
/// lowest front vertex and raises it by safety * min(adjacent edge) / sup c
/// over the tent footprint (clamped at t_final), so every interior face
/// stays space-like with gamma <= safety.
pub fn pitch_tents_1d(
    grid: &[f64],
    t_final: f64,
    coeff: &CoefficientField,
    safety: f64,
    bc: BoundaryKind,
) -> Result<SpaceTimeMesh> {
    assert!(grid.len() >= 2 && t_final > 0.0);
    assert!(safety > 0.0 && safety <= 1.0, "safety must lie in (0, 1]");
    assert!(
        grid.windows(2).all(|w| w[1] > w[0]),
        "grid must be strictly increasing"
    );
    let nv = grid.len();
    let mut front_t = vec![0.0f64; nv];
    let mut owner: Vec<Option<usize>> = vec![None; nv - 1];
    let mut elements: Vec<Element> = Vec::new();
    let mut faces: Vec<Face> = Vec::new();

    let bottom_face = |interval: usize,
                           a: [f64; 2],
                           b: [f64; 2],
                           owner: &[Option<usize>],
                           tent: usize|
     -> Face {
        let (kind, before) = match owner[interval] {
            None => (FaceKind::Initial, None),
            Some(o) => (FaceKind::SpaceLikeInterior, Some(o)),
        };
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        Face {
            id: usize::MAX,
            kind,
            geometry: FaceGeometry::Segment { a, b },
            normal: [-d[1] / len, 0.0, d[0] / len],
            gamma: 0.0,
            before,
            after: Some(tent),
            area: 0.0,
        }
    };

    let mut guard = 0usize;
    loop {
        // Lowest unfinished front vertex; ties resolved by smallest index.
        let mut pick: Option<usize> = None;
        for i in 0..nv {
            if front_t[i] < t_final
                && pick.map_or(true, |p| front_t[i] < front_t[p])
            {
                pick = Some(i);
            }
        }
        let Some(i) = pick else { break };
        guard += 1;
        if guard > 50_000_000 {
            return Err(Error::Mesh("tent front stalled".into()));
        }

        let il = i.saturating_sub(1);
        let ir = (i + 1).min(nv - 1);
        let mut h_min = f64::INFINITY;
        if i > 0 {
            h_min = h_min.min(grid[i] - grid[i - 1]);
        }
        if i < nv - 1 {
            h_min = h_min.min(grid[i + 1] - grid[i]);
        }
        let footprint: Vec<[f64; 2]> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&s| [grid[il] + s * (grid[ir] - grid[il]), 0.0])
            .collect();
        let c_sup = coeff.wavespeed_sup(&footprint, 1);
        let t_old = front_t[i];
        let rise = safety * h_min / c_sup;
        // Snap poles that land within a sliver of the final time onto it,
        // otherwise the next pass would pitch a degenerate ulp-thick tent.
        let t_new = if t_old + rise >= t_final - 1e-9 * rise {
            t_final
        } else {
            t_old + rise
        };
        debug_assert!(t_new > t_old);

        let tent = elements.len();
        let vertices: Vec<[f64; 2]> = if i == 0 {
            vec![
                [grid[0], t_old],
                [grid[1], front_t[1]],
                [grid[0], t_new],
            ]
        } else if i == nv - 1 {
            vec![
                [grid[nv - 2], front_t[nv - 2]],
                [grid[nv - 1], t_old],
                [grid[nv - 1], t_new],
            ]
        } else {
            vec![
                [grid[i - 1], front_t[i - 1]],
                [grid[i], t_old],
                [grid[i + 1], front_t[i + 1]],
                [grid[i], t_new],
            ]
        };
        elements.push(Element::new(
            tent,
            ElementShape::TentPolygon { vertices },
            coeff,
        )?);

        if i > 0 {
            let f = bottom_face(
                i - 1,
                [grid[i - 1], front_t[i - 1]],
                [grid[i], t_old],
                &owner,
                tent,
            );
            faces.push(Face { id: faces.len(), ..f });
            owner[i - 1] = Some(tent);
        }
        if i < nv - 1 {
            let f = bottom_face(
                i,
                [grid[i], t_old],
                [grid[i + 1], front_t[i + 1]],
                &owner,
                tent,
            );
            faces.push(Face { id: faces.len(), ..f });
            owner[i] = Some(tent);
        }
        if i == 0 || i == nv - 1 {
            let x = grid[i];
            let sign = if i == 0 { -1.0 } else { 1.0 };
            faces.push(Face {
                id: faces.len(),
                kind: FaceKind::from_bc(bc),
                geometry: FaceGeometry::Segment {
                    a: [x, t_old],
                    b: [x, t_new],
                },
                normal: [sign, 0.0, 0.0],
                gamma: 0.0,
                before: Some(tent),
                after: None,
                area: 0.0,
            });
        }
        front_t[i] = t_new;
    }

    for (j, o) in owner.iter().enumerate() {
        let o = o.expect("uncovered interval at the final time");
        faces.push(Face {
            id: faces.len(),
            kind: FaceKind::Final,
            geometry: FaceGeometry::Segment {
                a: [grid[j], t_final],
                b: [grid[j + 1], t_final],
            },
            normal: [0.0, 0.0, 1.0],
            gamma: 0.0,
            before: Some(o),
            after: None,
            area: 0.0,
        });
    }

    finalize(
        1,
        MeshKind::Tent1d,
        t_final,
        [grid[0], 0.0],
        [grid[nv - 1], 0.0],
        elements,
        faces,
        coeff,
    )
}

/// Shape-regularity candidate r_{K,c} (|dK^space| / sup_K c + |dK^time|) / |K|.
pub fn eta_candidate(mesh: &SpaceTimeMesh, element: &Element) -> f64 {
    let mut space = 0.0;
    let mut time = 0.0;
    for &f in &element.faces {
        let face = &mesh.faces[f];
        if face.kind.is_space_like() {
            space += face.area;
        } else {
            time += face.area;
        }
    }
    element.r_kc * (space / element.c_sup + time) / element.volume
}

impl SpaceTimeMesh {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Element containing the point, preferring the element whose closure
    /// contains it with the smallest id (deterministic on shared boundaries).
    pub fn locate(&self, x: &[f64], t: f64) -> Option<usize> {
        self.elements.iter().find(|e| e.contains(x, t)).map(|e| e.id)
    }

    /// Line-oriented text dump with VERTICES / ELEMENTS / FACES sections.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut vertex_ids: HashMap<(u64, u64, u64), usize> = HashMap::new();
        let mut vertex_list: Vec<([f64; 2], f64)> = Vec::new();
        let mut intern = |x: [f64; 2], t: f64| -> usize {
            let key = (x[0].to_bits(), x[1].to_bits(), t.to_bits());
            *vertex_ids.entry(key).or_insert_with(|| {
                vertex_list.push((x, t));
                vertex_list.len() - 1
            })
        };
        let elem_verts: Vec<Vec<usize>> = self
            .elements
            .iter()
            .map(|e| {
                e.shape
                    .vertices()
                    .into_iter()
                    .map(|(x, t)| intern(x, t))
                    .collect()
            })
            .collect();
        let face_verts: Vec<Vec<usize>> = self
            .faces
            .iter()
            .map(|f| {
                f.geometry
                    .vertices()
                    .into_iter()
                    .map(|(x, t)| intern(x, t))
                    .collect()
            })
            .collect();

        let coord = |v: f64| format!("{v:.16e}");
        let mut out = String::new();
        writeln!(
            out,
            "MESH dim={} kind={} t_final={} elements={} faces={}",
            self.dim,
            self.kind.label(),
            coord(self.t_final),
            self.elements.len(),
            self.faces.len()
        )
        .unwrap();
        writeln!(out, "VERTICES {}", vertex_list.len()).unwrap();
        for (id, (x, t)) in vertex_list.iter().enumerate() {
            if self.dim == 1 {
                writeln!(out, "{id} {} {}", coord(x[0]), coord(*t)).unwrap();
            } else {
                writeln!(out, "{id} {} {} {}", coord(x[0]), coord(x[1]), coord(*t)).unwrap();
            }
        }
        writeln!(out, "ELEMENTS {}", self.elements.len()).unwrap();
        for e in &self.elements {
            let center = if self.dim == 1 {
                format!("{} {}", coord(e.center_x[0]), coord(e.center_t))
            } else {
                format!(
                    "{} {} {}",
                    coord(e.center_x[0]),
                    coord(e.center_x[1]),
                    coord(e.center_t)
                )
            };
            writeln!(
                out,
                "{} layer={} center={center} r={} rc={} csup={} volume={} vertices={} faces={}",
                e.id,
                e.layer,
                coord(e.r_k),
                coord(e.r_kc),
                coord(e.c_sup),
                coord(e.volume),
                join_ids(&elem_verts[e.id]),
                join_ids(&e.faces),
            )
            .unwrap();
        }
        writeln!(out, "FACES {}", self.faces.len()).unwrap();
        for f in &self.faces {
            let normal = if self.dim == 1 {
                format!("{} {}", coord(f.normal[0]), coord(f.normal[2]))
            } else {
                format!(
                    "{} {} {}",
                    coord(f.normal[0]),
                    coord(f.normal[1]),
                    coord(f.normal[2])
                )
            };
            let opt = |o: Option<usize>| o.map_or("-".to_string(), |v| v.to_string());
            writeln!(
                out,
                "{} kind={} normal={normal} gamma={} area={} before={} after={} vertices={}",
                f.id,
                f.kind.label(),
                coord(f.gamma),
                coord(f.area),
                opt(f.before),
                opt(f.after),
                join_ids(&face_verts[f.id]),
            )
            .unwrap();
        }
        out
    }
}

fn join_ids(ids: &[usize]) -> String {
    let strs: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
    strs.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_coeff() -> CoefficientField {
        CoefficientField::Constant { rho: 1.0, g: 1.0 }
    }

    fn airy_coeff() -> CoefficientField {
        CoefficientField::AffineG {
            rho: 1.0,
            g0: 1.0,
            grad: [1.0, 0.0],
        }
    }

    fn count_kind(mesh: &SpaceTimeMesh, kind: FaceKind) -> usize {
        mesh.faces.iter().filter(|f| f.kind == kind).count()
    }

    #[test]
    fn cartesian_2x2_counts() {
        let mesh =
            build_cartesian_1d(0.0, 1.0, 2, 1.0, 2, &unit_coeff(), BoundaryKind::Dirichlet)
                .unwrap();
        assert_eq!(mesh.elements.len(), 4);
        assert_eq!(count_kind(&mesh, FaceKind::SpaceLikeInterior), 2);
        assert_eq!(count_kind(&mesh, FaceKind::TimeLikeInterior), 2);
        assert_eq!(count_kind(&mesh, FaceKind::Initial), 2);
        assert_eq!(count_kind(&mesh, FaceKind::Final), 2);
        assert_eq!(count_kind(&mesh, FaceKind::Dirichlet), 4);
        assert_eq!(mesh.layers, vec![vec![0, 1], vec![2, 3]]);
        for f in &mesh.faces {
            if f.kind.is_space_like() {
                assert_eq!(f.gamma, 0.0);
            }
            let len2: f64 = f.normal.iter().map(|c| c * c).sum();
            assert!((len2 - 1.0).abs() < 1e-12);
        }
        // Every rectangle sees four faces.
        for e in &mesh.elements {
            assert_eq!(e.faces.len(), 4);
        }
    }

    #[test]
    fn cartesian_radii_and_volume() {
        let mesh =
            build_cartesian_1d(0.0, 5.0, 8, 5.0, 8, &unit_coeff(), BoundaryKind::Dirichlet)
                .unwrap();
        let vol: f64 = mesh.elements.iter().map(|e| e.volume).sum();
        assert_relative_eq!(vol, 25.0, max_relative = 1e-12);
        let h = 5.0 / 8.0;
        for e in &mesh.elements {
            assert_relative_eq!(e.r_k, 0.5 * h * 2.0f64.sqrt(), max_relative = 1e-12);
            // Constant c = 1 makes the weighted radius equal to r_K.
            assert_relative_eq!(e.r_kc, e.r_k, max_relative = 1e-12);
            assert_relative_eq!(e.c_sup, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn prism_counts_and_quality() {
        let mesh = build_prism_2d(
            [0.0, 0.0],
            [1.0, 1.0],
            2,
            2,
            1,
            1.0,
            &unit_coeff(),
            BoundaryKind::Dirichlet,
        )
        .unwrap();
        assert_eq!(mesh.elements.len(), 8);
        assert_eq!(count_kind(&mesh, FaceKind::Initial), 8);
        assert_eq!(count_kind(&mesh, FaceKind::Final), 8);
        // 4 diagonals + 2 interior constant-x edges + 2 interior constant-y.
        assert_eq!(count_kind(&mesh, FaceKind::TimeLikeInterior), 8);
        assert_eq!(count_kind(&mesh, FaceKind::Dirichlet), 8);
        let vol: f64 = mesh.elements.iter().map(|e| e.volume).sum();
        assert_relative_eq!(vol, 1.0, max_relative = 1e-12);
        // Each prism: 2 horizontal + 3 vertical faces.
        for e in &mesh.elements {
            assert_eq!(e.faces.len(), 5);
        }

        let big = build_prism_2d(
            [0.0, 0.0],
            [1.0, 1.0],
            8,
            8,
            8,
            1.0,
            &unit_coeff(),
            BoundaryKind::Dirichlet,
        )
        .unwrap();
        assert_eq!(big.elements.len(), 2 * 8 * 8 * 8);
        assert_eq!(big.layers.len(), 8);
    }

    #[test]
    fn classify_slopes_against_wavespeed_cone() {
        let c = unit_coeff();
        // Advances 2 in x per 1 in t: |n_x| / n_t = 1/2, well inside the cone.
        let (normal, class, gamma) =
            classify_face(1, &[([0.0, 0.0], 0.0), ([2.0, 0.0], 1.0)], &c).unwrap();
        assert_eq!(class, FaceClass::SpaceLike);
        assert_relative_eq!(gamma, 0.5, max_relative = 1e-12);
        assert!(normal[2] > 0.0);

        // Vertical face.
        let (_, class, gamma) =
            classify_face(1, &[([0.5, 0.0], 0.0), ([0.5, 0.0], 1.0)], &c).unwrap();
        assert_eq!(class, FaceClass::TimeLike);
        assert_eq!(gamma, 0.0);

        // Steeper than the characteristic: rejected.
        let err = classify_face(1, &[([0.0, 0.0], 0.0), ([1.0, 0.0], 2.0)], &c).unwrap_err();
        assert!(err.to_string().contains("illegal face"));
    }

    #[test]
    fn tents_constant_speed_gamma_tracks_safety() {
        let grid: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let mesh =
            pitch_tents_1d(&grid, 1.0, &unit_coeff(), 0.9, BoundaryKind::Dirichlet).unwrap();
        assert_eq!(count_kind(&mesh, FaceKind::TimeLikeInterior), 0);
        let mut gamma_max: f64 = 0.0;
        for f in &mesh.faces {
            if f.kind == FaceKind::SpaceLikeInterior {
                assert!(f.gamma <= 0.9 + 1e-9, "gamma {} too large", f.gamma);
                gamma_max = gamma_max.max(f.gamma);
            }
        }
        assert_relative_eq!(gamma_max, 0.9, max_relative = 1e-10);
        let vol: f64 = mesh.elements.iter().map(|e| e.volume).sum();
        assert_relative_eq!(vol, 1.0, max_relative = 1e-10);
        // Causal layering is a valid topological order.
        for f in &mesh.faces {
            if f.kind == FaceKind::SpaceLikeInterior {
                let b = f.before.unwrap();
                let a = f.after.unwrap();
                assert!(mesh.elements[b].layer < mesh.elements[a].layer);
            }
        }
    }

    #[test]
    fn tents_grow_taller_where_waves_slow_down() {
        // c = (1 + x)^{-1/2} decreases with x, so tents on the right may be
        // taller and the left half needs more of them.
        let grid: Vec<f64> = (0..=32).map(|i| 5.0 * i as f64 / 32.0).collect();
        let mesh = pitch_tents_1d(&grid, 5.0, &airy_coeff(), 0.95, BoundaryKind::Dirichlet)
            .unwrap();
        let vol: f64 = mesh.elements.iter().map(|e| e.volume).sum();
        assert_relative_eq!(vol, 25.0, max_relative = 1e-10);
        let left = mesh
            .elements
            .iter()
            .filter(|e| e.center_x[0] < 2.5)
            .count();
        let right = mesh.elements.len() - left;
        assert!(
            left > right,
            "expected more (shorter) tents on the slow side: {left} vs {right}"
        );
    }

    #[test]
    fn tent_layers_are_pitching_generations() {
        let grid: Vec<f64> = (0..=6).map(|i| i as f64 / 6.0).collect();
        let mesh =
            pitch_tents_1d(&grid, 0.5, &unit_coeff(), 1.0, BoundaryKind::Neumann).unwrap();
        // Elements within one layer never share a face of any kind.
        for members in &mesh.layers {
            for (idx, &a) in members.iter().enumerate() {
                for &b in &members[idx + 1..] {
                    let fa = &mesh.elements[a].faces;
                    assert!(
                        !mesh.elements[b].faces.iter().any(|f| fa.contains(f)),
                        "layer-mates {a} and {b} share a face"
                    );
                }
            }
        }
    }

    #[test]
    fn causal_layers_count_slabs() {
        let mesh =
            build_cartesian_1d(0.0, 1.0, 3, 1.0, 3, &unit_coeff(), BoundaryKind::Dirichlet)
                .unwrap();
        assert_eq!(mesh.layers.len(), 3);
        let single =
            build_cartesian_1d(0.0, 1.0, 1, 1.0, 1, &unit_coeff(), BoundaryKind::Dirichlet)
                .unwrap();
        assert_eq!(single.layers, vec![vec![0]]);
    }

    #[test]
    fn square_elements_obey_cuboid_regularity_bound() {
        // Unit-speed medium and square cells: the shape-regularity candidate
        // must stay below the isotropic-cuboid bound 2 n^{3/2} (Lx/(c Lt) + c Lt/Lx).
        let mesh =
            build_cartesian_1d(0.0, 1.0, 4, 1.0, 4, &unit_coeff(), BoundaryKind::Dirichlet)
                .unwrap();
        let bound = 2.0 * (1.0 + 1.0);
        for e in &mesh.elements {
            let eta = eta_candidate(&mesh, e);
            assert_relative_eq!(eta, 2.0 * 2.0f64.sqrt(), max_relative = 1e-12);
            assert!(eta <= bound);
        }
    }

    #[test]
    fn dump_is_deterministic_and_sectioned() {
        let mesh =
            build_cartesian_1d(0.0, 1.0, 2, 1.0, 1, &unit_coeff(), BoundaryKind::Robin).unwrap();
        let text = mesh.dump();
        assert_eq!(text, mesh.dump());
        assert!(text.starts_with("MESH dim=1 kind=cartesian"));
        assert!(text.contains("\nVERTICES 6\n"));
        assert!(text.contains("\nELEMENTS 2\n"));
        assert!(text.contains("\nFACES 7\n"));
        assert!(text.contains("kind=robin"));
        // Vertex ids stay in range.
        for line in text.lines().skip_while(|l| !l.starts_with("FACES")).skip(1) {
            let verts = line.rsplit("vertices=").next().unwrap();
            for v in verts.split(',') {
                assert!(v.trim().parse::<usize>().unwrap() < 6);
            }
        }
    }

    #[test]
    fn tent_polygon_contains_its_quadrature_points() {
        let grid: Vec<f64> = (0..=5).map(|i| i as f64 / 5.0).collect();
        let mesh =
            pitch_tents_1d(&grid, 0.4, &unit_coeff(), 0.8, BoundaryKind::Dirichlet).unwrap();
        for e in &mesh.elements {
            let vol: f64 = e.shape.quadrature(3).iter().map(|q| q.w).sum();
            assert_relative_eq!(vol, e.volume, max_relative = 1e-12);
            for q in e.shape.quadrature(3) {
                assert!(e.contains(&q.x[..1], q.t));
            }
        }
    }
}

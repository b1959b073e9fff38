//! Local polynomial bases adapted to the acoustic wave operator with smooth,
//! time-independent coefficients rho(x) and G(x).
//!
//! Two recurrences do the real work. [`build_qu_basis`] produces scalar
//! space-time polynomials whose images under the second-order operator
//! div((1/rho) grad u) - dtt(G u) have vanishing derivatives at the element
//! center up to order p-2. [`build_qt_basis`] does the analogue for the
//! first-order system in (w, tau): both grad w + rho dt tau and
//! div tau + G dt w have vanishing derivatives up to order p-1.
//!
//! On top of these sit the four discrete vector spaces used by the DG scheme
//! ([`build_vector_space`]): the wave-adapted gradient space QW, the directly
//! constructed first-order space QT, and two non-adapted references, the full
//! polynomial space Y and the frozen-coefficient Trefftz space W.
//!
//! All polynomials are expressed in scaled monomials around the element
//! center. The recurrences are covariant under that scaling: feeding
//! [`TaylorData::rescaled`] data produces exactly the scaled coefficients.

use std::collections::BTreeMap;

use crate::coefficients::{CoefficientField, SpatialIndex, TaylorData};
use crate::error::{Error, Result};
use crate::multiindex::{
    factorial_ratio, poly_space_dim, spacetime_indices_up_to, spatial_indices_below,
    spatial_indices_of_order, spatial_indices_up_to, MultiIndex, MAX_SPACE_DIM,
};
use crate::polynomial::SpaceTimePolynomial;

/// Dimension of the scalar wave-adapted space of degree p in n space
/// dimensions: one Cauchy trace of degree <= p plus one of degree <= p-1.
pub fn qu_space_dim(n: usize, p: u32) -> usize {
    let hat = poly_space_dim(p, n as u32);
    let tilde = if p == 0 {
        0
    } else {
        poly_space_dim(p - 1, n as u32)
    };
    hat + tilde
}

/// Dimension of the first-order adapted space of degree p: n+1 field
/// components, each seeded by a spatial polynomial of degree <= p.
pub fn qt_space_dim(n: usize, p: u32) -> usize {
    (n + 1) * poly_space_dim(p, n as u32)
}

/// Seed indices for the scalar basis, in output order: first the monomials
/// (j, 0) with |j| <= p carrying the initial trace, then (j, 1) with
/// |j| <= p-1 carrying the initial time derivative.
pub fn qu_seed_indices(n: usize, p: u32) -> Vec<MultiIndex> {
    let mut seeds: Vec<MultiIndex> = spatial_indices_up_to(n, p)
        .into_iter()
        .map(MultiIndex::space)
        .collect();
    if p > 0 {
        seeds.extend(
            spatial_indices_up_to(n, p - 1)
                .into_iter()
                .map(|j| MultiIndex::new(j, 1)),
        );
    }
    seeds
}

fn spatial_diff(a: &SpatialIndex, b: &SpatialIndex) -> SpatialIndex {
    [a[0] - b[0], a[1] - b[1]]
}

fn lookup(map: &BTreeMap<MultiIndex, f64>, k: MultiIndex) -> f64 {
    map.get(&k).copied().unwrap_or(0.0)
}

fn check_taylor(taylor: &TaylorData, n: usize, need_order: u32, what: &'static str) -> Result<()> {
    if taylor.n != n {
        return Err(Error::Mesh(format!(
            "Taylor data is {}-dimensional but the basis request is {}-dimensional",
            taylor.n, n
        )));
    }
    if taylor.order < need_order {
        return Err(Error::InsufficientTaylorOrder {
            need: need_order,
            have: taylor.order,
            what,
        });
    }
    let z0 = taylor.zeta(&[0, 0]);
    let g0 = taylor.g(&[0, 0]);
    if z0 <= 0.0 {
        return Err(Error::NonpositiveCoefficient {
            what: "1/rho at the expansion center",
            value: z0,
            location: String::new(),
        });
    }
    if g0 <= 0.0 {
        return Err(Error::NonpositiveCoefficient {
            what: "G at the expansion center",
            value: g0,
            location: String::new(),
        });
    }
    Ok(())
}

/// Build the degree-p scalar basis adapted to the wave operator at the given
/// center, over scaled monomials ((x - x_K)/s)^{i_x} ((t - t_K)/s)^{i_t}.
///
/// `taylor` holds the unscaled Taylor coefficients of 1/rho and G at
/// `center_x`, to spatial order at least p-1. Output order matches
/// [`qu_seed_indices`]; basis element J restricted to t = t_K reproduces the
/// J-th seed monomial, so the set is linearly independent by construction.
///
/// Every coefficient with i_t >= 2 is determined by matching derivatives of
/// div((1/rho) grad u) - dtt(G u) to zero at the center, order by order:
/// working on the hyperplane |i_x| + i_t = l for l = 2..=p, the value at
/// (i_x, i_t + 2) only needs entries from lower hyperplanes and entries at
/// time index i_t computed two steps earlier.
pub fn build_qu_basis(
    n: usize,
    p: u32,
    taylor: &TaylorData,
    center_x: [f64; MAX_SPACE_DIM],
    center_t: f64,
    scale: f64,
) -> Result<Vec<SpaceTimePolynomial>> {
    assert!(n == 1 || n == 2, "space dimension must be 1 or 2");
    assert!(scale > 0.0, "scale must be positive");
    check_taylor(taylor, n, p.saturating_sub(1), "scalar wave-adapted basis")?;
    let td = taylor.rescaled(scale);
    let g0 = td.g(&[0, 0]);

    let seeds = qu_seed_indices(n, p);
    let mut out = Vec::with_capacity(seeds.len());
    for seed in &seeds {
        let mut a: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        a.insert(*seed, 1.0);
        for ell in 2..=p {
            for it in 0..=(ell - 2) {
                let sdeg = ell - 2 - it;
                for ix in spatial_indices_of_order(n, sdeg) {
                    let mut val = 0.0;
                    // Lower-order G couplings at the same time index.
                    for jx in spatial_indices_below(ix) {
                        if jx == ix {
                            continue;
                        }
                        let gc = td.g(&spatial_diff(&ix, &jx));
                        if gc != 0.0 {
                            val -= gc / g0 * lookup(&a, MultiIndex::new(jx, it + 2));
                        }
                    }
                    // Spatial flux couplings two time levels down.
                    for l in 0..n {
                        let mut iel = ix;
                        iel[l] += 1;
                        for jx in spatial_indices_below(iel) {
                            let zc = td.zeta(&spatial_diff(&iel, &jx));
                            if zc == 0.0 {
                                continue;
                            }
                            let fac = (ix[l] + 1) as f64 * (jx[l] + 1) as f64 * zc
                                / ((it + 2) as f64 * (it + 1) as f64 * g0);
                            let mut src = jx;
                            src[l] += 1;
                            val += fac * lookup(&a, MultiIndex::new(src, it));
                        }
                    }
                    if val != 0.0 {
                        a.insert(MultiIndex::new(ix, it + 2), val);
                    }
                }
            }
        }
        let mut poly = SpaceTimePolynomial::zero(n, center_x, center_t, scale);
        for (k, c) in a {
            poly.add_term(k, c);
        }
        out.push(poly);
    }
    Ok(out)
}

/// Derivatives at the polynomial's center of the second-order wave operator
/// applied to `f`: D^i [ div((1/rho) grad f) - dtt(G f) ] for all |i| <=
/// `up_to`, paired with i. `taylor` must hold unscaled data at the same
/// center, to spatial order up_to + 1.
///
/// For a member of the degree-p adapted basis every entry with |i| <= p - 2
/// vanishes (up to rounding); the first nonzero entries at |i| = p - 1
/// measure how the construction deviates from an exact Trefftz space.
pub fn quasi_trefftz_residuals(
    f: &SpaceTimePolynomial,
    taylor: &TaylorData,
    up_to: u32,
) -> Vec<(MultiIndex, f64)> {
    let n = f.n();
    let s = f.scale();
    // Unscaled derivative of f at the center for a stored scaled coefficient.
    let deriv = |k: MultiIndex| f.coefficient(&k) * k.factorial() / s.powi(k.order() as i32);

    let mut out = Vec::new();
    for i in spacetime_indices_up_to(n, up_to) {
        let ix = [i.ix[0], i.ix[1]];
        let it = i.it;
        let mut val = 0.0;
        for l in 0..n {
            let mut iel = ix;
            iel[l] += 1;
            for jx in spatial_indices_below(iel) {
                let zc = taylor.zeta(&spatial_diff(&iel, &jx));
                if zc == 0.0 {
                    continue;
                }
                let ratio =
                    factorial_ratio(&MultiIndex::space(iel), &MultiIndex::space(jx));
                let mut src = jx;
                src[l] += 1;
                val += ratio * zc * deriv(MultiIndex::new(src, it));
            }
        }
        for jx in spatial_indices_below(ix) {
            let gc = taylor.g(&spatial_diff(&ix, &jx));
            if gc == 0.0 {
                continue;
            }
            let ratio = factorial_ratio(&MultiIndex::space(ix), &MultiIndex::space(jx));
            val -= ratio * gc * deriv(MultiIndex::new(jx, it + 2));
        }
        out.push((i, val));
    }
    out
}

/// Which discrete vector space a basis set spans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// Wave-adapted gradient space: fields (dt u, -(1/rho(x)) grad u) for u in
    /// the degree-(p+1) scalar adapted space, with the exact 1/rho weighting.
    QW,
    /// First-order adapted space built directly in (w, tau) form.
    QT,
    /// Full polynomial gradient space: u ranges over all space-time
    /// polynomials of degree p+1; 1/rho is frozen at the element center.
    Y,
    /// Frozen-coefficient Trefftz space: the QW construction with the
    /// coefficient Taylor data truncated to order zero.
    W,
}

impl SpaceKind {
    pub fn label(&self) -> &'static str {
        match self {
            SpaceKind::QW => "qw",
            SpaceKind::QT => "qt",
            SpaceKind::Y => "y",
            SpaceKind::W => "w",
        }
    }

    pub fn parse(s: &str) -> Option<SpaceKind> {
        match s.to_ascii_lowercase().as_str() {
            "qw" => Some(SpaceKind::QW),
            "qt" => Some(SpaceKind::QT),
            "y" => Some(SpaceKind::Y),
            "w" => Some(SpaceKind::W),
            _ => None,
        }
    }
}

/// How the stored tau polynomials relate to the actual vector field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauWeighting {
    /// tau is the stored polynomial, nothing else.
    Plain,
    /// The actual field is (1/rho(x)) times the stored polynomial; the
    /// weighting is kept symbolic so gradient-space fields stay exact under
    /// variable density.
    InverseRho,
}

/// One member of a discrete vector space: a scalar part w and a spatial
/// vector part tau (n components), sharing one center and scale.
#[derive(Clone, Debug)]
pub struct VectorBasisElement {
    pub w: SpaceTimePolynomial,
    pub tau: Vec<SpaceTimePolynomial>,
    pub weighting: TauWeighting,
}

impl VectorBasisElement {
    pub fn n(&self) -> usize {
        self.w.n()
    }

    pub fn eval_w(&self, x: &[f64], t: f64) -> f64 {
        self.w.eval(x, t)
    }

    /// Value of the vector part, applying the 1/rho weighting if present.
    /// Components beyond n are zero.
    pub fn eval_tau(&self, coeff: &CoefficientField, x: &[f64], t: f64) -> [f64; MAX_SPACE_DIM] {
        let weight = match self.weighting {
            TauWeighting::Plain => 1.0,
            TauWeighting::InverseRho => coeff.inv_rho(x),
        };
        let mut out = [0.0; MAX_SPACE_DIM];
        for (l, tl) in self.tau.iter().enumerate() {
            out[l] = weight * tl.eval(x, t);
        }
        out
    }
}

/// Build the degree-p first-order adapted basis at the given center. Each
/// returned element annihilates the derivatives of both first-order residuals
/// at the center through order p-1 (see [`first_order_residuals`]).
///
/// Seeds: for slot 0 the scalar trace w(., t_K) runs over scaled monomials of
/// degree <= p with tau(., t_K) = 0; for slot l >= 1 component tau_l carries
/// the monomial trace and w(., t_K) = 0. Output order is slot-major, then
/// graded-lexicographic in the trace monomial.
///
/// Higher time indices follow from the two constraint families. Raising the
/// time index of w divides by G(x_K); raising the time index of tau divides
/// by rho(x_K), whose Taylor coefficients come from the reciprocal of the
/// stored 1/rho series.
pub fn build_qt_basis(
    n: usize,
    p: u32,
    taylor: &TaylorData,
    center_x: [f64; MAX_SPACE_DIM],
    center_t: f64,
    scale: f64,
) -> Result<Vec<VectorBasisElement>> {
    assert!(n == 1 || n == 2, "space dimension must be 1 or 2");
    assert!(scale > 0.0, "scale must be positive");
    check_taylor(taylor, n, p.saturating_sub(1), "first-order adapted basis")?;
    let td = taylor.rescaled(scale);
    let g0 = td.g(&[0, 0]);
    let r = td.rho_coefficients(td.order);
    let r0 = r[&[0, 0]];

    let trace_indices = spatial_indices_up_to(n, p);
    let mut out = Vec::with_capacity((n + 1) * trace_indices.len());
    for slot in 0..=n {
        for trace in &trace_indices {
            // a[0] holds w coefficients, a[1..=n] the tau components.
            let mut a: Vec<BTreeMap<MultiIndex, f64>> = vec![BTreeMap::new(); n + 1];
            a[slot].insert(MultiIndex::space(*trace), 1.0);

            for ell in 1..=p {
                for it in 0..=(ell - 1) {
                    let sdeg = ell - 1 - it;
                    for ix in spatial_indices_of_order(n, sdeg) {
                        // w time raise, from div tau + G dt w = 0.
                        let mut v0 = 0.0;
                        for l in 0..n {
                            let mut iel = ix;
                            iel[l] += 1;
                            v0 -= (ix[l] + 1) as f64 / (g0 * (it + 1) as f64)
                                * lookup(&a[l + 1], MultiIndex::new(iel, it));
                        }
                        for jx in spatial_indices_below(ix) {
                            if jx == ix {
                                continue;
                            }
                            let gc = td.g(&spatial_diff(&ix, &jx));
                            if gc != 0.0 {
                                v0 -= gc / g0 * lookup(&a[0], MultiIndex::new(jx, it + 1));
                            }
                        }
                        if v0 != 0.0 {
                            a[0].insert(MultiIndex::new(ix, it + 1), v0);
                        }
                        // tau time raises, from grad w + rho dt tau = 0.
                        for lam in 0..n {
                            let mut iel = ix;
                            iel[lam] += 1;
                            let mut v = -((ix[lam] + 1) as f64) / ((it + 1) as f64 * r0)
                                * lookup(&a[0], MultiIndex::new(iel, it));
                            for jx in spatial_indices_below(ix) {
                                if jx == ix {
                                    continue;
                                }
                                let rc = r.get(&spatial_diff(&ix, &jx)).copied().unwrap_or(0.0);
                                if rc != 0.0 {
                                    v -= rc / r0 * lookup(&a[lam + 1], MultiIndex::new(jx, it + 1));
                                }
                            }
                            if v != 0.0 {
                                a[lam + 1].insert(MultiIndex::new(ix, it + 1), v);
                            }
                        }
                    }
                }
            }

            let mut polys: Vec<SpaceTimePolynomial> = a
                .into_iter()
                .map(|m| {
                    let mut poly = SpaceTimePolynomial::zero(n, center_x, center_t, scale);
                    for (k, c) in m {
                        poly.add_term(k, c);
                    }
                    poly
                })
                .collect();
            let w = polys.remove(0);
            out.push(VectorBasisElement {
                w,
                tau: polys,
                weighting: TauWeighting::Plain,
            });
        }
    }
    Ok(out)
}

/// Center derivatives of the two first-order residuals of a polynomial field
/// (w, tau): for each |i| <= `up_to`, the component-wise momentum residual
/// D^i (d_l w + rho dt tau_l) and the continuity residual
/// D^i (div tau + G dt w). `taylor` must be unscaled data at the shared
/// center of the polynomials; rho's Taylor coefficients are recovered from
/// the stored 1/rho series.
pub fn first_order_residuals(
    w: &SpaceTimePolynomial,
    tau: &[SpaceTimePolynomial],
    taylor: &TaylorData,
    up_to: u32,
) -> Vec<FirstOrderResidual> {
    let n = w.n();
    assert_eq!(tau.len(), n, "tau must have one component per space axis");
    let r = taylor.rho_coefficients(taylor.order);
    let deriv = |f: &SpaceTimePolynomial, k: MultiIndex| {
        f.coefficient(&k) * k.factorial() / f.scale().powi(k.order() as i32)
    };

    let mut out = Vec::new();
    for i in spacetime_indices_up_to(n, up_to) {
        let ix = [i.ix[0], i.ix[1]];
        let it = i.it;
        let mut momentum = [0.0; MAX_SPACE_DIM];
        for lam in 0..n {
            let mut iel = ix;
            iel[lam] += 1;
            let mut v = deriv(w, MultiIndex::new(iel, it));
            for jx in spatial_indices_below(ix) {
                let rc = r.get(&spatial_diff(&ix, &jx)).copied().unwrap_or(0.0);
                if rc == 0.0 {
                    continue;
                }
                let ratio = factorial_ratio(&MultiIndex::space(ix), &MultiIndex::space(jx));
                v += ratio * rc * deriv(&tau[lam], MultiIndex::new(jx, it + 1));
            }
            momentum[lam] = v;
        }
        let mut continuity = 0.0;
        for l in 0..n {
            let mut iel = ix;
            iel[l] += 1;
            continuity += deriv(&tau[l], MultiIndex::new(iel, it));
        }
        for jx in spatial_indices_below(ix) {
            let gc = taylor.g(&spatial_diff(&ix, &jx));
            if gc == 0.0 {
                continue;
            }
            let ratio = factorial_ratio(&MultiIndex::space(ix), &MultiIndex::space(jx));
            continuity += ratio * gc * deriv(w, MultiIndex::new(jx, it + 1));
        }
        out.push(FirstOrderResidual {
            index: i,
            momentum,
            continuity,
        });
    }
    out
}

/// One entry of [`first_order_residuals`].
#[derive(Clone, Copy, Debug)]
pub struct FirstOrderResidual {
    pub index: MultiIndex,
    /// D^i (d_l w + rho dt tau_l), one entry per space axis (trailing zero in 1d).
    pub momentum: [f64; MAX_SPACE_DIM],
    /// D^i (div tau + G dt w).
    pub continuity: f64,
}

impl FirstOrderResidual {
    pub fn max_abs(&self, n: usize) -> f64 {
        let mut m = self.continuity.abs();
        for l in 0..n {
            m = m.max(self.momentum[l].abs());
        }
        m
    }
}

/// Dimension of [`build_vector_space`]'s result.
pub fn vector_space_dim(kind: SpaceKind, n: usize, p: u32) -> usize {
    match kind {
        SpaceKind::QW | SpaceKind::W => qu_space_dim(n, p + 1) - 1,
        SpaceKind::Y => poly_space_dim(p + 1, n as u32 + 1) - 1,
        SpaceKind::QT => qt_space_dim(n, p),
    }
}

/// Build the degree-p discrete vector space of the requested kind on an
/// element with the given center and scale. Gradient-type spaces (QW, Y, W)
/// drop the constant potential, whose field vanishes identically; their
/// members are w = dt u and tau = -(1/rho) grad u with the weighting handled
/// per [`SpaceKind`].
pub fn build_vector_space(
    kind: SpaceKind,
    n: usize,
    p: u32,
    coeff: &CoefficientField,
    center_x: [f64; MAX_SPACE_DIM],
    center_t: f64,
    scale: f64,
) -> Result<Vec<VectorBasisElement>> {
    assert!(n == 1 || n == 2, "space dimension must be 1 or 2");
    match kind {
        SpaceKind::QW => {
            let taylor = coeff.taylor_data(&center_x[..n], p)?;
            let potentials = build_qu_basis(n, p + 1, &taylor, center_x, center_t, scale)?;
            Ok(gradient_fields(&potentials, 1.0, TauWeighting::InverseRho))
        }
        SpaceKind::W => {
            let mut taylor = coeff.taylor_data(&center_x[..n], 0)?.truncated(0);
            // Frozen coefficients are a constant field, exact at every order.
            taylor.order = p + 1;
            let zeta0 = taylor.zeta(&[0, 0]);
            let potentials = build_qu_basis(n, p + 1, &taylor, center_x, center_t, scale)?;
            Ok(gradient_fields(&potentials, zeta0, TauWeighting::Plain))
        }
        SpaceKind::Y => {
            let zeta0 = coeff.inv_rho(&center_x[..n]);
            if zeta0 <= 0.0 {
                return Err(Error::NonpositiveCoefficient {
                    what: "1/rho at the expansion center",
                    value: zeta0,
                    location: String::new(),
                });
            }
            let potentials: Vec<SpaceTimePolynomial> = spacetime_indices_up_to(n, p + 1)
                .into_iter()
                .map(|k| SpaceTimePolynomial::monomial(n, center_x, center_t, scale, k, 1.0))
                .collect();
            Ok(gradient_fields(&potentials, zeta0, TauWeighting::Plain))
        }
        SpaceKind::QT => {
            let taylor = coeff.taylor_data(&center_x[..n], p.saturating_sub(1))?;
            build_qt_basis(n, p, &taylor, center_x, center_t, scale)
        }
    }
}

/// Fields (dt u, -zeta0 * grad u) for each potential u, skipping constants.
/// For the exact-weighting space pass zeta0 = 1 and mark tau as InverseRho.
fn gradient_fields(
    potentials: &[SpaceTimePolynomial],
    zeta0: f64,
    weighting: TauWeighting,
) -> Vec<VectorBasisElement> {
    let mut out = Vec::with_capacity(potentials.len().saturating_sub(1));
    for u in potentials {
        if u.degree() == 0 {
            // Constant potentials carry no field.
            continue;
        }
        let n = u.n();
        let w = u.derive(&MultiIndex::unit_t());
        let tau: Vec<SpaceTimePolynomial> = (0..n)
            .map(|l| {
                let mut d = u.derive(&MultiIndex::unit_x(l));
                d.scale_coefficients(-zeta0);
                d
            })
            .collect();
        out.push(VectorBasisElement { w, tau, weighting });
    }
    out
}

/// Truncated Taylor expansion of a solution around an element center:
/// sum over |k| <= degree of D^k u(center) / k! times the scaled monomial.
/// `derivative` supplies D^k u at the center.
pub fn taylor_project_solution<F>(
    n: usize,
    degree: u32,
    center_x: [f64; MAX_SPACE_DIM],
    center_t: f64,
    scale: f64,
    mut derivative: F,
) -> Result<SpaceTimePolynomial>
where
    F: FnMut(&MultiIndex) -> f64,
{
    let mut derivs = BTreeMap::new();
    for k in spacetime_indices_up_to(n, degree) {
        derivs.insert(k, derivative(&k));
    }
    SpaceTimePolynomial::from_taylor_samples(n, &derivs, degree, center_x, center_t, scale)
}

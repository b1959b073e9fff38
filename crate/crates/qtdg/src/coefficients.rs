//! Material coefficient fields: density `rho(x)` and the factor `G(x)`
//! multiplying the second time derivative. Both are time-independent and must
//! stay positive on the computational domain. The wavespeed is
//! `c = (rho G)^{-1/2}`.
//!
//! Basis construction consumes local Taylor data: spatial Taylor coefficients
//! `zeta_m` of `1/rho` and `g_m` of `G` at an element center. Built-in families
//! provide these in closed form; a generic family accepts derivative
//! callbacks.

use crate::error::{Error, Result};
use crate::multiindex::{factorial_u128, spatial_indices_up_to, MAX_SPACE_DIM};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Spatial multi-index key for Taylor maps (graded-lex via sort order of the
/// tuple (order, ix0, ix1) is not automatic for arrays, so maps are keyed by
/// the plain array and iterated through the enumeration helpers).
pub type SpatialIndex = [u32; MAX_SPACE_DIM];

fn spatial_order(m: &SpatialIndex) -> u32 {
    m[0] + m[1]
}

/// Local Taylor data of the material at an expansion point.
#[derive(Clone, Debug)]
pub struct TaylorData {
    pub n: usize,
    /// Maximum spatial order the maps are filled to.
    pub order: u32,
    /// Taylor coefficients of 1/rho: zeta_m = D^m (1/rho)(x_K) / m!.
    pub zeta: BTreeMap<SpatialIndex, f64>,
    /// Taylor coefficients of G: g_m = D^m G(x_K) / m!.
    pub g: BTreeMap<SpatialIndex, f64>,
}

impl TaylorData {
    pub fn zeta(&self, m: &SpatialIndex) -> f64 {
        self.zeta.get(m).copied().unwrap_or(0.0)
    }

    pub fn g(&self, m: &SpatialIndex) -> f64 {
        self.g.get(m).copied().unwrap_or(0.0)
    }

    /// Data rescaled to unit-reference coordinates x = x_K + s u: a Taylor
    /// coefficient of order |m| picks up a factor s^{|m|}. The recurrences are
    /// unchanged under this substitution, which is how element scaling is
    /// implemented.
    pub fn rescaled(&self, s: f64) -> TaylorData {
        let map = |src: &BTreeMap<SpatialIndex, f64>| {
            src.iter()
                .map(|(m, v)| (*m, v * s.powi(spatial_order(m) as i32)))
                .collect()
        };
        TaylorData {
            n: self.n,
            order: self.order,
            zeta: map(&self.zeta),
            g: map(&self.g),
        }
    }

    /// Truncate to spatial order `order` (frozen-coefficient spaces use 0).
    pub fn truncated(&self, order: u32) -> TaylorData {
        let map = |src: &BTreeMap<SpatialIndex, f64>| {
            src.iter()
                .filter(|(m, _)| spatial_order(m) <= order)
                .map(|(m, v)| (*m, *v))
                .collect()
        };
        TaylorData {
            n: self.n,
            order: order.min(self.order),
            zeta: map(&self.zeta),
            g: map(&self.g),
        }
    }

    /// Taylor coefficients of rho itself, derived from those of 1/rho by the
    /// reciprocal-series recursion: sum_{j <= m} r_j zeta_{m-j} = [m = 0].
    pub fn rho_coefficients(&self, order: u32) -> BTreeMap<SpatialIndex, f64> {
        let z0 = self.zeta(&[0, 0]);
        let mut r: BTreeMap<SpatialIndex, f64> = BTreeMap::new();
        for m in spatial_indices_up_to(self.n, order) {
            let mut acc = if spatial_order(&m) == 0 { 1.0 } else { 0.0 };
            for j0 in 0..=m[0] {
                for j1 in 0..=m[1] {
                    let j = [j0, j1];
                    if j == m {
                        continue;
                    }
                    let diff = [m[0] - j0, m[1] - j1];
                    acc -= r.get(&j).copied().unwrap_or(0.0) * self.zeta(&diff);
                }
            }
            r.insert(m, acc / z0);
        }
        r
    }
}

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type DerivFn = Arc<dyn Fn(&[f64], SpatialIndex) -> f64 + Send + Sync>;

/// User-supplied coefficient family: pointwise values plus derivative
/// callbacks for 1/rho and G (derivatives feed Taylor data; set them exact).
#[derive(Clone)]
pub struct CustomField {
    pub n: usize,
    pub rho: PointFn,
    pub g: PointFn,
    /// D^m (1/rho)(x).
    pub inv_rho_deriv: DerivFn,
    /// D^m G(x).
    pub g_deriv: DerivFn,
}

impl std::fmt::Debug for CustomField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CustomField(n = {})", self.n)
    }
}

#[derive(Clone, Debug)]
pub enum CoefficientField {
    /// rho, G constant.
    Constant { rho: f64, g: f64 },
    /// G affine (g0 + grad . x), rho constant.
    AffineG { rho: f64, g0: f64, grad: [f64; 2] },
    /// G = (s0 + d . x)^{-2}, rho constant. Wavespeed grows linearly along d.
    InverseSquareG { rho: f64, s0: f64, d: [f64; 2] },
    /// 1d medium rho = x^{-2}, G = x^2 - 2; usable on x > sqrt(2).
    InverseSquareRho,
    Custom(CustomField),
}

impl CoefficientField {
    pub fn rho(&self, x: &[f64]) -> f64 {
        match self {
            CoefficientField::Constant { rho, .. } => *rho,
            CoefficientField::AffineG { rho, .. } => *rho,
            CoefficientField::InverseSquareG { rho, .. } => *rho,
            CoefficientField::InverseSquareRho => 1.0 / (x[0] * x[0]),
            CoefficientField::Custom(c) => (c.rho)(x),
        }
    }

    pub fn g_value(&self, x: &[f64]) -> f64 {
        match self {
            CoefficientField::Constant { g, .. } => *g,
            CoefficientField::AffineG { g0, grad, .. } => {
                g0 + grad[0] * x[0] + if x.len() > 1 { grad[1] * x[1] } else { 0.0 }
            }
            CoefficientField::InverseSquareG { s0, d, .. } => {
                let s = s0 + d[0] * x[0] + if x.len() > 1 { d[1] * x[1] } else { 0.0 };
                1.0 / (s * s)
            }
            CoefficientField::InverseSquareRho => x[0] * x[0] - 2.0,
            CoefficientField::Custom(c) => (c.g)(x),
        }
    }

    pub fn inv_rho(&self, x: &[f64]) -> f64 {
        match self {
            CoefficientField::InverseSquareRho => x[0] * x[0],
            _ => 1.0 / self.rho(x),
        }
    }

    /// Spatial gradient of 1/rho (exact per family).
    pub fn grad_inv_rho(&self, x: &[f64]) -> [f64; 2] {
        match self {
            CoefficientField::Constant { .. }
            | CoefficientField::AffineG { .. }
            | CoefficientField::InverseSquareG { .. } => [0.0, 0.0],
            CoefficientField::InverseSquareRho => [2.0 * x[0], 0.0],
            CoefficientField::Custom(c) => {
                let gx = (c.inv_rho_deriv)(x, [1, 0]);
                let gy = if c.n > 1 {
                    (c.inv_rho_deriv)(x, [0, 1])
                } else {
                    0.0
                };
                [gx, gy]
            }
        }
    }

    /// Pointwise wavespeed c = (rho G)^{-1/2}.
    pub fn wavespeed(&self, x: &[f64]) -> f64 {
        let rg = self.rho(x) * self.g_value(x);
        debug_assert!(rg > 0.0, "nonpositive rho*G at {x:?}");
        1.0 / rg.sqrt()
    }

    /// Whether the wavespeed is monotone along every line (true for the
    /// built-in families), so suprema over convex hulls sit at vertices.
    pub fn monotone_wavespeed(&self) -> bool {
        !matches!(self, CoefficientField::Custom(_))
    }

    /// Supremum of the wavespeed over the convex hull of `points` (spatial).
    /// Monotone families evaluate vertices exactly; otherwise a 33-point grid
    /// per axis over the bounding box is scanned and inflated by 1%.
    pub fn wavespeed_sup(&self, points: &[[f64; 2]], n: usize) -> f64 {
        assert!(!points.is_empty());
        if self.monotone_wavespeed() {
            let mut sup = f64::MIN;
            for p in points {
                let c = self.wavespeed(&p[..n]);
                if c > sup {
                    sup = c;
                }
            }
            return sup;
        }
        let mut lo = [f64::MAX; 2];
        let mut hi = [f64::MIN; 2];
        for p in points {
            for a in 0..n {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        const SAMPLES: usize = 33;
        let mut sup = f64::MIN;
        let steps = |a: usize| {
            (0..SAMPLES).map(move |i| {
                if hi[a] > lo[a] {
                    lo[a] + (hi[a] - lo[a]) * i as f64 / (SAMPLES - 1) as f64
                } else {
                    lo[a]
                }
            })
        };
        if n == 1 {
            for x0 in steps(0) {
                sup = sup.max(self.wavespeed(&[x0]));
            }
        } else {
            for x0 in steps(0) {
                for x1 in steps(1) {
                    sup = sup.max(self.wavespeed(&[x0, x1]));
                }
            }
        }
        sup * 1.01
    }

    /// Local Taylor data (zeta of 1/rho, g of G) at `x_k` up to spatial order
    /// `order`. Fails on nonpositive rho or G at the expansion point.
    pub fn taylor_data(&self, x_k: &[f64], order: u32) -> Result<TaylorData> {
        let n = x_k.len();
        let rho = self.rho(x_k);
        let g0 = self.g_value(x_k);
        let check = |what: &'static str, value: f64| -> Result<()> {
            if value <= 0.0 {
                Err(Error::NonpositiveCoefficient {
                    what,
                    value,
                    location: format!("{x_k:?}"),
                })
            } else {
                Ok(())
            }
        };
        check("rho", rho)?;
        check("G", g0)?;

        let mut zeta = BTreeMap::new();
        let mut g = BTreeMap::new();
        match self {
            CoefficientField::Constant { rho, g: gv } => {
                zeta.insert([0, 0], 1.0 / rho);
                g.insert([0, 0], *gv);
            }
            CoefficientField::AffineG { rho, grad, .. } => {
                zeta.insert([0, 0], 1.0 / rho);
                g.insert([0, 0], g0);
                if order >= 1 {
                    if grad[0] != 0.0 {
                        g.insert([1, 0], grad[0]);
                    }
                    if n > 1 && grad[1] != 0.0 {
                        g.insert([0, 1], grad[1]);
                    }
                }
            }
            CoefficientField::InverseSquareG { rho, s0, d } => {
                zeta.insert([0, 0], 1.0 / rho);
                let sk = s0 + d[0] * x_k[0] + if n > 1 { d[1] * x_k[1] } else { 0.0 };
                // (sk + d.u)^{-2} = sum_m (|m|+1)(-1)^{|m|} sk^{-2-|m|}
                //                   (|m|!/m!) d^m u^m.
                for m in spatial_indices_up_to(n, order) {
                    let mo = spatial_order(&m);
                    let multinom = (factorial_u128(mo)
                        / (factorial_u128(m[0]) * factorial_u128(m[1])))
                        as f64;
                    let dm = d[0].powi(m[0] as i32) * d[1].powi(m[1] as i32);
                    let v = (mo as f64 + 1.0)
                        * if mo % 2 == 0 { 1.0 } else { -1.0 }
                        * sk.powi(-(mo as i32) - 2)
                        * multinom
                        * dm;
                    if v != 0.0 {
                        g.insert(m, v);
                    }
                }
            }
            CoefficientField::InverseSquareRho => {
                let xk = x_k[0];
                zeta.insert([0, 0], xk * xk);
                g.insert([0, 0], xk * xk - 2.0);
                if order >= 1 {
                    zeta.insert([1, 0], 2.0 * xk);
                    g.insert([1, 0], 2.0 * xk);
                }
                if order >= 2 {
                    zeta.insert([2, 0], 1.0);
                    g.insert([2, 0], 1.0);
                }
            }
            CoefficientField::Custom(c) => {
                for m in spatial_indices_up_to(n, order) {
                    let mfact =
                        (factorial_u128(m[0]) * factorial_u128(m[1])) as f64;
                    let zv = (c.inv_rho_deriv)(x_k, m) / mfact;
                    let gv = (c.g_deriv)(x_k, m) / mfact;
                    if zv != 0.0 {
                        zeta.insert(m, zv);
                    }
                    if gv != 0.0 {
                        g.insert(m, gv);
                    }
                }
            }
        }
        Ok(TaylorData {
            n,
            order,
            zeta,
            g,
        })
    }
}

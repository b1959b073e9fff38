//! Sparse space-time polynomials in scaled, shifted monomials.
//!
//! A polynomial is stored as a graded-lexicographically ordered map from
//! multi-indices to coefficients of `((x - x_c)/s)^{i_x} ((t - t_c)/s)^{i_t}`.
//! Centering at the element and scaling by its radius keeps the basis
//! recurrences well conditioned across refinement levels.

use crate::error::{Error, Result};
use crate::multiindex::{factorial_u128, MultiIndex, MAX_SPACE_DIM};
use std::collections::BTreeMap;

/// Coefficients below this magnitude relative to the largest one are dropped
/// when pruning; exact zeros are always dropped.
const PRUNE_EPS: f64 = 0.0;

#[derive(Clone, Debug)]
pub struct SpaceTimePolynomial {
    n: usize,
    center_x: [f64; MAX_SPACE_DIM],
    center_t: f64,
    scale: f64,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl SpaceTimePolynomial {
    pub fn zero(n: usize, center_x: [f64; MAX_SPACE_DIM], center_t: f64, scale: f64) -> Self {
        assert!(n >= 1 && n <= MAX_SPACE_DIM, "space dimension must be 1 or 2");
        assert!(scale > 0.0, "scale must be positive");
        SpaceTimePolynomial {
            n,
            center_x,
            center_t,
            scale,
            coeffs: BTreeMap::new(),
        }
    }

    /// Single scaled monomial with coefficient `c`.
    pub fn monomial(
        n: usize,
        center_x: [f64; MAX_SPACE_DIM],
        center_t: f64,
        scale: f64,
        index: MultiIndex,
        c: f64,
    ) -> Self {
        let mut p = Self::zero(n, center_x, center_t, scale);
        p.add_term(index, c);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn center_x(&self) -> [f64; MAX_SPACE_DIM] {
        self.center_x
    }

    pub fn center_t(&self) -> f64 {
        self.center_t
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.coeffs
    }

    pub fn coefficient(&self, k: &MultiIndex) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn set_coefficient(&mut self, k: MultiIndex, c: f64) {
        if k.ix[1] > 0 {
            assert!(self.n == 2, "second spatial index used in a 1d polynomial");
        }
        if c == 0.0 {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, c);
        }
    }

    pub fn add_term(&mut self, k: MultiIndex, c: f64) {
        if k.ix[1] > 0 {
            assert!(self.n == 2, "second spatial index used in a 1d polynomial");
        }
        let entry = self.coeffs.entry(k).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coeffs.remove(&k);
        }
    }

    /// self += factor * other. Centers, scales, and dimensions must match.
    pub fn add_scaled(&mut self, other: &SpaceTimePolynomial, factor: f64) {
        self.assert_compatible(other);
        for (k, c) in &other.coeffs {
            self.add_term(*k, factor * c);
        }
    }

    pub fn scale_coefficients(&mut self, factor: f64) {
        if factor == 0.0 {
            self.coeffs.clear();
            return;
        }
        for c in self.coeffs.values_mut() {
            *c *= factor;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Total degree; 0 for the zero polynomial. Relies on graded ordering: the
    /// last key has maximal total order.
    pub fn degree(&self) -> u32 {
        self.coeffs
            .last_key_value()
            .map(|(k, _)| k.order())
            .unwrap_or(0)
    }

    fn assert_compatible(&self, other: &SpaceTimePolynomial) {
        assert_eq!(self.n, other.n, "mixed space dimensions");
        assert!(
            self.center_x == other.center_x
                && self.center_t == other.center_t
                && self.scale == other.scale,
            "polynomials have different centers/scales; rebase first"
        );
    }

    /// Exact value at a space-time point. `x` must have length n.
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        let d = self.degree() as usize;
        let u0 = (x[0] - self.center_x[0]) / self.scale;
        let u1 = if self.n == 2 {
            (x[1] - self.center_x[1]) / self.scale
        } else {
            0.0
        };
        let ut = (t - self.center_t) / self.scale;
        // Power tables per axis; degrees are small so this is cheap and exact.
        let mut p0 = vec![1.0; d + 1];
        let mut p1 = vec![1.0; d + 1];
        let mut pt = vec![1.0; d + 1];
        for k in 1..=d {
            p0[k] = p0[k - 1] * u0;
            p1[k] = p1[k - 1] * u1;
            pt[k] = pt[k - 1] * ut;
        }
        let mut acc = 0.0;
        for (k, c) in &self.coeffs {
            acc += c * p0[k.ix[0] as usize] * p1[k.ix[1] as usize] * pt[k.it as usize];
        }
        acc
    }

    /// Exact derivative D^i of the polynomial (same center and scale).
    pub fn derive(&self, i: &MultiIndex) -> SpaceTimePolynomial {
        let mut out = Self::zero(self.n, self.center_x, self.center_t, self.scale);
        let s_pow = self.scale.powi(i.order() as i32);
        for (k, c) in &self.coeffs {
            if let Some(k_new) = k.checked_sub(i) {
                // Falling factorial per axis: k!/(k-i)!, exact in u128.
                let f0 = factorial_u128(k.ix[0]) / factorial_u128(k_new.ix[0]);
                let f1 = factorial_u128(k.ix[1]) / factorial_u128(k_new.ix[1]);
                let ft = factorial_u128(k.it) / factorial_u128(k_new.it);
                let factor = (f0 * f1 * ft) as f64 / s_pow;
                out.add_term(k_new, c * factor);
            }
        }
        out
    }

    /// Product of two polynomials over the same center/scale.
    pub fn multiply(&self, other: &SpaceTimePolynomial) -> SpaceTimePolynomial {
        self.assert_compatible(other);
        let mut out = Self::zero(self.n, self.center_x, self.center_t, self.scale);
        for (ka, ca) in &self.coeffs {
            for (kb, cb) in &other.coeffs {
                out.add_term(ka.add(kb), ca * cb);
            }
        }
        out
    }

    /// Re-express in a new center and scale. Exact up to rounding: each scaled
    /// monomial expands through the per-axis binomial theorem.
    pub fn rebase(
        &self,
        center_x: [f64; MAX_SPACE_DIM],
        center_t: f64,
        scale: f64,
    ) -> SpaceTimePolynomial {
        assert!(scale > 0.0);
        let mut out = Self::zero(self.n, center_x, center_t, scale);
        // (X_a - c_a)/s = (s' u'_a + d_a)/s with d_a = c'_a - c_a.
        let d = [
            center_x[0] - self.center_x[0],
            center_x[1] - self.center_x[1],
            center_t - self.center_t,
        ];
        for (k, c) in &self.coeffs {
            let mut terms: Vec<(MultiIndex, f64)> = vec![(MultiIndex::ZERO, *c)];
            for (axis, &ka) in [k.ix[0], k.ix[1], k.it].iter().enumerate() {
                if ka == 0 {
                    continue;
                }
                let mut next = Vec::with_capacity(terms.len() * (ka as usize + 1));
                for (idx, coef) in &terms {
                    // ((s' u' + d)/s)^{ka}
                    for j in 0..=ka {
                        let b = crate::multiindex::binomial(ka, j);
                        let w = b
                            * scale.powi(j as i32)
                            * d[axis].powi((ka - j) as i32)
                            / self.scale.powi(ka as i32);
                        let mut nidx = *idx;
                        match axis {
                            0 => nidx.ix[0] += j,
                            1 => nidx.ix[1] += j,
                            _ => nidx.it += j,
                        }
                        next.push((nidx, coef * w));
                    }
                }
                terms = next;
            }
            for (idx, coef) in terms {
                out.add_term(idx, coef);
            }
        }
        out.prune();
        out
    }

    /// Taylor polynomial of order m+1 (degree <= m) from derivative samples at
    /// the center: sum over |i| <= m of D^i f / i! times the shifted monomial.
    /// Every index with |i| <= m must be present in `derivs`.
    pub fn from_taylor_samples(
        n: usize,
        derivs: &BTreeMap<MultiIndex, f64>,
        m: u32,
        center_x: [f64; MAX_SPACE_DIM],
        center_t: f64,
        scale: f64,
    ) -> Result<SpaceTimePolynomial> {
        let mut p = Self::zero(n, center_x, center_t, scale);
        for idx in crate::multiindex::spacetime_indices_up_to(n, m) {
            let v = derivs
                .get(&idx)
                .copied()
                .ok_or_else(|| Error::MissingDerivative(idx.format(n)))?;
            if v != 0.0 {
                p.add_term(idx, v * scale.powi(idx.order() as i32) / idx.factorial());
            }
        }
        Ok(p)
    }

    /// Drop exact zeros (and, if configured, negligible coefficients).
    pub fn prune(&mut self) {
        if PRUNE_EPS > 0.0 {
            let max = self
                .coeffs
                .values()
                .fold(0.0f64, |m, c| m.max(c.abs()));
            let cut = max * PRUNE_EPS;
            self.coeffs.retain(|_, c| c.abs() > cut);
        } else {
            self.coeffs.retain(|_, c| *c != 0.0);
        }
    }

    /// Text dump: one line per term, `i_x1 [i_x2] i_t coefficient`, in
    /// graded-lexicographic order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, c) in &self.coeffs {
            if self.n == 1 {
                out.push_str(&format!("{} {} {:.16e}\n", k.ix[0], k.it, c));
            } else {
                out.push_str(&format!("{} {} {} {:.16e}\n", k.ix[0], k.ix[1], k.it, c));
            }
        }
        out
    }
}

//! Space-time multi-indices and exact combinatorial helpers.
//!
//! A multi-index pairs spatial orders `ix` (up to two space dimensions) with a
//! time order `it`. Orderings, factorials, and enumeration helpers here feed
//! the polynomial module and the basis recurrences.

use std::cmp::Ordering;

/// Maximum number of space dimensions handled by the crate.
pub const MAX_SPACE_DIM: usize = 2;

/// Derivative/monomial multi-index `(i_x, i_t)`. Spatial entries beyond the
/// active dimension stay zero, so values compare consistently across uses.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex {
    pub ix: [u32; MAX_SPACE_DIM],
    pub it: u32,
}

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex { ix: [0, 0], it: 0 };

    pub fn new(ix: [u32; MAX_SPACE_DIM], it: u32) -> Self {
        MultiIndex { ix, it }
    }

    /// Purely spatial index (i_t = 0).
    pub fn space(ix: [u32; MAX_SPACE_DIM]) -> Self {
        MultiIndex { ix, it: 0 }
    }

    /// Unit index along spatial axis `axis`.
    pub fn unit_x(axis: usize) -> Self {
        let mut ix = [0, 0];
        ix[axis] = 1;
        MultiIndex { ix, it: 0 }
    }

    pub fn unit_t() -> Self {
        MultiIndex { ix: [0, 0], it: 1 }
    }

    /// Total order |i| = |i_x| + i_t.
    pub fn order(&self) -> u32 {
        self.ix[0] + self.ix[1] + self.it
    }

    pub fn space_order(&self) -> u32 {
        self.ix[0] + self.ix[1]
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex {
            ix: [self.ix[0] + other.ix[0], self.ix[1] + other.ix[1]],
            it: self.it + other.it,
        }
    }

    /// Component-wise difference; `None` if any component would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        Some(MultiIndex {
            ix: [
                self.ix[0].checked_sub(other.ix[0])?,
                self.ix[1].checked_sub(other.ix[1])?,
            ],
            it: self.it.checked_sub(other.it)?,
        })
    }

    /// Component-wise `<=`.
    pub fn leq(&self, other: &MultiIndex) -> bool {
        self.ix[0] <= other.ix[0] && self.ix[1] <= other.ix[1] && self.it <= other.it
    }

    /// i! = i_x1! i_x2! i_t! as f64 (exact integer arithmetic internally).
    pub fn factorial(&self) -> f64 {
        (factorial_u128(self.ix[0]) * factorial_u128(self.ix[1]) * factorial_u128(self.it)) as f64
    }

    pub fn format(&self, n: usize) -> String {
        if n == 1 {
            format!("({},{})", self.ix[0], self.it)
        } else {
            format!("({},{},{})", self.ix[0], self.ix[1], self.it)
        }
    }
}

/// Graded-lexicographic order: total degree first, then `ix[0]`, `ix[1]`, `it`.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then(self.ix[0].cmp(&other.ix[0]))
            .then(self.ix[1].cmp(&other.ix[1]))
            .then(self.it.cmp(&other.it))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact factorial. Degrees in this crate stay far below the u128 limit (34!).
pub fn factorial_u128(k: u32) -> u128 {
    assert!(k <= 34, "factorial_u128 overflows above 34!, got {k}");
    (1..=k as u128).product()
}

pub fn factorial(k: u32) -> f64 {
    factorial_u128(k) as f64
}

/// Exact binomial coefficient via the multiplicative formula.
pub fn binomial_u128(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

pub fn binomial(n: u32, k: u32) -> f64 {
    binomial_u128(n, k) as f64
}

/// Ratio a!/b! for multi-indices (componentwise, b need not divide a evenly in
/// any ordered sense; each axis computes its own exact factorial).
pub fn factorial_ratio(a: &MultiIndex, b: &MultiIndex) -> f64 {
    let num = factorial_u128(a.ix[0]) * factorial_u128(a.ix[1]) * factorial_u128(a.it);
    let den = factorial_u128(b.ix[0]) * factorial_u128(b.ix[1]) * factorial_u128(b.it);
    num as f64 / den as f64
}

/// All spatial indices with |i_x| = m in `n` dimensions, lexicographic in
/// (ix[0], ix[1]).
pub fn spatial_indices_of_order(n: usize, m: u32) -> Vec<[u32; MAX_SPACE_DIM]> {
    let mut out = Vec::new();
    if n == 1 {
        out.push([m, 0]);
    } else {
        for i0 in 0..=m {
            out.push([i0, m - i0]);
        }
    }
    out
}

/// All spatial indices with |i_x| <= m, graded-lexicographic.
pub fn spatial_indices_up_to(n: usize, m: u32) -> Vec<[u32; MAX_SPACE_DIM]> {
    let mut out = Vec::new();
    for deg in 0..=m {
        out.extend(spatial_indices_of_order(n, deg));
    }
    out
}

/// All space-time indices with |i| <= m, graded-lexicographic.
pub fn spacetime_indices_up_to(n: usize, m: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for deg in 0..=m {
        for sdeg in (0..=deg).rev() {
            for ix in spatial_indices_of_order(n, sdeg) {
                out.push(MultiIndex::new(ix, deg - sdeg));
            }
        }
    }
    out.sort();
    out
}

/// All spatial j with j <= i componentwise (including i itself), lexicographic.
pub fn spatial_indices_below(i: [u32; MAX_SPACE_DIM]) -> Vec<[u32; MAX_SPACE_DIM]> {
    let mut out = Vec::with_capacity(((i[0] + 1) * (i[1] + 1)) as usize);
    for j0 in 0..=i[0] {
        for j1 in 0..=i[1] {
            out.push([j0, j1]);
        }
    }
    out
}

/// Dimension of polynomials of degree <= p in d variables: C(p + d, d).
pub fn poly_space_dim(p: u32, d: u32) -> usize {
    binomial_u128(p + d, d) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_orders_by_degree_first() {
        let a = MultiIndex::new([0, 0], 2);
        let b = MultiIndex::new([3, 0], 0);
        assert!(a < b);
        let c = MultiIndex::new([1, 0], 1);
        let d = MultiIndex::new([0, 1], 1);
        assert!(c < d || d < c);
        assert!(MultiIndex::new([2, 0], 0) < MultiIndex::new([1, 1], 0) || true);
        // Within a degree, ix[0] dominates.
        assert!(MultiIndex::new([1, 1], 0) < MultiIndex::new([2, 0], 0));
        assert!(MultiIndex::new([1, 0], 1) < MultiIndex::new([1, 1], 0));
    }

    #[test]
    fn factorials_and_binomials_are_exact() {
        assert_eq!(factorial_u128(0), 1);
        assert_eq!(factorial_u128(5), 120);
        assert_eq!(factorial_u128(20), 2_432_902_008_176_640_000);
        assert_eq!(binomial_u128(6, 2), 15);
        assert_eq!(binomial_u128(10, 0), 1);
        assert_eq!(binomial_u128(4, 7), 0);
        // Pascal identity over a range that covers every order the basis uses.
        for n in 1..30u32 {
            for k in 1..n {
                assert_eq!(
                    binomial_u128(n, k),
                    binomial_u128(n - 1, k - 1) + binomial_u128(n - 1, k)
                );
            }
        }
    }

    #[test]
    fn enumeration_counts_match_dimensions() {
        // |{ |i| <= p }| in d variables is C(p + d, d).
        for p in 0..=6u32 {
            assert_eq!(spatial_indices_up_to(1, p).len(), poly_space_dim(p, 1));
            assert_eq!(spatial_indices_up_to(2, p).len(), poly_space_dim(p, 2));
            assert_eq!(spacetime_indices_up_to(1, p).len(), poly_space_dim(p, 2));
            assert_eq!(spacetime_indices_up_to(2, p).len(), poly_space_dim(p, 3));
        }
    }

    #[test]
    fn spacetime_enumeration_is_sorted_and_unique() {
        let v = spacetime_indices_up_to(2, 5);
        for w in v.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn factorial_ratio_matches_direct() {
        let a = MultiIndex::new([3, 2], 1);
        let b = MultiIndex::new([1, 2], 0);
        assert_eq!(factorial_ratio(&a, &b), (6.0 * 2.0 * 1.0) / (1.0 * 2.0));
    }
}

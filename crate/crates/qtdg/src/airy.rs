//! Airy function Ai, its derivative, and higher derivatives via the defining
//! ODE Ai'' = z Ai.
//!
//! Evaluation uses the Maclaurin pair
//!   f(z) = sum_k f_k z^{3k},    f_0 = 1, f_k = f_{k-1} / ((3k)(3k-1)),
//!   g(z) = sum_k g_k z^{3k+1},  g_0 = 1, g_k = g_{k-1} / ((3k)(3k+1)),
//! with Ai = Ai(0) f + Ai'(0) g. For z near -12 the alternating terms grow to
//! ~1e12 while the sum stays O(1), so about twelve digits cancel; the series
//! is therefore accumulated in two-f64 (double-double) arithmetic, keeping the
//! absolute error far below 1e-10 across the supported range [-12, 2].

use crate::error::{Error, Result};

pub const AIRY_AI_ZERO: f64 = 0.3550280538878172;
pub const AIRY_AI_PRIME_ZERO: f64 = -0.2588194037928068;

const Z_MIN: f64 = -12.0;
const Z_MAX: f64 = 2.0;

/// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    // mul_add rounds once, so this recovers the exact product error even
    // without hardware FMA.
    (p, a.mul_add(b, -p))
}

impl Dd {
    #[inline]
    fn from(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    #[inline]
    fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let r = (self.hi - p - e + self.lo) / b;
        let (hi, lo) = quick_two_sum(q1, r);
        Dd { hi, lo }
    }

    #[inline]
    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn check_range(z: f64) -> Result<()> {
    if !(Z_MIN..=Z_MAX).contains(&z) || z.is_nan() {
        return Err(Error::OutOfRange {
            what: "airy argument",
            value: z,
            range: "[-12, 2]",
        });
    }
    Ok(())
}

/// Ai(z) and Ai'(z) with absolute error well below 1e-10 on [-12, 2].
pub fn airy_ai_with_prime(z: f64) -> Result<(f64, f64)> {
    check_range(z)?;
    let zd = Dd::from(z);
    let z3 = zd.mul(zd).mul(zd);

    // Partial sums and current terms of f, g, f', g'.
    let mut f = Dd::from(1.0);
    let mut fp = Dd::from(0.0);
    let mut g = Dd::from(z);
    let mut gp = Dd::from(1.0);
    let mut term_f = Dd::from(1.0); // f_k z^{3k}
    let mut term_g = Dd::from(z); // g_k z^{3k+1}

    for k in 1..200u32 {
        let k3 = 3.0 * k as f64;
        term_f = term_f.mul(z3).div_f64(k3 * (k3 - 1.0));
        term_g = term_g.mul(z3).div_f64(k3 * (k3 + 1.0));
        f = f.add(term_f);
        g = g.add(term_g);
        // f' = sum 3k f_k z^{3k-1} and g' = sum (3k+1) g_k z^{3k}; both are
        // the running terms divided by z. At z = 0 every k >= 1 term is zero
        // and the initial values already hold f'(0) = 0, g'(0) = 1.
        // The scalar 3k/z must not be pre-rounded in f64: terms reach ~1e12
        // near z = -12 and per-term rounding would not cancel. Divide in dd.
        if z != 0.0 {
            fp = fp.add(term_f.mul_f64(k3).div_f64(z));
            gp = gp.add(term_g.mul_f64(k3 + 1.0).div_f64(z));
        }
        if term_f.hi.abs() < 1e-24 && term_g.hi.abs() < 1e-24 {
            break;
        }
    }

    let ai = Dd::from(0.0)
        .add(f.mul_f64(AIRY_AI_ZERO))
        .add(g.mul_f64(AIRY_AI_PRIME_ZERO))
        .value();
    let aip = Dd::from(0.0)
        .add(fp.mul_f64(AIRY_AI_ZERO))
        .add(gp.mul_f64(AIRY_AI_PRIME_ZERO))
        .value();
    Ok((ai, aip))
}

pub fn airy_ai(z: f64) -> Result<f64> {
    airy_ai_with_prime(z).map(|(a, _)| a)
}

pub fn airy_ai_prime(z: f64) -> Result<f64> {
    airy_ai_with_prime(z).map(|(_, a)| a)
}

/// Derivatives Ai^(0..=kmax) at z through the ODE recurrence
/// Ai^(k+2) = z Ai^(k) + k Ai^(k-1).
pub fn airy_derivatives(z: f64, kmax: usize) -> Result<Vec<f64>> {
    let (a0, a1) = airy_ai_with_prime(z)?;
    let mut out = vec![0.0; kmax + 1];
    if kmax >= 1 {
        out[1] = a1;
    }
    out[0] = a0;
    for k in 0..kmax.saturating_sub(1) {
        let lower = if k == 0 { 0.0 } else { k as f64 * out[k - 1] };
        out[k + 2] = z * out[k] + lower;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_and_slope_at_zero_match_published_constants() {
        let (a, ap) = airy_ai_with_prime(0.0).unwrap();
        assert!((a - 0.3550280538878172).abs() < 1e-15);
        assert!((ap + 0.2588194037928068).abs() < 1e-15);
    }

    #[test]
    fn value_at_two_matches_published_constant() {
        // Reference value 0.0349241304233 (independent published table).
        let a = airy_ai(2.0).unwrap();
        assert!(
            ((a - 0.0349241304233) / 0.0349241304233).abs() < 2e-12,
            "Ai(2) = {a}"
        );
    }

    #[test]
    fn ode_residual_small_across_range() {
        // Five-point stencil for Ai''; h chosen so truncation and rounding
        // both sit near 1e-9 where the fourth derivative is ~ z^2 Ai.
        let h = 5e-3;
        let mut max_resid: f64 = 0.0;
        let mut z = -11.0;
        while z <= 1.0 {
            let f = |x: f64| airy_ai(x).unwrap();
            let second = (-f(z - 2.0 * h) + 16.0 * f(z - h) - 30.0 * f(z)
                + 16.0 * f(z + h)
                - f(z + 2.0 * h))
                / (12.0 * h * h);
            let resid = (second - z * f(z)).abs();
            max_resid = max_resid.max(resid);
            z += 0.25;
        }
        assert!(max_resid < 1e-8, "max |Ai'' - z Ai| = {max_resid:.3e}");
    }

    #[test]
    fn prime_matches_finite_difference_of_value() {
        let h = 1e-5;
        for &z in &[-11.5, -7.3, -2.0, 0.5, 1.9] {
            let (a, ap) = airy_ai_with_prime(z).unwrap();
            let _ = a;
            let fd = (airy_ai(z + h).unwrap() - airy_ai(z - h).unwrap()) / (2.0 * h);
            assert!(
                (ap - fd).abs() < 1e-9,
                "Ai'({z}) = {ap}, fd = {fd}"
            );
        }
    }

    #[test]
    fn derivative_recurrence_is_consistent_with_finite_differences() {
        let z = -3.2;
        let d = airy_derivatives(z, 4).unwrap();
        let h = 1e-4;
        let f = |x: f64| airy_ai(x).unwrap();
        let second = (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
        assert!((d[2] - second).abs() < 1e-6);
        let third = (f(z + 2.0 * h) - 2.0 * f(z + h) + 2.0 * f(z - h) - f(z - 2.0 * h))
            / (2.0 * h * h * h);
        assert!((d[3] - third).abs() < 1e-4, "d3 = {}, fd = {third}", d[3]);
    }

    #[test]
    fn out_of_range_arguments_error() {
        assert!(airy_ai(-12.5).is_err());
        assert!(airy_ai(2.5).is_err());
        assert!(airy_ai(f64::NAN).is_err());
    }

    #[test]
    fn double_double_primitives_are_exact_on_representable_cases() {
        let a = Dd::from(1.0).add(Dd::from(2f64.powi(-60)));
        let b = Dd::from(1.0).add(Dd::from(-(2f64.powi(-60))));
        let s = a.add(b);
        assert_eq!(s.hi, 2.0);
        assert_eq!(s.lo, 0.0);
        // (1 + 2^-30)^2 = 1 + 2^-29 + 2^-60 held exactly across hi/lo.
        let c = Dd::from(1.0 + 2f64.powi(-30));
        let sq = c.mul(c);
        assert_eq!(sq.hi, 1.0 + 2f64.powi(-29));
        assert_eq!(sq.lo, 2f64.powi(-60));
    }
}

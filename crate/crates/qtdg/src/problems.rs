//! Benchmark problems: coefficient families, domains, boundary data, and
//! closed-form exact solutions with derivative oracles.
//!
//! Each exact solution implements one method, the arbitrary-order derivative
//! of the potential u, and everything else (v = dt u, sigma = -(1/rho) grad
//! u, their derivatives, boundary traces) follows by chain rules through the
//! coefficient field. Problems without a closed form (an initial pulse and a
//! hat) supply data only.
//!
//! Loading a problem with an exact solution runs a residual self-check of
//! the first-order system at scattered points; a miswired sign or
//! coefficient fails immediately rather than polluting convergence tables.

use std::sync::Arc;

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::mesh::BoundaryKind;
use crate::multiindex::{binomial, factorial_u128, MultiIndex, MAX_SPACE_DIM};

/// Closed-form solution of the first-order acoustic system, given through
/// derivatives of its potential u (v = dt u, sigma = -(1/rho) grad u).
pub trait ExactSolution: Send + Sync {
    fn n(&self) -> usize;

    /// D^k u at (x, t), any multi-index order.
    fn u_derivative(&self, k: &MultiIndex, x: &[f64], t: f64) -> f64;

    fn v(&self, x: &[f64], t: f64) -> f64 {
        self.u_derivative(&MultiIndex::unit_t(), x, t)
    }

    fn dt_v(&self, x: &[f64], t: f64) -> f64 {
        self.u_derivative(&MultiIndex::new([0, 0], 2), x, t)
    }

    fn grad_v(&self, x: &[f64], t: f64) -> [f64; MAX_SPACE_DIM] {
        let mut out = [0.0; MAX_SPACE_DIM];
        for l in 0..self.n() {
            let mut k = MultiIndex::unit_x(l);
            k.it = 1;
            out[l] = self.u_derivative(&k, x, t);
        }
        out
    }

    fn sigma(&self, coeff: &CoefficientField, x: &[f64], t: f64) -> [f64; MAX_SPACE_DIM] {
        let zeta = coeff.inv_rho(x);
        let mut out = [0.0; MAX_SPACE_DIM];
        for l in 0..self.n() {
            out[l] = -zeta * self.u_derivative(&MultiIndex::unit_x(l), x, t);
        }
        out
    }

    fn dt_sigma(&self, coeff: &CoefficientField, x: &[f64], t: f64) -> [f64; MAX_SPACE_DIM] {
        let zeta = coeff.inv_rho(x);
        let mut out = [0.0; MAX_SPACE_DIM];
        for l in 0..self.n() {
            let mut k = MultiIndex::unit_x(l);
            k.it = 1;
            out[l] = -zeta * self.u_derivative(&k, x, t);
        }
        out
    }

    fn div_sigma(&self, coeff: &CoefficientField, x: &[f64], t: f64) -> f64 {
        let zeta = coeff.inv_rho(x);
        let dzeta = coeff.grad_inv_rho(x);
        let mut out = 0.0;
        for l in 0..self.n() {
            let first = self.u_derivative(&MultiIndex::unit_x(l), x, t);
            let mut k2 = MultiIndex::unit_x(l);
            k2.ix[l] += 1;
            let second = self.u_derivative(&k2, x, t);
            out -= dzeta[l] * first + zeta * second;
        }
        out
    }
}

/// Initial and boundary data as the DG right-hand side consumes it.
pub trait ProblemData: Send + Sync {
    fn v0(&self, x: &[f64]) -> f64;
    fn sigma0(&self, x: &[f64]) -> [f64; MAX_SPACE_DIM];
    /// g_D = v on Dirichlet faces.
    fn dirichlet(&self, x: &[f64], t: f64) -> f64;
    /// g_N = sigma . n on Neumann faces (spatial normal).
    fn neumann(&self, x: &[f64], t: f64, normal_x: &[f64; 2]) -> f64;
    /// g_R = theta v - sigma . n on Robin faces.
    fn robin(&self, x: &[f64], t: f64, normal_x: &[f64; 2], theta: f64) -> f64;
}

/// Data read off an exact solution.
pub struct ExactData {
    pub exact: Arc<dyn ExactSolution>,
    pub coeff: CoefficientField,
}

impl ProblemData for ExactData {
    fn v0(&self, x: &[f64]) -> f64 {
        self.exact.v(x, 0.0)
    }
    fn sigma0(&self, x: &[f64]) -> [f64; MAX_SPACE_DIM] {
        self.exact.sigma(&self.coeff, x, 0.0)
    }
    fn dirichlet(&self, x: &[f64], t: f64) -> f64 {
        self.exact.v(x, t)
    }
    fn neumann(&self, x: &[f64], t: f64, normal_x: &[f64; 2]) -> f64 {
        let s = self.exact.sigma(&self.coeff, x, t);
        s[0] * normal_x[0] + s[1] * normal_x[1]
    }
    fn robin(&self, x: &[f64], t: f64, normal_x: &[f64; 2], theta: f64) -> f64 {
        theta * self.exact.v(x, t) - self.neumann(x, t, normal_x)
    }
}

/// A fully wired benchmark: geometry, medium, data, and (when closed-form)
/// the exact solution.
pub struct BenchmarkProblem {
    pub name: String,
    pub n: usize,
    pub domain_lo: [f64; 2],
    pub domain_hi: [f64; 2],
    pub t_final: f64,
    pub coeff: CoefficientField,
    pub bc: BoundaryKind,
    pub exact: Option<Arc<dyn ExactSolution>>,
    pub data: Arc<dyn ProblemData>,
}

// Derivative cycles for trigonometric phases.
fn cos_cycle(m: u32, arg: f64) -> f64 {
    match m % 4 {
        0 => arg.cos(),
        1 => -arg.sin(),
        2 => -arg.cos(),
        _ => arg.sin(),
    }
}

fn sin_cycle(m: u32, arg: f64) -> f64 {
    match m % 4 {
        0 => arg.sin(),
        1 => arg.cos(),
        2 => -arg.sin(),
        _ => -arg.cos(),
    }
}

/// u = Ai(-x - 1) cos(t) with rho = 1, G = 1 + x: the Airy identity
/// Ai''(z) = z Ai(z) turns the wave operator into zero.
struct AirySolution1d;

impl ExactSolution for AirySolution1d {
    fn n(&self) -> usize {
        1
    }
    fn u_derivative(&self, k: &MultiIndex, x: &[f64], t: f64) -> f64 {
        let z = -x[0] - 1.0;
        let ai = crate::airy::airy_derivatives(z, k.ix[0] as usize)
            .expect("domain keeps the argument inside the Airy series range");
        let sign = if k.ix[0] % 2 == 0 { 1.0 } else { -1.0 };
        sign * ai[k.ix[0] as usize] * cos_cycle(k.it, t)
    }
}

/// u = Ai(-x1 - x2 - 1) cos(sqrt2 t) with rho = 1, G = x1 + x2 + 1.
struct AirySolution2d;

impl ExactSolution for AirySolution2d {
    fn n(&self) -> usize {
        2
    }
    fn u_derivative(&self, k: &MultiIndex, x: &[f64], t: f64) -> f64 {
        let z = -x[0] - x[1] - 1.0;
        let kx = (k.ix[0] + k.ix[1]) as usize;
        let ai = crate::airy::airy_derivatives(z, kx)
            .expect("domain keeps the argument inside the Airy series range");
        let sign = if kx % 2 == 0 { 1.0 } else { -1.0 };
        let om = std::f64::consts::SQRT_2;
        sign * ai[kx] * om.powi(k.it as i32) * cos_cycle(k.it, om * t)
    }
}

/// u = (x1 + x2 + 1)^a exp(-sqrt(2 a (a-1)) t) with G = (x1 + x2 + 1)^{-2}:
/// the Laplacian brings down a (a-1) twice over, matched by the decay rate.
struct PowerSolution2d {
    a: f64,
    lambda: f64,
}

impl PowerSolution2d {
    fn new(a: f64) -> Self {
        PowerSolution2d {
            a,
            lambda: (2.0 * a * (a - 1.0)).sqrt(),
        }
    }
}

impl ExactSolution for PowerSolution2d {
    fn n(&self) -> usize {
        2
    }
    fn u_derivative(&self, k: &MultiIndex, x: &[f64], t: f64) -> f64 {
        let s = x[0] + x[1] + 1.0;
        let kx = k.ix[0] + k.ix[1];
        let mut fall = 1.0;
        for i in 0..kx {
            fall *= self.a - i as f64;
        }
        fall * s.powf(self.a - kx as f64) * (-self.lambda).powi(k.it as i32)
            * (-self.lambda * t).exp()
    }
}

/// u = j1(x) cos(t) with rho = x^{-2}, G = x^2 - 2, where j1 is the
/// first-order spherical Bessel function (sin x - x cos x) / x^2. Its ODE
/// x^2 j1'' + 2x j1' + (x^2 - 2) j1 = 0 is the wave operator in disguise.
struct BesselSolution1d;

/// D^m x^{-p}: (-1)^m (p + m - 1)! / (p - 1)! x^{-(p + m)}.
fn inverse_power_derivative(m: u32, p: u32, x: f64) -> f64 {
    let num = factorial_u128(p + m - 1) / factorial_u128(p - 1);
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    sign * num as f64 * x.powi(-((p + m) as i32))
}

fn j1_derivative(k: u32, x: f64) -> f64 {
    // j1 = sin(x) x^{-2} - cos(x) x^{-1}, differentiated by Leibniz.
    let mut out = 0.0;
    for i in 0..=k {
        let b = binomial(k, i);
        out += b * sin_cycle(i, x) * inverse_power_derivative(k - i, 2, x);
        out -= b * cos_cycle(i, x) * inverse_power_derivative(k - i, 1, x);
    }
    out
}

impl ExactSolution for BesselSolution1d {
    fn n(&self) -> usize {
        1
    }
    fn u_derivative(&self, k: &MultiIndex, x: &[f64], t: f64) -> f64 {
        j1_derivative(k.ix[0], x[0]) * cos_cycle(k.it, t)
    }
}

/// Pulse data: v0 = 0 and a vertical Gaussian derivative in sigma's first
/// component, reflecting symmetrically off the left Neumann wall.
struct PulseData {
    delta: f64,
}

impl ProblemData for PulseData {
    fn v0(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn sigma0(&self, x: &[f64]) -> [f64; MAX_SPACE_DIM] {
        let d2 = self.delta * self.delta;
        [-(2.0 * x[0] / d2) * (-x[0] * x[0] / d2).exp(), 0.0]
    }
    fn dirichlet(&self, _x: &[f64], _t: f64) -> f64 {
        0.0
    }
    fn neumann(&self, _x: &[f64], _t: f64, _normal_x: &[f64; 2]) -> f64 {
        0.0
    }
    fn robin(&self, _x: &[f64], _t: f64, _normal_x: &[f64; 2], _theta: f64) -> f64 {
        0.0
    }
}

/// Hat data: v0 = sigma0 = max(1/4 - |x|, 0), a kink that limits every
/// scheme to first-order accuracy.
struct HatData;

fn hat(x: f64) -> f64 {
    (0.25 - x.abs()).max(0.0)
}

impl ProblemData for HatData {
    fn v0(&self, x: &[f64]) -> f64 {
        hat(x[0])
    }
    fn sigma0(&self, x: &[f64]) -> [f64; MAX_SPACE_DIM] {
        [hat(x[0]), 0.0]
    }
    fn dirichlet(&self, _x: &[f64], _t: f64) -> f64 {
        0.0
    }
    fn neumann(&self, _x: &[f64], _t: f64, _normal_x: &[f64; 2]) -> f64 {
        0.0
    }
    fn robin(&self, _x: &[f64], _t: f64, _normal_x: &[f64; 2], _theta: f64) -> f64 {
        0.0
    }
}

/// Quasi-random points filling the space-time box: a Kronecker sequence on
/// the plastic constant, deterministic and dependency-free.
pub fn scatter_points(
    n: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    t_final: f64,
    count: usize,
) -> Vec<([f64; 2], f64)> {
    // Real root of r^3 = r + 1.
    const R: f64 = 1.324_717_957_244_746;
    let alphas = [1.0 / R, 1.0 / (R * R), 1.0 / (R * R * R)];
    let mut out = Vec::with_capacity(count);
    for i in 1..=count {
        let frac = |a: f64| (i as f64 * a).fract();
        let mut x = [0.0; 2];
        for l in 0..n {
            // Shrink slightly into the interior to dodge coefficient edges.
            x[l] = lo[l] + (hi[l] - lo[l]) * (0.02 + 0.96 * frac(alphas[l]));
        }
        let t = t_final * (0.02 + 0.96 * frac(alphas[2]));
        out.push((x, t));
    }
    out
}

fn self_check(problem: &BenchmarkProblem) -> Result<()> {
    let exact = match &problem.exact {
        Some(e) => e.clone(),
        None => return Ok(()),
    };
    let pts = scatter_points(
        problem.n,
        problem.domain_lo,
        problem.domain_hi,
        problem.t_final,
        200,
    );
    for (x, t) in pts {
        let xs = &x[..problem.n];
        let g = problem.coeff.g_value(xs);
        let rho = problem.coeff.rho(xs);
        // Continuity: div sigma + G dt v = 0.
        let div = exact.div_sigma(&problem.coeff, xs, t);
        let dtv = exact.dt_v(xs, t);
        let c_res = div + g * dtv;
        let c_scale = 1.0f64.max(div.abs()).max((g * dtv).abs());
        // Momentum: grad v + rho dt sigma = 0, per component.
        let gv = exact.grad_v(xs, t);
        let ds = exact.dt_sigma(&problem.coeff, xs, t);
        for l in 0..problem.n {
            let m_res = gv[l] + rho * ds[l];
            let m_scale = 1.0f64.max(gv[l].abs()).max((rho * ds[l]).abs());
            if m_res.abs() > 1e-9 * m_scale {
                return Err(Error::Mesh(format!(
                    "exact solution self-check failed for {}: momentum residual {m_res:e} at x={xs:?} t={t}",
                    problem.name
                )));
            }
        }
        if c_res.abs() > 1e-9 * c_scale {
            return Err(Error::Mesh(format!(
                "exact solution self-check failed for {}: continuity residual {c_res:e} at x={xs:?} t={t}",
                problem.name
            )));
        }
    }
    Ok(())
}

/// Load a benchmark by name: airy1d, airy2d, power2d, bessel1d,
/// gaussian-pulse, or hat. Problems with exact solutions are residual-checked
/// at 200 scattered points before being returned.
pub fn benchmark(name: &str) -> Result<BenchmarkProblem> {
    let problem = match name {
        "airy1d" => {
            let coeff = CoefficientField::AffineG {
                rho: 1.0,
                g0: 1.0,
                grad: [1.0, 0.0],
            };
            let exact: Arc<dyn ExactSolution> = Arc::new(AirySolution1d);
            BenchmarkProblem {
                name: name.to_string(),
                n: 1,
                domain_lo: [0.0, 0.0],
                domain_hi: [5.0, 0.0],
                t_final: 5.0,
                coeff: coeff.clone(),
                bc: BoundaryKind::Dirichlet,
                exact: Some(exact.clone()),
                data: Arc::new(ExactData { exact, coeff }),
            }
        }
        "airy2d" => {
            let coeff = CoefficientField::AffineG {
                rho: 1.0,
                g0: 1.0,
                grad: [1.0, 1.0],
            };
            let exact: Arc<dyn ExactSolution> = Arc::new(AirySolution2d);
            BenchmarkProblem {
                name: name.to_string(),
                n: 2,
                domain_lo: [0.0, 0.0],
                domain_hi: [1.0, 1.0],
                t_final: 1.0,
                coeff: coeff.clone(),
                bc: BoundaryKind::Dirichlet,
                exact: Some(exact.clone()),
                data: Arc::new(ExactData { exact, coeff }),
            }
        }
        "power2d" => {
            let coeff = CoefficientField::InverseSquareG {
                rho: 1.0,
                s0: 1.0,
                d: [1.0, 1.0],
            };
            let exact: Arc<dyn ExactSolution> = Arc::new(PowerSolution2d::new(2.5));
            BenchmarkProblem {
                name: name.to_string(),
                n: 2,
                domain_lo: [0.0, 0.0],
                domain_hi: [1.0, 1.0],
                t_final: 1.0,
                coeff: coeff.clone(),
                bc: BoundaryKind::Dirichlet,
                exact: Some(exact.clone()),
                data: Arc::new(ExactData { exact, coeff }),
            }
        }
        "bessel1d" => {
            let coeff = CoefficientField::InverseSquareRho;
            let exact: Arc<dyn ExactSolution> = Arc::new(BesselSolution1d);
            BenchmarkProblem {
                name: name.to_string(),
                n: 1,
                domain_lo: [2.0, 0.0],
                domain_hi: [3.0, 0.0],
                t_final: 1.0,
                coeff: coeff.clone(),
                bc: BoundaryKind::Dirichlet,
                exact: Some(exact.clone()),
                data: Arc::new(ExactData { exact, coeff }),
            }
        }
        "gaussian-pulse" => BenchmarkProblem {
            name: name.to_string(),
            n: 2,
            domain_lo: [0.0, 0.0],
            domain_hi: [1.0, 1.0],
            t_final: 0.5,
            coeff: CoefficientField::AffineG {
                rho: 1.0,
                g0: 1.0,
                grad: [0.0, 1.0],
            },
            bc: BoundaryKind::Neumann,
            exact: None,
            data: Arc::new(PulseData {
                delta: 2.0f64.powi(-5),
            }),
        },
        "hat" => BenchmarkProblem {
            name: name.to_string(),
            n: 1,
            domain_lo: [-0.5, 0.0],
            domain_hi: [0.5, 0.0],
            t_final: 0.1,
            coeff: CoefficientField::InverseSquareG {
                rho: 1.0,
                s0: 1.0,
                d: [1.0, 0.0],
            },
            bc: BoundaryKind::Neumann,
            exact: None,
            data: Arc::new(HatData),
        },
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    self_check(&problem)?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn all_benchmarks_load_and_unknown_names_fail() {
        for name in [
            "airy1d",
            "airy2d",
            "power2d",
            "bessel1d",
            "gaussian-pulse",
            "hat",
        ] {
            let p = benchmark(name).unwrap();
            assert_eq!(p.name, name);
        }
        assert!(matches!(
            benchmark("helmholtz"),
            Err(Error::UnknownProblem(_))
        ));
    }

    /// Central-difference cross-check of the derivative oracles; catches
    /// sign slips in the chain rules that the residual check could mask.
    fn check_oracle_by_differences(exact: &dyn ExactSolution, x: &[f64], t: f64) {
        let h = 1e-5;
        let n = exact.n();
        for l in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[l] += h;
            xm[l] -= h;
            let fd = (exact.u_derivative(&MultiIndex::ZERO, &xp, t)
                - exact.u_derivative(&MultiIndex::ZERO, &xm, t))
                / (2.0 * h);
            let an = exact.u_derivative(&MultiIndex::unit_x(l), x, t);
            assert_relative_eq!(fd, an, max_relative = 1e-6, epsilon = 1e-8);

            // Second derivative from first-derivative samples.
            let fd2 = (exact.u_derivative(&MultiIndex::unit_x(l), &xp, t)
                - exact.u_derivative(&MultiIndex::unit_x(l), &xm, t))
                / (2.0 * h);
            let mut k2 = MultiIndex::unit_x(l);
            k2.ix[l] += 1;
            let an2 = exact.u_derivative(&k2, x, t);
            assert_relative_eq!(fd2, an2, max_relative = 1e-6, epsilon = 1e-8);
        }
        let fd_t = (exact.u_derivative(&MultiIndex::ZERO, x, t + h)
            - exact.u_derivative(&MultiIndex::ZERO, x, t - h))
            / (2.0 * h);
        let an_t = exact.u_derivative(&MultiIndex::unit_t(), x, t);
        assert_relative_eq!(fd_t, an_t, max_relative = 1e-6, epsilon = 1e-8);
    }

    #[test]
    fn derivative_oracles_agree_with_finite_differences() {
        let a = benchmark("airy1d").unwrap();
        check_oracle_by_differences(a.exact.as_deref().unwrap(), &[1.7], 0.9);
        let b = benchmark("airy2d").unwrap();
        check_oracle_by_differences(b.exact.as_deref().unwrap(), &[0.3, 0.6], 0.4);
        let c = benchmark("power2d").unwrap();
        check_oracle_by_differences(c.exact.as_deref().unwrap(), &[0.25, 0.5], 0.3);
        let d = benchmark("bessel1d").unwrap();
        check_oracle_by_differences(d.exact.as_deref().unwrap(), &[2.4], 0.7);
    }

    #[test]
    fn bessel_potential_matches_its_closed_form() {
        let d = benchmark("bessel1d").unwrap();
        let exact = d.exact.as_deref().unwrap();
        let x = 2.5f64;
        let expected = (x.sin() - x * x.cos()) / (x * x);
        let got = exact.u_derivative(&MultiIndex::ZERO, &[x], 0.0);
        assert_relative_eq!(got, expected, max_relative = 1e-14);
    }

    #[test]
    fn power_solution_mixed_derivative_by_hand() {
        // D^{(1,1,0)} u at t=0: a (a-1) s^{a-2} with s = x1 + x2 + 1.
        let c = benchmark("power2d").unwrap();
        let exact = c.exact.as_deref().unwrap();
        let x = [0.2, 0.3];
        let s: f64 = 1.5;
        let a = 2.5f64;
        let expected = a * (a - 1.0) * s.powf(a - 2.0);
        let got = exact.u_derivative(&MultiIndex::new([1, 1], 0), &x, 0.0);
        assert_relative_eq!(got, expected, max_relative = 1e-13);
    }

    #[test]
    fn boundary_data_wraps_the_exact_traces() {
        let a = benchmark("airy1d").unwrap();
        let exact = a.exact.clone().unwrap();
        let x = [3.1];
        let t = 1.4;
        assert_relative_eq!(
            a.data.dirichlet(&x, t),
            exact.v(&x, t),
            max_relative = 1e-14
        );
        let sig = exact.sigma(&a.coeff, &x, t);
        assert_relative_eq!(
            a.data.neumann(&x, t, &[-1.0, 0.0]),
            -sig[0],
            max_relative = 1e-14
        );
        let theta = 2.0;
        assert_relative_eq!(
            a.data.robin(&x, t, &[1.0, 0.0], theta),
            theta * exact.v(&x, t) - sig[0],
            max_relative = 1e-13
        );
    }

    #[test]
    fn pulse_and_hat_data_values() {
        let p = benchmark("gaussian-pulse").unwrap();
        assert_eq!(p.data.v0(&[0.3, 0.3]), 0.0);
        let s = p.data.sigma0(&[0.0, 0.5]);
        assert_eq!(s, [0.0, 0.0], "pulse derivative vanishes at its crest");
        let delta: f64 = 2.0f64.powi(-5);
        let s2 = p.data.sigma0(&[delta, 0.5]);
        assert_relative_eq!(
            s2[0],
            -(2.0 / delta) * (-1.0f64).exp(),
            max_relative = 1e-13
        );

        let h = benchmark("hat").unwrap();
        assert_relative_eq!(h.data.v0(&[0.0]), 0.25);
        assert_eq!(h.data.v0(&[0.3]), 0.0);
        assert_relative_eq!(h.data.v0(&[-0.1]), 0.15);
        assert_eq!(h.data.sigma0(&[0.1])[0], h.data.v0(&[0.1]));
    }

    #[test]
    fn scatter_points_stay_inside_the_box() {
        let pts = scatter_points(2, [0.0, 0.0], [1.0, 2.0], 3.0, 64);
        assert_eq!(pts.len(), 64);
        for (x, t) in pts {
            assert!(x[0] > 0.0 && x[0] < 1.0);
            assert!(x[1] > 0.0 && x[1] < 2.0);
            assert!(t > 0.0 && t < 3.0);
        }
    }
}

//! Random time changes that lower the fractional order from `nu` to `nu / n`.
//!
//! `G_j^{(n)}(t)`, `j = 1..n-1`, are independent generalized-gamma variables;
//! the solution of order `nu / n` is the mean of the order-`nu` solution
//! evaluated at their product, with initial data padded by zeros.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::cauchy_solver::{n_conditions, solve, CauchyProblem, SolutionExpansion};
use crate::error::{invalid, Error, Result};
use crate::laplace_oracle::solution_singularities;
use crate::montecarlo::{monte_carlo, McConfig, McEstimate};
use crate::quadrature::{integrate, QuadOptions};
use crate::special_functions::{gamma_real, log_gamma};

/// Law of `G_j^{(n)}(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GVariableSpec {
    n: usize,
    j: usize,
    t: f64,
}

impl GVariableSpec {
    pub fn new(n: usize, j: usize, t: f64) -> Result<Self> {
        if n < 2 || j == 0 || j >= n {
            return Err(invalid(format!("G variable needs n >= 2 and 1 <= j <= n-1, got n={n}, j={j}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("G variable needs t > 0, got {t}")));
        }
        Ok(Self { n, j, t })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Scale `c = (n^n t)^{1/(n-1)}` in `exp(-y^n / c)`.
    fn scale(&self) -> f64 {
        let n = self.n as f64;
        (n.powf(n) * self.t).powf(1.0 / (n - 1.0))
    }

    fn shape(&self) -> f64 {
        self.j as f64 / self.n as f64
    }
}

/// Density `y^{j-1} exp(-y^n / c) / (n^{j/(n-1)-1} t^{j/(n(n-1))} Gamma(j/n))`.
pub fn g_density(spec: &GVariableSpec, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("G density is supported on y > 0, got {y}")));
    }
    let n = spec.n as f64;
    let j = spec.j as f64;
    let ln_norm = (j / (n - 1.0) - 1.0) * n.ln()
        + j / (n * (n - 1.0)) * spec.t.ln()
        + log_gamma(Complex64::new(j / n, 0.0))?.re;
    Ok(((j - 1.0) * y.ln() - y.powf(n) / spec.scale() - ln_norm).exp())
}

/// Exact draw `(c W)^{1/n}` with `W ~ Gamma(j/n, 1)`.
pub fn sample_g<R: Rng + ?Sized>(spec: &GVariableSpec, rng: &mut R) -> f64 {
    let w: f64 = Gamma::new(spec.shape(), 1.0)
        .expect("shape j/n is positive")
        .sample(rng);
    (spec.scale() * w).powf(1.0 / spec.n as f64)
}

/// `E[G^{s-1}] = (n t^{1/n})^{(s-1)/(n-1)} Gamma((s+j-1)/n) / Gamma(j/n)`.
pub fn mellin_g(spec: &GVariableSpec, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("Mellin transform needs s > 0, got {s}")));
    }
    let n = spec.n as f64;
    let j = spec.j as f64;
    let base = (n * spec.t.powf(1.0 / n)).ln() * (s - 1.0) / (n - 1.0);
    let lg = log_gamma(Complex64::new((s + j - 1.0) / n, 0.0))?.re
        - log_gamma(Complex64::new(j / n, 0.0))?.re;
    Ok((base + lg).exp())
}

/// `prod_j E[G_j^{s-1}] = t^{(s-1)/n} Gamma(s) / Gamma((s-1)/n + 1)`.
pub fn mellin_product(n: usize, t: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("Mellin transform needs s > 0, got {s}")));
    }
    let n = n as f64;
    Ok(t.powf((s - 1.0) / n) * gamma_real(s)? / gamma_real((s - 1.0) / n + 1.0)?)
}

/// One draw of `prod_{j=1}^{n-1} G_j^{(n)}(t)` with independent factors.
pub fn sample_g_product<R: Rng + ?Sized>(n: usize, t: f64, rng: &mut R) -> Result<f64> {
    let mut prod = 1.0;
    for j in 1..n {
        prod *= sample_g(&GVariableSpec::new(n, j, t)?, rng);
    }
    Ok(prod)
}

/// A target problem of order `nu / n` and its associated problem of order
/// `nu` with zero-padded initial data.
#[derive(Debug, Clone)]
pub struct SubordinationPlan {
    base_nu: f64,
    divisor: usize,
    base_problem: CauchyProblem,
    target_problem: CauchyProblem,
}

impl SubordinationPlan {
    pub fn base_nu(&self) -> f64 {
        self.base_nu
    }

    pub fn divisor(&self) -> usize {
        self.divisor
    }

    pub fn base_problem(&self) -> &CauchyProblem {
        &self.base_problem
    }

    pub fn target_problem(&self) -> &CauchyProblem {
        &self.target_problem
    }

    pub fn base_solution(&self) -> Result<SolutionExpansion> {
        solve(&self.base_problem)
    }

    pub fn target_solution(&self) -> Result<SolutionExpansion> {
        solve(&self.target_problem)
    }
}

/// Pads `f_h` into position `h n` of an order-`n nu` problem.
pub fn build_associated_problem(target: &CauchyProblem, n: usize) -> Result<SubordinationPlan> {
    if n == 0 {
        return Err(invalid("divisor must be positive"));
    }
    if target.forcing().is_some_and(|g| !g.is_zero()) {
        return Err(invalid("subordination applies to homogeneous problems"));
    }
    let base_nu = target.nu() * n as f64;
    let count = n_conditions(base_nu, target.degree());
    let mut padded = vec![Complex64::new(0.0, 0.0); count];
    for (h, &f) in target.init_conds().iter().enumerate() {
        match padded.get_mut(h * n) {
            Some(slot) => *slot = f,
            None => {
                return Err(Error::DimensionMismatch {
                    expected: count,
                    got: h * n + 1,
                })
            }
        }
    }
    Ok(SubordinationPlan {
        base_nu,
        divisor: n,
        base_problem: target.with_order(base_nu, padded)?,
        target_problem: target.clone(),
    })
}

/// Monte Carlo mean of `F_nu(prod_j G_j(t))`.
pub fn subordinate_mc(plan: &SubordinationPlan, t: f64, cfg: &McConfig) -> Result<McEstimate> {
    let base = plan.base_solution()?;
    if plan.divisor == 1 {
        return Ok(McEstimate::exact(base.evaluate(t)?));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("subordination needs t > 0, got {t}")));
    }
    monte_carlo(cfg, 100, |rng: &mut ChaCha8Rng| {
        base.evaluate(sample_g_product(plan.divisor, t, rng)?)
    })
}

/// Growth rate of the base solution, for truncating half-line integrals.
fn growth_rate(p: &CauchyProblem) -> f64 {
    solution_singularities(p)
        .iter()
        .map(|s| s.re)
        .fold(0.0, f64::max)
}

/// `n = 2` without sampling: `G = |B(2t)|` is half-normal, so
/// `F_{nu/2}(t) = (2 / sqrt(pi)) int_0^inf F_nu(2 sqrt(t) u) e^{-u^2} du`.
pub fn subordinate_quadrature(plan: &SubordinationPlan, t: f64, opts: &QuadOptions) -> Result<Complex64> {
    if plan.divisor != 2 {
        return Err(invalid("the quadrature path covers divisor 2 only"));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("subordination needs t > 0, got {t}")));
    }
    let base = plan.base_solution()?;
    let rate = growth_rate(&plan.base_problem);
    // e^{-u^2 + 2 rate sqrt(t) u} < e^{-40} beyond the cutoff
    let shift = rate * t.sqrt();
    let cutoff = shift + (shift * shift + 40.0).sqrt();
    let scale = 2.0 * t.sqrt();
    let r = integrate(|u| Ok(base.evaluate(scale * u)? * (-u * u).exp()), 0.0, cutoff, opts)?;
    Ok(r.value * (2.0 / PI.sqrt()))
}

/// `k`-fold composition `|B_k(2 |B_{k-1}(... 2 |B_1(2t)| ...)|)|` as the
/// time change for divisor `2^k`.
pub fn iterated_brownian_mc(target: &CauchyProblem, k: usize, t: f64, cfg: &McConfig) -> Result<McEstimate> {
    if k == 0 {
        return Err(invalid("iteration depth must be at least 1"));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("subordination needs t > 0, got {t}")));
    }
    let plan = build_associated_problem(target, 1usize << k)?;
    let base = plan.base_solution()?;
    monte_carlo(cfg, 100, |rng: &mut ChaCha8Rng| {
        let mut time = t;
        for _ in 0..k {
            let z: f64 = StandardNormal.sample(rng);
            time = (2.0 * time).sqrt() * z.abs();
        }
        base.evaluate(time)
    })
}

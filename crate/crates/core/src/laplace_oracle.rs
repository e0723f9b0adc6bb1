//! Independent numerical oracles for the closed forms: the Laplace-domain
//! solution and its numerical inversion, a Grünwald-Letnikov Caputo
//! derivative, and quadrature-based convolution and Laplace transforms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cauchy_solver::{k_threshold, CauchyProblem, Forcing, SolutionExpansion};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, integrate_left_singular, QuadOptions};

const NEAR_POLE: f64 = 1e-12;

/// `mu^x` on the principal branch.
fn cpow(mu: Complex64, x: f64) -> Complex64 {
    if x == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    (mu.ln() * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceValue {
    pub value: Complex64,
    /// Set when `|sum_k lambda_k mu^{nu k}| < 1e-12`.
    pub near_pole: bool,
}

/// Laplace transform of the solution:
/// `[sum_l f_{l-1} sum_{k >= k_{l-1}} lambda_k mu^{nu k - l} + L(g)(mu)] / sum_k lambda_k mu^{nu k}`.
pub fn laplace_transform_solution(p: &CauchyProblem, mu: Complex64) -> Result<LaplaceValue> {
    if !(mu.re > 0.0) {
        return Err(Error::Domain(format!("Laplace variable needs Re(mu) > 0, got {mu}")));
    }
    transform_continued(p, mu)
}

/// Analytic continuation of the transform to the plane cut along the
/// negative real axis, as needed on the inversion contour.
fn transform_continued(p: &CauchyProblem, mu: Complex64) -> Result<LaplaceValue> {
    let nu = p.nu();
    let n = p.degree();
    let lambda = p.poly().coeffs();
    let denom: Complex64 = lambda
        .iter()
        .enumerate()
        .map(|(k, &lk)| lk * cpow(mu, nu * k as f64))
        .sum();
    let mut numer = Complex64::new(0.0, 0.0);
    for (i, &f) in p.init_conds().iter().enumerate() {
        let l = i + 1;
        for k in k_threshold(i, nu, n)..=n {
            numer += f * lambda[k] * cpow(mu, nu * k as f64 - l as f64);
        }
    }
    if let Some(g) = p.forcing() {
        numer += forcing_continued(g, mu)?;
    }
    Ok(LaplaceValue {
        value: numer / denom,
        near_pole: denom.norm() < NEAR_POLE,
    })
}

/// Laplace transform of a forcing term. Tables are transformed exactly as
/// piecewise-linear functions; closures by quadrature.
pub fn forcing_transform(g: &Forcing, mu: Complex64) -> Result<Complex64> {
    if !(mu.re > 0.0) {
        return Err(Error::Domain(format!("Laplace variable needs Re(mu) > 0, got {mu}")));
    }
    forcing_continued(g, mu)
}

fn forcing_continued(g: &Forcing, mu: Complex64) -> Result<Complex64> {
    match g {
        Forcing::Constant(c) => Ok(c / mu),
        Forcing::Function(_) if !(mu.re > 0.0) => Err(Error::Domain(
            "closure forcing has no continuation to Re(mu) <= 0; supply a table or constant".into(),
        )),
        Forcing::Function(f) => {
            let f = f.clone();
            laplace_numeric(move |t| Ok(f(t)), 0.0, mu, &QuadOptions::default())
        }
        Forcing::Table { times, values } => {
            // int e^{-mu s} ds and int s e^{-mu s} ds antiderivatives
            let e = |s: f64| (-mu * s).exp();
            let i0 = |s: f64| -e(s) / mu;
            let i1 = |s: f64| -e(s) * (s / mu + 1.0 / (mu * mu));
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..times.len() - 1 {
                let (a, b) = (times[i], times[i + 1]);
                let slope = (values[i + 1] - values[i]) / (b - a);
                let offset = values[i] - slope * a;
                acc += offset * (i0(b) - i0(a)) + slope * (i1(b) - i1(a));
            }
            let last = times.len() - 1;
            acc += values[last] * e(times[last]) / mu;
            Ok(acc)
        }
    }
}

/// Poles of `1 / sum_k lambda_k mu^{nu k}` on the principal sheet, plus the
/// branch point at the origin.
pub fn solution_singularities(p: &CauchyProblem) -> Vec<Complex64> {
    let nu = p.nu();
    let mut out = vec![Complex64::new(0.0, 0.0)];
    for &eta in p.spectrum().roots() {
        if eta.norm() == 0.0 {
            continue;
        }
        let r = eta.norm().powf(1.0 / nu);
        let arg = eta.arg();
        // every branch (arg + 2 pi j) / nu that lands in (-pi, pi)
        let jmax = (nu / 2.0).ceil() as i64 + 1;
        for j in -jmax..=jmax {
            let angle = (arg + 2.0 * PI * j as f64) / nu;
            if angle.abs() < PI {
                out.push(Complex64::from_polar(r, angle));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TalbotOptions {
    /// Node count of the final rule; the check rule uses half as many.
    pub nodes: usize,
    /// Accepted change between the two rules, relative to `max(1, |f|)`.
    pub tol: f64,
    /// Known singularities of the transform; the contour is shifted and
    /// widened until it encloses all of them.
    pub singularities: Vec<Complex64>,
    pub max_nodes: usize,
}

impl Default for TalbotOptions {
    fn default() -> Self {
        Self {
            nodes: 48,
            tol: 1e-8,
            singularities: vec![Complex64::new(0.0, 0.0)],
            max_nodes: 2048,
        }
    }
}

impl TalbotOptions {
    pub fn with_singularities(mut self, s: Vec<Complex64>) -> Self {
        self.singularities = s;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub value: Complex64,
    /// Difference between the full and the half rule.
    pub change: f64,
    pub nodes: usize,
}

// Weideman-Trefethen optimized cotangent contour
const TAL_A: f64 = -0.6122;
const TAL_B: f64 = 0.5017;
const TAL_C: f64 = 0.6407;
const TAL_D: f64 = 0.2645;

fn contour(theta: f64) -> (Complex64, Complex64) {
    if theta == 0.0 {
        return (
            Complex64::new(TAL_A + TAL_B / TAL_C, 0.0),
            Complex64::new(0.0, TAL_D),
        );
    }
    let ct = (TAL_C * theta).cos() / (TAL_C * theta).sin();
    let s = (TAL_C * theta).sin();
    let z = Complex64::new(TAL_A + TAL_B * theta * ct, TAL_D * theta);
    let dz = Complex64::new(TAL_B * (ct - TAL_C * theta / (s * s)), TAL_D);
    (z, dz)
}

/// Does the contour of scale `rho` (unshifted) enclose `p` with room to spare?
/// Poles crossing the contour at `|theta| > 0.3 pi` sit where the nodes are
/// sparse and slow the convergence to a crawl.
fn encloses(p: Complex64, rho: f64) -> bool {
    let theta = p.im / (TAL_D * rho);
    if theta.abs() > 0.3 * PI {
        return false;
    }
    let (z, _) = contour(theta);
    p.re <= rho * (z.re - 0.05)
}

fn talbot_rule<F>(f: &F, t: f64, sigma: f64, rho: f64, nodes: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..nodes {
        let theta = -PI + (k as f64 + 0.5) * 2.0 * PI / nodes as f64;
        let (z, dz) = contour(theta);
        let mu = z * rho + sigma;
        acc += (z * rho * t).exp() * f(mu)? * dz * rho;
    }
    Ok(acc * (sigma * t).exp() / (Complex64::i() * nodes as f64))
}

/// Numerical inverse Laplace transform at `t > 0` along a Talbot contour.
///
/// The contour scale starts at `nodes / t` and grows until every declared
/// singularity is enclosed; the node count then doubles on that fixed
/// contour until two consecutive rules agree.
pub fn invert_laplace<F>(f: F, t: f64, opts: &TalbotOptions) -> Result<Inversion>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("inversion needs t > 0, got {t}")));
    }
    if opts.nodes < 4 || !(opts.tol > 0.0) {
        return Err(invalid("Talbot rule needs at least 4 nodes and a positive tolerance"));
    }
    let sigma = opts
        .singularities
        .iter()
        .map(|s| s.re)
        .fold(0.0, f64::max);
    let mut rho = opts.nodes as f64 / t;
    for _ in 0..200 {
        if opts.singularities.iter().all(|&s| encloses(s - sigma, rho)) {
            break;
        }
        rho *= 1.1;
    }
    let mut n = opts.nodes;
    let mut coarse = talbot_rule(&f, t, sigma, rho, n.div_ceil(2))?;
    loop {
        let fine = talbot_rule(&f, t, sigma, rho, n)?;
        let change = (fine - coarse).norm();
        if change <= opts.tol * fine.norm().max(1.0) {
            return Ok(Inversion {
                value: fine,
                change,
                nodes: n,
            });
        }
        if 2 * n > opts.max_nodes || !change.is_finite() {
            return Err(Error::LaplaceNonConvergence { change });
        }
        coarse = fine;
        n *= 2;
    }
}

/// Inverts [`laplace_transform_solution`] at `t`.
pub fn invert_solution(p: &CauchyProblem, t: f64, opts: &TalbotOptions) -> Result<Inversion> {
    let mut opts = opts.clone();
    opts.singularities = solution_singularities(p);
    invert_laplace(|mu| transform_continued(p, mu).map(|v| v.value), t, &opts)
}

/// `int_0^inf e^{-mu t} f(t) dt` for `f(t) ~ t^exponent` at the origin.
///
/// The half-line is cut into blocks of length `10 / Re mu` until two
/// consecutive blocks add less than the tolerance.
pub fn laplace_numeric<F>(mut f: F, exponent: f64, mu: Complex64, opts: &QuadOptions) -> Result<Complex64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    if !(mu.re > 0.0) {
        return Err(Error::Domain(format!("numeric Laplace transform needs Re(mu) > 0, got {mu}")));
    }
    let block = 10.0 / mu.re;
    let first = block.min(1.0);
    let mut total = integrate_left_singular(|t| Ok(f(t)? * (-mu * t).exp()), 0.0, first, exponent, opts)?.value;
    let mut a = first;
    let mut quiet = 0;
    for _ in 0..400 {
        let b = a + block;
        let part = integrate(|t| Ok(f(t)? * (-mu * t).exp()), a, b, opts)?.value;
        total += part;
        a = b;
        if part.norm() <= opts.abs_tol.max(opts.rel_tol * total.norm()) {
            quiet += 1;
            if quiet == 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Quadrature {
        achieved: f64::INFINITY,
        requested: opts.abs_tol,
    })
}

/// `int_0^t f(t - s) g(s) ds` where `f(x) ~ x^f_exp` and `g(x) ~ x^g_exp`
/// near zero. Each endpoint singularity gets its own half of the interval.
pub fn convolve_numeric<F, G>(
    f: F,
    f_exp: f64,
    g: G,
    g_exp: f64,
    t: f64,
    opts: &QuadOptions,
) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
    G: Fn(f64) -> Result<Complex64>,
{
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("convolution needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let half = 0.5 * t;
    let left = integrate_left_singular(|s| Ok(f(t - s)? * g(s)?), 0.0, half, g_exp, opts)?;
    let right = integrate_left_singular(|u| Ok(f(u)? * g(t - u)?), 0.0, half, f_exp, opts)?;
    Ok(left.value + right.value)
}

/// Grünwald-Letnikov weights `(-1)^j binom(nu, j)`.
fn gl_weights(nu: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0);
    for j in 1..=n {
        let prev = w[j - 1];
        w.push(prev * (1.0 - (nu + 1.0) / j as f64));
    }
    w
}

/// Function values on the grid `0, h, 2h, ..., n h`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSamples {
    pub h: f64,
    pub values: Vec<Complex64>,
}

impl UniformSamples {
    pub fn sample<F>(f: F, t: f64, h: f64) -> Result<Self>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let n = grid_steps(t, h)?;
        let values = (0..=n).map(|i| f(i as f64 * h)).collect::<Result<Vec<_>>>()?;
        Ok(Self { h, values })
    }

    pub fn end(&self) -> f64 {
        self.h * (self.values.len() - 1) as f64
    }
}

fn grid_steps(t: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && t > 0.0) {
        return Err(Error::InsufficientGrid(format!("need t > 0 and h > 0, got t={t}, h={h}")));
    }
    let n = (t / h).round();
    if (n * h - t).abs() > 1e-9 * t || n < 1.0 {
        return Err(Error::InsufficientGrid(format!("t={t} is not a positive multiple of h={h}")));
    }
    Ok(n as usize)
}

/// Caputo derivative of order `nu` at the last grid point: Grünwald-Letnikov
/// applied to `f` minus its Maclaurin polynomial of degree `ceil(nu) - 1`,
/// whose coefficients `taylor[j] = f^{(j)}(0)` the caller supplies.
pub fn caputo_on_grid(samples: &UniformSamples, taylor: &[Complex64], nu: f64) -> Result<Complex64> {
    if !(nu >= 0.0) {
        return Err(invalid(format!("derivative order must be non-negative, got {nu}")));
    }
    let n = samples.values.len() - 1;
    if n == 0 {
        return Err(Error::InsufficientGrid("grid has a single point".into()));
    }
    let t = samples.end();
    if nu == 0.0 {
        return Ok(samples.values[n]);
    }
    let m = nu.ceil() as usize;
    if taylor.len() < m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: taylor.len(),
        });
    }
    let h = samples.h;
    let poly = |s: f64| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut term = 1.0;
        for (j, &c) in taylor[..m].iter().enumerate() {
            if j > 0 {
                term *= s / j as f64;
            }
            acc += c * term;
        }
        acc
    };
    let w = gl_weights(nu, n);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &wj) in w.iter().enumerate() {
        let s = t - j as f64 * h;
        acc += (samples.values[n - j] - poly(s.max(0.0))) * wj;
    }
    Ok(acc * h.powf(-nu))
}

/// Caputo derivative of order `nu` of `f` at `t` on a grid of step `h`.
pub fn caputo_derivative_numeric<F>(
    f: F,
    taylor: &[Complex64],
    nu: f64,
    t: f64,
    h: f64,
) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let samples = UniformSamples::sample(f, t, h)?;
    caputo_on_grid(&samples, taylor, nu)
}

/// `sum_k lambda_k D^{nu k} F(t) - g(t)` for a solution of `p`, with the
/// Maclaurin data taken from the problem's initial conditions.
pub fn caputo_residual(p: &CauchyProblem, s: &SolutionExpansion, t: f64, h: f64) -> Result<Complex64> {
    let samples = UniformSamples::sample(|x| s.evaluate(x), t, h)?;
    residual_from_samples(p, &samples)
}

pub fn residual_from_samples(p: &CauchyProblem, samples: &UniformSamples) -> Result<Complex64> {
    let nu = p.nu();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &lk) in p.poly().coeffs().iter().enumerate() {
        if lk == Complex64::new(0.0, 0.0) {
            continue;
        }
        acc += lk * caputo_on_grid(samples, p.init_conds(), nu * k as f64)?;
    }
    if let Some(g) = p.forcing() {
        acc -= g.eval(samples.end());
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::char_poly::CharPolynomial;
    use crate::special_functions::{ml2, ml_prabhakar, MlParams2, MlParamsPrabhakar, TruncationPolicy};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn problem(nu: f64, coeffs: &[f64], init: &[f64]) -> CauchyProblem {
        let poly = CharPolynomial::from_real(coeffs).unwrap();
        CauchyProblem::from_coefficients(nu, poly, init.iter().map(|&x| c(x)).collect()).unwrap()
    }

    #[test]
    fn transform_examples() {
        let mu = Complex64::new(2.5, 0.7);
        let p = problem(1.0, &[-0.3, 1.0], &[1.0]);
        let v = laplace_transform_solution(&p, mu).unwrap();
        assert!((v.value - 1.0 / (mu - 0.3)).norm() < 1e-14);
        assert!(!v.near_pole);
        let p = problem(1.0, &[-1.0, 0.0, 1.0], &[1.0, 0.0]);
        let v = laplace_transform_solution(&p, mu).unwrap().value;
        assert!((v - mu / (mu * mu - 1.0)).norm() < 1e-14);
        assert!(laplace_transform_solution(&p, c(-1.0)).is_err());
    }

    #[test]
    fn inversion_examples() {
        let opts = TalbotOptions::default().with_singularities(vec![c(1.0)]);
        let r = invert_laplace(|mu| Ok(1.0 / (mu - 1.0)), 1.0, &opts).unwrap();
        assert!((r.value - std::f64::consts::E).norm() < 1e-9);

        let nu = 0.7;
        let opts = TalbotOptions::default();
        let r = invert_laplace(|mu| Ok(cpow(mu, nu - 1.0) / (cpow(mu, nu) + 1.0)), 1.0, &opts).unwrap();
        let exact = ml2(&MlParams2::real(nu, 1.0).unwrap(), c(-1.0), &TruncationPolicy::default())
            .unwrap()
            .value;
        assert!((r.value - exact).norm() < 1e-9, "{} vs {}", r.value, exact);
    }

    #[test]
    fn inversion_encloses_complex_poles() {
        // sin(3t) from 3 / (mu^2 + 9)
        let opts = TalbotOptions {
            tol: 1e-10,
            ..TalbotOptions::default()
        }
        .with_singularities(vec![Complex64::new(0.0, 3.0), Complex64::new(0.0, -3.0)]);
        for t in [0.5, 2.0, 6.0] {
            let r = invert_laplace(|mu| Ok(3.0 / (mu * mu + 9.0)), t, &opts).unwrap();
            assert!((r.value - (3.0 * t).sin()).norm() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn inversion_reports_instability() {
        // an undeclared pole just inside the contour ruins every rule
        let opts = TalbotOptions {
            max_nodes: 192,
            ..TalbotOptions::default()
        };
        let r = invert_laplace(|mu| Ok(1.0 / (mu - 7.5)), 1.0, &opts);
        assert!(matches!(r, Err(Error::LaplaceNonConvergence { .. })));
    }

    #[test]
    fn solution_round_trip() {
        let p = problem(0.8, &[0.25, 2.0, 1.0], &[1.0, -0.5]);
        let s = crate::cauchy_solver::solve_distinct(&p).unwrap();
        for t in [0.1, 1.0, 3.0] {
            let inv = invert_solution(&p, t, &TalbotOptions::default()).unwrap();
            assert!((inv.value - s.evaluate(t).unwrap()).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn forcing_transforms() {
        let mu = Complex64::new(1.5, -0.4);
        let table = Forcing::table(vec![0.0, 1.0, 3.0], vec![c(0.0), c(2.0), c(-1.0)]).unwrap();
        let exact = forcing_transform(&table, mu).unwrap();
        let tb = table.clone();
        let numeric = laplace_numeric(|t| Ok(tb.eval(t)), 0.0, mu, &QuadOptions::default()).unwrap();
        assert!((exact - numeric).norm() < 1e-9);
        let f = Forcing::function(|t| c((-t).exp()));
        let v = forcing_transform(&f, mu).unwrap();
        assert!((v - 1.0 / (mu + 1.0)).norm() < 1e-10);
    }

    #[test]
    fn prabhakar_transform_pair() {
        let (nu, delta, gamma, beta) = (0.5, 1.0, 2.0, -1.0);
        let params = MlParamsPrabhakar::real(nu, delta, gamma).unwrap();
        let policy = TruncationPolicy::default();
        for mu in [3.0, 4.0, 5.0] {
            let mu = c(mu);
            let numeric = laplace_numeric(
                |t| Ok(ml_prabhakar(&params, c(beta * t.powf(nu)), &policy)?.value * t.powf(delta - 1.0)),
                delta - 1.0,
                mu,
                &QuadOptions::default(),
            )
            .unwrap();
            let exact = cpow(mu, nu * gamma - delta) / (cpow(mu, nu) - beta).powf(gamma);
            assert!((numeric - exact).norm() < 1e-8, "{numeric} vs {exact}");
        }
    }

    #[test]
    fn convolution_examples() {
        let opts = QuadOptions::default();
        let one = |_: f64| Ok(c(1.0));
        assert!((convolve_numeric(one, 0.0, one, 0.0, 2.0, &opts).unwrap() - 2.0).norm() < 1e-13);
        let v = convolve_numeric(|x| Ok(c(x.exp())), 0.0, |x| Ok(c((-x).exp())), 0.0, 1.0, &opts).unwrap();
        assert!((v - 1f64.sinh()).norm() < 1e-12);
        // x^{-1/2} * x^{-1/2} = pi
        let v = convolve_numeric(|x| Ok(c(x.powf(-0.5))), -0.5, |x| Ok(c(x.powf(-0.5))), -0.5, 1.7, &opts)
            .unwrap();
        assert!((v - PI).norm() < 1e-10);
    }

    #[test]
    fn caputo_examples() {
        let h = 1e-4;
        // D^{1/2} t = 2 sqrt(t / pi)
        let v = caputo_derivative_numeric(|t| Ok(c(t)), &[c(0.0)], 0.5, 1.0, h).unwrap();
        assert!((v.re - 2.0 / PI.sqrt()).abs() < 1e-3);
        let v = caputo_derivative_numeric(|_| Ok(c(3.0)), &[c(3.0)], 0.7, 1.0, h).unwrap();
        assert!(v.norm() < 1e-12);
        let v = caputo_derivative_numeric(|t| Ok(c(t * t)), &[c(0.0)], 1.0, 1.0, h).unwrap();
        assert!((v.re - 2.0).abs() < 2.0 * h);
        assert!(matches!(
            caputo_derivative_numeric(|t| Ok(c(t)), &[c(0.0)], 0.5, 1.0, 0.3),
            Err(Error::InsufficientGrid(_))
        ));
    }

    #[test]
    fn singularities_on_principal_sheet() {
        // nu = 1/2, eta = -1: mu^{1/2} = -1 has no principal solution
        let p = problem(0.5, &[1.0, 1.0], &[1.0]);
        assert_eq!(solution_singularities(&p).len(), 1);
        // nu = 2, eta = -4: mu = +-2i
        let p = problem(2.0, &[4.0, 1.0], &[1.0, 0.0]);
        let s = solution_singularities(&p);
        assert_eq!(s.len(), 3);
        assert!(s.iter().any(|z| (z - Complex64::new(0.0, 2.0)).norm() < 1e-12));
    }
}

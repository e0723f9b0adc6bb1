//! Finite-velocity random motions `X(t) = int_0^t V(s) ds`, where `V` jumps
//! among fixed velocities at Poisson epochs, and the fractional problems
//! solved by their characteristic functions `E exp(i <alpha, X(t)>)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::cauchy_solver::{n_conditions, CauchyProblem};
use crate::char_poly::{CharPolynomial, RootSpectrum};
use crate::error::{invalid, Error, Result};
use crate::montecarlo::{monte_carlo_multi, McConfig, McEstimate};
use crate::special_functions::{ml2, MlParams2, TruncationPolicy};

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMotionSpec", into = "RawMotionSpec")]
pub struct MotionSpec {
    velocities: Vec<Vec<f64>>,
    rate: f64,
    initial_dist: Vec<f64>,
    switch_matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMotionSpec {
    velocities: Vec<Vec<f64>>,
    rate: f64,
    initial_dist: Vec<f64>,
    switch_matrix: Vec<Vec<f64>>,
}

impl TryFrom<RawMotionSpec> for MotionSpec {
    type Error = Error;

    fn try_from(r: RawMotionSpec) -> Result<Self> {
        MotionSpec::new(r.velocities, r.rate, r.initial_dist, r.switch_matrix)
    }
}

impl From<MotionSpec> for RawMotionSpec {
    fn from(m: MotionSpec) -> Self {
        RawMotionSpec {
            velocities: m.velocities,
            rate: m.rate,
            initial_dist: m.initial_dist,
            switch_matrix: m.switch_matrix,
        }
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(invalid(format!("{what} has entries outside [0, 1]")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(invalid(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

impl MotionSpec {
    pub fn new(
        velocities: Vec<Vec<f64>>,
        rate: f64,
        initial_dist: Vec<f64>,
        switch_matrix: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = velocities.len();
        if m == 0 {
            return Err(invalid("motion needs at least one velocity"));
        }
        let d = velocities[0].len();
        if d == 0 || velocities.iter().any(|v| v.len() != d) {
            return Err(invalid("velocities must share one positive dimension"));
        }
        if velocities.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("velocities must be finite"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid(format!("switching rate must be positive, got {rate}")));
        }
        if initial_dist.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: initial_dist.len(),
            });
        }
        check_distribution(&initial_dist, "initial distribution")?;
        if switch_matrix.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: switch_matrix.len(),
            });
        }
        for (h, row) in switch_matrix.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
            check_distribution(row, &format!("switch matrix row {h}"))?;
        }
        Ok(Self {
            velocities,
            rate,
            initial_dist,
            switch_matrix,
        })
    }

    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.velocities
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn switch_matrix(&self) -> &[Vec<f64>] {
        &self.switch_matrix
    }

    pub fn dim(&self) -> usize {
        self.velocities[0].len()
    }

    /// Same motion started deterministically from velocity `k`.
    pub fn started_from(&self, k: usize) -> Result<Self> {
        if k >= self.velocities.len() {
            return Err(invalid(format!("no velocity with index {k}")));
        }
        let mut spec = self.clone();
        spec.initial_dist = (0..self.velocities.len())
            .map(|i| if i == k { 1.0 } else { 0.0 })
            .collect();
        Ok(spec)
    }

    fn projections(&self, alpha: &[f64]) -> Vec<f64> {
        self.velocities
            .iter()
            .map(|v| v.iter().zip(alpha).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn check_alpha(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: alpha.len(),
            });
        }
        Ok(())
    }
}

/// Planar motion over `c (cos k pi/2, sin k pi/2)`, turning by a right angle
/// (either way, equally likely) at each event.
pub fn orthogonal_motion(lambda: f64, c: f64) -> Result<MotionSpec> {
    let velocities = (0..4)
        .map(|k| {
            let a = k as f64 * PI / 2.0;
            vec![c * round_trig(a.cos()), c * round_trig(a.sin())]
        })
        .collect();
    let switch = (0..4)
        .map(|h| {
            (0..4)
                .map(|k| if (h + k) % 2 == 1 { 0.5 } else { 0.0 })
                .collect()
        })
        .collect();
    MotionSpec::new(velocities, lambda, vec![0.25; 4], switch)
}

/// Three symmetric planar velocities with uniform choice (current one
/// included) at each event.
pub fn three_direction_motion(lambda: f64, c: f64) -> Result<MotionSpec> {
    let s = 3f64.sqrt() / 2.0;
    let velocities = vec![vec![c, 0.0], vec![-c / 2.0, s * c], vec![-c / 2.0, -s * c]];
    let third = 1.0 / 3.0;
    MotionSpec::new(
        velocities,
        lambda,
        vec![third; 3],
        vec![vec![third; 3]; 3],
    )
}

// cos(pi/2) is 6e-17 in floating point; snap it to zero so the support
// bounds hold exactly
fn round_trig(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionPath {
    pub switch_times: Vec<f64>,
    /// Velocity index on `[0, T_1)`, `[T_1, T_2)`, ...
    pub velocity_indices: Vec<usize>,
    pub position: Vec<f64>,
}

fn pick<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Runs one path to `t`, calling `on_switch(time, new_index)` at each event.
fn run_path<R, F>(spec: &MotionSpec, t: f64, rng: &mut R, mut on_switch: F) -> (usize, Vec<f64>)
where
    R: Rng + ?Sized,
    F: FnMut(f64, usize),
{
    let exp = Exp::new(spec.rate).expect("rate validated positive");
    let mut pos = vec![0.0; spec.dim()];
    let mut k = pick(&spec.initial_dist, rng);
    let first = k;
    let mut now = 0.0;
    loop {
        let tau: f64 = exp.sample(rng);
        let step = if now + tau >= t { t - now } else { tau };
        for (x, v) in pos.iter_mut().zip(&spec.velocities[k]) {
            *x += step * v;
        }
        if now + tau >= t {
            return (first, pos);
        }
        now += tau;
        k = pick(&spec.switch_matrix[k], rng);
        on_switch(now, k);
    }
}

/// Simulates one path on `[0, t]`.
pub fn simulate_path<R: Rng + ?Sized>(spec: &MotionSpec, t: f64, rng: &mut R) -> Result<MotionPath> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("simulation needs finite t >= 0, got {t}")));
    }
    let mut switch_times = Vec::new();
    let mut indices = Vec::new();
    let (first, position) = run_path(spec, t, rng, |s, k| {
        switch_times.push(s);
        indices.push(k);
    });
    indices.insert(0, first);
    Ok(MotionPath {
        switch_times,
        velocity_indices: indices,
        position,
    })
}

/// Empirical characteristic function at several `alpha` from shared paths.
pub fn empirical_cf_many(
    spec: &MotionSpec,
    t: f64,
    alphas: &[Vec<f64>],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("simulation needs finite t >= 0, got {t}")));
    }
    for a in alphas {
        spec.check_alpha(a)?;
    }
    monte_carlo_multi(cfg, 100, alphas.len(), |rng: &mut ChaCha8Rng, out| {
        let (_, pos) = run_path(spec, t, rng, |_, _| {});
        for (o, a) in out.iter_mut().zip(alphas) {
            let phase: f64 = a.iter().zip(&pos).map(|(x, y)| x * y).sum();
            *o = Complex64::from_polar(1.0, phase);
        }
        Ok(())
    })
}

/// `E exp(i <alpha, X(t)>)` with its standard error.
pub fn empirical_cf(spec: &MotionSpec, t: f64, alpha: &[f64], cfg: &McConfig) -> Result<McEstimate> {
    Ok(empirical_cf_many(spec, t, &[alpha.to_vec()], cfg)?.remove(0))
}

/// `I_m(a, b) = int_0^1 (i (a d + b (1 - d)))^m dd`
/// `= i^m (a^{m+1} - b^{m+1}) / ((m + 1)(a - b))`, written as the
/// divided-difference sum so it needs no branch at `a = b`.
fn segment_moment(a: f64, b: f64, m: usize) -> Complex64 {
    let sum: f64 = (0..=m)
        .map(|j| a.powi(j as i32) * b.powi((m - j) as i32))
        .sum();
    Complex64::i().powu(m as u32) * sum / (m + 1) as f64
}

/// `n`-th time derivative at 0 of the characteristic function from the
/// at-most-one-event short-time expansion:
/// `sum_k p_k [-n lambda + i a_k] (i a_k)^{n-1} + n lambda sum_{h,k} p_h p_hk I_{n-1}(a_h, a_k)`.
///
/// This expansion drops two-event terms, so it is exact for `n <= 2` only;
/// see [`cf_derivative_exact`].
pub fn cf_initial_derivative(spec: &MotionSpec, alpha: &[f64], n: usize) -> Result<Complex64> {
    spec.check_alpha(alpha)?;
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let a = spec.projections(alpha);
    let lam = spec.rate;
    let i = Complex64::i();
    let mut total = Complex64::new(0.0, 0.0);
    for (k, &pk) in spec.initial_dist.iter().enumerate() {
        total += pk * (i * a[k] - n as f64 * lam) * (i * a[k]).powu(n as u32 - 1);
    }
    for (h, &ph) in spec.initial_dist.iter().enumerate() {
        for (k, &phk) in spec.switch_matrix[h].iter().enumerate() {
            if ph * phk != 0.0 {
                total += n as f64 * lam * ph * phk * segment_moment(a[h], a[k], n - 1);
            }
        }
    }
    Ok(total)
}

/// Exact `n`-th derivative at 0: `1^T A^n p` with the generator
/// `A = diag(i a_k) + lambda (P^T - I)` of the joint (position phase,
/// velocity) process.
pub fn cf_derivative_exact(spec: &MotionSpec, alpha: &[f64], n: usize) -> Result<Complex64> {
    spec.check_alpha(alpha)?;
    let a = spec.projections(alpha);
    let m = a.len();
    let lam = spec.rate;
    let mut v: Vec<Complex64> = spec.initial_dist.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    for _ in 0..n {
        let next: Vec<Complex64> = (0..m)
            .map(|k| {
                let inflow: Complex64 = (0..m).map(|h| v[h] * spec.switch_matrix[h][k]).sum();
                v[k] * Complex64::new(-lam, a[k]) + inflow * lam
            })
            .collect();
        v = next;
    }
    Ok(v.iter().sum())
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `A = sqrt(lambda^2 - c^2 (alpha - beta)^2)`, `B = sqrt(lambda^2 - c^2 (alpha + beta)^2)`.
pub fn orthogonal_ab(lambda: f64, speed: f64, alpha: f64, beta: f64) -> (Complex64, Complex64) {
    let a = c(lambda * lambda - speed * speed * (alpha - beta).powi(2)).sqrt();
    let b = c(lambda * lambda - speed * speed * (alpha + beta).powi(2)).sqrt();
    (a, b)
}

/// The four roots `-lambda +- (A +- B) / 2`, ordered `(+A,+B), (+A,-B), (-A,+B), (-A,-B)`.
pub fn orthogonal_roots(lambda: f64, speed: f64, alpha: f64, beta: f64) -> [Complex64; 4] {
    let (a, b) = orthogonal_ab(lambda, speed, alpha, beta);
    let base = c(-lambda);
    [
        base + (a + b) / 2.0,
        base + (a - b) / 2.0,
        base + (-a + b) / 2.0,
        base - (a + b) / 2.0,
    ]
}

/// Merges roots closer than `tol` relative to their scale.
fn exact_spectrum(roots: &[Complex64]) -> Result<RootSpectrum> {
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let mut distinct: Vec<Complex64> = Vec::new();
    let mut mults: Vec<usize> = Vec::new();
    for &r in roots {
        match distinct.iter().position(|d| (d - r).norm() <= 1e-12 * scale) {
            Some(i) => mults[i] += 1,
            None => {
                distinct.push(r);
                mults.push(1);
            }
        }
    }
    RootSpectrum::new(distinct, mults)
}

fn orthogonal_coefficients(lambda: f64, speed: f64, alpha: f64, beta: f64) -> Vec<Complex64> {
    let s = alpha * alpha + beta * beta;
    let c2 = speed * speed;
    vec![
        c(c2 * (lambda * lambda * s + c2 * alpha * alpha * beta * beta)),
        c(2.0 * lambda * (lambda * lambda + c2 * s)),
        c(5.0 * lambda * lambda + c2 * s),
        c(4.0 * lambda),
        c(1.0),
    ]
}

fn check_motion_params(lambda: f64, speed: f64, nu: f64) -> Result<()> {
    if !(lambda > 0.0 && speed > 0.0) {
        return Err(invalid("rate and speed must be positive"));
    }
    if !(nu > 0.0) {
        return Err(invalid(format!("order nu must be positive, got {nu}")));
    }
    Ok(())
}

/// Quartic problem of order `nu` for the orthogonal planar motion. Roots
/// come from the closed form with repeated ones merged, so resonant
/// parameters (`A = 0`, `B = 0` or `A = B`) carry their multiplicities.
pub fn orthogonal_problem(lambda: f64, speed: f64, alpha: f64, beta: f64, nu: f64) -> Result<CauchyProblem> {
    check_motion_params(lambda, speed, nu)?;
    let poly = CharPolynomial::new(orthogonal_coefficients(lambda, speed, alpha, beta))?;
    let spectrum = exact_spectrum(&orthogonal_roots(lambda, speed, alpha, beta))?;
    let s = alpha * alpha + beta * beta;
    let c2 = speed * speed;
    let conds = [c(1.0), c(0.0), c(-c2 * s / 2.0), c(lambda * c2 * s / 2.0)];
    let n = n_conditions(nu, 4);
    CauchyProblem::new(nu, poly, spectrum, conds[..n].to_vec())
}

/// Order-one characteristic function of the orthogonal motion:
/// `(1/4) sum (1 +- lambda/A)(1 +- lambda/B) exp((-lambda +- A/2 +- B/2) t)`.
pub fn orthogonal_cf_nu1(lambda: f64, speed: f64, alpha: f64, beta: f64, t: f64) -> Result<Complex64> {
    check_motion_params(lambda, speed, 1.0)?;
    if alpha == 0.0 && beta == 0.0 {
        return Err(Error::ZeroRoot(c(0.0)));
    }
    let (a, b) = orthogonal_ab(lambda, speed, alpha, beta);
    for x in [a, b] {
        if x.norm() < 1e-12 * lambda {
            return Err(Error::Pole(x));
        }
    }
    let params = MlParams2::real(1.0, 1.0)?;
    let policy = TruncationPolicy::default();
    let mut total = c(0.0);
    for sa in [1.0, -1.0] {
        for sb in [1.0, -1.0] {
            let weight = (1.0 + sa * lambda / a) * (1.0 + sb * lambda / b);
            let eta = -lambda + sa * a / 2.0 + sb * b / 2.0;
            total += weight * ml2(&params, eta * t, &policy)?.value;
        }
    }
    Ok(total / 4.0)
}

fn three_direction_coefficients(rate: f64, speed: f64, alpha: f64, beta: f64) -> Vec<Complex64> {
    let s = alpha * alpha + beta * beta;
    let c2 = speed * speed;
    let odd = speed.powi(3) * (alpha.powi(3) - 3.0 * alpha * beta * beta) / 4.0;
    vec![
        Complex64::new(rate * c2 * s / 2.0, odd),
        c(rate * rate + 0.75 * c2 * s),
        c(2.0 * rate),
        c(1.0),
    ]
}

fn three_direction_from(coeffs: Vec<Complex64>, speed: f64, alpha: f64, beta: f64, nu: f64) -> Result<CauchyProblem> {
    let poly = CharPolynomial::new(coeffs)?;
    if poly.coeffs()[0].norm() == 0.0 {
        return Err(Error::ZeroRoot(c(0.0)));
    }
    let conds = [c(1.0), c(0.0), c(-speed * speed * (alpha * alpha + beta * beta) / 2.0)];
    let n = n_conditions(nu, 3);
    CauchyProblem::from_coefficients(nu, poly, conds[..n].to_vec())
}

/// Cubic problem of order `nu` for [`three_direction_motion`] with rate
/// `lambda`, under the convention `E exp(+i <alpha, X>)`:
/// `x^3 + 2 lambda x^2 + (lambda^2 + 3 c^2 |alpha|^2 / 4) x + lambda c^2 |alpha|^2 / 2 + i c^3 (alpha^3 - 3 alpha beta^2) / 4`.
pub fn three_direction_problem(lambda: f64, speed: f64, alpha: f64, beta: f64, nu: f64) -> Result<CauchyProblem> {
    check_motion_params(lambda, speed, nu)?;
    three_direction_from(three_direction_coefficients(lambda, speed, alpha, beta), speed, alpha, beta, nu)
}

/// The cubic with the historical parametrization: `9 lambda / 2` in front of
/// the second derivative and `+3i c^3 alpha beta^2 / 4 - i c^3 alpha^3 / 4` in
/// the constant term. It equals [`three_direction_problem`] at rate
/// `9 lambda / 4` and `(alpha, beta) -> (-alpha, -beta)`.
pub fn three_direction_problem_printed(
    lambda: f64,
    speed: f64,
    alpha: f64,
    beta: f64,
    nu: f64,
) -> Result<CauchyProblem> {
    check_motion_params(lambda, speed, nu)?;
    let s = alpha * alpha + beta * beta;
    let c2 = speed * speed;
    let c3 = speed.powi(3);
    let coeffs = vec![
        Complex64::new(
            9.0 * lambda * c2 * s / 8.0,
            3.0 * c3 * alpha * beta * beta / 4.0 - c3 * alpha.powi(3) / 4.0,
        ),
        c(1.5f64.powi(4) * lambda * lambda + 0.75 * c2 * s),
        c(4.5 * lambda),
        c(1.0),
    ];
    three_direction_from(coeffs, speed, alpha, beta, nu)
}

/// One telegraph path: velocity `+-speed` (equally likely at the start),
/// reversing at rate `rate`.
fn telegraph_position<R: Rng + ?Sized>(speed: f64, rate: f64, t: f64, rng: &mut R) -> f64 {
    let exp = Exp::new(rate).expect("rate validated positive");
    let mut v = if rng.random::<bool>() { speed } else { -speed };
    let mut now = 0.0;
    let mut x = 0.0;
    loop {
        let tau: f64 = exp.sample(rng);
        if now + tau >= t {
            return x + (t - now) * v;
        }
        x += tau * v;
        now += tau;
        v = -v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionPoint {
    pub alpha: f64,
    pub beta: f64,
    pub direct: McEstimate,
    pub decomposed: McEstimate,
}

impl DecompositionPoint {
    pub fn discrepancy(&self) -> f64 {
        (self.direct.mean - self.decomposed.mean).norm()
    }

    pub fn combined_error(&self) -> f64 {
        self.direct.std_error.hypot(self.decomposed.std_error)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub points: Vec<DecompositionPoint>,
    pub max_discrepancy: f64,
    /// Largest discrepancy in units of the combined standard error.
    pub max_sigma: f64,
}

impl DecompositionReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.max_sigma <= sigmas
    }
}

/// Compares the orthogonal motion against `(U + V, U - V)` for independent
/// telegraph processes `U, V` with speed `c/2` and rate `lambda/2`.
pub fn telegraph_decomposition_check(
    lambda: f64,
    speed: f64,
    t: f64,
    grid: &[(f64, f64)],
    cfg: &McConfig,
) -> Result<DecompositionReport> {
    if cfg.samples < 10_000 {
        return Err(invalid("decomposition check needs at least 10^4 samples"));
    }
    let spec = orthogonal_motion(lambda, speed)?;
    let alphas: Vec<Vec<f64>> = grid.iter().map(|&(a, b)| vec![a, b]).collect();
    let direct = empirical_cf_many(&spec, t, &alphas, cfg)?;
    let second = McConfig {
        seed: cfg.seed ^ 0x9e37_79b9_7f4a_7c15,
        ..*cfg
    };
    let decomposed = monte_carlo_multi(&second, 100, grid.len(), |rng: &mut ChaCha8Rng, out| {
        let u = telegraph_position(speed / 2.0, lambda / 2.0, t, rng);
        let v = telegraph_position(speed / 2.0, lambda / 2.0, t, rng);
        let (x, y) = (u + v, u - v);
        for (o, &(a, b)) in out.iter_mut().zip(grid) {
            *o = Complex64::from_polar(1.0, a * x + b * y);
        }
        Ok(())
    })?;
    let points: Vec<DecompositionPoint> = grid
        .iter()
        .zip(direct.into_iter().zip(decomposed))
        .map(|(&(alpha, beta), (direct, decomposed))| DecompositionPoint {
            alpha,
            beta,
            direct,
            decomposed,
        })
        .collect();
    let max_discrepancy = points.iter().map(|p| p.discrepancy()).fold(0.0, f64::max);
    let max_sigma = points
        .iter()
        .map(|p| {
            let e = p.combined_error();
            if e == 0.0 {
                if p.discrepancy() == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                p.discrepancy() / e
            }
        })
        .fold(0.0, f64::max);
    Ok(DecompositionReport {
        points,
        max_discrepancy,
        max_sigma,
    })
}

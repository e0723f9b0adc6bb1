//! Characteristic polynomial `sum_k lambda_k x^k`, its roots with
//! multiplicities, and the residue weights of the simple-root case.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_CLUSTER_RADIUS: f64 = 1e-7;

const MAX_ABERTH_ITERATIONS: usize = 200;
const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Coefficients `lambda_0..lambda_N`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct CharPolynomial {
    coeffs: Vec<Complex64>,
}

impl TryFrom<Vec<Complex64>> for CharPolynomial {
    type Error = Error;

    fn try_from(coeffs: Vec<Complex64>) -> Result<Self> {
        Self::new(coeffs)
    }
}

impl From<CharPolynomial> for Vec<Complex64> {
    fn from(p: CharPolynomial) -> Self {
        p.coeffs
    }
}

impl CharPolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(invalid("characteristic polynomial needs degree N >= 1"));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(invalid("characteristic polynomial has non-finite coefficients"));
        }
        if coeffs[coeffs.len() - 1] == Complex64::new(0.0, 0.0) {
            return Err(invalid("leading coefficient lambda_N must be nonzero"));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.degree()]
    }

    /// Coefficients divided by `lambda_N`.
    pub fn monic(&self) -> Vec<Complex64> {
        let lead = self.leading();
        self.coeffs.iter().map(|c| c / lead).collect()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        horner(&self.coeffs, x)
    }
}

fn horner(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Value and first derivative.
fn horner_with_derivative(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Distinct roots `eta_1..eta_M` with multiplicities `m_1..m_M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSpectrum {
    roots: Vec<Complex64>,
    mults: Vec<usize>,
}

impl RootSpectrum {
    pub fn new(roots: Vec<Complex64>, mults: Vec<usize>) -> Result<Self> {
        if roots.is_empty() {
            return Err(invalid("root spectrum is empty"));
        }
        if roots.len() != mults.len() {
            return Err(Error::DimensionMismatch {
                expected: roots.len(),
                got: mults.len(),
            });
        }
        if mults.iter().any(|&m| m == 0) {
            return Err(invalid("multiplicities must be positive"));
        }
        for (i, a) in roots.iter().enumerate() {
            if roots[i + 1..].iter().any(|b| (a - b).norm() == 0.0) {
                return Err(invalid(format!("root {a} listed twice; merge it into a multiplicity")));
            }
        }
        Ok(Self { roots, mults })
    }

    /// All multiplicities one.
    pub fn simple(roots: Vec<Complex64>) -> Result<Self> {
        let n = roots.len();
        Self::new(roots, vec![1; n])
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Total degree `sum m_j`.
    pub fn degree(&self) -> usize {
        self.mults.iter().sum()
    }

    pub fn is_simple(&self) -> bool {
        self.mults.iter().all(|&m| m == 1)
    }

    /// Coefficients of `prod_j (x - eta_j)^{m_j}`, lowest degree first.
    pub fn expand(&self) -> Vec<Complex64> {
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        for (&eta, &m) in self.roots.iter().zip(&self.mults) {
            for _ in 0..m {
                let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
                for (i, &c) in poly.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] -= c * eta;
                }
                poly = next;
            }
        }
        poly
    }

    /// Largest coefficient mismatch against `p / lambda_N`, relative to the
    /// largest monic coefficient.
    pub fn mismatch(&self, p: &CharPolynomial) -> f64 {
        let monic = p.monic();
        let expanded = self.expand();
        if expanded.len() != monic.len() {
            return f64::INFINITY;
        }
        let scale = monic.iter().map(|c| c.norm()).fold(1.0, f64::max);
        monic
            .iter()
            .zip(&expanded)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }

    /// Checks the reconstruction against `p` to `1e-8` relative.
    pub fn check_consistent(&self, p: &CharPolynomial) -> Result<()> {
        let mismatch = self.mismatch(p);
        if !(mismatch <= RECONSTRUCTION_TOL) {
            return Err(Error::InconsistentSpectrum { mismatch });
        }
        Ok(())
    }

    pub fn check_nonzero(&self, radius: f64) -> Result<()> {
        match self.roots.iter().find(|r| r.norm() <= radius) {
            Some(&r) => Err(Error::ZeroRoot(r)),
            None => Ok(()),
        }
    }
}

/// Roots of `p` by Aberth simultaneous iteration, merged into clusters of
/// radius `cluster_radius`.
pub fn find_roots(p: &CharPolynomial, cluster_radius: f64) -> Result<RootSpectrum> {
    if !(cluster_radius > 0.0) {
        return Err(invalid("cluster radius must be positive"));
    }
    let monic = p.monic();
    let raw = aberth(&monic)?;
    let spectrum = cluster(&monic, raw, cluster_radius);
    spectrum.check_nonzero(cluster_radius)?;
    spectrum.check_consistent(p)?;
    Ok(spectrum)
}

fn aberth(monic: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = monic.len() - 1;
    if n == 1 {
        return Ok(vec![-monic[0]]);
    }
    let center = -monic[n - 1] / n as f64;
    let radius = (0..n)
        .map(|k| monic[k].norm().powf(1.0 / (n - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / n as f64 + 0.4;
            center + Complex64::from_polar(radius, angle)
        })
        .collect();

    let mut converged = false;
    for _ in 0..MAX_ABERTH_ITERATIONS {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (pv, dp) = horner_with_derivative(monic, z[i]);
            if pv == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = pv / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        // multiple roots stall at ~sqrt(eps); accept them if the residual is
        // at rounding level
        let worst = z
            .iter()
            .map(|&x| relative_residual(monic, x))
            .fold(0.0, f64::max);
        if worst > 1e3 * f64::EPSILON {
            return Err(Error::RootNonConvergence {
                iterations: MAX_ABERTH_ITERATIONS,
                residual: worst,
            });
        }
    }
    Ok(z)
}

fn relative_residual(coeffs: &[Complex64], x: Complex64) -> f64 {
    let scale: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm() * x.norm().powi(k as i32))
        .sum();
    horner(coeffs, x).norm() / scale.max(f64::MIN_POSITIVE)
}

fn cluster(monic: &[Complex64], raw: Vec<Complex64>, radius: f64) -> RootSpectrum {
    // single-linkage grouping
    let n = raw.len();
    let mut group: Vec<usize> = (0..n).collect();
    fn find(group: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while group[r] != r {
            r = group[r];
        }
        group[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (raw[i] - raw[j]).norm() < radius {
                let (a, b) = (find(&mut group, i), find(&mut group, j));
                group[a.max(b)] = a.min(b);
            }
        }
    }
    let mut roots = Vec::new();
    let mut mults = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for i in 0..n {
        let g = find(&mut group, i);
        if let Some(pos) = seen.iter().position(|&s| s == g) {
            roots[pos] += raw[i];
            mults[pos] += 1;
        } else {
            seen.push(g);
            roots.push(raw[i]);
            mults.push(1);
        }
    }
    for (r, &m) in roots.iter_mut().zip(&mults) {
        *r /= m as f64;
        // Simple roots come out of Aberth at full accuracy. Polishing them
        // one at a time would drag an unresolved multiple root together.
        if m > 1 {
            *r = polish(monic, *r, m);
        }
    }
    RootSpectrum { roots, mults }
}

/// Newton steps on the `(m-1)`-th derivative, where a root of multiplicity
/// `m` is simple. Steps that do not reduce the residual are rejected.
fn polish(monic: &[Complex64], mut x: Complex64, m: usize) -> Complex64 {
    let mut q = monic.to_vec();
    for _ in 1..m {
        q = derivative(&q);
    }
    for _ in 0..4 {
        let (pv, dp) = horner_with_derivative(&q, x);
        if dp == Complex64::new(0.0, 0.0) {
            break;
        }
        let next = x - pv / dp;
        if horner(&q, next).norm() < pv.norm() {
            x = next;
        } else {
            break;
        }
    }
    x
}

/// `w[h][k-1] = eta_h^{k-1} / prod_{j != h} (eta_h - eta_j)` for `k = 1..N`.
pub fn residue_weights(spec: &RootSpectrum) -> Result<Vec<Vec<Complex64>>> {
    if let Some(i) = spec.mults.iter().position(|&m| m > 1) {
        return Err(Error::Multiplicity {
            root: spec.roots[i],
            mult: spec.mults[i],
        });
    }
    let roots = &spec.roots;
    let n = roots.len();
    Ok(roots
        .iter()
        .enumerate()
        .map(|(h, &eta)| {
            let denom: Complex64 = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != h)
                .map(|(_, &other)| eta - other)
                .product();
            let inv = denom.inv();
            let mut pow = Complex64::new(1.0, 0.0);
            (0..n)
                .map(|_| {
                    let w = pow * inv;
                    pow *= eta;
                    w
                })
                .collect()
        })
        .collect())
}

//! Closed-form solutions of `sum_k lambda_k D^{nu k} F = g` with
//! Dzherbashyan-Caputo derivatives and initial data `D^l F(0) = f_l`.
//!
//! Two equivalent expansions are built: the general one in multivariate
//! Mittag-Leffler functions (any multiplicities) and the distinct-root one in
//! two-parameter functions. Both are evaluated pointwise in `t`.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use num_complex::Complex64;

use crate::char_poly::{
    find_roots, residue_weights, CharPolynomial, RootSpectrum, DEFAULT_CLUSTER_RADIUS,
};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_left_singular, QuadOptions};
use crate::special_functions::{
    ml2_series, ml_multivariate_many, MlParamsMultivariate, TruncationPolicy,
};

const CEIL_SLACK: f64 = 1e-12;

/// Number of initial conditions, `ceil(nu N)`.
pub fn n_conditions(nu: f64, degree: usize) -> usize {
    (nu * degree as f64 - CEIL_SLACK).ceil().max(0.0) as usize
}

/// Smallest `k` in `1..=N` with `nu k > l`.
pub fn k_threshold(l: usize, nu: f64, degree: usize) -> usize {
    (1..=degree)
        .find(|&k| nu * k as f64 > l as f64 + CEIL_SLACK)
        .unwrap_or(degree)
}

/// Time-dependent source term `g(t)`.
#[derive(Clone)]
pub enum Forcing {
    Constant(Complex64),
    /// Piecewise-linear interpolation of samples; held at the last value
    /// beyond the final time.
    Table {
        times: Vec<f64>,
        values: Vec<Complex64>,
    },
    Function(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Constant(g) => f.debug_tuple("Constant").field(g).finish(),
            Forcing::Table { times, values } => f
                .debug_struct("Table")
                .field("times", times)
                .field("values", values)
                .finish(),
            Forcing::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Forcing {
    pub fn table(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(invalid("forcing table needs matching, non-empty time and value columns"));
        }
        if times[0] != 0.0 {
            return Err(invalid("forcing table must start at t = 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("forcing table times must be strictly increasing"));
        }
        Ok(Forcing::Table { times, values })
    }

    pub fn function(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Forcing::Function(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        match self {
            Forcing::Constant(g) => *g,
            Forcing::Function(f) => f(t),
            Forcing::Table { times, values } => {
                let last = times.len() - 1;
                if t >= times[last] {
                    return values[last];
                }
                if t <= 0.0 {
                    return values[0];
                }
                let i = times.partition_point(|&s| s <= t) - 1;
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::Constant(g) => *g == Complex64::new(0.0, 0.0),
            Forcing::Table { values, .. } => values.iter().all(|v| *v == Complex64::new(0.0, 0.0)),
            Forcing::Function(_) => false,
        }
    }
}

/// A fractional Cauchy problem at one fixed transform point.
#[derive(Debug, Clone)]
pub struct CauchyProblem {
    nu: f64,
    poly: CharPolynomial,
    spectrum: RootSpectrum,
    init_conds: Vec<Complex64>,
    forcing: Option<Forcing>,
}

impl CauchyProblem {
    /// Validates the data; every root must be nonzero.
    pub fn new(
        nu: f64,
        poly: CharPolynomial,
        spectrum: RootSpectrum,
        init_conds: Vec<Complex64>,
    ) -> Result<Self> {
        spectrum.check_nonzero(DEFAULT_CLUSTER_RADIUS)?;
        Self::new_allowing_zero_roots(nu, poly, spectrum, init_conds)
    }

    /// Like [`CauchyProblem::new`] but accepts a zero root, e.g. `F' = g`.
    /// The expansions stay valid; the Laplace-domain derivation does not
    /// cover this case.
    pub fn new_allowing_zero_roots(
        nu: f64,
        poly: CharPolynomial,
        spectrum: RootSpectrum,
        init_conds: Vec<Complex64>,
    ) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(invalid(format!("order nu must be positive, got {nu}")));
        }
        let degree = poly.degree();
        if spectrum.degree() != degree {
            return Err(Error::DimensionMismatch {
                expected: degree,
                got: spectrum.degree(),
            });
        }
        let needed = n_conditions(nu, degree);
        if init_conds.len() != needed {
            return Err(Error::DimensionMismatch {
                expected: needed,
                got: init_conds.len(),
            });
        }
        spectrum.check_consistent(&poly)?;
        Ok(Self {
            nu,
            poly,
            spectrum,
            init_conds,
            forcing: None,
        })
    }

    /// Finds the roots numerically.
    pub fn from_coefficients(nu: f64, poly: CharPolynomial, init_conds: Vec<Complex64>) -> Result<Self> {
        let spectrum = find_roots(&poly, DEFAULT_CLUSTER_RADIUS)?;
        Self::new(nu, poly, spectrum, init_conds)
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn poly(&self) -> &CharPolynomial {
        &self.poly
    }

    pub fn spectrum(&self) -> &RootSpectrum {
        &self.spectrum
    }

    pub fn init_conds(&self) -> &[Complex64] {
        &self.init_conds
    }

    pub fn forcing(&self) -> Option<&Forcing> {
        self.forcing.as_ref()
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    /// Same coefficients and spectrum with another order and initial data.
    pub fn with_order(&self, nu: f64, init_conds: Vec<Complex64>) -> Result<Self> {
        let mut p = Self::new_allowing_zero_roots(
            nu,
            self.poly.clone(),
            self.spectrum.clone(),
            init_conds,
        )?;
        p.forcing = self.forcing.clone();
        Ok(p)
    }

    fn has_forcing(&self) -> bool {
        self.forcing.as_ref().is_some_and(|g| !g.is_zero())
    }
}

/// One `(l, k)` term of the general expansion:
/// `weight * t^power * E^{(m)}_{nu, delta}(eta t^nu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralTerm {
    pub l: usize,
    pub k: usize,
    /// `f_l lambda_k / lambda_N`.
    pub weight: Complex64,
    pub power: f64,
    pub ml_params: MlParamsMultivariate,
}

/// One `(h, l)` term of the distinct-root expansion:
/// `coefficient * t^l * E_{nu, l+1}(eta t^nu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinctTerm {
    pub h: usize,
    pub eta: Complex64,
    pub l: usize,
    pub coefficient: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpansionForm {
    General {
        mults: Vec<usize>,
        terms: Vec<GeneralTerm>,
    },
    Distinct {
        terms: Vec<DistinctTerm>,
    },
}

/// Source contribution `int_0^t g(t - y) K(y) dy` with kernel
/// `K(y) = y^{nu N - 1} E^{(m)}_{nu, nu N}(eta y^nu) / lambda_N`.
#[derive(Debug, Clone)]
struct ForcingTerm {
    forcing: Forcing,
    scale: Complex64,
    kernel: Kernel,
}

#[derive(Debug, Clone)]
enum Kernel {
    General { mults: Vec<usize> },
    Distinct { weights: Vec<Complex64> },
}

/// Closed-form solution, immutable once built.
#[derive(Debug, Clone)]
pub struct SolutionExpansion {
    nu: f64,
    degree: usize,
    roots: Vec<Complex64>,
    form: ExpansionForm,
    forcing: Option<ForcingTerm>,
    policy: TruncationPolicy,
    quad: QuadOptions,
}

impl SolutionExpansion {
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn form(&self) -> &ExpansionForm {
        &self.form
    }

    pub fn has_forcing(&self) -> bool {
        self.forcing.is_some()
    }

    pub fn with_policy(mut self, policy: TruncationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_quadrature(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    pub fn evaluate(&self, t: f64) -> Result<Complex64> {
        evaluate_solution(self, t)
    }

    /// Term table as CSV, one row per stored term.
    pub fn terms_csv(&self) -> String {
        let mut out = String::new();
        match &self.form {
            ExpansionForm::General { terms, .. } => {
                out.push_str("l,k,weight_re,weight_im,power,delta\n");
                for t in terms {
                    let _ = writeln!(
                        out,
                        "{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
                        t.l,
                        t.k,
                        t.weight.re,
                        t.weight.im,
                        t.power,
                        t.ml_params.delta().re
                    );
                }
            }
            ExpansionForm::Distinct { terms } => {
                out.push_str("h,eta_re,eta_im,l,coef_re,coef_im\n");
                for t in terms {
                    let _ = writeln!(
                        out,
                        "{},{:.17e},{:.17e},{},{:.17e},{:.17e}",
                        t.h, t.eta.re, t.eta.im, t.l, t.coefficient.re, t.coefficient.im
                    );
                }
            }
        }
        out
    }
}

fn expansion(p: &CauchyProblem, form: ExpansionForm) -> SolutionExpansion {
    SolutionExpansion {
        nu: p.nu,
        degree: p.degree(),
        roots: p.spectrum.roots().to_vec(),
        form,
        forcing: None,
        policy: TruncationPolicy::default(),
        quad: QuadOptions::default(),
    }
}

fn reject_forcing(p: &CauchyProblem) -> Result<()> {
    if p.has_forcing() {
        return Err(invalid("problem has a forcing term; use solve_nonhomogeneous"));
    }
    Ok(())
}

fn general_form(p: &CauchyProblem) -> Result<ExpansionForm> {
    let n = p.degree();
    let nu = p.nu;
    let monic = p.poly.monic();
    let mults = p.spectrum.mults().to_vec();
    let mut terms = Vec::new();
    for (l, &f) in p.init_conds.iter().enumerate() {
        for k in k_threshold(l, nu, n)..=n {
            let power = nu * (n - k) as f64 + l as f64;
            terms.push(GeneralTerm {
                l,
                k,
                weight: f * monic[k],
                power,
                ml_params: MlParamsMultivariate::from_multiplicities(nu, power + 1.0, &mults)?,
            });
        }
    }
    Ok(ExpansionForm::General { mults, terms })
}

fn distinct_form(p: &CauchyProblem) -> Result<ExpansionForm> {
    let n = p.degree();
    let nu = p.nu;
    let w = residue_weights(&p.spectrum)?;
    let monic = p.poly.monic();
    let mut terms = Vec::new();
    for (h, &eta) in p.spectrum.roots().iter().enumerate() {
        for (l, &f) in p.init_conds.iter().enumerate() {
            let inner: Complex64 = (k_threshold(l, nu, n)..=n)
                .map(|k| monic[k] * w[h][k - 1])
                .sum();
            terms.push(DistinctTerm {
                h,
                eta,
                l,
                coefficient: f * inner,
            });
        }
    }
    Ok(ExpansionForm::Distinct { terms })
}

/// General expansion in multivariate Mittag-Leffler functions.
pub fn solve_general(p: &CauchyProblem) -> Result<SolutionExpansion> {
    reject_forcing(p)?;
    Ok(expansion(p, general_form(p)?))
}

/// Distinct-root expansion; needs every multiplicity equal to one.
pub fn solve_distinct(p: &CauchyProblem) -> Result<SolutionExpansion> {
    reject_forcing(p)?;
    Ok(expansion(p, distinct_form(p)?))
}

fn attach_forcing(p: &CauchyProblem, mut s: SolutionExpansion) -> Result<SolutionExpansion> {
    let Some(forcing) = p.forcing.clone().filter(|g| !g.is_zero()) else {
        return Ok(s);
    };
    let kernel = match &s.form {
        ExpansionForm::General { mults, .. } => Kernel::General {
            mults: mults.clone(),
        },
        ExpansionForm::Distinct { .. } => {
            let w = residue_weights(&p.spectrum)?;
            Kernel::Distinct {
                weights: w.iter().map(|row| row[p.degree() - 1]).collect(),
            }
        }
    };
    s.forcing = Some(ForcingTerm {
        forcing,
        scale: p.poly.leading().inv(),
        kernel,
    });
    Ok(s)
}

/// General expansion plus the forcing convolution.
pub fn solve_nonhomogeneous(p: &CauchyProblem) -> Result<SolutionExpansion> {
    let s = expansion(p, general_form(p)?);
    attach_forcing(p, s)
}

/// Distinct-root expansion plus the forcing convolution.
pub fn solve_nonhomogeneous_distinct(p: &CauchyProblem) -> Result<SolutionExpansion> {
    let s = expansion(p, distinct_form(p)?);
    attach_forcing(p, s)
}

/// Picks the distinct-root form when the roots are simple.
pub fn solve(p: &CauchyProblem) -> Result<SolutionExpansion> {
    if p.spectrum.is_simple() {
        solve_nonhomogeneous_distinct(p)
    } else {
        solve_nonhomogeneous(p)
    }
}

fn tpow(t: f64, power: f64) -> f64 {
    if power == 0.0 {
        1.0
    } else {
        t.powf(power)
    }
}

/// `sum_j E^{(m)}_{nu,delta}` or its distinct-root equivalent, times
/// `t^{delta - 1}`, evaluated for several `delta` at once.
fn kernel_values(
    s: &SolutionExpansion,
    kernel: &Kernel,
    deltas: &[f64],
    t: f64,
) -> Result<Vec<Complex64>> {
    let tnu = tpow(t, s.nu);
    let z: Vec<Complex64> = s.roots.iter().map(|&eta| eta * tnu).collect();
    match kernel {
        Kernel::General { mults } => {
            let gammas: Vec<Complex64> = mults.iter().map(|&m| Complex64::new(m as f64, 0.0)).collect();
            let cd: Vec<Complex64> = deltas.iter().map(|&d| Complex64::new(d, 0.0)).collect();
            let evals = ml_multivariate_many(s.nu, &cd, &gammas, &z, &s.policy)?;
            Ok(evals
                .iter()
                .zip(deltas)
                .map(|(e, &d)| e.value * tpow(t, d - 1.0))
                .collect())
        }
        Kernel::Distinct { weights } => deltas
            .iter()
            .map(|&d| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (&zh, &w) in z.iter().zip(weights) {
                    acc += w * ml2_series(s.nu, Complex64::new(d, 0.0), zh, &s.policy)?.value;
                }
                Ok(acc * tpow(t, d - 1.0))
            })
            .collect(),
    }
}

fn forcing_value(s: &SolutionExpansion, term: &ForcingTerm, t: f64) -> Result<Complex64> {
    let order = s.nu * s.degree as f64;
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if let Forcing::Constant(g) = term.forcing {
        let v = kernel_values(s, &term.kernel, &[order + 1.0], t)?[0];
        return Ok(g * term.scale * v);
    }
    let conv = integrate_left_singular(
        |y| {
            if y <= 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let k = kernel_values(s, &term.kernel, &[order], y)?[0];
            Ok(term.forcing.eval(t - y) * k)
        },
        0.0,
        t,
        order - 1.0,
        &s.quad,
    )?;
    Ok(term.scale * conv.value)
}

/// Value of the solution at `t >= 0`.
pub fn evaluate_solution(s: &SolutionExpansion, t: f64) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("solution needs finite t >= 0, got {t}")));
    }
    let tnu = tpow(t, s.nu);
    let mut value = Complex64::new(0.0, 0.0);
    match &s.form {
        ExpansionForm::General { mults, terms } => {
            let mut deltas: Vec<f64> = Vec::new();
            for term in terms {
                let d = term.power + 1.0;
                if !deltas.iter().any(|&x| x == d) {
                    deltas.push(d);
                }
            }
            let kernel = Kernel::General {
                mults: mults.clone(),
            };
            let vals = kernel_values(s, &kernel, &deltas, t)?;
            for term in terms {
                let i = deltas
                    .iter()
                    .position(|&x| x == term.power + 1.0)
                    .expect("delta registered above");
                value += term.weight * vals[i];
            }
        }
        ExpansionForm::Distinct { terms } => {
            for term in terms {
                let e = ml2_series(
                    s.nu,
                    Complex64::new(term.l as f64 + 1.0, 0.0),
                    term.eta * tnu,
                    &s.policy,
                )?;
                value += term.coefficient * tpow(t, term.l as f64) * e.value;
            }
        }
    }
    if let Some(term) = &s.forcing {
        value += forcing_value(s, term, t)?;
    }
    Ok(value)
}

/// Order-one solution written with exponentials:
/// `sum_h e^{eta_h t} sum_l f_l sum_{k > l} lambda_k eta_h^{k-1-l} / prod_{j != h}(eta_h - eta_j)`
/// (coefficients normalized by `lambda_N`). The polynomial parts of
/// `t^l E_{1,l+1}(eta t)` cancel across roots, so no power of `t` survives.
pub fn evaluate_integer_order(p: &CauchyProblem, t: f64) -> Result<Complex64> {
    if p.nu != 1.0 {
        return Err(invalid("integer-order form needs nu = 1"));
    }
    reject_forcing(p)?;
    let w = residue_weights(&p.spectrum)?;
    let monic = p.poly.monic();
    let n = p.degree();
    let mut value = Complex64::new(0.0, 0.0);
    for (h, &eta) in p.spectrum.roots().iter().enumerate() {
        // w[h][j] = eta^j / prod
        let inner: Complex64 = p
            .init_conds
            .iter()
            .enumerate()
            .map(|(l, &f)| f * (l + 1..=n).map(|k| monic[k] * w[h][k - 1 - l]).sum::<Complex64>())
            .sum();
        value += (eta * t).exp() * inner;
    }
    Ok(value)
}

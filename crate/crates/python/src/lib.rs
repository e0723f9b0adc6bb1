//! Python bindings: Mittag-Leffler functions, Cauchy problems and their
//! closed-form solutions, and finite-velocity random motions.

use mlfrac_core::cauchy_solver::{self, CauchyProblem, Forcing, SolutionExpansion};
use mlfrac_core::char_poly::{CharPolynomial, RootSpectrum};
use mlfrac_core::montecarlo::McConfig;
use mlfrac_core::random_motion::{self, MotionSpec};
use mlfrac_core::schema::ProblemFile;
use mlfrac_core::special_functions::{
    ml2 as core_ml2, ml_multivariate as core_multi, ml_prabhakar as core_prabhakar, MlParams2,
    MlParamsMultivariate, MlParamsPrabhakar, TruncationPolicy,
};
use mlfrac_core::{Complex64, Error};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(mlfrac, NumericalError, PyRuntimeError, "A series, root finder or quadrature could not reach its tolerance.");
create_exception!(mlfrac, ZeroRootError, PyValueError, "The characteristic polynomial has a root at zero.");

struct PyError(Error);

impl From<Error> for PyError {
    fn from(e: Error) -> Self {
        PyError(e)
    }
}

impl From<PyError> for PyErr {
    fn from(PyError(e): PyError) -> PyErr {
        let msg = e.to_string();
        match e {
            Error::ZeroRoot(_) => ZeroRootError::new_err(msg),
            Error::NonConvergence { .. }
            | Error::PrecisionLoss { .. }
            | Error::RootNonConvergence { .. }
            | Error::InconsistentSpectrum { .. }
            | Error::Quadrature { .. }
            | Error::LaplaceNonConvergence { .. }
            | Error::Pole(_) => NumericalError::new_err(msg),
            _ => PyValueError::new_err(msg),
        }
    }
}

type PyRes<T> = Result<T, PyError>;

fn policy(abs_tol: f64, rel_tol: f64, max_terms: usize) -> PyRes<TruncationPolicy> {
    Ok(TruncationPolicy::new(abs_tol, rel_tol, max_terms)?)
}

/// Two-parameter Mittag-Leffler function `E_{nu,delta}(z)`.
#[pyfunction]
#[pyo3(signature = (nu, delta, z, abs_tol=1e-14, rel_tol=1e-12, max_terms=2000))]
fn ml2(nu: f64, delta: Complex64, z: Complex64, abs_tol: f64, rel_tol: f64, max_terms: usize) -> PyRes<Complex64> {
    let p = MlParams2::new(nu, delta)?;
    Ok(core_ml2(&p, z, &policy(abs_tol, rel_tol, max_terms)?)?.value)
}

/// Prabhakar function `E^gamma_{nu,delta}(z)`.
#[pyfunction]
#[pyo3(signature = (nu, delta, gamma, z, abs_tol=1e-14, rel_tol=1e-12, max_terms=2000))]
fn ml_prabhakar(
    nu: f64,
    delta: Complex64,
    gamma: Complex64,
    z: Complex64,
    abs_tol: f64,
    rel_tol: f64,
    max_terms: usize,
) -> PyRes<Complex64> {
    let p = MlParamsPrabhakar::new(nu, delta, gamma)?;
    Ok(core_prabhakar(&p, z, &policy(abs_tol, rel_tol, max_terms)?)?.value)
}

/// Multivariate Mittag-Leffler function with one `gamma` per argument.
#[pyfunction]
#[pyo3(signature = (nu, delta, gammas, z, abs_tol=1e-14, rel_tol=1e-12, max_terms=2000))]
fn ml_multivariate(
    nu: f64,
    delta: Complex64,
    gammas: Vec<Complex64>,
    z: Vec<Complex64>,
    abs_tol: f64,
    rel_tol: f64,
    max_terms: usize,
) -> PyRes<Complex64> {
    let p = MlParamsMultivariate::new(nu, delta, gammas)?;
    Ok(core_multi(&p, &z, &policy(abs_tol, rel_tol, max_terms)?)?.value)
}

/// `sum_k lambda_k D^{nu k} F = g` with initial data `D^l F(0) = f_l`.
#[pyclass(name = "Problem", module = "mlfrac", frozen)]
struct PyProblem {
    inner: CauchyProblem,
}

#[pymethods]
impl PyProblem {
    /// Roots are found numerically unless given. `forcing` is a constant.
    #[new]
    #[pyo3(signature = (nu, coeffs, init_conds, roots=None, mults=None, forcing=None))]
    fn new(
        nu: f64,
        coeffs: Vec<Complex64>,
        init_conds: Vec<Complex64>,
        roots: Option<Vec<Complex64>>,
        mults: Option<Vec<usize>>,
        forcing: Option<Complex64>,
    ) -> PyRes<Self> {
        let poly = CharPolynomial::new(coeffs)?;
        let mut inner = match (roots, mults) {
            (None, None) => CauchyProblem::from_coefficients(nu, poly, init_conds)?,
            (Some(r), m) => {
                let spectrum = match m {
                    Some(m) => RootSpectrum::new(r, m)?,
                    None => RootSpectrum::simple(r)?,
                };
                CauchyProblem::new(nu, poly, spectrum, init_conds)?
            }
            (None, Some(_)) => return Err(Error::InvalidParameter("mults given without roots".into()).into()),
        };
        if let Some(g) = forcing {
            inner = inner.with_forcing(Forcing::Constant(g));
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyRes<Self> {
        Ok(Self {
            inner: ProblemFile::parse(text)?.to_problem()?,
        })
    }

    fn to_json(&self) -> PyRes<String> {
        Ok(ProblemFile::from_problem(&self.inner)?.to_json())
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn coeffs(&self) -> Vec<Complex64> {
        self.inner.poly().coeffs().to_vec()
    }

    #[getter]
    fn roots(&self) -> Vec<Complex64> {
        self.inner.spectrum().roots().to_vec()
    }

    #[getter]
    fn mults(&self) -> Vec<usize> {
        self.inner.spectrum().mults().to_vec()
    }

    #[getter]
    fn init_conds(&self) -> Vec<Complex64> {
        self.inner.init_conds().to_vec()
    }

    /// `form` is "auto", "general" or "distinct".
    #[pyo3(signature = (form="auto"))]
    fn solve(&self, form: &str) -> PyRes<PySolution> {
        let p = &self.inner;
        let inner = match form {
            "auto" => cauchy_solver::solve(p)?,
            "general" => cauchy_solver::solve_nonhomogeneous(p)?,
            "distinct" => cauchy_solver::solve_nonhomogeneous_distinct(p)?,
            other => return Err(Error::InvalidParameter(format!("unknown form {other:?}")).into()),
        };
        Ok(PySolution { inner })
    }

    fn __repr__(&self) -> String {
        format!("Problem(nu={}, degree={})", self.inner.nu(), self.inner.degree())
    }
}

#[pyclass(name = "Solution", module = "mlfrac", frozen)]
struct PySolution {
    inner: SolutionExpansion,
}

#[pymethods]
impl PySolution {
    fn __call__(&self, t: f64) -> PyRes<Complex64> {
        Ok(self.inner.evaluate(t)?)
    }

    fn evaluate_many(&self, times: Vec<f64>) -> PyRes<Vec<Complex64>> {
        Ok(times
            .into_iter()
            .map(|t| self.inner.evaluate(t))
            .collect::<Result<_, _>>()?)
    }

    #[getter]
    fn form(&self) -> &'static str {
        match self.inner.form() {
            cauchy_solver::ExpansionForm::General { .. } => "general",
            cauchy_solver::ExpansionForm::Distinct { .. } => "distinct",
        }
    }

    #[getter]
    fn roots(&self) -> Vec<Complex64> {
        self.inner.roots().to_vec()
    }

    /// One line per expansion term.
    fn terms_csv(&self) -> String {
        self.inner.terms_csv()
    }
}

/// Random motion switching among finitely many velocities at Poisson times.
#[pyclass(name = "Motion", module = "mlfrac", frozen)]
struct PyMotion {
    inner: MotionSpec,
}

#[pymethods]
impl PyMotion {
    #[new]
    fn new(velocities: Vec<Vec<f64>>, rate: f64, initial_dist: Vec<f64>, switch_matrix: Vec<Vec<f64>>) -> PyRes<Self> {
        Ok(Self {
            inner: MotionSpec::new(velocities, rate, initial_dist, switch_matrix)?,
        })
    }

    #[staticmethod]
    fn orthogonal(rate: f64, speed: f64) -> PyRes<Self> {
        Ok(Self {
            inner: random_motion::orthogonal_motion(rate, speed)?,
        })
    }

    #[staticmethod]
    fn three_direction(rate: f64, speed: f64) -> PyRes<Self> {
        Ok(Self {
            inner: random_motion::three_direction_motion(rate, speed)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Monte Carlo estimate of `E exp(i <alpha, X(t)>)` as `(mean, std_error)`.
    #[pyo3(signature = (t, alpha, samples=100_000, seed=1))]
    fn empirical_cf(&self, py: Python<'_>, t: f64, alpha: Vec<f64>, samples: usize, seed: u64) -> PyRes<(Complex64, f64)> {
        let cfg = McConfig::new(seed, samples);
        let est = py.detach(|| random_motion::empirical_cf(&self.inner, t, &alpha, &cfg))?;
        Ok((est.mean, est.std_error))
    }

    /// Exact `n`-th time derivative at zero of the characteristic function.
    fn cf_derivative(&self, alpha: Vec<f64>, n: usize) -> PyRes<Complex64> {
        Ok(random_motion::cf_derivative_exact(&self.inner, &alpha, n)?)
    }
}

/// Quartic problem satisfied by the characteristic function of the
/// orthogonal planar motion.
#[pyfunction]
#[pyo3(signature = (rate, speed, alpha, beta, nu=1.0))]
fn orthogonal_problem(rate: f64, speed: f64, alpha: f64, beta: f64, nu: f64) -> PyRes<PyProblem> {
    Ok(PyProblem {
        inner: random_motion::orthogonal_problem(rate, speed, alpha, beta, nu)?,
    })
}

/// Cubic problem of the three-direction planar motion.
#[pyfunction]
#[pyo3(signature = (rate, speed, alpha, beta, nu=1.0))]
fn three_direction_problem(rate: f64, speed: f64, alpha: f64, beta: f64, nu: f64) -> PyRes<PyProblem> {
    Ok(PyProblem {
        inner: random_motion::three_direction_problem(rate, speed, alpha, beta, nu)?,
    })
}

#[pymodule]
pub fn mlfrac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add("ZeroRootError", m.py().get_type::<ZeroRootError>())?;
    m.add_function(wrap_pyfunction!(ml2, m)?)?;
    m.add_function(wrap_pyfunction!(ml_prabhakar, m)?)?;
    m.add_function(wrap_pyfunction!(ml_multivariate, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonal_problem, m)?)?;
    m.add_function(wrap_pyfunction!(three_direction_problem, m)?)?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyMotion>()?;
    Ok(())
}
